// Derivative-free simplex minimizer.
#pragma once

#include <Eigen/Dense>
#include <functional>

namespace srgmm {

struct NelderMeadOptions {
    int max_evals = 400;
    double tol = 1e-6;        // simplex size in the infinity norm
    double init_step = 0.25;  // per-coordinate displacement of the initial simplex
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    int evals = 0;
    bool converged = false;
};

// Minimizes f starting from x0. Non-finite objective values are treated as
// +inf, so the simplex retreats from invalid regions. The returned point is
// never worse than the starting point.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opts = {});

}  // namespace srgmm
