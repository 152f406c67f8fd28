#include "srgmm/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace srgmm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
    const int d = static_cast<int>(x0.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : kInf;
    };

    std::vector<Eigen::VectorXd> xs(d + 1, x0);
    std::vector<double> fs(d + 1);
    fs[0] = eval(xs[0]);
    for (int i = 0; i < d; ++i) {
        xs[i + 1][i] += opts.init_step;
        fs[i + 1] = eval(xs[i + 1]);
    }

    std::vector<int> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0);
    auto sort_simplex = [&] {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    };

    bool converged = false;
    while (evals < opts.max_evals) {
        sort_simplex();
        const int best = idx[0], worst = idx[d], second_worst = idx[d - 1];

        double size = 0.0;
        for (int i = 1; i <= d; ++i)
            size = std::max(size, (xs[idx[i]] - xs[best]).cwiseAbs().maxCoeff());
        if (size < opts.tol) {
            converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) centroid += xs[idx[i]];
        centroid /= d;

        const Eigen::VectorXd xr = centroid + alpha * (centroid - xs[worst]);
        const double fr = eval(xr);

        if (fr < fs[best]) {
            const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else if (fr < fs[second_worst]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            const bool outside = fr < fs[worst];
            const Eigen::VectorXd xc =
                outside ? centroid + rho * (xr - centroid) : centroid - rho * (centroid - xs[worst]);
            const double fc = eval(xc);
            if (fc < (outside ? fr : fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    xs[idx[i]] = xs[best] + sigma * (xs[idx[i]] - xs[best]);
                    fs[idx[i]] = eval(xs[idx[i]]);
                    if (evals >= opts.max_evals) break;
                }
            }
        }
    }

    sort_simplex();
    NelderMeadResult res;
    res.x = xs[idx[0]];
    res.fx = fs[idx[0]];
    res.evals = evals;
    res.converged = converged;
    return res;
}

}  // namespace srgmm
