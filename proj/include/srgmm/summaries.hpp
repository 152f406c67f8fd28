// MAP reconstruction of a cluster's sparse Cholesky factors, the implied
// covariance/correlation matrices, and the per-spot median absolute
// correlation summary.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "srgmm/marginal.hpp"
#include "srgmm/moment_cache.hpp"

namespace srgmm {

// Sparse generalized Cholesky pair (U, D): U is unit-upper-triangular in the
// maximin order with off-diagonal entries only at (neighbors[p][j], p), and
// U' Sigma U = D with D = diag(d) positive. `order` maps positions back to
// original spot indices (identity when the factors are synthetic).
struct CholeskyFactors {
    int n = 0;
    std::vector<std::vector<int>> neighbors;
    std::vector<Eigen::VectorXd> u;
    Eigen::VectorXd d;
    std::vector<int> order;
};

// Joint conditional-modal estimate: u_p is the Gaussian conditional mean/mode
// of the coefficients and d_p the inverse-gamma mode beta~/(alpha~ + 1) (the
// mean beta~/(alpha~ - 1) is available via ig_mean).
CholeskyFactors map_cholesky(const MomentCache& cache, const ClusterParams& params, int m_k,
                             bool ig_mean = false);

// Sigma = (U')^{-1} D U^{-1} computed column-by-column via two sparse
// triangular solves, returned in original spot order.
Eigen::MatrixXd covariance_from_factors(const CholeskyFactors& factors, int dense_cap = 6000);

// rho_i = median_j |corr(i, j)|, j != i; the even-count median averages the
// two central order statistics.
Eigen::VectorXd correlation_summary(const Eigen::Ref<const Eigen::MatrixXd>& sigma);

}  // namespace srgmm
