#include "srgmm/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srgmm {

CholeskyFactors map_cholesky(const MomentCache& cache, const ClusterParams& params, int m_k,
                             bool ig_mean) {
    if (cache.count() < 1) throw std::invalid_argument("map_cholesky: cluster has no members");
    params.theta.validate();

    const SpatialDesign& design = cache.design();
    const int n = cache.n();
    const double alpha_tilde = kSpotPriorAlpha + 0.5 * cache.count();
    const double d_denom = ig_mean ? alpha_tilde - 1.0 : alpha_tilde + 1.0;

    CholeskyFactors out;
    out.n = n;
    out.order = design.order;
    out.neighbors.resize(n);
    out.u.resize(n);
    out.d.resize(n);

    double syy_c;
    Eigen::VectorXd sxy_c;
    Eigen::MatrixXd a;
    for (int p = 0; p < n; ++p) {
        const int m = std::min({m_k, p, design.width(p)});
        const SpotPrior prior = spot_prior(params.theta, p + 1, m);
        centered_moments(cache, p, params.mu, m, syy_c, sxy_c, a);

        double quad = 0.0;
        if (m > 0) {
            a.diagonal() += prior.v_diag.cwiseInverse();
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() != Eigen::Success) {
                a.diagonal().array() += 1e-10 * a.trace() / m;
                llt.compute(a);
                if (llt.info() != Eigen::Success)
                    throw std::runtime_error("map_cholesky: factorization failed at position " +
                                             std::to_string(p));
            }
            // regressors enter the conditional with a negated sign
            out.u[p] = llt.solve(-sxy_c);
            quad = sxy_c.dot(llt.solve(sxy_c));
        } else {
            out.u[p].resize(0);
        }
        out.neighbors[p].assign(design.neighbor_lists[p].begin(), design.neighbor_lists[p].begin() + m);
        const double beta_tilde = prior.beta + 0.5 * std::max(0.0, syy_c - quad);
        out.d[p] = beta_tilde / d_denom;
    }
    return out;
}

Eigen::MatrixXd covariance_from_factors(const CholeskyFactors& factors, int dense_cap) {
    const int n = factors.n;
    if (n > dense_cap)
        throw std::length_error("covariance_from_factors: n exceeds the dense reconstruction cap");
    if (n < 1) throw std::invalid_argument("covariance_from_factors: empty factors");
    for (int p = 0; p < n; ++p)
        if (!(factors.d[p] > 0.0)) throw std::invalid_argument("covariance_from_factors: d must be positive");

    // row adjacency of U: rows[p] lists (column c > p, value U[p, c])
    std::vector<std::vector<std::pair<int, double>>> rows(n);
    for (int c = 0; c < n; ++c)
        for (std::size_t j = 0; j < factors.neighbors[c].size(); ++j)
            rows[factors.neighbors[c][j]].emplace_back(c, factors.u[c][j]);

    if (!factors.order.empty() && static_cast<int>(factors.order.size()) != n)
        throw std::invalid_argument("covariance_from_factors: order length mismatch");
    const bool identity_order =
        factors.order.empty() || std::is_sorted(factors.order.begin(), factors.order.end());

    Eigen::MatrixXd sigma(n, n);
    Eigen::VectorXd x(n), w(n);
    for (int col = 0; col < n; ++col) {
        // U x = e_col (unit upper triangular, back substitution)
        for (int p = n - 1; p >= 0; --p) {
            double v = p == col ? 1.0 : 0.0;
            for (const auto& [c, uval] : rows[p]) v -= uval * x[c];
            x[p] = v;
        }
        x.array() *= factors.d.array();
        // U' w = x (unit lower triangular, forward substitution)
        for (int p = 0; p < n; ++p) {
            double v = x[p];
            const auto& nb = factors.neighbors[p];
            for (std::size_t j = 0; j < nb.size(); ++j) v -= factors.u[p][j] * w[nb[j]];
            w[p] = v;
        }
        sigma.col(col) = w;
    }

    if (identity_order) return sigma;
    Eigen::MatrixXd out(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) out(factors.order[p], factors.order[q]) = sigma(p, q);
    return out;
}

Eigen::VectorXd correlation_summary(const Eigen::Ref<const Eigen::MatrixXd>& sigma) {
    const int n = static_cast<int>(sigma.rows());
    if (sigma.cols() != n || n < 2) throw std::invalid_argument("correlation_summary: need a square matrix, n >= 2");
    for (int i = 0; i < n; ++i)
        if (!(sigma(i, i) > 0.0)) throw std::invalid_argument("correlation_summary: non-positive diagonal");

    const Eigen::VectorXd inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::VectorXd rho(n);
    std::vector<double> abs_corr(n - 1);
    for (int i = 0; i < n; ++i) {
        int idx = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            abs_corr[idx++] = std::min(1.0, std::abs(sigma(i, j) * inv_sd[i] * inv_sd[j]));
        }
        const int m = n - 1;
        auto mid = abs_corr.begin() + m / 2;
        std::nth_element(abs_corr.begin(), mid, abs_corr.end());
        if (m % 2 == 1) {
            rho[i] = *mid;
        } else {
            const double upper = *mid;
            rho[i] = 0.5 * (upper + *std::max_element(abs_corr.begin(), mid));
        }
    }
    return rho;
}

}  // namespace srgmm
