#include "srgmm/marginal.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace srgmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// slice width actually used at position p
int used_width(const MomentCache& cache, int p, int m_k) {
    return std::min({m_k, p, cache.design().width(p)});
}

double logdet_v(const ThetaParams& theta, int i, int m) {
    // sum_j log( exp(-theta3 j) / (theta1 f) ), j = 1..m
    const double f = range_factor(i, theta.theta2);
    return -theta.theta3 * 0.5 * m * (m + 1.0) - m * std::log(theta.theta1 * f);
}

// Factorize A = Sxx_c + V^{-1} with one jitter retry. Returns false on failure.
bool factorize(Eigen::MatrixXd& a, Eigen::LLT<Eigen::MatrixXd>& llt) {
    llt.compute(a);
    if (llt.info() == Eigen::Success) return true;
    const int m = static_cast<int>(a.rows());
    a.diagonal().array() += 1e-10 * a.trace() / m;
    llt.compute(a);
    return llt.info() == Eigen::Success;
}

double llt_logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

void PriorConfig::validate(int k) const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("PriorConfig: lambda must be positive");
    if (!(xi > 0.0) || !std::isfinite(xi)) throw std::invalid_argument("PriorConfig: xi must be positive");
    if (nu.size() != k) throw std::invalid_argument("PriorConfig: nu must have one entry per cluster");
    for (int j = 0; j < nu.size(); ++j)
        if (!(nu[j] >= 1.0) || !std::isfinite(nu[j]))
            throw std::invalid_argument("PriorConfig: each nu must be finite and >= 1");
}

void centered_moments(const MomentCache& cache, int p, double mu, int m,
                      double& syy_c, Eigen::VectorXd& sxy_c, Eigen::MatrixXd& sxx_c) {
    const double n = cache.count();
    const double sy = cache.sy(p);
    syy_c = cache.syy(p) - 2.0 * mu * sy + n * mu * mu;
    const auto& sx = cache.sx(p);
    const auto& sxy = cache.sxy(p);
    const auto& sxx = cache.sxx(p);
    sxy_c.resize(m);
    sxx_c.resize(m, m);
    const double nmu2 = n * mu * mu;
    for (int j = 0; j < m; ++j) {
        sxy_c[j] = sxy[j] - mu * (sx[j] + sy) + nmu2;
        for (int l = 0; l < m; ++l) sxx_c(j, l) = sxx(j, l) - mu * (sx[j] + sx[l]) + nmu2;
    }
}

SpotPosteriorStats spot_stats(const MomentCache& cache, int p, double mu, const SpotPrior& prior) {
    const int m = static_cast<int>(prior.v_diag.size());
    if (m > cache.design().width(p)) throw std::invalid_argument("spot_stats: prior wider than stored neighbors");

    SpotPosteriorStats st;
    st.alpha_tilde = prior.alpha + 0.5 * cache.count();
    st.logdet_V = prior.v_diag.array().log().sum();

    double syy_c;
    Eigen::VectorXd sxy_c;
    Eigen::MatrixXd a;
    centered_moments(cache, p, mu, m, syy_c, sxy_c, a);
    a.diagonal() += prior.v_diag.cwiseInverse();

    if (m == 0) {
        st.G.resize(0, 0);
        st.logdet_G = 0.0;
        st.beta_tilde = prior.beta + 0.5 * std::max(0.0, syy_c);
        return st;
    }

    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!factorize(a, llt)) throw std::runtime_error("spot_stats: factorization failed at position " + std::to_string(p));
    st.logdet_G = -llt_logdet(llt);
    st.G = llt.solve(Eigen::MatrixXd::Identity(m, m));
    const double quad = sxy_c.dot(llt.solve(sxy_c));
    st.beta_tilde = prior.beta + 0.5 * std::max(0.0, syy_c - quad);
    return st;
}

double cluster_log_marginal(const MomentCache& cache, const ClusterParams& params, int m_k) {
    const int nk = cache.count();
    if (nk == 0) return 0.0;
    params.theta.validate();
    if (!(params.pi > 0.0)) return kNegInf;

    const int n = cache.n();
    double total = nk * std::log(params.pi) - 0.5 * n * nk * kLog2Pi;
    const double lg_ratio = std::lgamma(kSpotPriorAlpha + 0.5 * nk) - std::lgamma(kSpotPriorAlpha);
    const double alpha_tilde = kSpotPriorAlpha + 0.5 * nk;

    double syy_c;
    Eigen::VectorXd sxy_c;
    Eigen::MatrixXd a;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int p = 0; p < n; ++p) {
        const int i = p + 1;
        const int m = used_width(cache, p, m_k);
        const double f = range_factor(i, params.theta.theta2);
        if (!(f > 0.0)) return kNegInf;
        const double beta = 5.0 * params.theta.theta1 * f;

        centered_moments(cache, p, params.mu, m, syy_c, sxy_c, a);
        double quad = 0.0;
        double logdet_a = 0.0;
        if (m > 0) {
            const double inv_scale = params.theta.theta1 * f;
            for (int j = 0; j < m; ++j) a(j, j) += inv_scale * std::exp(params.theta.theta3 * (j + 1));
            if (!factorize(a, llt)) return kNegInf;
            logdet_a = llt_logdet(llt);
            quad = sxy_c.dot(llt.solve(sxy_c));
        }
        const double beta_tilde = beta + 0.5 * std::max(0.0, syy_c - quad);
        total += -0.5 * logdet_a - 0.5 * logdet_v(params.theta, i, m) + kSpotPriorAlpha * std::log(beta) -
                 alpha_tilde * std::log(beta_tilde) + lg_ratio;
    }
    return total;
}

double log_prior(const ClusterParams& params, const PriorConfig& prior) {
    const double mu_term = -0.5 * std::log(2.0 * std::numbers::pi * prior.lambda) -
                           params.mu * params.mu / (2.0 * prior.lambda);
    double theta_term = 0.0;
    const double theta_vals[3] = {params.theta.theta1, params.theta.theta2, params.theta.theta3};
    for (double t : theta_vals) {
        const double lt = std::log(t);
        theta_term += -lt - 0.5 * std::log(2.0 * std::numbers::pi * prior.xi) - lt * lt / (2.0 * prior.xi);
    }
    return mu_term + theta_term;
}

double log_dirichlet(std::span<const ClusterParams> params, const PriorConfig& prior) {
    double sum_nu = 0.0, val = 0.0;
    for (int k = 0; k < static_cast<int>(params.size()); ++k) {
        const double nu = prior.nu[k];
        sum_nu += nu;
        val -= std::lgamma(nu);
        if (nu != 1.0) val += (nu - 1.0) * std::log(params[k].pi);
    }
    return val + std::lgamma(sum_nu);
}

double log_posterior(std::span<const MomentCache> caches, std::span<const ClusterParams> params,
                     std::span<const int> m_ks, const PriorConfig& prior) {
    double total = log_dirichlet(params, prior);
    for (std::size_t k = 0; k < caches.size(); ++k)
        total += cluster_log_marginal(caches[k], params[k], m_ks[k]) + log_prior(params[k], prior);
    return total;
}

void ClusterEval::refresh(const ClusterParams& params, int m_k) {
    params.theta.validate();
    params_ = params;
    m_k_ = m_k;
    const int n = cache_->n();
    const int nk = cache_->count();
    alpha_tilde_ = kSpotPriorAlpha + 0.5 * nk;
    spots_.resize(n);
    term_sum_ = 0.0;
    valid_ = true;

    const double lg_ratio = std::lgamma(alpha_tilde_) - std::lgamma(kSpotPriorAlpha);
    Eigen::VectorXd sxy_c;
    Eigen::MatrixXd a;
    for (int p = 0; p < n; ++p) {
        Spot& s = spots_[p];
        const int i = p + 1;
        s.m = used_width(*cache_, p, m_k);
        const double f = range_factor(i, params.theta.theta2);
        if (!(f > 0.0)) {
            valid_ = false;
            return;
        }
        s.beta = 5.0 * params.theta.theta1 * f;

        centered_moments(*cache_, p, params.mu, s.m, s.syy_c, sxy_c, a);
        double logdet_a = 0.0;
        s.q = 0.0;
        if (s.m > 0) {
            const double inv_scale = params.theta.theta1 * f;
            for (int j = 0; j < s.m; ++j) a(j, j) += inv_scale * std::exp(params.theta.theta3 * (j + 1));
            if (!factorize(a, s.llt)) {
                valid_ = false;
                return;
            }
            logdet_a = llt_logdet(s.llt);
            s.z = s.llt.solve(sxy_c);
            s.q = sxy_c.dot(s.z);
        } else {
            s.z.resize(0);
        }
        s.beta_tilde = s.beta + 0.5 * std::max(0.0, s.syy_c - s.q);
        s.log_beta_tilde = std::log(s.beta_tilde);
        term_sum_ += -0.5 * logdet_a - 0.5 * logdet_v(params.theta, i, s.m) +
                     kSpotPriorAlpha * std::log(s.beta) - alpha_tilde_ * s.log_beta_tilde + lg_ratio;
    }
}

double ClusterEval::log_marginal() const {
    const int nk = cache_->count();
    if (nk == 0) return 0.0;
    if (!valid_) return kNegInf;
    if (!(params_.pi > 0.0)) return kNegInf;
    return nk * std::log(params_.pi) - 0.5 * cache_->n() * nk * kLog2Pi + term_sum_;
}

double ClusterEval::add_delta(const Eigen::Ref<const Eigen::RowVectorXd>& row_ordered) const {
    if (!valid_) return kNegInf;
    if (!(params_.pi > 0.0)) return kNegInf;

    const int n = cache_->n();
    const double alpha_new = alpha_tilde_ + 0.5;
    double delta = std::log(params_.pi) - 0.5 * n * kLog2Pi +
                   n * (std::lgamma(alpha_new) - std::lgamma(alpha_tilde_));

    Eigen::VectorXd x, w;
    for (int p = 0; p < n; ++p) {
        const Spot& s = spots_[p];
        const double yt = row_ordered[p] - params_.mu;
        double c2 = 0.0, c3 = 0.0;
        if (s.m > 0) {
            const auto& nb = cache_->design().neighbor_lists[p];
            x.resize(s.m);
            for (int j = 0; j < s.m; ++j) x[j] = row_ordered[nb[j]] - params_.mu;
            w = s.llt.solve(x);
            c3 = x.dot(w);
            c2 = x.dot(s.z);
        }
        const double q_new = s.q + 2.0 * c2 * yt + c3 * yt * yt -
                             (c2 + c3 * yt) * (c2 + c3 * yt) / (1.0 + c3);
        const double beta_new = s.beta + 0.5 * std::max(0.0, s.syy_c + yt * yt - q_new);
        delta += -0.5 * std::log1p(c3) - alpha_new * std::log(beta_new) + alpha_tilde_ * s.log_beta_tilde;
    }
    return delta;
}

}  // namespace srgmm
