// Collapsed cluster likelihood, parameter priors, and the model posterior.
//
// With the per-spot regression coefficients and conditional variances
// integrated out, a cluster's likelihood factorizes over ordered spots into
// normal-inverse-gamma marginal terms. Everything here is evaluated in log
// space from the raw moment sums in MomentCache, so scoring a candidate label
// configuration never touches the data matrix itself.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <span>
#include <vector>

#include "srgmm/hyperprior.hpp"
#include "srgmm/moment_cache.hpp"

namespace srgmm {

struct ClusterParams {
    double mu = 0.0;
    ThetaParams theta;
    double pi = 1.0;
};

struct PriorConfig {
    double lambda = 100.0;    // variance of the Gaussian prior on mu
    double xi = 4.0;          // variance of the log-normal prior on each theta component
    Eigen::VectorXd nu;       // Dirichlet parameters, one per cluster, each >= 1

    void validate(int k) const;
};

// Posterior quantities of one ordered position given the cluster members.
struct SpotPosteriorStats {
    Eigen::MatrixXd G;
    double alpha_tilde = 0.0;
    double beta_tilde = 0.0;
    double logdet_G = 0.0;
    double logdet_V = 0.0;
};

// Mean-centered slices of the raw sums at position p, width m.
void centered_moments(const MomentCache& cache, int p, double mu, int m,
                      double& syy_c, Eigen::VectorXd& sxy_c, Eigen::MatrixXd& sxx_c);

// G = (Sxx_c + V^{-1})^{-1}, alpha_tilde = alpha + N/2,
// beta_tilde = beta + (Syy_c - Sxy_c' G Sxy_c)/2. The quadratic form is the
// matrix-inversion-lemma expression of the (I + X V X')^{-1} form.
// The slice width is prior.v_diag.size(). Throws on factorization failure.
SpotPosteriorStats spot_stats(const MomentCache& cache, int p, double mu, const SpotPrior& prior);

// Exact log of the collapsed cluster likelihood, constants included:
//   N log(pi) - (n N / 2) log(2 pi) + sum_p [ logdet(G_p)/2 - logdet(V_p)/2
//     + alpha log(beta_p) - alpha_tilde log(beta_tilde_p)
//     + lgamma(alpha_tilde) - lgamma(alpha) ].
// Returns -inf when pi == 0 with members present or when a position cannot
// be factorized after one jitter retry. An empty cluster scores exactly 0.
double cluster_log_marginal(const MomentCache& cache, const ClusterParams& params, int m_k);

// Gaussian prior on mu plus independent log-normal priors on theta.
double log_prior(const ClusterParams& params, const PriorConfig& prior);

// log Dirichlet(pi | nu); the (nu_k = 1, pi_k = 0) corner contributes 0.
double log_dirichlet(std::span<const ClusterParams> params, const PriorConfig& prior);

// Full objective traced by the fitting algorithm:
//   sum_k [ cluster_log_marginal_k + log_prior_k ] + log Dirichlet(pi | nu).
double log_posterior(std::span<const MomentCache> caches, std::span<const ClusterParams> params,
                     std::span<const int> m_ks, const PriorConfig& prior);

// Incremental evaluator bound to one cluster's cache.
//
// refresh() factorizes every position once (O(n m^3)); afterwards
// log_marginal() is O(1) and add_delta() scores the insertion of one row in
// O(n m^2) through rank-one identities, without touching the cache. Any
// mutation of the cache or change of (params, m_k) requires a refresh.
class ClusterEval {
public:
    explicit ClusterEval(const MomentCache& cache) : cache_(&cache) {}

    void refresh(const ClusterParams& params, int m_k);

    bool ok() const { return valid_; }
    const ClusterParams& params() const { return params_; }
    int m_k() const { return m_k_; }

    double log_marginal() const;
    double add_delta(const Eigen::Ref<const Eigen::RowVectorXd>& row_ordered) const;

private:
    struct Spot {
        Eigen::LLT<Eigen::MatrixXd> llt;  // factor of Sxx_c + V^{-1}
        Eigen::VectorXd z;                // (Sxx_c + V^{-1})^{-1} Sxy_c
        double q = 0.0;                   // Sxy_c' z
        double syy_c = 0.0;
        double beta = 0.0;
        double beta_tilde = 0.0;
        double log_beta_tilde = 0.0;
        int m = 0;
    };

    const MomentCache* cache_;
    ClusterParams params_;
    int m_k_ = 0;
    bool valid_ = false;
    double alpha_tilde_ = 0.0;
    double term_sum_ = 0.0;
    std::vector<Spot> spots_;
};

}  // namespace srgmm
