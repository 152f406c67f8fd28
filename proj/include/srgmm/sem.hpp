// Stochastic EM fitting: sequential collapsed label resampling alternated
// with numerical MAP updates of the cluster parameters, repeated over
// independently seeded restarts.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "srgmm/marginal.hpp"
#include "srgmm/rng.hpp"
#include "srgmm/spatial_design.hpp"

namespace srgmm {

struct AssignmentState {
    std::vector<int> labels;
    std::vector<int> cluster_sizes;

    int n_obs() const { return static_cast<int>(labels.size()); }
    int k() const { return static_cast<int>(cluster_sizes.size()); }
};

struct FitConfig {
    int k = 1;
    int restarts = 10;
    int max_iters = 200;
    double tol = 1e-4;   // absolute log-posterior increase
    int patience = 5;    // consecutive sub-tol iterations before stopping
    std::uint64_t seed = 0;

    double lambda = 100.0;
    double xi = 4.0;
    std::vector<double> nu;  // broadcast to k entries of 2.0 when empty

    double m_threshold = 1e-3;
    int m_cap = 50;
    int nm_max_evals = 400;
    double nm_tol = 1e-6;

    bool shuffle_sweep = false;  // resample observations in shuffled order
    int threads = 1;             // restart chains run in parallel when > 1

    std::vector<int> init_labels;  // when non-empty, used instead of random initialization

    PriorConfig make_prior() const;
    void validate(int n_obs) const;
};

struct FitResult {
    std::vector<int> labels;                 // cluster ids after the size sort
    std::vector<ClusterParams> params;       // per cluster, same order as labels
    std::vector<int> m_ks;                   // neighbor count per cluster
    std::vector<int> sizes;                  // members per cluster
    double log_posterior = 0.0;              // maximum over all traced iterations
    std::vector<std::vector<double>> trace;  // per chain; entry 0 is the initialization value
    std::vector<int> iterations;             // SE/M iterations run per chain
    int best_chain = 0;
    std::uint64_t seed = 0;
    int optimizer_failures = 0;
};

// Labels drawn i.i.d. uniform over {0..k-1}; empty clusters are repaired by
// reassigning uniformly chosen observations until every cluster is populated.
AssignmentState initialize(int n_obs, int k, Rng& rng);

// One sequential collapsed sweep over all observations, in index order (or a
// freshly drawn shuffle). Earlier reassignments condition later draws. The
// caches and evaluators must be consistent with `state` on entry and are kept
// consistent throughout. Draws use a single uniform per observation through
// an inverse CDF walked in descending-score order, which makes the outcome
// equivariant under relabelings of the clusters.
void se_step(const Eigen::Ref<const Eigen::MatrixXd>& y_ordered, AssignmentState& state,
             std::vector<MomentCache>& caches, std::vector<ClusterEval>& evals, Rng& rng,
             bool shuffle = false);

// MAP update of (mu, theta) per non-empty cluster by Nelder-Mead on
// (mu, log theta), with the neighbor count frozen during the search and
// recomputed from the accepted theta3; pi is set to the Dirichlet posterior
// mode. Empty clusters keep their parameters. Returns the number of clusters
// whose optimizer failed (previous parameters kept). Evaluators are NOT
// refreshed here.
int m_step(std::vector<MomentCache>& caches, std::vector<ClusterParams>& params, std::vector<int>& m_ks,
           const PriorConfig& prior, const FitConfig& cfg);

// Modal Dirichlet-posterior weight update.
double modal_pi(int n_k, double nu_k, int n_total, double nu_sum, int k);

// Full multi-restart fit. Y is observations x spots, coords one row per spot.
FitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& y,
              const Eigen::Ref<const Eigen::MatrixX2d>& coords, const FitConfig& cfg);

}  // namespace srgmm
