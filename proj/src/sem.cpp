#include "srgmm/sem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "srgmm/nelder_mead.hpp"

namespace srgmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ChainResult {
    double best_lp = kNegInf;
    std::vector<int> best_labels;
    std::vector<ClusterParams> best_params;
    std::vector<int> best_m_ks;
    std::vector<double> trace;
    int iterations = 0;
    int optimizer_failures = 0;
};

double lp_from_evals(const std::vector<ClusterEval>& evals, const std::vector<ClusterParams>& params,
                     const PriorConfig& prior) {
    double total = log_dirichlet(params, prior);
    for (std::size_t k = 0; k < evals.size(); ++k)
        total += evals[k].log_marginal() + log_prior(params[k], prior);
    return total;
}

// Inverse-CDF draw over softmax(scores), walked in descending-score order so
// that permuting the clusters permutes the outcome for the same uniform.
int draw_label(const std::vector<double>& scores, Rng& rng) {
    const int k = static_cast<int>(scores.size());
    double mx = kNegInf;
    for (double s : scores) mx = std::max(mx, s);
    if (mx == kNegInf) return -1;

    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });

    double total = 0.0;
    std::vector<double> probs(k);
    for (int j = 0; j < k; ++j) {
        probs[j] = std::exp(scores[idx[j]] - mx);
        total += probs[j];
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    int chosen = idx[0];
    for (int j = 0; j < k; ++j) {
        acc += probs[j];
        if (target < acc) {
            chosen = idx[j];
            break;
        }
        if (probs[j] > 0.0) chosen = idx[j];  // absorb rounding at the tail
    }
    return chosen;
}

}  // namespace

PriorConfig FitConfig::make_prior() const {
    PriorConfig prior;
    prior.lambda = lambda;
    prior.xi = xi;
    if (nu.empty()) {
        prior.nu = Eigen::VectorXd::Constant(k, 2.0);
    } else if (static_cast<int>(nu.size()) == 1) {
        prior.nu = Eigen::VectorXd::Constant(k, nu[0]);
    } else {
        prior.nu = Eigen::Map<const Eigen::VectorXd>(nu.data(), nu.size());
    }
    return prior;
}

void FitConfig::validate(int n_obs) const {
    if (k < 1) throw std::invalid_argument("FitConfig: k must be >= 1");
    if (k > n_obs) throw std::invalid_argument("FitConfig: k exceeds the number of observations");
    if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("FitConfig: max_iters must be >= 1");
    if (patience < 1) throw std::invalid_argument("FitConfig: patience must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("FitConfig: tol must be positive");
    if (!(m_threshold > 0.0 && m_threshold < 1.0))
        throw std::invalid_argument("FitConfig: m_threshold must lie in (0,1)");
    if (m_cap < 1) throw std::invalid_argument("FitConfig: m_cap must be >= 1");
    if (nm_max_evals < 1 || !(nm_tol > 0.0)) throw std::invalid_argument("FitConfig: invalid optimizer settings");
    if (!init_labels.empty()) {
        if (static_cast<int>(init_labels.size()) != n_obs)
            throw std::invalid_argument("FitConfig: init_labels length mismatch");
        for (int l : init_labels)
            if (l < 0 || l >= k) throw std::invalid_argument("FitConfig: init_labels out of range");
    }
    make_prior().validate(k);
}

AssignmentState initialize(int n_obs, int k, Rng& rng) {
    if (k < 1 || n_obs < 1) throw std::invalid_argument("initialize: need n_obs >= 1 and k >= 1");
    if (k > n_obs) throw std::invalid_argument("initialize: k exceeds the number of observations");

    AssignmentState state;
    state.labels.resize(n_obs);
    state.cluster_sizes.assign(k, 0);
    for (int i = 0; i < n_obs; ++i) {
        state.labels[i] = k == 1 ? 0 : rng.uniform_int(k);
        ++state.cluster_sizes[state.labels[i]];
    }
    while (true) {
        int empty = -1;
        for (int c = 0; c < k; ++c)
            if (state.cluster_sizes[c] == 0) {
                empty = c;
                break;
            }
        if (empty < 0) break;
        const int pick = rng.uniform_int(n_obs);
        --state.cluster_sizes[state.labels[pick]];
        state.labels[pick] = empty;
        ++state.cluster_sizes[empty];
    }
    return state;
}

void se_step(const Eigen::Ref<const Eigen::MatrixXd>& y_ordered, AssignmentState& state,
             std::vector<MomentCache>& caches, std::vector<ClusterEval>& evals, Rng& rng, bool shuffle) {
    const int n_obs = state.n_obs();
    const int k = state.k();
    if (k == 1) return;

    std::vector<int> sweep(n_obs);
    std::iota(sweep.begin(), sweep.end(), 0);
    if (shuffle) {
        for (int i = n_obs - 1; i > 0; --i) std::swap(sweep[i], sweep[rng.uniform_int(i + 1)]);
    }

    std::vector<char> dirty(k, 0);
    std::vector<double> scores(k);
    for (int obs : sweep) {
        const int from = state.labels[obs];
        const auto row = y_ordered.row(obs);
        caches[from].remove(row);
        dirty[from] = 1;

        for (int c = 0; c < k; ++c) {
            if (dirty[c]) {
                evals[c].refresh(evals[c].params(), evals[c].m_k());
                dirty[c] = 0;
            }
            scores[c] = evals[c].add_delta(row);
        }

        const int to = draw_label(scores, rng);
        if (to < 0)
            throw std::runtime_error("se_step: all cluster scores are -inf at observation " +
                                     std::to_string(obs));

        caches[to].add(row);
        dirty[to] = 1;
        state.labels[obs] = to;
        --state.cluster_sizes[from];
        ++state.cluster_sizes[to];
    }
    for (int c = 0; c < k; ++c)
        if (dirty[c]) evals[c].refresh(evals[c].params(), evals[c].m_k());
}

double modal_pi(int n_k, double nu_k, int n_total, double nu_sum, int k) {
    return (n_k + nu_k - 1.0) / (n_total + nu_sum - k);
}

int m_step(std::vector<MomentCache>& caches, std::vector<ClusterParams>& params, std::vector<int>& m_ks,
           const PriorConfig& prior, const FitConfig& cfg) {
    const int k = static_cast<int>(params.size());
    int failures = 0;
    int n_total = 0;
    for (const auto& c : caches) n_total += c.count();

    for (int c = 0; c < k; ++c) {
        if (caches[c].count() == 0) continue;  // parameters stay frozen until repopulated
        const int frozen_m = m_ks[c];
        const double pi_c = params[c].pi;

        auto objective = [&](const Eigen::VectorXd& x) {
            ClusterParams cand;
            cand.mu = x[0];
            cand.theta = {std::exp(x[1]), std::exp(x[2]), std::exp(x[3])};
            cand.pi = pi_c;
            if (!std::isfinite(cand.mu) || !cand.theta.valid())
                return std::numeric_limits<double>::infinity();
            return -(cluster_log_marginal(caches[c], cand, frozen_m) + log_prior(cand, prior));
        };

        Eigen::VectorXd x0(4);
        x0 << params[c].mu, std::log(params[c].theta.theta1), std::log(params[c].theta.theta2),
            std::log(params[c].theta.theta3);
        const NelderMeadResult res = nelder_mead(objective, x0, {cfg.nm_max_evals, cfg.nm_tol, 0.25});
        if (!std::isfinite(res.fx)) {
            ++failures;
            continue;
        }
        params[c].mu = res.x[0];
        params[c].theta = {std::exp(res.x[1]), std::exp(res.x[2]), std::exp(res.x[3])};
        m_ks[c] = select_neighbor_count(params[c].theta.theta3, cfg.m_threshold, cfg.m_cap);
    }

    const double nu_sum = prior.nu.sum();
    for (int c = 0; c < k; ++c)
        params[c].pi = modal_pi(caches[c].count(), prior.nu[c], n_total, nu_sum, k);
    return failures;
}

namespace {

ChainResult run_chain(const Eigen::MatrixXd& y_ordered, const SpatialDesign& design, const FitConfig& cfg,
                      const PriorConfig& prior, std::uint64_t chain_seed) {
    const int n_obs = static_cast<int>(y_ordered.rows());
    const int k = cfg.k;
    Rng rng(chain_seed);

    AssignmentState state;
    if (!cfg.init_labels.empty()) {
        state.labels = cfg.init_labels;
        state.cluster_sizes.assign(k, 0);
        for (int l : state.labels) ++state.cluster_sizes[l];
    } else {
        state = initialize(n_obs, k, rng);
    }

    std::vector<MomentCache> caches;
    caches.reserve(k);
    for (int c = 0; c < k; ++c) caches.emplace_back(design);
    std::vector<std::vector<int>> members(k);
    for (int i = 0; i < n_obs; ++i) members[state.labels[i]].push_back(i);
    for (int c = 0; c < k; ++c) caches[c].rebuild(y_ordered, members[c]);

    const double nu_sum = prior.nu.sum();
    std::vector<ClusterParams> params(k);
    std::vector<int> m_ks(k, select_neighbor_count(1.0, cfg.m_threshold, cfg.m_cap));
    for (int c = 0; c < k; ++c) {
        double sum = 0.0;
        for (int i : members[c]) sum += y_ordered.row(i).sum();
        params[c].mu = state.cluster_sizes[c] > 0
                           ? sum / (static_cast<double>(state.cluster_sizes[c]) * y_ordered.cols())
                           : 0.0;
        params[c].theta = {1.0, 1.0, 1.0};
        params[c].pi = modal_pi(state.cluster_sizes[c], prior.nu[c], n_obs, nu_sum, k);
    }

    std::vector<ClusterEval> evals;
    evals.reserve(k);
    for (int c = 0; c < k; ++c) {
        evals.emplace_back(caches[c]);
        evals[c].refresh(params[c], m_ks[c]);
    }

    ChainResult out;
    double lp = lp_from_evals(evals, params, prior);
    out.trace.push_back(lp);
    auto snapshot = [&](double value) {
        out.best_lp = value;
        out.best_labels = state.labels;
        out.best_params = params;
        out.best_m_ks = m_ks;
    };
    snapshot(lp);

    int below_tol = 0;
    for (int t = 1; t <= cfg.max_iters; ++t) {
        se_step(y_ordered, state, caches, evals, rng, cfg.shuffle_sweep);
        out.optimizer_failures += m_step(caches, params, m_ks, prior, cfg);
        for (int c = 0; c < k; ++c) evals[c].refresh(params[c], m_ks[c]);

        const double lp_new = lp_from_evals(evals, params, prior);
        out.trace.push_back(lp_new);
        out.iterations = t;
        if (lp_new > out.best_lp) snapshot(lp_new);

        below_tol = (lp_new - lp < cfg.tol) ? below_tol + 1 : 0;
        lp = lp_new;
        if (below_tol >= cfg.patience) break;
    }
    return out;
}

}  // namespace

FitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& y,
              const Eigen::Ref<const Eigen::MatrixX2d>& coords, const FitConfig& cfg) {
    const int n_obs = static_cast<int>(y.rows());
    const int n_spots = static_cast<int>(y.cols());
    if (n_obs < 1 || n_spots < 1) throw std::invalid_argument("fit: empty data matrix");
    if (!y.allFinite()) throw std::invalid_argument("fit: non-finite values in the data matrix");
    if (coords.rows() != n_spots)
        throw std::invalid_argument("fit: coordinate count does not match the number of spots");
    cfg.validate(n_obs);
    const PriorConfig prior = cfg.make_prior();

    const SpatialDesign design = make_design(coords, cfg.m_cap);
    Eigen::MatrixXd y_ordered(n_obs, n_spots);
    for (int p = 0; p < n_spots; ++p) y_ordered.col(p) = y.col(design.order[p]);

    std::vector<ChainResult> chains(cfg.restarts);
    const int workers = std::max(1, std::min(cfg.threads, cfg.restarts));
    if (workers == 1) {
        for (int c = 0; c < cfg.restarts; ++c)
            chains[c] = run_chain(y_ordered, design, cfg, prior, cfg.seed + c);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int c = next.fetch_add(1); c < cfg.restarts; c = next.fetch_add(1))
                    chains[c] = run_chain(y_ordered, design, cfg, prior, cfg.seed + c);
            });
        }
        for (auto& th : pool) th.join();
    }

    int best_chain = 0;
    for (int c = 1; c < cfg.restarts; ++c)
        if (chains[c].best_lp > chains[best_chain].best_lp) best_chain = c;
    const ChainResult& best = chains[best_chain];

    FitResult res;
    res.labels = best.best_labels;
    res.params = best.best_params;
    res.m_ks = best.best_m_ks;
    res.log_posterior = best.best_lp;
    res.best_chain = best_chain;
    res.seed = cfg.seed;
    res.sizes.assign(cfg.k, 0);
    for (int l : res.labels) ++res.sizes[l];
    for (int c = 0; c < cfg.restarts; ++c) {
        res.trace.push_back(std::move(chains[c].trace));
        res.iterations.push_back(chains[c].iterations);
        res.optimizer_failures += chains[c].optimizer_failures;
    }

    // Deterministic output labeling: clusters sorted by decreasing size.
    // Skipped for an asymmetric Dirichlet prior, where cluster indices carry
    // meaning and permuting them would change the posterior value.
    bool symmetric = true;
    for (int c = 1; c < cfg.k; ++c) symmetric = symmetric && prior.nu[c] == prior.nu[0];
    if (symmetric) {
        std::vector<int> perm(cfg.k);
        std::iota(perm.begin(), perm.end(), 0);
        std::stable_sort(perm.begin(), perm.end(),
                         [&](int a, int b) { return res.sizes[a] > res.sizes[b]; });
        std::vector<int> inverse(cfg.k);
        for (int c = 0; c < cfg.k; ++c) inverse[perm[c]] = c;
        for (int& l : res.labels) l = inverse[l];
        std::vector<ClusterParams> params(cfg.k);
        std::vector<int> m_ks(cfg.k), sizes(cfg.k);
        for (int c = 0; c < cfg.k; ++c) {
            params[c] = res.params[perm[c]];
            m_ks[c] = res.m_ks[perm[c]];
            sizes[c] = res.sizes[perm[c]];
        }
        res.params = std::move(params);
        res.m_ks = std::move(m_ks);
        res.sizes = std::move(sizes);
    }
    return res;
}

}  // namespace srgmm
