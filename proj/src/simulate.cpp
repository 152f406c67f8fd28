#include "srgmm/simulate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace srgmm {

void KernelSpec::validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("KernelSpec: sigma2 must be positive");
    if (!(phi > 0.0) || !std::isfinite(phi)) throw std::invalid_argument("KernelSpec: phi must be positive");
    if (nugget < 0.0 || !std::isfinite(nugget)) throw std::invalid_argument("KernelSpec: nugget must be non-negative");
}

void ScenarioSpec::validate() const {
    if (n_spots < 1) throw std::invalid_argument("ScenarioSpec: n_spots must be >= 1");
    if (!(bounds.x_hi > bounds.x_lo) || !(bounds.y_hi > bounds.y_lo))
        throw std::invalid_argument("ScenarioSpec: degenerate bounds");
    if (cluster_sizes.empty()) throw std::invalid_argument("ScenarioSpec: no clusters");
    if (kernels.size() != cluster_sizes.size())
        throw std::invalid_argument("ScenarioSpec: kernels and cluster_sizes must have equal length");
    if (!means.empty() && means.size() != cluster_sizes.size())
        throw std::invalid_argument("ScenarioSpec: means and cluster_sizes must have equal length");
    for (int s : cluster_sizes)
        if (s < 1) throw std::invalid_argument("ScenarioSpec: cluster sizes must be >= 1");
    for (const auto& k : kernels) k.validate();
}

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixX2d>& coords, const KernelSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(coords.rows());
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i) {
        k(i, i) = spec.sigma2 + spec.nugget;
        for (int j = i + 1; j < n; ++j) {
            const double d = (coords.row(i) - coords.row(j)).norm();
            const double v = spec.family == KernelFamily::exponential
                                 ? spec.sigma2 * std::exp(-d / spec.phi)
                                 : spec.sigma2 * std::exp(-d * d / (spec.phi * spec.phi));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Eigen::MatrixX2d sample_spots(int n, const Bounds& bounds, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_spots: n must be >= 1");
    if (!(bounds.x_hi > bounds.x_lo) || !(bounds.y_hi > bounds.y_lo))
        throw std::invalid_argument("sample_spots: degenerate bounds");
    Eigen::MatrixX2d coords(n, 2);
    for (int i = 0; i < n; ++i) {
        coords(i, 0) = rng.uniform(bounds.x_lo, bounds.x_hi);
        coords(i, 1) = rng.uniform(bounds.y_lo, bounds.y_hi);
    }
    return coords;
}

Eigen::MatrixXd covariance_root(const Eigen::Ref<const Eigen::MatrixXd>& sigma) {
    const int n = static_cast<int>(sigma.rows());
    const double scale = sigma.trace() / n;
    for (double jitter : {0.0, 1e-10, 1e-8, 1e-6}) {
        Eigen::MatrixXd a = sigma;
        a.diagonal().array() += jitter * scale;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
        if (eig.info() != Eigen::Success) continue;
        if (eig.eigenvalues().minCoeff() < -1e-8 * scale) continue;
        return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
               eig.eigenvectors().transpose();
    }
    throw std::runtime_error("covariance_root: matrix is not positive semi-definite after jitter escalation");
}

SimulatedDataset simulate_dataset(const ScenarioSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SimulatedDataset out;
    out.coords = sample_spots(spec.n_spots, spec.bounds, rng);

    const int k = static_cast<int>(spec.cluster_sizes.size());
    const int n_obs = std::accumulate(spec.cluster_sizes.begin(), spec.cluster_sizes.end(), 0);
    out.y.resize(n_obs, spec.n_spots);
    out.true_labels.resize(n_obs);

    Eigen::VectorXd z(spec.n_spots);
    int row = 0;
    for (int c = 0; c < k; ++c) {
        const Eigen::MatrixXd root = covariance_root(kernel_matrix(out.coords, spec.kernels[c]));
        const double mean = spec.means.empty() ? 0.0 : spec.means[c];
        for (int r = 0; r < spec.cluster_sizes[c]; ++r, ++row) {
            for (int j = 0; j < spec.n_spots; ++j) z[j] = rng.normal();
            out.y.row(row) = (root * z).transpose().array() + mean;
            out.true_labels[row] = c;
        }
    }
    return out;
}

double rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
    const std::size_t n = labels_a.size();
    if (n != labels_b.size()) throw std::invalid_argument("rand_index: label vectors differ in length");
    if (n < 2) throw std::invalid_argument("rand_index: need at least two observations");

    auto compact = [](const std::vector<int>& labels) {
        std::unordered_map<int, int> ids;
        std::vector<int> out(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            out[i] = ids.emplace(labels[i], static_cast<int>(ids.size())).first->second;
        return std::make_pair(out, static_cast<int>(ids.size()));
    };
    auto [a, ka] = compact(labels_a);
    auto [b, kb] = compact(labels_b);

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(ka, kb);
    for (std::size_t i = 0; i < n; ++i) counts(a[i], b[i]) += 1.0;

    auto pairs2 = [](double m) { return 0.5 * m * (m - 1.0); };
    double same_both = 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) same_both += pairs2(counts(i, j));
    double same_a = 0.0, same_b = 0.0;
    for (int i = 0; i < ka; ++i) same_a += pairs2(counts.row(i).sum());
    for (int j = 0; j < kb; ++j) same_b += pairs2(counts.col(j).sum());

    const double total = pairs2(static_cast<double>(n));
    return (total + 2.0 * same_both - same_a - same_b) / total;
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "exponential" || name == "exp") return KernelFamily::exponential;
    if (name == "gaussian" || name == "gauss") return KernelFamily::gaussian;
    throw std::invalid_argument("unknown kernel family: " + name);
}

std::string to_string(KernelFamily family) {
    return family == KernelFamily::exponential ? "exponential" : "gaussian";
}

}  // namespace srgmm
