// Synthetic data generation (spatial kernels, uniform spot sampling,
// multivariate-normal cluster draws) and partition scoring.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "srgmm/rng.hpp"

namespace srgmm {

enum class KernelFamily { exponential, gaussian };

struct KernelSpec {
    KernelFamily family = KernelFamily::exponential;
    double sigma2 = 1.0;
    double phi = 1.0;
    double nugget = 0.0;

    void validate() const;
};

struct Bounds {
    double x_lo = 0.0, x_hi = 10.0;
    double y_lo = 0.0, y_hi = 10.0;
};

struct ScenarioSpec {
    int n_spots = 500;
    Bounds bounds;
    std::vector<int> cluster_sizes;
    std::vector<KernelSpec> kernels;
    std::vector<double> means;  // defaults to zeros
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimulatedDataset {
    Eigen::MatrixXd y;  // observations x spots
    std::vector<int> true_labels;
    Eigen::MatrixX2d coords;
};

// Entry (i, j) = kernel(||s_i - s_j||) with the nugget added on the diagonal.
// Exponential: sigma2 exp(-d/phi); Gaussian: sigma2 exp(-d^2/phi^2).
Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixX2d>& coords, const KernelSpec& spec);

Eigen::MatrixX2d sample_spots(int n, const Bounds& bounds, Rng& rng);

// Symmetric square root of a covariance matrix with escalating diagonal
// jitter for near-singular kernels.
Eigen::MatrixXd covariance_root(const Eigen::Ref<const Eigen::MatrixXd>& sigma);

SimulatedDataset simulate_dataset(const ScenarioSpec& spec);

// Fraction of observation pairs on which the two partitions agree
// (co-clustered in both or separated in both).
double rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

KernelFamily kernel_family_from_string(const std::string& name);
std::string to_string(KernelFamily family);

}  // namespace srgmm
