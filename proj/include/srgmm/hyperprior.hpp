// Spatially informed normal-inverse-gamma hyperparameters.
//
// A cluster's spatial behaviour is controlled by three positive parameters
// (marginal variability, range, smoothness decay). They map deterministically
// to the per-spot prior used when the regression coefficients and conditional
// variances are integrated out.
#pragma once

#include <Eigen/Dense>

namespace srgmm {

struct ThetaParams {
    double theta1 = 1.0;  // marginal variability
    double theta2 = 1.0;  // range
    double theta3 = 1.0;  // smoothness / neighbor decay

    bool valid() const;
    void validate() const;  // throws std::invalid_argument
};

// Prior for one ordered position: u | d ~ N(0, d * diag(v_diag)),
// d ~ InverseGamma(alpha, beta).
struct SpotPrior {
    Eigen::VectorXd v_diag;
    double alpha = 0.0;
    double beta = 0.0;
};

inline constexpr double kSpotPriorAlpha = 6.0;

// f(i, theta2) = 1 - exp(-theta2 / sqrt(i)), for 1-based position i.
double range_factor(int i, double theta2);

// v_diag[j] = exp(-theta3 * (j+1)) / (theta1 * f(i, theta2)) for j = 0..m_i-1,
// alpha = 6, beta = 5 * theta1 * f(i, theta2).
SpotPrior spot_prior(const ThetaParams& theta, int i, int m_i);

// Largest neighbor rank whose prior coefficient variation exp(-theta3 * rank)
// stays above `threshold`, clamped to [1, m_cap].
int select_neighbor_count(double theta3, double threshold, int m_cap);

}  // namespace srgmm
