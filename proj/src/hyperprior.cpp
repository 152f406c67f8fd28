#include "srgmm/hyperprior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srgmm {

bool ThetaParams::valid() const {
    return std::isfinite(theta1) && theta1 > 0.0 && std::isfinite(theta2) && theta2 > 0.0 &&
           std::isfinite(theta3) && theta3 > 0.0;
}

void ThetaParams::validate() const {
    if (!valid()) throw std::invalid_argument("ThetaParams: components must be finite and positive");
}

double range_factor(int i, double theta2) {
    if (i < 1) throw std::invalid_argument("range_factor: position index must be >= 1");
    if (theta2 < 0.0) throw std::invalid_argument("range_factor: theta2 must be non-negative");
    return 1.0 - std::exp(-theta2 / std::sqrt(static_cast<double>(i)));
}

SpotPrior spot_prior(const ThetaParams& theta, int i, int m_i) {
    if (i < 1) throw std::invalid_argument("spot_prior: position index must be >= 1");
    if (m_i < 0 || m_i > i - 1) throw std::invalid_argument("spot_prior: need 0 <= m_i <= i-1");
    const double f = range_factor(i, theta.theta2);
    if (!(f > 0.0)) throw std::domain_error("spot_prior: degenerate prior, f(i, theta2) = 0");

    SpotPrior prior;
    prior.alpha = kSpotPriorAlpha;
    prior.beta = 5.0 * theta.theta1 * f;
    prior.v_diag.resize(m_i);
    const double denom = theta.theta1 * f;
    for (int j = 0; j < m_i; ++j) prior.v_diag[j] = std::exp(-theta.theta3 * (j + 1)) / denom;
    return prior;
}

int select_neighbor_count(double theta3, double threshold, int m_cap) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("select_neighbor_count: threshold must lie in (0,1)");
    if (m_cap < 1) throw std::invalid_argument("select_neighbor_count: m_cap must be >= 1");
    if (!(theta3 > 0.0)) throw std::invalid_argument("select_neighbor_count: theta3 must be positive");

    int m = static_cast<int>(std::floor(std::log(1.0 / threshold) / theta3));
    // repair floating-point boundary cases around the floor
    while (std::exp(-theta3 * (m + 1)) >= threshold) ++m;
    while (m >= 1 && std::exp(-theta3 * m) < threshold) --m;
    return std::clamp(m, 1, m_cap);
}

}  // namespace srgmm
