#include "srgmm/moment_cache.hpp"

#include <algorithm>
#include <stdexcept>

namespace srgmm {

MomentCache::MomentCache(const SpatialDesign& design) : design_(&design), n_(design.n()) {
    syy_.assign(n_, 0.0);
    sy_.assign(n_, 0.0);
    sxy_.resize(n_);
    sx_.resize(n_);
    sxx_.resize(n_);
    for (int p = 0; p < n_; ++p) {
        const int w = design.width(p);
        sxy_[p] = Eigen::VectorXd::Zero(w);
        sx_[p] = Eigen::VectorXd::Zero(w);
        sxx_[p] = Eigen::MatrixXd::Zero(w, w);
    }
    scratch_.resize(design.m_max);
}

void MomentCache::update(const Eigen::Ref<const Eigen::RowVectorXd>& row, double sign) {
    if (row.size() != n_) throw std::invalid_argument("MomentCache: row length mismatch");
    for (int p = 0; p < n_; ++p) {
        const double y = row[p];
        syy_[p] += sign * y * y;
        sy_[p] += sign * y;
        const int w = static_cast<int>(sxy_[p].size());
        if (w == 0) continue;
        const auto& nb = design_->neighbor_lists[p];
        auto x = scratch_.head(w);
        for (int j = 0; j < w; ++j) x[j] = row[nb[j]];
        sxy_[p].noalias() += (sign * y) * x;
        sx_[p].noalias() += sign * x;
        sxx_[p].noalias() += sign * (x * x.transpose());
    }
    count_ += sign > 0 ? 1 : -1;
}

void MomentCache::rebuild(const Eigen::Ref<const Eigen::MatrixXd>& y_ordered, std::vector<int> members) {
    for (int p = 0; p < n_; ++p) {
        syy_[p] = 0.0;
        sy_[p] = 0.0;
        sxy_[p].setZero();
        sx_[p].setZero();
        sxx_[p].setZero();
    }
    count_ = 0;
    std::sort(members.begin(), members.end());
    for (int idx : members) add(y_ordered.row(idx));
}

}  // namespace srgmm
