// Per-cluster raw sufficient statistics over ordered spots.
//
// For every ordered position p the cache keeps raw (uncentered) sums over the
// cluster's member rows: sum of y_p^2, sum of y_p, and the cross/self sums of
// the stored neighbor values. Sums are stored at the design's full neighbor
// width; evaluations slice the leading block they need, so neither a change
// of the cluster mean nor a change of the per-cluster neighbor count forces a
// rebuild. Rows are expected in ordered-column layout (column p = maximin
// position p).
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "srgmm/spatial_design.hpp"

namespace srgmm {

class MomentCache {
public:
    explicit MomentCache(const SpatialDesign& design);

    void add(const Eigen::Ref<const Eigen::RowVectorXd>& row_ordered) { update(row_ordered, +1.0); }
    void remove(const Eigen::Ref<const Eigen::RowVectorXd>& row_ordered) { update(row_ordered, -1.0); }

    // Bulk construction; member rows are accumulated in sorted index order so
    // the result is invariant to the ordering of `members`.
    void rebuild(const Eigen::Ref<const Eigen::MatrixXd>& y_ordered, std::vector<int> members);

    int count() const { return count_; }
    int n() const { return n_; }
    const SpatialDesign& design() const { return *design_; }

    double syy(int p) const { return syy_[p]; }
    double sy(int p) const { return sy_[p]; }
    const Eigen::VectorXd& sxy(int p) const { return sxy_[p]; }
    const Eigen::VectorXd& sx(int p) const { return sx_[p]; }
    const Eigen::MatrixXd& sxx(int p) const { return sxx_[p]; }

private:
    void update(const Eigen::Ref<const Eigen::RowVectorXd>& row, double sign);

    const SpatialDesign* design_;
    int n_ = 0;
    int count_ = 0;
    std::vector<double> syy_, sy_;
    std::vector<Eigen::VectorXd> sxy_, sx_;
    std::vector<Eigen::MatrixXd> sxx_;
    Eigen::VectorXd scratch_;  // neighbor values of the row being applied
};

}  // namespace srgmm
