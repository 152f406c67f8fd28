// Maximin ordering of spatial locations and nearest-predecessor neighbor lists.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace srgmm {

// Ordered spatial layout shared by all clusters of a model fit.
//
// coords keeps the points in their original (input) order. order[p] is the
// original index of the point placed at maximin position p. neighbor_lists[p]
// holds positions q < p of the (at most m_max) nearest previously ordered
// points, sorted by increasing distance to position p, distance ties broken
// by the smaller position. Immutable after construction.
struct SpatialDesign {
    Eigen::MatrixX2d coords;
    std::vector<int> order;
    std::vector<std::vector<int>> neighbor_lists;
    int m_max = 0;

    int n() const { return static_cast<int>(coords.rows()); }

    // Stored neighbor width at position p: min(m_max, p).
    int width(int p) const { return static_cast<int>(neighbor_lists[p].size()); }
};

// Maximin permutation. The first point is the one closest to the centroid;
// each following point maximizes the minimum distance to all points already
// ordered. All ties are broken by the smallest original index.
std::vector<int> maximin_order(const Eigen::Ref<const Eigen::MatrixX2d>& coords);

// For each position p, the min(m_max, p) positions q < p nearest to p.
std::vector<std::vector<int>> build_neighbor_lists(const Eigen::Ref<const Eigen::MatrixX2d>& coords,
                                                   const std::vector<int>& order, int m_max);

SpatialDesign make_design(const Eigen::Ref<const Eigen::MatrixX2d>& coords, int m_max);

}  // namespace srgmm
