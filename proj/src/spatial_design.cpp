#include "srgmm/spatial_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace srgmm {

namespace {

void check_coords(const Eigen::Ref<const Eigen::MatrixX2d>& coords) {
    if (coords.rows() == 0) throw std::invalid_argument("maximin_order: empty coordinate set");
    if (!coords.allFinite()) throw std::invalid_argument("maximin_order: non-finite coordinate");
}

}  // namespace

std::vector<int> maximin_order(const Eigen::Ref<const Eigen::MatrixX2d>& coords) {
    check_coords(coords);
    const int n = static_cast<int>(coords.rows());

    const Eigen::RowVector2d centroid = coords.colwise().mean();
    int first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double d = (coords.row(i) - centroid).squaredNorm();
        if (d < best) {
            best = d;
            first = i;
        }
    }

    std::vector<int> order;
    order.reserve(n);
    order.push_back(first);

    // min_dist[i] = squared distance from point i to the selected set
    std::vector<double> min_dist(n);
    std::vector<char> selected(n, 0);
    selected[first] = 1;
    for (int i = 0; i < n; ++i) min_dist[i] = (coords.row(i) - coords.row(first)).squaredNorm();

    for (int step = 1; step < n; ++step) {
        int pick = -1;
        double pick_dist = -1.0;
        for (int i = 0; i < n; ++i) {
            if (selected[i]) continue;
            if (min_dist[i] > pick_dist) {
                pick_dist = min_dist[i];
                pick = i;
            }
        }
        selected[pick] = 1;
        order.push_back(pick);
        for (int i = 0; i < n; ++i) {
            if (selected[i]) continue;
            const double d = (coords.row(i) - coords.row(pick)).squaredNorm();
            if (d < min_dist[i]) min_dist[i] = d;
        }
    }
    return order;
}

std::vector<std::vector<int>> build_neighbor_lists(const Eigen::Ref<const Eigen::MatrixX2d>& coords,
                                                   const std::vector<int>& order, int m_max) {
    if (m_max < 1) throw std::invalid_argument("build_neighbor_lists: m_max must be >= 1");
    const int n = static_cast<int>(order.size());
    if (coords.rows() != n) throw std::invalid_argument("build_neighbor_lists: order/coords size mismatch");

    std::vector<std::vector<int>> lists(n);
    std::vector<std::pair<double, int>> cand;
    for (int p = 0; p < n; ++p) {
        const int m = std::min(m_max, p);
        if (m == 0) continue;
        cand.clear();
        cand.reserve(p);
        const Eigen::RowVector2d sp = coords.row(order[p]);
        for (int q = 0; q < p; ++q) {
            cand.emplace_back((coords.row(order[q]) - sp).squaredNorm(), q);
        }
        // nearest first; equal distances resolved by the smaller position
        std::partial_sort(cand.begin(), cand.begin() + m, cand.end());
        lists[p].reserve(m);
        for (int j = 0; j < m; ++j) lists[p].push_back(cand[j].second);
    }
    return lists;
}

SpatialDesign make_design(const Eigen::Ref<const Eigen::MatrixX2d>& coords, int m_max) {
    SpatialDesign d;
    d.coords = coords;
    d.order = maximin_order(coords);
    d.neighbor_lists = build_neighbor_lists(coords, d.order, m_max);
    d.m_max = m_max;
    return d;
}

}  // namespace srgmm
