#include "srgmm/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srgmm {

namespace {

double log_choose(int n, int r) {
    return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

int intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    int count = 0;
    for (const auto& g : small) count += large.count(g);
    return count;
}

}  // namespace

double fisher_enrichment(const std::set<std::string>& cluster_genes,
                         const std::set<std::string>& signature_genes,
                         const std::set<std::string>& universe) {
    const int m = static_cast<int>(universe.size());
    if (m == 0) throw std::invalid_argument("fisher_enrichment: empty universe");
    for (const auto& g : cluster_genes)
        if (!universe.count(g)) throw std::invalid_argument("fisher_enrichment: cluster gene outside the universe");

    const int ks = intersection_size(signature_genes, universe);
    const int c = static_cast<int>(cluster_genes.size());
    const int x = intersection_size(cluster_genes, signature_genes);

    // P(overlap >= x) under the hypergeometric law
    const double log_denom = log_choose(m, c);
    double p = 0.0;
    const int upper = std::min(ks, c);
    for (int j = x; j <= upper; ++j) {
        if (c - j > m - ks) continue;
        p += std::exp(log_choose(ks, j) + log_choose(m - ks, c - j) - log_denom);
    }
    return std::min(1.0, p);
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
    const int m = static_cast<int>(p_values.size());
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bh_adjust: p-values must lie in [0,1]");
    if (m == 0) return {};

    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return p_values[a] < p_values[b]; });

    std::vector<double> adjusted(m);
    double running = 1.0;
    for (int rank = m - 1; rank >= 0; --rank) {
        running = std::min(running, p_values[idx[rank]] * m / (rank + 1));
        adjusted[idx[rank]] = running;
    }
    return adjusted;
}

std::vector<EnrichmentRow> enrich_clusters(const std::vector<std::string>& gene_ids,
                                           const std::vector<int>& labels, int k,
                                           const GeneSetCollection& sets) {
    if (gene_ids.size() != labels.size())
        throw std::invalid_argument("enrich_clusters: gene ids and labels differ in length");

    std::set<std::string> universe = sets.universe;
    if (universe.empty()) universe.insert(gene_ids.begin(), gene_ids.end());

    std::vector<std::set<std::string>> cluster_genes(k);
    for (std::size_t i = 0; i < gene_ids.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw std::invalid_argument("enrich_clusters: label out of range");
        cluster_genes[labels[i]].insert(gene_ids[i]);
    }

    std::vector<EnrichmentRow> rows;
    for (int c = 0; c < k; ++c) {
        std::vector<double> ps;
        std::vector<EnrichmentRow> cluster_rows;
        for (const auto& [name, members] : sets.signatures) {
            EnrichmentRow row;
            row.cluster = c;
            row.signature = name;
            row.cluster_size = static_cast<int>(cluster_genes[c].size());
            row.signature_size = intersection_size(members, universe);
            row.overlap = intersection_size(cluster_genes[c], members);
            row.p = fisher_enrichment(cluster_genes[c], members, universe);
            ps.push_back(row.p);
            cluster_rows.push_back(std::move(row));
        }
        const std::vector<double> adj = bh_adjust(ps);
        for (std::size_t i = 0; i < cluster_rows.size(); ++i) cluster_rows[i].adj_p = adj[i];
        rows.insert(rows.end(), cluster_rows.begin(), cluster_rows.end());
    }
    return rows;
}

}  // namespace srgmm
