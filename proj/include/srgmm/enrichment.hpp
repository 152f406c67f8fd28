// Gene-set over-representation testing: one-sided Fisher exact tests with
// Benjamini-Hochberg FDR adjustment.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace srgmm {

struct GeneSetCollection {
    std::map<std::string, std::set<std::string>> signatures;
    std::set<std::string> universe;
};

// Upper hypergeometric tail: probability of observing at least the given
// overlap between a cluster of size |cluster_genes| and a signature, drawing
// from the universe. Signature members outside the universe are ignored.
double fisher_enrichment(const std::set<std::string>& cluster_genes,
                         const std::set<std::string>& signature_genes,
                         const std::set<std::string>& universe);

// Step-up FDR adjustment, input order preserved.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

struct EnrichmentRow {
    int cluster = 0;
    std::string signature;
    int overlap = 0;
    int cluster_size = 0;
    int signature_size = 0;  // within the universe
    double p = 1.0;
    double adj_p = 1.0;
};

// Tests every (cluster, signature) pair; p-values are adjusted within each
// cluster across signatures.
std::vector<EnrichmentRow> enrich_clusters(const std::vector<std::string>& gene_ids,
                                           const std::vector<int>& labels, int k,
                                           const GeneSetCollection& sets);

}  // namespace srgmm
