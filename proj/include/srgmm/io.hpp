// File ingestion and result persistence: expression/count/coordinate tables,
// deviance-residual preprocessing, fit results, scenario configs, gene sets.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "srgmm/enrichment.hpp"
#include "srgmm/sem.hpp"
#include "srgmm/simulate.hpp"

namespace srgmm {

struct ExpressionMatrix {
    Eigen::MatrixXd values;  // observations (genes) x spots
    std::vector<std::string> gene_ids;
    std::vector<std::string> spot_ids;

    void validate() const;
};

struct CountMatrix {
    Eigen::MatrixXd counts;  // non-negative integers
    std::vector<std::string> gene_ids;
    std::vector<std::string> spot_ids;

    void validate() const;  // includes positive spot totals
};

struct CoordsTable {
    Eigen::MatrixX2d coords;
    std::vector<std::string> ids;
};

// Binomial deviance residuals of the constant-rate fit per gene, computed
// against the spot totals, with the 0 log 0 = 0 convention. Genes with zero
// total count produce an all-zero row and a warning.
ExpressionMatrix deviance_residuals(const CountMatrix& counts,
                                    std::vector<std::string>* warnings = nullptr);

// Total binomial deviance per gene (sum of squared residuals).
Eigen::VectorXd gene_deviances(const CountMatrix& counts);

// Keeps the top_n genes by total deviance, descending; ties broken by gene id.
CountMatrix select_top_deviance(const CountMatrix& counts, int top_n);

// --- text formats -----------------------------------------------------------
// Floats are written with 17 significant digits so that save/load round-trips
// reproduce values exactly.

std::string format_double(double v);

CoordsTable load_coords_csv(const std::string& path);
void save_coords_csv(const std::string& path, const Eigen::Ref<const Eigen::MatrixX2d>& coords,
                     const std::vector<std::string>& ids = {});

ExpressionMatrix load_expression_csv(const std::string& path);
void save_expression_csv(const std::string& path, const ExpressionMatrix& m);

// Dense CSV (same layout as expression) or MatrixMarket coordinate format,
// selected by the .mtx extension.
CountMatrix load_counts(const std::string& path);
void save_counts_mtx(const std::string& path, const CountMatrix& m);

std::vector<int> load_labels_csv(const std::string& path);
void save_labels_csv(const std::string& path, const std::vector<int>& labels,
                     const std::vector<std::string>& ids = {});

// One gene id per row, order matching the expression rows.
std::vector<std::string> load_gene_list(const std::string& path);

// Tab-separated gene sets: name, description, members...
GeneSetCollection load_gmt(const std::string& path);

void save_fit_json(const std::string& path, const FitResult& result, const FitConfig& config);
struct LoadedFit {
    FitResult result;
    FitConfig config;
};
LoadedFit load_fit_json(const std::string& path);

ScenarioSpec load_scenario_json(const std::string& path);
void save_scenario_json(const std::string& path, const ScenarioSpec& spec);

}  // namespace srgmm
