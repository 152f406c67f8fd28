// Command-line interface: simulate / residuals / fit / summarize / evaluate /
// enrich / bench.
#include <CLI11.hpp>

#include <Eigen/Dense>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srgmm/bench.hpp"
#include "srgmm/io.hpp"
#include "srgmm/marginal.hpp"
#include "srgmm/sem.hpp"
#include "srgmm/simulate.hpp"
#include "srgmm/summaries.hpp"

namespace {

constexpr int kExitInvalidInput = 2;
constexpr int kExitNumericalFailure = 3;

struct GlobalOpts {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
    bool verbose = false;
};

void log_verbose(const GlobalOpts& g, const std::string& msg) {
    if (g.verbose) std::cerr << "[srgmm] " << msg << '\n';
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Spatially regularized Gaussian mixture clustering"};
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--seed", global.seed, "Seed override for commands that draw random numbers")
        ->each([&](const std::string&) { global.seed_given = true; });
    app.add_option("--threads", global.threads, "Worker threads for restarts and benchmarks");
    app.add_flag("--verbose", global.verbose, "Progress output on stderr");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset from a scenario file");
    std::string sim_scenario, sim_prefix = "./";
    sim->add_option("--scenario", sim_scenario, "Scenario JSON")->required();
    sim->add_option("--out-prefix", sim_prefix, "Output prefix for Y.csv, coords.csv, labels.csv");

    // ---- residuals ----
    auto* res = app.add_subcommand("residuals", "Binomial deviance residuals from counts");
    std::string res_counts, res_out;
    int res_top = 0;
    res->add_option("--counts", res_counts, "Counts (CSV or MatrixMarket .mtx)")->required();
    res->add_option("--top-n", res_top, "Keep only the top-n genes by total deviance");
    res->add_option("--out", res_out, "Output expression CSV")->required();

    // ---- fit ----
    auto* fit_cmd = app.add_subcommand("fit", "Fit the mixture by stochastic EM");
    std::string fit_expr, fit_coords, fit_out = "fit.json";
    srgmm::FitConfig cfg;
    fit_cmd->add_option("--expr", fit_expr, "Expression CSV (rows = observations)")->required();
    fit_cmd->add_option("--coords", fit_coords, "Coordinates CSV")->required();
    fit_cmd->add_option("--k", cfg.k, "Number of clusters")->required();
    fit_cmd->add_option("--restarts", cfg.restarts, "Independent restarts");
    fit_cmd->add_option("--max-iter", cfg.max_iters, "Iteration cap per restart");
    fit_cmd->add_option("--tol", cfg.tol, "Convergence threshold on the log-posterior increase");
    fit_cmd->add_option("--patience", cfg.patience, "Consecutive sub-tol iterations before stopping");
    fit_cmd->add_option("--lambda", cfg.lambda, "Prior variance of the cluster means");
    fit_cmd->add_option("--xi", cfg.xi, "Log-normal prior variance of the spatial parameters");
    double nu_value = 2.0;
    fit_cmd->add_option("--nu", nu_value, "Dirichlet parameter (shared by all clusters)");
    fit_cmd->add_option("--m-threshold", cfg.m_threshold, "Prior-variation cutoff for the neighbor count");
    fit_cmd->add_option("--m-cap", cfg.m_cap, "Upper bound on the neighbor count");
    fit_cmd->add_option("--nm-max-evals", cfg.nm_max_evals, "Objective evaluation cap per M-step search");
    fit_cmd->add_option("--nm-tol", cfg.nm_tol, "Simplex size tolerance of the M-step search");
    fit_cmd->add_flag("--shuffle-sweep", cfg.shuffle_sweep, "Resample observations in shuffled order");
    fit_cmd->add_option("--out", fit_out, "Output fit JSON");

    // ---- summarize ----
    auto* summ = app.add_subcommand("summarize", "Per-spot median absolute correlations of a fit");
    std::string su_fit, su_expr, su_coords, su_out = "rho.csv";
    bool su_ig_mean = false;
    int su_dense_cap = 6000;
    summ->add_option("--fit", su_fit, "Fit JSON")->required();
    summ->add_option("--expr", su_expr, "Expression CSV used for the fit")->required();
    summ->add_option("--coords", su_coords, "Coordinates CSV used for the fit")->required();
    summ->add_option("--out", su_out, "Output CSV");
    summ->add_flag("--ig-mean", su_ig_mean, "Use the inverse-gamma mean instead of the mode for d");
    summ->add_option("--dense-cap", su_dense_cap, "Largest n for dense covariance reconstruction");

    // ---- evaluate ----
    auto* eval = app.add_subcommand("evaluate", "Rand index of a fit against true labels");
    std::string ev_truth, ev_pred;
    eval->add_option("--truth", ev_truth, "True labels CSV")->required();
    eval->add_option("--pred", ev_pred, "Fit JSON")->required();

    // ---- enrich ----
    auto* enr = app.add_subcommand("enrich", "Gene-set enrichment of the fitted clusters");
    std::string en_fit, en_genes, en_gmt, en_out;
    enr->add_option("--fit", en_fit, "Fit JSON")->required();
    enr->add_option("--genes", en_genes, "Gene ids, one per row, matching expression row order")->required();
    enr->add_option("--gmt", en_gmt, "Gene sets in GMT format")->required();
    enr->add_option("--out", en_out, "Output CSV (stdout when omitted)");

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "Run a scenario grid end-to-end and tabulate Rand indices");
    std::string be_preset, be_grid, be_out = "bench.csv";
    srgmm::BenchOptions be;
    std::vector<int> be_sizes;
    int be_spots = 0, be_reps = 0;
    bench->add_option("--preset", be_preset, "Built-in grid: variance, scale, nugget, baseline");
    bench->add_option("--grid", be_grid, "Grid JSON (overrides --preset)");
    bench->add_option("--spots", be_spots, "Spots per dataset");
    bench->add_option("--sizes", be_sizes, "Cluster sizes (two values)")->expected(2);
    bench->add_option("--replicates", be_reps, "Replicates per cell");
    bench->add_option("--restarts", be.restarts, "Restarts per fit");
    bench->add_option("--max-iter", be.max_iters, "Iteration cap per restart");
    bench->add_option("--m-cap", be.m_cap, "Upper bound on the neighbor count");
    bench->add_option("--nm-max-evals", be.nm_max_evals, "Objective evaluation cap per M-step search");
    bench->add_option("--out", be_out, "Output CSV");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        srgmm::ScenarioSpec spec = srgmm::load_scenario_json(sim_scenario);
        if (global.seed_given) spec.seed = global.seed;
        log_verbose(global, "simulating " + std::to_string(spec.n_spots) + " spots");
        const srgmm::SimulatedDataset data = srgmm::simulate_dataset(spec);

        srgmm::ExpressionMatrix expr;
        expr.values = data.y;
        for (Eigen::Index g = 0; g < data.y.rows(); ++g) expr.gene_ids.push_back("g" + std::to_string(g));
        for (Eigen::Index s = 0; s < data.y.cols(); ++s) expr.spot_ids.push_back("s" + std::to_string(s));
        srgmm::save_expression_csv(sim_prefix + "Y.csv", expr);
        srgmm::save_coords_csv(sim_prefix + "coords.csv", data.coords, expr.spot_ids);
        srgmm::save_labels_csv(sim_prefix + "labels.csv", data.true_labels, expr.gene_ids);
        return 0;
    }

    if (res->parsed()) {
        srgmm::CountMatrix counts = srgmm::load_counts(res_counts);
        if (res_top > 0) counts = srgmm::select_top_deviance(counts, res_top);
        std::vector<std::string> warnings;
        const srgmm::ExpressionMatrix out = srgmm::deviance_residuals(counts, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        srgmm::save_expression_csv(res_out, out);
        return 0;
    }

    if (fit_cmd->parsed()) {
        const srgmm::ExpressionMatrix expr = srgmm::load_expression_csv(fit_expr);
        const srgmm::CoordsTable coords = srgmm::load_coords_csv(fit_coords);
        if (coords.coords.rows() != expr.values.cols())
            throw std::invalid_argument("fit: expression columns and coordinate rows disagree");
        cfg.nu = {nu_value};
        cfg.seed = global.seed;
        cfg.threads = global.threads;
        log_verbose(global, "fitting k=" + std::to_string(cfg.k) + " on " +
                                std::to_string(expr.values.rows()) + " observations");
        const srgmm::FitResult result = srgmm::fit(expr.values, coords.coords, cfg);
        srgmm::save_fit_json(fit_out, result, cfg);
        log_verbose(global, "log posterior " + srgmm::format_double(result.log_posterior));
        return 0;
    }

    if (summ->parsed()) {
        const srgmm::LoadedFit lf = srgmm::load_fit_json(su_fit);
        const srgmm::ExpressionMatrix expr = srgmm::load_expression_csv(su_expr);
        const srgmm::CoordsTable coords = srgmm::load_coords_csv(su_coords);
        const int n_obs = static_cast<int>(expr.values.rows());
        const int n_spots = static_cast<int>(expr.values.cols());
        if (coords.coords.rows() != n_spots)
            throw std::invalid_argument("summarize: expression columns and coordinate rows disagree");
        if (static_cast<int>(lf.result.labels.size()) != n_obs)
            throw std::invalid_argument("summarize: fit labels and expression rows disagree");

        const srgmm::SpatialDesign design = srgmm::make_design(coords.coords, lf.config.m_cap);
        Eigen::MatrixXd y_ordered(n_obs, n_spots);
        for (int p = 0; p < n_spots; ++p) y_ordered.col(p) = expr.values.col(design.order[p]);

        const int k = static_cast<int>(lf.result.params.size());
        Eigen::MatrixXd rho(n_spots, k);
        for (int c = 0; c < k; ++c) {
            std::vector<int> members;
            for (int i = 0; i < n_obs; ++i)
                if (lf.result.labels[i] == c) members.push_back(i);
            if (members.empty()) {
                rho.col(c).setConstant(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            log_verbose(global, "cluster " + std::to_string(c) + ": " + std::to_string(members.size()) +
                                    " members");
            srgmm::MomentCache cache(design);
            cache.rebuild(y_ordered, members);
            const srgmm::CholeskyFactors factors =
                srgmm::map_cholesky(cache, lf.result.params[c], lf.result.m_ks[c], su_ig_mean);
            const Eigen::MatrixXd sigma = srgmm::covariance_from_factors(factors, su_dense_cap);
            rho.col(c) = srgmm::correlation_summary(sigma);
        }

        std::ofstream out = open_out(su_out);
        out << "spot_id,x,y";
        for (int c = 0; c < k; ++c) out << ",rho_cluster_" << c;
        out << '\n';
        for (int s = 0; s < n_spots; ++s) {
            out << expr.spot_ids[s] << ',' << srgmm::format_double(coords.coords(s, 0)) << ','
                << srgmm::format_double(coords.coords(s, 1));
            for (int c = 0; c < k; ++c) out << ',' << srgmm::format_double(rho(s, c));
            out << '\n';
        }
        return 0;
    }

    if (eval->parsed()) {
        const std::vector<int> truth = srgmm::load_labels_csv(ev_truth);
        const srgmm::LoadedFit lf = srgmm::load_fit_json(ev_pred);
        const double rand = srgmm::rand_index(truth, lf.result.labels);
        std::cout << "Rand index: " << rand << '\n';
        std::cout << "rand=" << srgmm::format_double(rand) << '\n';
        return 0;
    }

    if (enr->parsed()) {
        const srgmm::LoadedFit lf = srgmm::load_fit_json(en_fit);
        const std::vector<std::string> genes = srgmm::load_gene_list(en_genes);
        if (genes.size() != lf.result.labels.size())
            throw std::invalid_argument("enrich: gene list and fit labels differ in length");
        srgmm::GeneSetCollection sets = srgmm::load_gmt(en_gmt);
        sets.universe.insert(genes.begin(), genes.end());

        const auto rows = srgmm::enrich_clusters(genes, lf.result.labels,
                                                 static_cast<int>(lf.result.params.size()), sets);
        std::ofstream file;
        std::ostream* out = &std::cout;
        if (!en_out.empty()) {
            file = open_out(en_out);
            out = &file;
        }
        *out << "cluster,signature,overlap,cluster_size,signature_size,p,adj_p\n";
        for (const auto& r : rows)
            *out << r.cluster << ',' << r.signature << ',' << r.overlap << ',' << r.cluster_size << ','
                 << r.signature_size << ',' << srgmm::format_double(r.p) << ','
                 << srgmm::format_double(r.adj_p) << '\n';
        return 0;
    }

    if (bench->parsed()) {
        if (!be_grid.empty()) {
            be.grid = srgmm::load_bench_grid(be_grid);
        } else if (!be_preset.empty()) {
            be.grid = srgmm::bench_preset(be_preset);
        } else {
            throw std::invalid_argument("bench: provide --preset or --grid");
        }
        if (be_spots > 0) be.grid.n_spots = be_spots;
        if (!be_sizes.empty()) be.grid.cluster_sizes = be_sizes;
        if (be_reps > 0) be.grid.replicates = be_reps;
        if (global.seed_given) be.seed = global.seed;
        be.threads = global.threads;
        log_verbose(global, "bench grid '" + be.grid.name + "' with " +
                                std::to_string(be.grid.cells.size()) + " cells");
        std::ofstream out = open_out(be_out);
        srgmm::run_bench(be, out);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const std::length_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumericalFailure;
    }
}
