#include "srgmm/bench.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "srgmm/io.hpp"

namespace srgmm {

namespace {

std::string trim_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

BenchGrid make_grid(const std::string& name, const std::vector<double>& values,
                    double sigma2, double phi) {
    BenchGrid grid;
    grid.name = name;
    for (double v1 : values) {
        for (double v2 : values) {
            BenchCell cell;
            cell.kernel1.family = KernelFamily::exponential;
            cell.kernel2.family = KernelFamily::gaussian;
            if (name == "variance") {
                cell.kernel1.sigma2 = v1;
                cell.kernel2.sigma2 = v2;
                cell.kernel1.phi = cell.kernel2.phi = phi;
            } else if (name == "scale") {
                cell.kernel1.sigma2 = cell.kernel2.sigma2 = sigma2;
                cell.kernel1.phi = v1;
                cell.kernel2.phi = v2;
            } else {  // nugget
                cell.kernel1.sigma2 = cell.kernel2.sigma2 = sigma2;
                cell.kernel1.phi = cell.kernel2.phi = phi;
                cell.kernel1.nugget = v1;
                cell.kernel2.nugget = v2;
            }
            cell.label1 = trim_number(v1);
            cell.label2 = trim_number(v2);
            grid.cells.push_back(cell);
        }
    }
    return grid;
}

}  // namespace

BenchGrid bench_preset(const std::string& name) {
    if (name == "variance") return make_grid("variance", {1.0, 2.0, 3.0}, 2.0, 1.0);
    if (name == "scale") return make_grid("scale", {0.1, 1.0, 3.0}, 2.0, 1.0);
    if (name == "nugget") return make_grid("nugget", {0.0, 1.0, 3.0}, 2.0, 1.0);
    if (name == "baseline") {
        BenchGrid grid = make_grid("variance", {2.0}, 2.0, 1.0);
        grid.name = "baseline";
        return grid;
    }
    throw std::invalid_argument("unknown bench preset: " + name);
}

BenchGrid load_bench_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }

    BenchGrid grid;
    try {
        grid.name = j.at("name").get<std::string>();
        grid.n_spots = j.value("n_spots", 500);
        if (j.contains("cluster_sizes")) grid.cluster_sizes = j.at("cluster_sizes").get<std::vector<int>>();
        grid.replicates = j.value("replicates", 10);
        for (const auto& cj : j.at("cells")) {
            BenchCell cell;
            auto read_kernel = [](const nlohmann::json& kj) {
                KernelSpec k;
                k.family = kernel_family_from_string(kj.at("family").get<std::string>());
                k.sigma2 = kj.at("sigma2").get<double>();
                k.phi = kj.at("phi").get<double>();
                k.nugget = kj.value("nugget", 0.0);
                return k;
            };
            cell.kernel1 = read_kernel(cj.at("kernel1"));
            cell.kernel2 = read_kernel(cj.at("kernel2"));
            cell.label1 = cj.value("label1", "");
            cell.label2 = cj.value("label2", "");
            grid.cells.push_back(cell);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    if (grid.cells.empty()) throw std::invalid_argument(path + ": grid has no cells");
    return grid;
}

void run_bench(const BenchOptions& options, std::ostream& out) {
    const BenchGrid& grid = options.grid;
    if (grid.cluster_sizes.size() != 2)
        throw std::invalid_argument("run_bench: grids describe exactly two clusters");

    out << "grid,label1,label2,size1,size2,replicate,sim_seed,fit_seed,rand_index\n";
    for (std::size_t cell_idx = 0; cell_idx < grid.cells.size(); ++cell_idx) {
        const BenchCell& cell = grid.cells[cell_idx];
        for (int rep = 0; rep < grid.replicates; ++rep) {
            const std::uint64_t sim_seed = options.seed + 1000003 * cell_idx + 17 * rep;
            const std::uint64_t fit_seed = sim_seed + 500009;

            ScenarioSpec scenario;
            scenario.n_spots = grid.n_spots;
            scenario.cluster_sizes = grid.cluster_sizes;
            scenario.kernels = {cell.kernel1, cell.kernel2};
            scenario.seed = sim_seed;
            const SimulatedDataset data = simulate_dataset(scenario);

            FitConfig cfg;
            cfg.k = 2;
            cfg.restarts = options.restarts;
            cfg.max_iters = options.max_iters;
            cfg.m_cap = options.m_cap;
            cfg.nm_max_evals = options.nm_max_evals;
            cfg.threads = options.threads;
            cfg.seed = fit_seed;
            const FitResult fitted = fit(data.y, data.coords, cfg);

            const double rand = rand_index(data.true_labels, fitted.labels);
            out << grid.name << ',' << cell.label1 << ',' << cell.label2 << ','
                << grid.cluster_sizes[0] << ',' << grid.cluster_sizes[1] << ',' << rep << ','
                << sim_seed << ',' << fit_seed << ',' << format_double(rand) << '\n';
        }
    }
}

}  // namespace srgmm
