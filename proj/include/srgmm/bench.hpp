// End-to-end simulation benchmark: simulate a scenario grid, fit every
// replicate, and tabulate Rand indices against the true partition.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "srgmm/sem.hpp"
#include "srgmm/simulate.hpp"

namespace srgmm {

struct BenchCell {
    KernelSpec kernel1;  // cluster 1, exponential family in the shipped grids
    KernelSpec kernel2;  // cluster 2, gaussian family in the shipped grids
    std::string label1;  // grid coordinates for reporting
    std::string label2;
};

struct BenchGrid {
    std::string name;
    std::vector<BenchCell> cells;
    int n_spots = 500;
    std::vector<int> cluster_sizes = {100, 100};
    int replicates = 10;
};

struct BenchOptions {
    BenchGrid grid;
    std::uint64_t seed = 1;
    int restarts = 10;
    int max_iters = 200;
    int m_cap = 50;
    int threads = 1;
    int nm_max_evals = 400;
};

// Built-in grids: "variance" (sigma^2 in {1,2,3}^2), "scale" (phi in
// {0.1,1,3}^2), "nugget" (tau in {0,1,3}^2), "baseline" (the single central
// cell sigma^2 = 2, phi = 1).
BenchGrid bench_preset(const std::string& name);

// Loads a grid description from JSON (same content as the shipped presets).
BenchGrid load_bench_grid(const std::string& path);

// Writes one CSV row per (cell, replicate):
// grid,label1,label2,size1,size2,replicate,sim_seed,fit_seed,rand_index
void run_bench(const BenchOptions& options, std::ostream& out);

}  // namespace srgmm
