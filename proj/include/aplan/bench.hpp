#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aplan::bench {

struct BenchRow {
    int machines = 0;
    int exploit_count = 0;
    double seconds = 0.0;
    long peak_heap_kb = 0;  // planner heap high-water mark for this run
    std::uint64_t edge_evaluations = 0;
    double plan_cost = 0.0;
    double plan_prob = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    double runtime_slope = 0.0;   // log-log least-squares slope over M
    bool slope_defined = false;
    double memory_r2 = 0.0;       // linear-fit R^2 of peak memory over M
};

// One star-scenario planning run (generation excluded from the timing).
BenchRow bench_instance(int machines, int exploit_count, std::uint64_t seed, int threads);

// Full sweep; repeats > 1 keeps the fastest run per size.
BenchResult run_bench(const std::vector<int>& machine_counts, int repeats, std::uint64_t seed,
                      int threads, double exploits_per_machine = 2.0);

std::string to_csv(const BenchResult& result);

// Heap accounting through the global new/delete hooks; the peak resets at
// the start of every measured run, so rows report per-run footprints
// instead of the process high-water mark.
long long heap_bytes_now();
void reset_heap_peak();
long long heap_peak_bytes();

double log_log_slope(const std::vector<double>& xs, const std::vector<double>& ys);
double linear_fit_r2(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace aplan::bench
