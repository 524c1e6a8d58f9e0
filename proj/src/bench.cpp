#include "aplan/bench.hpp"

#include <malloc.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <new>
#include <sstream>

#include "aplan/graph.hpp"
#include "aplan/scenario_gen.hpp"

namespace {

std::atomic<long long> heap_current{0};
std::atomic<long long> heap_peak{0};

void account_alloc(void* p) {
    if (p == nullptr) return;
    long long size = static_cast<long long>(malloc_usable_size(p));
    long long now = heap_current.fetch_add(size) + size;
    long long peak = heap_peak.load(std::memory_order_relaxed);
    while (now > peak && !heap_peak.compare_exchange_weak(peak, now)) {
    }
}

void account_free(void* p) {
    if (p == nullptr) return;
    heap_current.fetch_sub(static_cast<long long>(malloc_usable_size(p)));
}

}  // namespace

// Heap accounting for the bench memory column: every new/delete in the
// process updates a current/peak pair.
void* operator new(std::size_t size) {
    void* p = std::malloc(size ? size : 1);
    if (p == nullptr) throw std::bad_alloc();
    account_alloc(p);
    return p;
}

void* operator new[](std::size_t size) { return ::operator new(size); }

void* operator new(std::size_t size, std::align_val_t align) {
    std::size_t alignment = static_cast<std::size_t>(align);
    std::size_t padded = (size + alignment - 1) / alignment * alignment;
    void* p = std::aligned_alloc(alignment, padded ? padded : alignment);
    if (p == nullptr) throw std::bad_alloc();
    account_alloc(p);
    return p;
}

void* operator new[](std::size_t size, std::align_val_t align) {
    return ::operator new(size, align);
}

void operator delete(void* p) noexcept {
    account_free(p);
    std::free(p);
}
void operator delete[](void* p) noexcept { ::operator delete(p); }
void operator delete(void* p, std::size_t) noexcept { ::operator delete(p); }
void operator delete[](void* p, std::size_t) noexcept { ::operator delete(p); }
void operator delete(void* p, std::align_val_t) noexcept { ::operator delete(p); }
void operator delete[](void* p, std::align_val_t) noexcept { ::operator delete(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { ::operator delete(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { ::operator delete(p); }

namespace aplan::bench {

long long heap_bytes_now() { return heap_current.load(); }

void reset_heap_peak() { heap_peak.store(heap_current.load()); }

long long heap_peak_bytes() { return heap_peak.load(); }

BenchRow bench_instance(int machines, int exploit_count, std::uint64_t seed, int threads) {
    Scenario scenario = gen::generate_subnet_star(machines, exploit_count, seed);
    const HostId goal = scenario.goals.front().host;

    graph::BuildStats stats;
    long long baseline = heap_bytes_now();
    reset_heap_peak();
    auto start = std::chrono::steady_clock::now();
    Plan plan = graph::plan_attack(scenario, goal, graph::Algorithm::Dijkstra, &stats, threads);
    auto end = std::chrono::steady_clock::now();
    long long peak = heap_peak_bytes() - baseline;

    BenchRow row;
    row.machines = machines;
    row.exploit_count = exploit_count;
    row.seconds = std::chrono::duration<double>(end - start).count();
    row.peak_heap_kb = static_cast<long>(std::max(peak, 1024LL) / 1024);
    row.edge_evaluations = stats.edge_evaluations;
    row.plan_cost = plan.expected_cost;
    row.plan_prob = plan.success_prob;
    return row;
}

BenchResult run_bench(const std::vector<int>& machine_counts, int repeats, std::uint64_t seed,
                      int threads, double exploits_per_machine) {
    BenchResult result;
    for (int machines : machine_counts) {
        int exploit_count =
            std::max(machines, static_cast<int>(machines * exploits_per_machine));
        BenchRow best;
        for (int r = 0; r < std::max(1, repeats); ++r) {
            BenchRow row = bench_instance(machines, exploit_count, seed + r, threads);
            if (r == 0 || row.seconds < best.seconds) best = row;
        }
        result.rows.push_back(best);
    }

    if (result.rows.size() >= 2) {
        std::vector<double> ms;
        std::vector<double> secs;
        std::vector<double> mem;
        for (const BenchRow& row : result.rows) {
            ms.push_back(static_cast<double>(row.machines));
            secs.push_back(std::max(row.seconds, 1e-9));
            mem.push_back(static_cast<double>(row.peak_heap_kb));
        }
        result.runtime_slope = log_log_slope(ms, secs);
        result.slope_defined = true;
        result.memory_r2 = linear_fit_r2(ms, mem);
    }
    return result;
}

std::string to_csv(const BenchResult& result) {
    std::ostringstream out;
    out << "machines,exploits,seconds,peak_memory_kb,edge_evaluations,plan_cost,plan_prob\n";
    for (const BenchRow& row : result.rows) {
        out << row.machines << ',' << row.exploit_count << ',' << row.seconds << ','
            << row.peak_heap_kb << ',' << row.edge_evaluations << ',' << row.plan_cost << ','
            << row.plan_prob << "\n";
    }
    return out.str();
}

double log_log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(std::max(ys[i], 1e-12)));
    }
    double n = static_cast<double>(lx.size());
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double denom = n * sxx - sx * sx;
    return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

double linear_fit_r2(const std::vector<double>& xs, const std::vector<double>& ys) {
    double n = static_cast<double>(xs.size());
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return 0.0;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    double mean = sy / n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double fit = slope * xs[i] + intercept;
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - mean) * (ys[i] - mean);
    }
    return ss_tot != 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

}  // namespace aplan::bench
