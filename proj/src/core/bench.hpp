#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "assignment.hpp"
#include "dataset.hpp"
#include "kmeans.hpp"
#include "leaders.hpp"
#include "synth.hpp"

namespace lcd {

struct BenchConfig {
    std::size_t k = 600;
    KMeansConfig kmeans;            // k is taken from BenchConfig::k
    TauSearchConfig leaders;        // target_m = 0 means N / 4
    std::uint64_t memory_budget = 0;  // 0 means default_memory_budget()
    unsigned threads = 0;
};

struct BenchRecord {
    Method method = Method::KMeans;
    std::size_t n = 0;
    std::size_t dim = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    double runtime_user_sys_s = 0.0;
    double runtime_wall_s = 0.0;
    std::uint64_t peak_mem_bytes = 0;
    std::string status;  // ok | infeasible | failed
    std::uint64_t assignment_hash = 0;
    double tau = 0.0;         // leaders only
    std::size_t leaders = 0;  // leaders only: M at the final tau
    std::string host;
};

/// Runs one clustering in a forked child. CPU time (user+sys) and peak RSS
/// come from the child's rusage; wall time is measured around it. For the
/// leaders method the tau search runs in the parent and only the final-tau
/// pass plus Ward stage is measured.
BenchRecord run_bench(const EmbeddingDataset& ds, Method method, const BenchConfig& cfg);

/// The clustering run_bench measures, executed in-process.
ClusterAssignment bench_cluster(const EmbeddingDataset& ds, Method method, const BenchConfig& cfg,
                                const LeadersCompression* compression = nullptr);

struct SweepResult {
    std::vector<BenchRecord> records;
    std::map<Method, double> exponents;  // slope of log(cpu seconds) vs log(n)
};

SweepResult scaling_sweep(const SynthConfig& generator, const std::vector<Method>& methods,
                          const std::vector<std::size_t>& sizes, const BenchConfig& cfg);

/// Least-squares slope of log(y) against log(x).
double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string bench_csv_header();
std::string bench_csv_row(const BenchRecord& r);
std::string host_fingerprint();

}  // namespace lcd
