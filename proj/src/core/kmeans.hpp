#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "assignment.hpp"
#include "dataset.hpp"
#include "matrix.hpp"

namespace lcd {

enum class KMeansInit {
    Sampled,    // k distinct data rows drawn uniformly
    PlusPlus,   // greedy D^2 seeding: best of 2 + ln k candidates per step
};

struct KMeansConfig {
    std::size_t k = 600;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    /// Stop once the largest centroid displacement is at most
    /// rel_tol * (largest per-feature range of the data).
    double rel_tol = 1e-4;
    std::uint64_t seed = 0;
    KMeansInit init = KMeansInit::PlusPlus;
    unsigned threads = 0;
};

/// Outcome of one restart.
struct KMeansRun {
    Matrix centroids;
    std::vector<std::int32_t> labels;
    double inertia = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Inertia after the initial assignment and after every update+assign step.
    std::vector<double> inertia_history;
};

/// Single restart `restart` of the configuration; kmeans_fit picks the best of
/// restarts 0..cfg.restarts-1.
KMeansRun kmeans_run(MatrixView data, const KMeansConfig& cfg, std::size_t restart);

ClusterAssignment kmeans_fit(MatrixView data, const KMeansConfig& cfg);
ClusterAssignment kmeans_fit(const EmbeddingDataset& ds, const KMeansConfig& cfg);

/// Nearest centroid per row (Euclidean, ties to the lowest centroid index).
std::vector<std::int32_t> assign_to_centroids(MatrixView data, MatrixView centroids,
                                              unsigned threads = 0);
std::vector<std::int32_t> assign_to_centroids(const EmbeddingDataset& ds, MatrixView centroids,
                                              unsigned threads = 0);

}  // namespace lcd
