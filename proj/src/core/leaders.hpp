#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "assignment.hpp"
#include "dataset.hpp"
#include "matrix.hpp"

namespace lcd {

/// Result of one leaders pass: every point is a leader or follows exactly one.
struct LeadersCompression {
    double tau = 0.0;
    std::uint64_t order_seed = 0;
    bool exact = true;
    /// Leader point ids, ascending.
    std::vector<std::uint32_t> leader_ids;
    /// Point id -> id of the leader it follows (leaders map to themselves).
    std::vector<std::uint32_t> follower_of;
    /// Row j is the mean of the group led by leader_ids[j].
    Matrix centroids;
    std::vector<std::uint64_t> group_sizes;

    std::size_t m() const { return leader_ids.size(); }
};

struct TauSearchConfig {
    std::size_t target_m = 0;
    double rel_band = 0.05;
    std::size_t max_probes = 30;
    std::uint64_t seed = 0;
    bool exact = true;
};

struct TauSearchResult {
    double tau = 0.0;
    LeadersCompression compression;
    std::size_t probes = 0;
    bool within_band = false;
};

/// Single pass in a seeded pseudo-random order. A point follows the earliest
/// created leader within distance tau; otherwise it becomes a leader. In
/// approximate mode candidates come from a random-projection forest and a
/// leader within tau may be missed.
LeadersCompression leaders_pass(MatrixView data, double tau, std::uint64_t order_seed, bool exact = true);
LeadersCompression leaders_pass(const EmbeddingDataset& ds, double tau, std::uint64_t order_seed,
                                bool exact = true);

/// Bisects tau until the pass yields M within target_m * (1 +- rel_band), or
/// returns the closest probe after max_probes.
TauSearchResult tau_binary_search(MatrixView data, const TauSearchConfig& cfg);
TauSearchResult tau_binary_search(const EmbeddingDataset& ds, const TauSearchConfig& cfg);

/// Ward-clusters the centroids into k clusters and propagates each centroid's
/// label to the points of its group. Method "leaders".
ClusterAssignment cluster_compression(MatrixView data, const LeadersCompression& comp, std::size_t k,
                                      std::uint64_t memory_budget, unsigned threads = 0);

/// tau_binary_search followed by cluster_compression.
ClusterAssignment leaders_cluster(const EmbeddingDataset& ds, const TauSearchConfig& cfg, std::size_t k,
                                  std::uint64_t memory_budget, unsigned threads = 0,
                                  LeadersCompression* compression_out = nullptr);

std::string compression_to_json(const LeadersCompression& comp);
void save_compression(const LeadersCompression& comp, const std::filesystem::path& path);

}  // namespace lcd
