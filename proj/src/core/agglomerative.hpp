#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "assignment.hpp"
#include "dataset.hpp"
#include "matrix.hpp"

namespace lcd {

/// One merge of the Ward tree. Leaves are nodes 0..N-1; the t-th merge creates
/// node N+t. cost is the increase in total within-cluster sum of squares.
struct Merge {
    std::uint32_t node_a = 0;
    std::uint32_t node_b = 0;
    double cost = 0.0;
    std::uint64_t new_size = 0;
};

struct Dendrogram {
    std::vector<Merge> merges;
    std::size_t leaf_count = 0;
};

/// Default 16 GiB; LCD_MEMORY_BUDGET (bytes, optional K/M/G suffix) overrides.
std::uint64_t default_memory_budget();
std::uint64_t parse_byte_size(const std::string& text);

/// Bytes of the condensed pairwise matrix Ward needs for n points.
std::uint64_t ward_required_bytes(std::size_t n);

Dendrogram ward_fit(MatrixView data, std::uint64_t memory_budget, unsigned threads = 0);
Dendrogram ward_fit(const EmbeddingDataset& ds, std::uint64_t memory_budget, unsigned threads = 0);

/// Applies the first N-k merges and labels clusters in first-seen point order.
ClusterAssignment cut_tree(const Dendrogram& dg, std::size_t k);

/// Convenience: ward_fit followed by cut_tree, method "agglomerative".
ClusterAssignment agglomerative_fit(const EmbeddingDataset& ds, std::size_t k,
                                    std::uint64_t memory_budget, unsigned threads = 0);

void save_dendrogram(const Dendrogram& dg, const std::filesystem::path& path);

}  // namespace lcd
