#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcd {

enum class Method { KMeans, Agglomerative, Leaders };

std::string_view method_name(Method m);
/// Accepts "kmeans", "agglomerative"/"agglo" and "leaders".
Method parse_method(std::string_view name);

/// Per-point cluster ids plus provenance of the run that produced them.
struct ClusterAssignment {
    std::vector<std::int32_t> labels;
    std::size_t k = 0;
    double inertia = 0.0;
    Method method = Method::KMeans;
    std::uint64_t seed = 0;
    std::size_t iterations_run = 0;

    std::size_t size() const { return labels.size(); }
};

/// Checks labels are in [0, k) and inertia is non-negative.
void validate_assignment(const ClusterAssignment& a);

/// Sum of squared Euclidean distances of every row to its cluster mean.
double within_cluster_sse(const ClusterAssignment& a, std::span<const float> vectors,
                          std::size_t dim);

/// FNV-1a over the label array; used to compare outputs between processes.
std::uint64_t assignment_hash(const ClusterAssignment& a);

std::string assignment_to_json(const ClusterAssignment& a);
ClusterAssignment assignment_from_json(const std::string& text);
void save_assignment(const ClusterAssignment& a, const std::filesystem::path& path);
ClusterAssignment load_assignment(const std::filesystem::path& path);

}  // namespace lcd
