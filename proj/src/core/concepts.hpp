#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "assignment.hpp"
#include "dataset.hpp"

namespace lcd {

/// A discovered cluster projected onto the token occurrences it contains.
struct Concept {
    std::int32_t concept_id = 0;
    std::vector<std::uint32_t> member_ids;  // ascending
    std::map<std::string, std::size_t> type_counts;

    std::size_t size() const { return member_ids.size(); }
    std::size_t unique_types() const { return type_counts.size(); }
};

struct ConceptSet {
    std::vector<Concept> concepts;
    bool filtered = false;
    std::size_t min_types = 0;
};

ConceptSet build_concepts(const ClusterAssignment& assignment, const EmbeddingDataset& ds);

/// Keeps concepts with strictly more than min_types distinct surface forms.
ConceptSet filter_concepts(const ConceptSet& cs, std::size_t min_types = 5);

struct HistogramBin {
    std::size_t lo = 0;  // inclusive
    std::size_t hi = 0;  // inclusive
    std::size_t count = 0;
};

struct SizeHistogram {
    std::vector<HistogramBin> bins;
    std::size_t median = 0;  // lower median
};

SizeHistogram size_histogram(const ConceptSet& cs, std::size_t bin_width);

/// Members with span length n, n in 2..5; index 0 and 1 unused.
struct PhrasalCounts {
    std::array<std::size_t, 6> tokens{};
    std::array<std::size_t, 6> types{};
};

PhrasalCounts phrasal_counts(const ConceptSet& cs, const EmbeddingDataset& ds);

void save_concepts(const ConceptSet& cs, const std::filesystem::path& path);
/// Reads concept_id/members lines and rebuilds type statistics from ds.
ConceptSet load_concepts(const std::filesystem::path& path, const EmbeddingDataset& ds);

/// Text listing with the most frequent surfaces of each concept.
std::string concept_listing(const ConceptSet& cs, const EmbeddingDataset& ds, std::size_t top = 10);

std::string histogram_to_json(const SizeHistogram& h);
std::string phrasal_to_json(const PhrasalCounts& p);

}  // namespace lcd
