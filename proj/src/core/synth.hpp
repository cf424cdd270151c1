#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dataset.hpp"

namespace lcd {

/// Isotropic Gaussian blobs with one annotation label per blob.
struct SynthConfig {
    std::size_t n_points = 100000;
    std::size_t dim = 64;
    std::size_t n_components = 600;
    /// Expected distance between two blob centres in units of the per-feature
    /// standard deviation of a blob.
    double separation = 50.0;
    /// Zipf exponent of blob sizes; 0 gives equal sizes.
    double label_skew = 1.0;
    /// Share of rows emitted as pooled 2..5-gram units.
    double phrasal_fraction = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t layer_id = 0;
    /// Each blob draws surfaces from its own vocabulary of
    /// vocab_base + floor(vocab_log_scale * ln(size)) word types with Zipf
    /// exponent word_skew.
    std::size_t vocab_base = 12;
    double vocab_log_scale = 2.0;
    double word_skew = 1.0;
};

struct SynthData {
    EmbeddingDataset dataset;
    std::vector<std::int32_t> component_of;   // planted partition, per row
    std::vector<std::size_t> component_sizes;
    std::array<std::size_t, 6> planted_spans{};  // rows per span length 2..5
};

SynthData generate(const SynthConfig& cfg);

/// Sizes proportional to (rank+1)^-skew, every component at least 1, summing to n.
std::vector<std::size_t> zipf_sizes(std::size_t n, std::size_t components, double skew);

}  // namespace lcd
