#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace lcd {

/// One token occurrence (or pooled phrasal unit) backing one embedding row.
struct TokenRecord {
    std::uint32_t id = 0;
    std::uint64_t sentence_idx = 0;
    std::uint64_t token_idx = 0;
    std::string surface;
    std::optional<std::string> label;
    std::uint32_t span_len = 1;

    bool operator==(const TokenRecord&) const = default;
};

/// N x D contextualized vectors for one layer plus the aligned token table.
/// Immutable once constructed; all invariants are checked by the constructor.
class EmbeddingDataset {
public:
    EmbeddingDataset() = default;
    EmbeddingDataset(std::uint32_t layer_id, std::size_t dim, std::vector<float> vectors,
                     std::vector<TokenRecord> tokens);

    std::size_t n_points() const { return tokens_.size(); }
    std::size_t dim() const { return dim_; }
    std::uint32_t layer_id() const { return layer_id_; }

    std::span<const float> vectors() const { return vectors_; }
    std::span<const float> row(std::size_t i) const { return {vectors_.data() + i * dim_, dim_}; }
    MatrixView matrix() const { return {vectors_, n_points(), dim_}; }

    const std::vector<TokenRecord>& tokens() const { return tokens_; }
    const TokenRecord& token(std::size_t i) const { return tokens_[i]; }

    /// Token-only datasets (dim 0) carry annotations without vectors; they are
    /// enough for concept projection and phrasal statistics.
    bool has_vectors() const { return dim_ != 0; }

private:
    std::uint32_t layer_id_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> vectors_;
    std::vector<TokenRecord> tokens_;
};

/// Human-defined concepts: label -> token ids carrying that label.
struct HumanOntology {
    std::map<std::string, std::vector<std::uint32_t>> concepts;

    std::size_t label_count() const { return concepts.size(); }
};

inline constexpr std::uint64_t kUnboundedOccurrences = std::numeric_limits<std::uint64_t>::max();

EmbeddingDataset load_dataset(const std::filesystem::path& embedding_path,
                              const std::filesystem::path& tokens_path);
/// Reads only the token table; the result has dim 0.
EmbeddingDataset load_tokens_only(const std::filesystem::path& tokens_path);
void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& embedding_path,
                  const std::filesystem::path& tokens_path);

std::vector<TokenRecord> read_tokens(const std::filesystem::path& tokens_path);
void write_tokens(const std::vector<TokenRecord>& tokens, const std::filesystem::path& tokens_path);

HumanOntology build_ontology(const EmbeddingDataset& ds);

/// Keeps rows whose surface form occurs between min_occ and max_occ times
/// (inclusive, counted over rows). Ids are re-densified in row order.
EmbeddingDataset frequency_filter(const EmbeddingDataset& ds, std::uint64_t min_occ,
                                  std::uint64_t max_occ);

}  // namespace lcd
