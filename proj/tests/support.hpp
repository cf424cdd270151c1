#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("lcd_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::vector<lcd::TokenRecord> make_tokens(const std::vector<std::string>& surfaces,
                                                 const std::vector<std::optional<std::string>>& labels = {},
                                                 const std::vector<std::uint32_t>& spans = {}) {
    std::vector<lcd::TokenRecord> out;
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
        lcd::TokenRecord t;
        t.id = static_cast<std::uint32_t>(i);
        t.sentence_idx = i / 10;
        t.token_idx = i % 10;
        t.surface = surfaces[i];
        if (i < labels.size()) t.label = labels[i];
        if (i < spans.size()) t.span_len = spans[i];
        out.push_back(t);
    }
    return out;
}

/// Dataset over the given rows; surfaces default to "w<i>", labels to none.
inline lcd::EmbeddingDataset make_dataset(const std::vector<std::vector<float>>& rows,
                                          std::vector<std::string> surfaces = {},
                                          const std::vector<std::optional<std::string>>& labels = {}) {
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    std::vector<float> values;
    for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
    if (surfaces.empty())
        for (std::size_t i = 0; i < rows.size(); ++i) surfaces.push_back("w" + std::to_string(i));
    return lcd::EmbeddingDataset(0, dim, std::move(values), make_tokens(surfaces, labels));
}

/// n x dim standard normal rows from a std::mt19937 stream.
inline std::vector<std::vector<float>> gaussian_rows(std::size_t n, std::size_t dim, std::uint32_t seed,
                                                     double scale = 1.0) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<std::vector<float>> rows(n, std::vector<float>(dim));
    for (auto& r : rows)
        for (auto& v : r) v = static_cast<float>(nd(gen));
    return rows;
}

}  // namespace testing_support
