#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace lcd {

/// Read-only view of a dense row-major float matrix.
struct MatrixView {
    std::span<const float> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const float> row(std::size_t i) const {
        assert(i < rows);
        return values.subspan(i * cols, cols);
    }
};

/// Owning dense row-major float matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}

    std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    MatrixView view() const { return {values, rows, cols}; }
};

}  // namespace lcd
