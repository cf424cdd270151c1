#pragma once

#include <cstddef>
#include <span>

namespace lcd {

/// Squared Euclidean distance accumulated in double, dimensions in order.
inline double squared_distance(std::span<const float> a, std::span<const float> b) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = a.size();
    std::size_t d = 0;
    for (; d + 4 <= n; d += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
            const double diff = static_cast<double>(a[d + l]) - static_cast<double>(b[d + l]);
            acc[l] += diff * diff;
        }
    }
    for (; d < n; ++d) {
        const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
        acc[0] += diff * diff;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline double squared_distance(std::span<const float> a, std::span<const double> b) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = a.size();
    std::size_t d = 0;
    for (; d + 4 <= n; d += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
            const double diff = static_cast<double>(a[d + l]) - b[d + l];
            acc[l] += diff * diff;
        }
    }
    for (; d < n; ++d) {
        const double diff = static_cast<double>(a[d]) - b[d];
        acc[0] += diff * diff;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

/// Float-accumulated squared distance; fast path for sampling and screening.
inline float squared_distance_fast(const float* a, const float* b, std::size_t n) {
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t d = 0;
    for (; d + 8 <= n; d += 8) {
        for (std::size_t l = 0; l < 8; ++l) {
            const float diff = a[d + l] - b[d + l];
            acc[l] += diff * diff;
        }
    }
    for (; d < n; ++d) {
        const float diff = a[d] - b[d];
        acc[0] += diff * diff;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace lcd
