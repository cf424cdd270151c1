#pragma once

#include <cstdint>
#include <vector>

#include "random.hpp"

namespace lcd {

// Random-projection trees over a growing set of points stored in an external
// row-major buffer. Points are indexed in batches; full batches are folded
// into trees with a binary-counter schedule so each point is re-indexed
// O(log n) times. Queries return candidate ids, not verified neighbours.
class ProjectionForest {
public:
    ProjectionForest(std::size_t dim, std::size_t trees, std::size_t leaf_size, std::size_t batch,
                     std::uint64_t seed);

    /// Registers point `id` (ids must arrive as 0, 1, 2, ...) whose vector is
    /// row `id` of `buffer`.
    void add(const std::vector<float>& buffer, std::uint32_t id);

    /// Candidate ids near x, unsorted and possibly repeated.
    void candidates(const float* x, std::vector<std::uint32_t>& out) const;

private:
    struct Node {
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t normal = 0;  // offset into normals_
        float offset = 0.0f;
        std::uint32_t begin = 0;    // leaf item range
        std::uint32_t end = 0;
    };
    struct Tree {
        std::vector<Node> nodes;
        std::vector<std::uint32_t> items;
        std::vector<float> normals;
    };
    struct Segment {
        std::uint32_t first = 0;
        std::uint32_t count = 0;
        std::vector<Tree> trees;
    };

    Segment build(const std::vector<float>& buffer, std::uint32_t first, std::uint32_t count);
    std::int32_t split(Tree& tree, const std::vector<float>& buffer, std::uint32_t begin, std::uint32_t end);

    std::size_t dim_;
    std::size_t trees_;
    std::size_t leaf_size_;
    std::size_t batch_;
    Rng rng_;
    std::vector<Segment> segments_;
    std::uint32_t indexed_ = 0;
    std::uint32_t total_ = 0;
};

}  // namespace lcd
