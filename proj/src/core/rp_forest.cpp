#include "rp_forest.hpp"

#include <algorithm>

namespace lcd {

ProjectionForest::ProjectionForest(std::size_t dim, std::size_t trees, std::size_t leaf_size,
                                   std::size_t batch, std::uint64_t seed)
    : dim_(dim), trees_(trees), leaf_size_(std::max<std::size_t>(leaf_size, 1)),
      batch_(std::max<std::size_t>(batch, 1)), rng_(make_rng(seed, 0x5eed)) {}

void ProjectionForest::add(const std::vector<float>& buffer, std::uint32_t id) {
    total_ = id + 1;
    if (total_ - indexed_ < batch_) return;
    segments_.push_back(build(buffer, indexed_, total_ - indexed_));
    indexed_ = total_;
    while (segments_.size() >= 2 &&
           segments_[segments_.size() - 2].count <= segments_.back().count) {
        const auto first = segments_[segments_.size() - 2].first;
        const auto count = segments_[segments_.size() - 2].count + segments_.back().count;
        segments_.pop_back();
        segments_.back() = build(buffer, first, count);
    }
}

void ProjectionForest::candidates(const float* x, std::vector<std::uint32_t>& out) const {
    for (const auto& seg : segments_) {
        for (const auto& tree : seg.trees) {
            std::int32_t node = 0;
            while (tree.nodes[static_cast<std::size_t>(node)].left >= 0) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
                const float* w = tree.normals.data() + nd.normal;
                float proj = 0.0f;
                for (std::size_t d = 0; d < dim_; ++d) proj += w[d] * x[d];
                node = proj >= nd.offset ? nd.right : nd.left;
            }
            const auto& leaf = tree.nodes[static_cast<std::size_t>(node)];
            out.insert(out.end(), tree.items.begin() + leaf.begin, tree.items.begin() + leaf.end);
        }
    }
    for (std::uint32_t id = indexed_; id < total_; ++id) out.push_back(id);
}

ProjectionForest::Segment ProjectionForest::build(const std::vector<float>& buffer, std::uint32_t first,
                                                  std::uint32_t count) {
    Segment seg;
    seg.first = first;
    seg.count = count;
    seg.trees.resize(trees_);
    for (auto& tree : seg.trees) {
        tree.items.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) tree.items[i] = first + i;
        split(tree, buffer, 0, count);
    }
    return seg;
}

// Annoy-style split: the hyperplane bisecting two random members.
std::int32_t ProjectionForest::split(Tree& tree, const std::vector<float>& buffer, std::uint32_t begin,
                                     std::uint32_t end) {
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.back().begin = begin;
    tree.nodes.back().end = end;
    const std::uint32_t count = end - begin;
    if (count <= leaf_size_) return index;

    const auto p = tree.items[begin + uniform_index(rng_, count)];
    auto q = tree.items[begin + uniform_index(rng_, count)];
    if (q == p) q = tree.items[begin + (p == tree.items[begin] ? count - 1 : 0)];
    const float* xp = buffer.data() + static_cast<std::size_t>(p) * dim_;
    const float* xq = buffer.data() + static_cast<std::size_t>(q) * dim_;
    const auto normal = static_cast<std::uint32_t>(tree.normals.size());
    float offset = 0.0f;
    for (std::size_t d = 0; d < dim_; ++d) {
        const float w = xp[d] - xq[d];
        tree.normals.push_back(w);
        offset += w * 0.5f * (xp[d] + xq[d]);
    }
    auto project = [&](std::uint32_t id) {
        const float* x = buffer.data() + static_cast<std::size_t>(id) * dim_;
        const float* w = tree.normals.data() + normal;
        float s = 0.0f;
        for (std::size_t d = 0; d < dim_; ++d) s += w[d] * x[d];
        return s;
    };
    auto first = tree.items.begin() + begin;
    auto last = tree.items.begin() + end;
    auto mid = std::partition(first, last, [&](std::uint32_t id) { return project(id) < offset; });
    if (mid == first || mid == last) {
        // Degenerate split (duplicates): fall back to the median projection.
        mid = first + count / 2;
        std::nth_element(first, mid, last,
                         [&](std::uint32_t a, std::uint32_t b) { return project(a) < project(b); });
        offset = project(*mid);
    }
    const auto split_at = static_cast<std::uint32_t>(mid - tree.items.begin());
    const auto left = split(tree, buffer, begin, split_at);
    const auto right = split(tree, buffer, split_at, end);
    auto& nd = tree.nodes[static_cast<std::size_t>(index)];
    nd.left = left;
    nd.right = right;
    nd.normal = normal;
    nd.offset = offset;
    return index;
}

}  // namespace lcd
