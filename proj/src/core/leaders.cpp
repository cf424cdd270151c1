#include "leaders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <json.hpp>

#include "agglomerative.hpp"
#include "distance.hpp"
#include "error.hpp"
#include "random.hpp"
#include "rp_forest.hpp"

namespace lcd {

namespace {

constexpr std::size_t kForestTrees = 8;
constexpr std::size_t kForestLeaf = 32;
constexpr std::size_t kForestBatch = 256;

// Squared distance with early exit once the partial sum passes `limit`.
bool within(const float* a, const float* b, std::size_t dim, double limit) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t d = 0;
    while (d + 16 <= dim) {
        for (std::size_t end = d + 16; d < end; d += 4) {
            for (std::size_t l = 0; l < 4; ++l) {
                const double diff = static_cast<double>(a[d + l]) - static_cast<double>(b[d + l]);
                acc[l] += diff * diff;
            }
        }
        if ((acc[0] + acc[1]) + (acc[2] + acc[3]) > limit) return false;
    }
    for (; d < dim; ++d) {
        const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
        acc[0] += diff * diff;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]) <= limit;
}

struct PassOutcome {
    std::optional<LeadersCompression> compression;  // empty when the cap was exceeded
    std::size_t leaders = 0;
};

PassOutcome run_pass(MatrixView data, double tau, std::uint64_t order_seed, bool exact, std::size_t cap) {
    if (!(tau >= 0.0)) fail("leaders pass requires tau >= 0");
    const std::size_t n = data.rows;
    const std::size_t dim = data.cols;
    const double limit = tau * tau;
    Rng rng = make_rng(order_seed, 0x1ead);
    const auto order = random_permutation(static_cast<std::uint32_t>(n), rng);

    // Leaders in creation order; leader_point[j] is the point behind slot j.
    std::vector<float> leader_rows;
    std::vector<std::uint32_t> leader_point;
    std::vector<std::uint32_t> slot_of(n, 0);
    std::optional<ProjectionForest> forest;
    if (!exact) forest.emplace(dim, kForestTrees, kForestLeaf, kForestBatch, order_seed);
    std::vector<std::uint32_t> candidates;

    for (const std::uint32_t p : order) {
        const float* x = data.row(p).data();
        std::uint32_t found = UINT32_MAX;
        if (exact) {
            for (std::uint32_t j = 0; j < leader_point.size(); ++j) {
                if (within(x, leader_rows.data() + static_cast<std::size_t>(j) * dim, dim, limit)) {
                    found = j;
                    break;
                }
            }
        } else {
            candidates.clear();
            forest->candidates(x, candidates);
            std::sort(candidates.begin(), candidates.end());
            candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
            for (std::uint32_t j : candidates) {
                if (within(x, leader_rows.data() + static_cast<std::size_t>(j) * dim, dim, limit)) {
                    found = j;
                    break;
                }
            }
        }
        if (found != UINT32_MAX) {
            slot_of[p] = found;
            continue;
        }
        const auto slot = static_cast<std::uint32_t>(leader_point.size());
        if (slot >= cap) return {std::nullopt, slot + 1};
        slot_of[p] = slot;
        leader_point.push_back(p);
        leader_rows.insert(leader_rows.end(), x, x + dim);
        if (forest) forest->add(leader_rows, slot);
    }

    LeadersCompression comp;
    comp.tau = tau;
    comp.order_seed = order_seed;
    comp.exact = exact;
    comp.leader_ids = leader_point;
    std::sort(comp.leader_ids.begin(), comp.leader_ids.end());
    const std::size_t m = comp.leader_ids.size();
    // Output rows are ordered by leader point id, independent of pass order.
    std::vector<std::uint32_t> row_of_slot(m);
    for (std::uint32_t r = 0; r < m; ++r) {
        const auto leader = comp.leader_ids[r];
        row_of_slot[slot_of[leader]] = r;
    }
    comp.follower_of.resize(n);
    comp.group_sizes.assign(m, 0);
    std::vector<double> sums(m * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = row_of_slot[slot_of[i]];
        comp.follower_of[i] = comp.leader_ids[r];
        ++comp.group_sizes[r];
        const auto x = data.row(i);
        for (std::size_t d = 0; d < dim; ++d) sums[r * dim + d] += x[d];
    }
    comp.centroids = Matrix(m, dim);
    for (std::size_t r = 0; r < m; ++r) {
        const double inv = 1.0 / static_cast<double>(comp.group_sizes[r]);
        for (std::size_t d = 0; d < dim; ++d)
            comp.centroids.values[r * dim + d] = static_cast<float>(sums[r * dim + d] * inv);
    }
    return {std::move(comp), m};
}

// Upper bound on the data diameter: twice the eccentricity of one sampled point.
double diameter_bound(MatrixView data, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0xd1a);
    const auto anchor = data.row(uniform_index(rng, data.rows));
    double far = 0.0;
    for (std::size_t i = 0; i < data.rows; ++i) far = std::max(far, squared_distance(anchor, data.row(i)));
    return 2.0 * std::sqrt(far) * (1.0 + 1e-9) + 1e-12;
}

}  // namespace

LeadersCompression leaders_pass(MatrixView data, double tau, std::uint64_t order_seed, bool exact) {
    if (data.rows == 0) fail("leaders pass needs at least one point");
    return std::move(*run_pass(data, tau, order_seed, exact, std::numeric_limits<std::size_t>::max())
                          .compression);
}

LeadersCompression leaders_pass(const EmbeddingDataset& ds, double tau, std::uint64_t order_seed, bool exact) {
    return leaders_pass(ds.matrix(), tau, order_seed, exact);
}

TauSearchResult tau_binary_search(MatrixView data, const TauSearchConfig& cfg) {
    const std::size_t n = data.rows;
    if (cfg.target_m < 1) fail("tau search requires target_m >= 1");
    if (cfg.target_m > n)
        fail("target unreachable: target_m=" + std::to_string(cfg.target_m) + " exceeds N=" + std::to_string(n));
    if (!(cfg.rel_band > 0.0 && cfg.rel_band < 1.0)) fail("tau search requires 0 < rel_band < 1");
    if (cfg.max_probes < 1) fail("tau search requires max_probes >= 1");

    const double target = static_cast<double>(cfg.target_m);
    const double band = cfg.rel_band * target;
    auto in_band = [&](std::size_t m) { return std::abs(static_cast<double>(m) - target) <= band; };
    // A pass is abandoned once it has more leaders than the band allows.
    const auto cap = static_cast<std::size_t>(std::floor(target + band));

    TauSearchResult result;
    std::optional<LeadersCompression> best;
    auto consider = [&](LeadersCompression&& comp) {
        if (!best || std::abs(static_cast<double>(comp.m()) - target) <
                         std::abs(static_cast<double>(best->m()) - target))
            best = std::move(comp);
    };

    // Zero radius only merges exact duplicates, so it is the natural first
    // probe when the budget is (nearly) the whole dataset.
    if (static_cast<double>(n) <= target + band) {
        auto out = run_pass(data, 0.0, cfg.seed, cfg.exact, cap);
        ++result.probes;
        if (out.compression && in_band(out.compression->m())) {
            result.tau = 0.0;
            result.compression = std::move(*out.compression);
            result.within_band = true;
            return result;
        }
        if (out.compression) consider(std::move(*out.compression));
    }

    double lo = 0.0;
    double hi = diameter_bound(data, cfg.seed);
    while (result.probes < cfg.max_probes) {
        const double mid = 0.5 * (lo + hi);
        auto out = run_pass(data, mid, cfg.seed, cfg.exact, cap);
        ++result.probes;
        if (!out.compression) {
            lo = mid;  // more than `cap` leaders: radius too small
            continue;
        }
        const std::size_t m = out.compression->m();
        if (in_band(m)) {
            result.tau = mid;
            result.compression = std::move(*out.compression);
            result.within_band = true;
            return result;
        }
        if (static_cast<double>(m) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
        consider(std::move(*out.compression));
    }
    if (!best) {
        // Every probe overflowed the cap; fall back to the last upper end.
        best = leaders_pass(data, hi, cfg.seed, cfg.exact);
    }
    result.tau = best->tau;
    result.compression = std::move(*best);
    result.within_band = in_band(result.compression.m());
    return result;
}

TauSearchResult tau_binary_search(const EmbeddingDataset& ds, const TauSearchConfig& cfg) {
    return tau_binary_search(ds.matrix(), cfg);
}

ClusterAssignment cluster_compression(MatrixView data, const LeadersCompression& comp, std::size_t k,
                                      std::uint64_t memory_budget, unsigned threads) {
    const std::size_t m = comp.m();
    if (k < 1) fail("leaders clustering requires k >= 1");
    if (k > m)
        fail("k=" + std::to_string(k) + " exceeds the number of leaders M=" + std::to_string(m));
    if (comp.follower_of.size() != data.rows) fail("compression does not match the dataset size");

    std::vector<std::int32_t> centroid_label(m, 0);
    if (m > 1) centroid_label = cut_tree(ward_fit(comp.centroids.view(), memory_budget, threads), k).labels;

    std::vector<std::uint32_t> row_of_leader(data.rows, 0);
    for (std::uint32_t r = 0; r < m; ++r) row_of_leader[comp.leader_ids[r]] = r;

    ClusterAssignment out;
    out.k = k;
    out.method = Method::Leaders;
    out.seed = comp.order_seed;
    out.labels.resize(data.rows);
    std::vector<std::int32_t> relabel(k, -1);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < data.rows; ++i) {
        const auto raw = centroid_label[row_of_leader[comp.follower_of[i]]];
        auto& mapped = relabel[static_cast<std::size_t>(raw)];
        if (mapped < 0) mapped = next++;
        out.labels[i] = mapped;
    }
    out.inertia = within_cluster_sse(out, data.values, data.cols);
    return out;
}

ClusterAssignment leaders_cluster(const EmbeddingDataset& ds, const TauSearchConfig& cfg, std::size_t k,
                                  std::uint64_t memory_budget, unsigned threads,
                                  LeadersCompression* compression_out) {
    auto search = tau_binary_search(ds, cfg);
    auto out = cluster_compression(ds.matrix(), search.compression, k, memory_budget, threads);
    if (compression_out) *compression_out = std::move(search.compression);
    return out;
}

std::string compression_to_json(const LeadersCompression& comp) {
    nlohmann::ordered_json j;
    j["tau"] = comp.tau;
    j["m"] = comp.m();
    j["order_seed"] = comp.order_seed;
    j["exact"] = comp.exact;
    j["follower_of"] = comp.follower_of;
    return j.dump();
}

void save_compression(const LeadersCompression& comp, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write compression file " + path.string());
    out << compression_to_json(comp) << '\n';
    if (!out) fail_io("write failed for " + path.string());
}

}  // namespace lcd
