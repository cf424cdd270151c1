#include "agglomerative.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>

#include <json.hpp>

#include "distance.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace lcd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper-triangular condensed storage of the Ward dissimilarity
// 2 * n_a * n_b / (n_a + n_b) * |c_a - c_b|^2, which reduces to the squared
// Euclidean distance for singletons and obeys the Lance-Williams recurrence.
class Condensed {
public:
    explicit Condensed(std::size_t n) : n_(n), values_(n * (n - 1) / 2) {}

    double& at(std::size_t i, std::size_t j) { return values_[index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }
    double* row_after(std::size_t i) { return values_.data() + index(i, i + 1); }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
    }

    std::size_t n_;
    std::vector<double> values_;
};

struct RawMerge {
    std::uint32_t lo;  // slot = smallest member index of each side
    std::uint32_t hi;
    double cost;
};

// Union-find keyed by slot so merges recorded in chain order can be replayed.
struct DisjointSet {
    std::vector<std::uint32_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
};

// Orders merges by (cost, lo, hi) while never emitting a merge before the
// merges that built its operands.
Dendrogram order_merges(const std::vector<RawMerge>& raw, std::size_t n) {
    // Slot s currently holds the cluster built by its latest merge; a merge
    // depends on the previous merges touching either of its slots.
    std::vector<std::int64_t> last_touch(n, -1);
    std::vector<std::vector<std::uint32_t>> dependents(raw.size());
    std::vector<std::uint32_t> pending(raw.size(), 0);
    for (std::size_t t = 0; t < raw.size(); ++t) {
        for (std::uint32_t s : {raw[t].lo, raw[t].hi}) {
            if (last_touch[s] >= 0) {
                dependents[static_cast<std::size_t>(last_touch[s])].push_back(static_cast<std::uint32_t>(t));
                ++pending[t];
            }
            last_touch[s] = static_cast<std::int64_t>(t);
        }
    }
    auto later = [&](std::uint32_t x, std::uint32_t y) {
        const auto& a = raw[x];
        const auto& b = raw[y];
        if (a.cost != b.cost) return a.cost > b.cost;
        if (a.lo != b.lo) return a.lo > b.lo;
        return a.hi > b.hi;
    };
    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, decltype(later)> ready(later);
    for (std::size_t t = 0; t < raw.size(); ++t)
        if (pending[t] == 0) ready.push(static_cast<std::uint32_t>(t));

    Dendrogram dg;
    dg.leaf_count = n;
    dg.merges.reserve(raw.size());
    std::vector<std::uint32_t> node_of(n);  // slot -> current node id
    std::iota(node_of.begin(), node_of.end(), 0u);
    std::vector<std::uint64_t> size_of(n, 1);
    while (!ready.empty()) {
        const auto t = ready.top();
        ready.pop();
        const auto& m = raw[t];
        const auto a = node_of[m.lo];
        const auto b = node_of[m.hi];
        const auto size = size_of[m.lo] + size_of[m.hi];
        dg.merges.push_back({std::min(a, b), std::max(a, b), m.cost, size});
        node_of[m.lo] = static_cast<std::uint32_t>(n + dg.merges.size() - 1);
        size_of[m.lo] = size;
        for (auto d : dependents[t])
            if (--pending[d] == 0) ready.push(d);
    }
    return dg;
}

}  // namespace

std::uint64_t parse_byte_size(const std::string& text) {
    if (text.empty()) fail("empty byte size");
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(text, &pos);
    } catch (const std::exception&) {
        fail("invalid byte size \"" + text + "\"");
    }
    std::string suffix = text.substr(pos);
    for (auto& ch : suffix) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (suffix.empty() || suffix == "B") return value;
    if (suffix == "K" || suffix == "KB" || suffix == "KIB") return value << 10;
    if (suffix == "M" || suffix == "MB" || suffix == "MIB") return value << 20;
    if (suffix == "G" || suffix == "GB" || suffix == "GIB") return value << 30;
    if (suffix == "T" || suffix == "TB" || suffix == "TIB") return value << 40;
    fail("invalid byte size suffix in \"" + text + "\"");
}

std::uint64_t default_memory_budget() {
    if (const char* env = std::getenv("LCD_MEMORY_BUDGET"); env != nullptr && *env != '\0')
        return parse_byte_size(env);
    return 16ULL << 30;
}

std::uint64_t ward_required_bytes(std::size_t n) {
    const auto nn = static_cast<std::uint64_t>(n);
    return nn * (nn - (nn > 0 ? 1 : 0)) / 2 * sizeof(double);
}

Dendrogram ward_fit(MatrixView data, std::uint64_t memory_budget, unsigned threads) {
    const std::size_t n = data.rows;
    if (n < 2) fail("Ward clustering needs at least 2 points");
    if (n > UINT32_MAX) fail("too many points for Ward clustering");
    const auto required = ward_required_bytes(n);
    if (required > memory_budget)
        throw Error(ErrorKind::Budget,
                    "Ward clustering of N=" + std::to_string(n) + " points needs " +
                        std::to_string(required) + " bytes for the condensed distance matrix; budget is " +
                        std::to_string(memory_budget) + " bytes");

    Condensed dist(n);
    parallel_for(n - 1, 16, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* out = dist.row_after(i);
            const auto xi = data.row(i);
            for (std::size_t j = i + 1; j < n; ++j) out[j - i - 1] = squared_distance(xi, data.row(j));
        }
    });

    // Nearest-neighbour chain. Active slots are kept in a dense list; a
    // merged cluster lives in the smaller of its two slots, so a slot id is
    // always the smallest original index among its members.
    std::vector<std::uint64_t> size(n, 1);
    std::vector<std::uint32_t> active(n);
    std::iota(active.begin(), active.end(), 0u);
    std::vector<std::uint32_t> position(n);
    std::iota(position.begin(), position.end(), 0u);
    std::vector<double> built_cost(n, 0.0);

    auto deactivate = [&](std::uint32_t s) {
        const auto p = position[s];
        const auto last = active.back();
        active[p] = last;
        position[last] = p;
        active.pop_back();
    };

    std::vector<RawMerge> raw;
    raw.reserve(n - 1);
    std::vector<std::uint32_t> chain;
    chain.reserve(n);
    while (active.size() > 1) {
        if (chain.empty()) chain.push_back(*std::min_element(active.begin(), active.end()));
        std::uint32_t a;
        std::uint32_t b;
        for (;;) {
            a = chain.back();
            const bool has_prev = chain.size() >= 2;
            const std::uint32_t prev = has_prev ? chain[chain.size() - 2] : 0;
            double best = kInf;
            std::uint32_t nearest = UINT32_MAX;
            for (std::uint32_t c : active) {
                if (c == a) continue;
                const double d = dist.at(a, c);
                if (d < best || (d == best && c < nearest)) {
                    best = d;
                    nearest = c;
                }
            }
            // Prefer the previous chain element on ties so the chain terminates.
            if (has_prev && dist.at(a, prev) == best) nearest = prev;
            b = nearest;
            if (has_prev && b == prev) break;
            chain.push_back(b);
        }
        chain.pop_back();
        chain.pop_back();

        const std::uint32_t lo = std::min(a, b);
        const std::uint32_t hi = std::max(a, b);
        const double dab = dist.at(lo, hi);
        // Ward is reducible, so a merge never costs less than the merges that
        // built its operands; the clamp only absorbs rounding.
        const double cost = std::max({0.5 * dab, built_cost[lo], built_cost[hi]});
        raw.push_back({lo, hi, cost});

        const double na = static_cast<double>(size[lo]);
        const double nb = static_cast<double>(size[hi]);
        for (std::uint32_t c : active) {
            if (c == lo || c == hi) continue;
            const double nc = static_cast<double>(size[c]);
            const double updated =
                ((na + nc) * dist.at(c, lo) + (nb + nc) * dist.at(c, hi) - nc * dab) / (na + nb + nc);
            dist.at(c, lo) = std::max(updated, 0.0);
        }
        size[lo] += size[hi];
        built_cost[lo] = cost;
        deactivate(hi);
    }
    return order_merges(raw, n);
}

Dendrogram ward_fit(const EmbeddingDataset& ds, std::uint64_t memory_budget, unsigned threads) {
    return ward_fit(ds.matrix(), memory_budget, threads);
}

ClusterAssignment cut_tree(const Dendrogram& dg, std::size_t k) {
    const std::size_t n = dg.leaf_count;
    if (k < 1 || k > n)
        fail("cut_tree requires 1 <= k <= N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
    if (dg.merges.size() + 1 != n) fail("dendrogram must hold N-1 merges");
    DisjointSet sets(n);
    std::vector<std::uint32_t> representative(n + dg.merges.size());
    std::iota(representative.begin(), representative.begin() + static_cast<std::ptrdiff_t>(n), 0u);
    for (std::size_t t = 0; t < dg.merges.size(); ++t) {
        const auto& m = dg.merges[t];
        const auto ra = sets.find(representative[m.node_a]);
        const auto rb = sets.find(representative[m.node_b]);
        if (t < n - k) sets.parent[std::max(ra, rb)] = std::min(ra, rb);
        representative[n + t] = std::min(ra, rb);
    }
    ClusterAssignment out;
    out.k = k;
    out.method = Method::Agglomerative;
    out.labels.assign(n, -1);
    std::vector<std::int32_t> label_of_root(n, -1);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = sets.find(static_cast<std::uint32_t>(i));
        if (label_of_root[r] < 0) label_of_root[r] = next++;
        out.labels[i] = label_of_root[r];
    }
    for (std::size_t t = 0; t < n - k; ++t) out.inertia += dg.merges[t].cost;
    return out;
}

ClusterAssignment agglomerative_fit(const EmbeddingDataset& ds, std::size_t k,
                                    std::uint64_t memory_budget, unsigned threads) {
    if (k < 1 || k > ds.n_points())
        fail("agglomerative clustering requires 1 <= k <= N");
    if (ds.n_points() == 1) {
        ClusterAssignment single;
        single.k = 1;
        single.method = Method::Agglomerative;
        single.labels = {0};
        return single;
    }
    return cut_tree(ward_fit(ds, memory_budget, threads), k);
}

void save_dendrogram(const Dendrogram& dg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write dendrogram file " + path.string());
    for (const auto& m : dg.merges) {
        nlohmann::ordered_json j;
        j["a"] = m.node_a;
        j["b"] = m.node_b;
        j["cost"] = m.cost;
        j["size"] = m.new_size;
        out << j.dump() << '\n';
    }
    if (!out) fail_io("write failed for " + path.string());
}

}  // namespace lcd
