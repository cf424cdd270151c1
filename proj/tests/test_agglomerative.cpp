#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "agglomerative.hpp"
#include "error.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace lcd;
using testing_support::gaussian_rows;
using testing_support::make_dataset;

namespace {

constexpr std::uint64_t kBudget = 1ULL << 30;

std::vector<std::vector<double>> widen(const std::vector<std::vector<float>>& rows) {
    std::vector<std::vector<double>> out;
    for (const auto& r : rows) out.emplace_back(r.begin(), r.end());
    return out;
}

std::vector<int> as_int(const std::vector<std::int32_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("closest pair of three collinear points merges first") {
    const auto dg = ward_fit(make_dataset({{0}, {1}, {10}}), kBudget);
    REQUIRE(dg.merges.size() == 2);
    CHECK(dg.merges[0].node_a == 0);
    CHECK(dg.merges[0].node_b == 1);
    CHECK(dg.merges[0].cost == doctest::Approx(0.5));
    CHECK(dg.merges[0].new_size == 2);
    CHECK(dg.merges[1].node_a == 2);
    CHECK(dg.merges[1].node_b == 3);
    CHECK(dg.merges[1].new_size == 3);
    // {0,1} (mean 0.5) joins {10}: 2*1/3 * 9.5^2.
    CHECK(dg.merges[1].cost == doctest::Approx(2.0 / 3.0 * 9.5 * 9.5));
}

TEST_CASE("two points merge at half their squared distance") {
    const auto dg = ward_fit(make_dataset({{1, 2, 3}, {4, 6, 3}}), kBudget);
    REQUIRE(dg.merges.size() == 1);
    CHECK(dg.merges[0].cost == doctest::Approx(25.0 / 2.0).epsilon(1e-15));
}

TEST_CASE("merge costs match the naive reference") {
    for (std::uint32_t trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial * 2;
        const auto rows = gaussian_rows(n, 1 + trial % 5, 100 + trial);
        const auto dg = ward_fit(make_dataset(rows), kBudget);
        const auto expected = oracle::brute_force_ward_costs(widen(rows));
        REQUIRE(dg.merges.size() == expected.size());
        for (std::size_t t = 0; t < expected.size(); ++t)
            CHECK(dg.merges[t].cost == doctest::Approx(expected[t]).epsilon(1e-9));
    }
}

TEST_CASE("cuts at the extremes") {
    const auto dg = ward_fit(make_dataset(gaussian_rows(9, 2, 4)), kBudget);
    const auto all = cut_tree(dg, 9);
    for (int i = 0; i < 9; ++i) CHECK(all.labels[i] == i);
    CHECK(all.inertia == 0.0);
    const auto one = cut_tree(dg, 1);
    for (int i = 0; i < 9; ++i) CHECK(one.labels[i] == 0);
    CHECK_THROWS_AS(cut_tree(dg, 0), Error);
    CHECK_THROWS_AS(cut_tree(dg, 10), Error);
}

TEST_CASE("two far pairs are recovered at k = 2") {
    const auto a = agglomerative_fit(make_dataset({{0, 0}, {50, 50}, {0, 1}, {50, 51}}), 2, kBudget);
    CHECK(a.labels == std::vector<std::int32_t>{0, 1, 0, 1});
    CHECK(a.method == Method::Agglomerative);
    CHECK(a.inertia == doctest::Approx(1.0));
}

TEST_CASE("tree structure invariants") {
    const std::size_t n = 120;
    const auto rows = gaussian_rows(n, 4, 8);
    const auto ds = make_dataset(rows);
    const auto dg = ward_fit(ds, kBudget);
    REQUIRE(dg.merges.size() == n - 1);
    CHECK(dg.leaf_count == n);
    std::vector<std::uint64_t> size(2 * n - 1, 1);
    std::set<std::uint32_t> used;
    for (std::size_t t = 0; t < dg.merges.size(); ++t) {
        const auto& m = dg.merges[t];
        CHECK(m.node_a < n + t);
        CHECK(m.node_b < n + t);
        CHECK(used.insert(m.node_a).second);
        CHECK(used.insert(m.node_b).second);
        size[n + t] = size[m.node_a] + size[m.node_b];
        CHECK(m.new_size == size[n + t]);
        CHECK(m.cost >= 0.0);
        if (t > 0) CHECK(m.cost >= dg.merges[t - 1].cost);
    }
    CHECK(dg.merges.back().new_size == n);

    // Each cut refines the next coarser one, and its inertia is the scatter.
    auto finer = cut_tree(dg, n);
    for (std::size_t k = n - 1; k >= 1; --k) {
        const auto coarser = cut_tree(dg, k);
        std::map<int, int> parent;
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, fresh] = parent.emplace(finer.labels[i], coarser.labels[i]);
            CHECK(it->second == coarser.labels[i]);
        }
        CHECK(std::set<int>(coarser.labels.begin(), coarser.labels.end()).size() == k);
        if (k % 17 == 0)
            CHECK(coarser.inertia == doctest::Approx(within_cluster_sse(coarser, ds.vectors(), ds.dim())).epsilon(1e-9));
        finer = coarser;
    }
}

TEST_CASE("cuts match the naive reference on small random sets") {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 5 + gen() % 60;
        const std::size_t dim = 1 + gen() % 8;
        const auto rows = gaussian_rows(n, dim, 1000 + trial);
        const auto dg = ward_fit(make_dataset(rows), kBudget);
        for (std::size_t k = 1; k <= std::min<std::size_t>(n, 10); ++k)
            CHECK(as_int(cut_tree(dg, k).labels) == oracle::brute_force_ward(widen(rows), k));
    }
}

TEST_CASE("equal-cost merges resolve to the smallest id pair") {
    // Four evenly spaced points: the three neighbouring pairs cost the same.
    const auto dg = ward_fit(make_dataset({{0}, {1}, {2}, {3}}), kBudget);
    CHECK(dg.merges[0].node_a == 0);
    CHECK(dg.merges[0].node_b == 1);
    CHECK(dg.merges[1].node_a == 2);
    CHECK(dg.merges[1].node_b == 3);
    const std::vector<std::vector<double>> grid = {{0}, {1}, {2}, {3}};
    CHECK(as_int(cut_tree(dg, 2).labels) == oracle::brute_force_ward(grid, 2));
    CHECK(as_int(cut_tree(dg, 3).labels) == oracle::brute_force_ward(grid, 3));
}

TEST_CASE("memory budget is enforced before allocation") {
    const auto ds = make_dataset(gaussian_rows(100, 2, 1));
    CHECK(ward_required_bytes(100) == 100ULL * 99 / 2 * 8);
    try {
        ward_fit(ds, ward_required_bytes(100) - 1);
        FAIL("expected a budget error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Budget);
        CHECK(std::string(e.what()).find(std::to_string(ward_required_bytes(100))) != std::string::npos);
    }
    CHECK_NOTHROW(ward_fit(ds, ward_required_bytes(100)));
}

TEST_CASE("byte sizes and the environment override") {
    CHECK(parse_byte_size("123") == 123);
    CHECK(parse_byte_size("2K") == 2048);
    CHECK(parse_byte_size("3M") == 3ULL << 20);
    CHECK(parse_byte_size("16G") == 16ULL << 30);
    CHECK_THROWS_AS(parse_byte_size("lots"), Error);
    CHECK_THROWS_AS(parse_byte_size(""), Error);

    ::setenv("LCD_MEMORY_BUDGET", "5M", 1);
    CHECK(default_memory_budget() == 5ULL << 20);
    ::unsetenv("LCD_MEMORY_BUDGET");
    CHECK(default_memory_budget() == 16ULL << 30);
}

TEST_CASE("thread count does not change the tree") {
    const auto ds = make_dataset(gaussian_rows(300, 5, 14));
    const auto one = ward_fit(ds, kBudget, 1);
    const auto four = ward_fit(ds, kBudget, 4);
    REQUIRE(one.merges.size() == four.merges.size());
    for (std::size_t t = 0; t < one.merges.size(); ++t) {
        CHECK(one.merges[t].node_a == four.merges[t].node_a);
        CHECK(one.merges[t].node_b == four.merges[t].node_b);
        CHECK(one.merges[t].cost == four.merges[t].cost);
    }
}

TEST_CASE("dendrogram dump has one line per merge") {
    testing_support::TempDir dir;
    const auto dg = ward_fit(make_dataset({{0}, {1}, {10}}), kBudget);
    save_dendrogram(dg, dir / "d.jsonl");
    std::ifstream in(dir / "d.jsonl");
    std::string first, second, extra;
    std::getline(in, first);
    std::getline(in, second);
    CHECK(first == R"({"a":0,"b":1,"cost":0.5,"size":2})");
    CHECK(second.find(R"("a":2,"b":3)") != std::string::npos);
    CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("degenerate inputs") {
    CHECK_THROWS_AS(ward_fit(make_dataset({{1}}), kBudget), Error);
    const auto single = agglomerative_fit(make_dataset({{1}}), 1, kBudget);
    CHECK(single.labels == std::vector<std::int32_t>{0});
    const auto same = agglomerative_fit(make_dataset({{2, 2}, {2, 2}, {2, 2}}), 2, kBudget);
    CHECK(same.labels == std::vector<std::int32_t>{0, 0, 1});
}
