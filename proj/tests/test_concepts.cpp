#include <doctest.h>

#include <numeric>
#include <random>

#include <json.hpp>

#include "concepts.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace lcd;
using testing_support::make_tokens;

namespace {

EmbeddingDataset tokens_dataset(const std::vector<std::string>& surfaces, const std::vector<std::uint32_t>& spans = {}) {
    return EmbeddingDataset(0, 0, {}, make_tokens(surfaces, {}, spans));
}

ClusterAssignment labels_of(std::vector<std::int32_t> labels, std::size_t k) {
    ClusterAssignment a;
    a.labels = std::move(labels);
    a.k = k;
    return a;
}

// Concepts of the given sizes over fresh ids; surfaces are irrelevant here.
ConceptSet of_sizes(const std::vector<std::size_t>& sizes) {
    ConceptSet cs;
    std::uint32_t next = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        Concept k;
        k.concept_id = static_cast<std::int32_t>(c);
        for (std::size_t i = 0; i < sizes[c]; ++i) k.member_ids.push_back(next++);
        cs.concepts.push_back(std::move(k));
    }
    return cs;
}

// One concept per entry, with `types[c]` distinct surfaces each used twice.
std::pair<EmbeddingDataset, ClusterAssignment> typed(const std::vector<std::size_t>& types) {
    std::vector<std::string> surfaces;
    std::vector<std::int32_t> labels;
    for (std::size_t c = 0; c < types.size(); ++c)
        for (std::size_t t = 0; t < types[c]; ++t)
            for (int rep = 0; rep < 2; ++rep) {
                surfaces.push_back("c" + std::to_string(c) + "t" + std::to_string(t));
                labels.push_back(static_cast<std::int32_t>(c));
            }
    return {tokens_dataset(surfaces), labels_of(labels, types.size())};
}

}  // namespace

TEST_CASE("projection of clusters onto surfaces") {
    const auto ds = tokens_dataset({"a", "b", "a"});
    const auto cs = build_concepts(labels_of({0, 0, 1}, 2), ds);
    REQUIRE(cs.concepts.size() == 2);
    CHECK(cs.concepts[0].concept_id == 0);
    CHECK(cs.concepts[0].member_ids == std::vector<std::uint32_t>{0, 1});
    CHECK(cs.concepts[0].unique_types() == 2);
    CHECK(cs.concepts[1].member_ids == std::vector<std::uint32_t>{2});
    CHECK(cs.concepts[1].unique_types() == 1);
    CHECK(cs.concepts[1].type_counts.at("a") == 1);
    CHECK_FALSE(cs.filtered);
}

TEST_CASE("empty clusters produce no concept") {
    const auto ds = tokens_dataset({"a", "b", "c", "d"});
    const auto cs = build_concepts(labels_of({4, 0, 4, 2}, 5), ds);
    REQUIRE(cs.concepts.size() == 3);
    CHECK(cs.concepts[0].concept_id == 0);
    CHECK(cs.concepts[1].concept_id == 2);
    CHECK(cs.concepts[2].concept_id == 4);
}

TEST_CASE("bad assignments are rejected") {
    const auto ds = tokens_dataset({"a", "b"});
    CHECK_THROWS_AS(build_concepts(labels_of({}, 1), tokens_dataset({})), Error);
    CHECK_THROWS_AS(build_concepts(labels_of({0}, 1), ds), Error);
    CHECK_THROWS_AS(build_concepts(labels_of({0, 3}, 2), ds), Error);
}

TEST_CASE("sizes add up to the number of points") {
    std::mt19937 gen(3);
    std::vector<std::string> surfaces;
    std::vector<std::int32_t> labels;
    for (int i = 0; i < 2000; ++i) {
        surfaces.push_back("w" + std::to_string(gen() % 300));
        labels.push_back(static_cast<std::int32_t>(gen() % 40));
    }
    const auto cs = build_concepts(labels_of(labels, 40), tokens_dataset(surfaces));
    std::size_t total = 0;
    for (const auto& c : cs.concepts) {
        total += c.size();
        std::size_t counted = 0;
        for (const auto& [_, n] : c.type_counts) counted += n;
        CHECK(counted == c.size());
    }
    CHECK(total == 2000);
}

TEST_CASE("type filter keeps strictly more than the threshold") {
    const auto [ds, a] = typed({5, 6, 1, 9});
    const auto cs = build_concepts(a, ds);
    const auto kept = filter_concepts(cs, 5);
    REQUIRE(kept.concepts.size() == 2);
    CHECK(kept.concepts[0].concept_id == 1);
    CHECK(kept.concepts[1].concept_id == 3);
    CHECK(kept.filtered);
    CHECK(kept.min_types == 5);

    CHECK(filter_concepts(cs, 0).concepts.size() == 4);
    const auto none = filter_concepts(cs, 9);
    CHECK(none.concepts.empty());
    CHECK(none.filtered);
}

TEST_CASE("filtering is idempotent and monotone") {
    const auto [ds, a] = typed({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const auto cs = build_concepts(a, ds);
    std::size_t prev = cs.concepts.size();
    for (std::size_t t = 0; t <= 11; ++t) {
        const auto once = filter_concepts(cs, t);
        const auto twice = filter_concepts(once, t);
        CHECK(twice.concepts.size() == once.concepts.size());
        CHECK(once.concepts.size() <= prev);
        prev = once.concepts.size();
    }
}

TEST_CASE("lower median and bin conservation") {
    CHECK(size_histogram(of_sizes({1, 2, 3}), 10).median == 2);
    CHECK(size_histogram(of_sizes({2, 4}), 10).median == 2);
    CHECK(size_histogram(of_sizes({7}), 10).median == 7);
    CHECK(size_histogram(of_sizes({9, 1, 5, 3}), 10).median == 3);

    const auto h = size_histogram(of_sizes({1, 10, 11, 25, 25}), 10);
    REQUIRE(h.bins.size() == 3);
    CHECK(h.bins[0].lo == 1);
    CHECK(h.bins[0].hi == 10);
    CHECK(h.bins[0].count == 2);
    CHECK(h.bins[1].count == 1);
    CHECK(h.bins[2].lo == 21);
    CHECK(h.bins[2].count == 2);

    std::mt19937 gen(8);
    std::vector<std::size_t> sizes;
    for (int c = 0; c < 600; ++c) sizes.push_back(1 + gen() % 900);
    for (std::size_t width : {1u, 7u, 10u, 50u}) {
        const auto hist = size_histogram(of_sizes(sizes), width);
        std::size_t total = 0;
        for (const auto& b : hist.bins) total += b.count;
        CHECK(total == 600);
        CHECK(hist.bins.back().hi >= *std::max_element(sizes.begin(), sizes.end()));
    }

    CHECK_THROWS_AS(size_histogram(ConceptSet{}, 10), Error);
    CHECK_THROWS_AS(size_histogram(of_sizes({1}), 0), Error);

    const auto j = nlohmann::json::parse(histogram_to_json(size_histogram(of_sizes({2, 4}), 2)));
    CHECK(j["median"] == 2);
    CHECK(j["bins"].size() == 2);
}

TEST_CASE("phrasal members by span length") {
    const auto ds = tokens_dataset({"a b", "c d", "e f g", "h i j k l", "m n o p q r", "s"}, {2, 2, 3, 5, 6, 1});
    const auto p = phrasal_counts(build_concepts(labels_of({0, 1, 0, 1, 0, 1}, 2), ds), ds);
    CHECK(p.tokens[2] == 2);
    CHECK(p.tokens[3] == 1);
    CHECK(p.tokens[4] == 0);
    CHECK(p.tokens[5] == 1);
    CHECK(p.types[2] == 2);

    const auto repeated = tokens_dataset({"a b", "a b", "x"}, {2, 2, 1});
    const auto q = phrasal_counts(build_concepts(labels_of({0, 0, 0}, 1), repeated), repeated);
    CHECK(q.tokens[2] == 2);
    CHECK(q.types[2] == 1);

    const auto single = tokens_dataset({"a", "b"});
    const auto z = phrasal_counts(build_concepts(labels_of({0, 0}, 1), single), single);
    for (std::size_t n = 2; n <= 5; ++n) CHECK(z.tokens[n] == 0);

    const auto j = nlohmann::json::parse(phrasal_to_json(p));
    CHECK(j["tokens"]["2"] == 2);
    CHECK(j["tokens"]["5"] == 1);
}

TEST_CASE("saved concepts load back with their statistics") {
    const auto [ds, a] = typed({3, 7});
    const auto cs = filter_concepts(build_concepts(a, ds), 2);
    testing_support::TempDir dir;
    save_concepts(cs, dir / "c.jsonl");
    const auto back = load_concepts(dir / "c.jsonl", ds);
    REQUIRE(back.concepts.size() == cs.concepts.size());
    for (std::size_t c = 0; c < cs.concepts.size(); ++c) {
        CHECK(back.concepts[c].concept_id == cs.concepts[c].concept_id);
        CHECK(back.concepts[c].member_ids == cs.concepts[c].member_ids);
        CHECK(back.concepts[c].type_counts == cs.concepts[c].type_counts);
    }
    const auto listing = concept_listing(cs, ds, 2);
    CHECK(listing.find("c1t0") != std::string::npos);
}
