#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "dataset.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace lcd;
using testing_support::make_dataset;
using testing_support::make_tokens;
using testing_support::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string u32le(std::uint32_t v) {
    std::string s(4, '\0');
    for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    return s;
}

std::string lce(std::uint32_t n, std::uint32_t d, std::uint32_t layer, const std::vector<float>& values) {
    std::string s = "LCE1" + u32le(n) + u32le(d) + u32le(layer);
    for (float f : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        s += u32le(bits);
    }
    return s;
}

std::string token_lines(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i)
        s += R"({"id":)" + std::to_string(i) + R"(,"sent":0,"pos":)" + std::to_string(i) +
             R"(,"word":"w)" + std::to_string(i) + R"(","label":"L"})" + "\n";
    return s;
}

template <class F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("hand-written LCE1 file loads with its declared sizes") {
    TempDir dir;
    spit(dir / "e.lce", lce(3, 2, 12, {1, 2, 3, 4, 5, 6}));
    spit(dir / "t.jsonl", token_lines(3));
    const auto ds = load_dataset(dir / "e.lce", dir / "t.jsonl");
    CHECK(ds.n_points() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds.layer_id() == 12);
    CHECK(ds.row(2)[1] == 6.0f);
    CHECK(ds.token(1).surface == "w1");
    CHECK(ds.token(1).span_len == 1);
    CHECK(ds.token(1).label == std::optional<std::string>("L"));
}

TEST_CASE("save writes the exact little-endian layout") {
    TempDir dir;
    const auto ds = EmbeddingDataset(7, 2, {0.5f, -1.0f, 3.25f, 1e-30f}, make_tokens({"a", "b"}));
    save_dataset(ds, dir / "e.lce", dir / "t.jsonl");
    CHECK(slurp(dir / "e.lce") == lce(2, 2, 7, {0.5f, -1.0f, 3.25f, 1e-30f}));
}

TEST_CASE("load then save then load is bit-identical") {
    TempDir dir;
    auto rows = testing_support::gaussian_rows(50, 5, 3);
    rows[4][2] = std::numeric_limits<float>::denorm_min();
    rows[5][0] = -0.0f;
    std::vector<std::string> words;
    std::vector<std::optional<std::string>> labels;
    std::vector<std::uint32_t> spans;
    for (int i = 0; i < 50; ++i) {
        words.push_back(i % 3 ? "w\"q\\" + std::to_string(i % 7) : "ünï_" + std::to_string(i));
        labels.push_back(i % 4 ? std::optional<std::string>("T" + std::to_string(i % 5)) : std::nullopt);
        spans.push_back(1 + i % 5);
    }
    std::vector<float> values;
    for (auto& r : rows) values.insert(values.end(), r.begin(), r.end());
    const EmbeddingDataset ds(3, 5, values, make_tokens(words, labels, spans));
    save_dataset(ds, dir / "a.lce", dir / "a.jsonl");
    const auto back = load_dataset(dir / "a.lce", dir / "a.jsonl");
    save_dataset(back, dir / "b.lce", dir / "b.jsonl");
    CHECK(slurp(dir / "a.lce") == slurp(dir / "b.lce"));
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    CHECK(back.tokens() == ds.tokens());
    CHECK(std::memcmp(back.vectors().data(), ds.vectors().data(), values.size() * 4) == 0);
}

TEST_CASE("token lines accept a missing span and a null label") {
    TempDir dir;
    spit(dir / "e.lce", lce(2, 1, 0, {1, 2}));
    spit(dir / "t.jsonl", "{\"id\":0,\"sent\":0,\"pos\":0,\"word\":\"x\",\"label\":null}\n"
                          "{\"id\":1,\"sent\":0,\"pos\":1,\"word\":\"y\",\"label\":\"N\",\"span\":3}\n");
    const auto ds = load_dataset(dir / "e.lce", dir / "t.jsonl");
    CHECK_FALSE(ds.token(0).label.has_value());
    CHECK(ds.token(0).span_len == 1);
    CHECK(ds.token(1).span_len == 3);
}

TEST_CASE("load rejects malformed inputs") {
    TempDir dir;
    spit(dir / "t3.jsonl", token_lines(3));
    spit(dir / "t2.jsonl", token_lines(2));

    SUBCASE("bad magic") {
        auto bytes = lce(3, 2, 0, std::vector<float>(6, 0.0f));
        bytes[3] = '2';
        spit(dir / "e.lce", bytes);
        CHECK(error_of([&] { load_dataset(dir / "e.lce", dir / "t3.jsonl"); }).find("malformed header") == 0);
    }
    SUBCASE("short header") {
        spit(dir / "e.lce", "LCE1\x03");
        CHECK(error_of([&] { load_dataset(dir / "e.lce", dir / "t3.jsonl"); }).find("malformed header") == 0);
    }
    SUBCASE("payload shorter than N x D") {
        spit(dir / "e.lce", lce(3, 2, 0, std::vector<float>(5, 0.0f)));
        CHECK(error_of([&] { load_dataset(dir / "e.lce", dir / "t3.jsonl"); }).find("N/D mismatch") == 0);
    }
    SUBCASE("fewer token lines than rows") {
        spit(dir / "e.lce", lce(3, 2, 0, std::vector<float>(6, 0.0f)));
        CHECK(error_of([&] { load_dataset(dir / "e.lce", dir / "t2.jsonl"); }).find("token count mismatch") !=
              std::string::npos);
    }
    SUBCASE("NaN names its row") {
        std::vector<float> v(20, 0.0f);
        v[15] = std::numeric_limits<float>::quiet_NaN();
        spit(dir / "e.lce", lce(10, 2, 0, v));
        spit(dir / "t10.jsonl", token_lines(10));
        const auto msg = error_of([&] { load_dataset(dir / "e.lce", dir / "t10.jsonl"); });
        CHECK(msg.find("row 7") != std::string::npos);
    }
    SUBCASE("id out of position") {
        spit(dir / "e.lce", lce(2, 1, 0, {1, 2}));
        spit(dir / "t.jsonl", "{\"id\":1,\"sent\":0,\"pos\":0,\"word\":\"x\",\"label\":null}\n"
                              "{\"id\":0,\"sent\":0,\"pos\":1,\"word\":\"y\",\"label\":null}\n");
        CHECK_THROWS_AS(load_dataset(dir / "e.lce", dir / "t.jsonl"), Error);
    }
    SUBCASE("empty surface") {
        spit(dir / "e.lce", lce(1, 1, 0, {1}));
        spit(dir / "t.jsonl", "{\"id\":0,\"sent\":0,\"pos\":0,\"word\":\"\",\"label\":null}\n");
        CHECK_THROWS_AS(load_dataset(dir / "e.lce", dir / "t.jsonl"), Error);
    }
    SUBCASE("span zero") {
        spit(dir / "e.lce", lce(1, 1, 0, {1}));
        spit(dir / "t.jsonl", "{\"id\":0,\"sent\":0,\"pos\":0,\"word\":\"a\",\"label\":null,\"span\":0}\n");
        CHECK_THROWS_AS(load_dataset(dir / "e.lce", dir / "t.jsonl"), Error);
    }
    SUBCASE("not json") {
        spit(dir / "e.lce", lce(1, 1, 0, {1}));
        spit(dir / "t.jsonl", "{id:0}\n");
        CHECK_THROWS_AS(load_dataset(dir / "e.lce", dir / "t.jsonl"), Error);
    }
    SUBCASE("missing file is an io error") {
        try {
            load_dataset(dir / "nope.lce", dir / "t3.jsonl");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Io);
        }
    }
}

TEST_CASE("ontology groups token ids by label") {
    const auto ds = make_dataset({{0}, {1}, {2}}, {"a", "b", "c"}, {"VBD", "VBD", "NNS"});
    const auto ont = build_ontology(ds);
    CHECK(ont.label_count() == 2);
    CHECK(ont.concepts.at("VBD") == std::vector<std::uint32_t>{0, 1});
    CHECK(ont.concepts.at("NNS") == std::vector<std::uint32_t>{2});

    const auto abab = build_ontology(make_dataset({{0}, {1}, {2}, {3}}, {"a", "b", "c", "d"}, {"A", "B", "A", "B"}));
    CHECK(abab.concepts.at("A").size() == 2);
    CHECK(abab.concepts.at("B").size() == 2);

    CHECK_THROWS_AS(build_ontology(make_dataset({{0}, {1}})), Error);
}

TEST_CASE("ontology sizes sum to the labelled token count") {
    std::vector<std::optional<std::string>> labels;
    std::vector<std::vector<float>> rows;
    std::size_t labelled = 0;
    for (int i = 0; i < 200; ++i) {
        rows.push_back({static_cast<float>(i)});
        if (i % 7 == 3) {
            labels.push_back(std::nullopt);
        } else {
            labels.push_back("L" + std::to_string(i % 11));
            ++labelled;
        }
    }
    const auto ont = build_ontology(make_dataset(rows, {}, labels));
    std::size_t total = 0;
    for (const auto& [label, ids] : ont.concepts) total += ids.size();
    CHECK(total == labelled);
}

TEST_CASE("frequency filter keeps rows whose surface count is in range") {
    const auto ds = make_dataset({{0}, {1}, {2}}, {"a", "a", "b"}, {"X", "Y", "Z"});
    const auto kept = frequency_filter(ds, 2, 10);
    REQUIRE(kept.n_points() == 2);
    CHECK(kept.token(0).surface == "a");
    CHECK(kept.token(1).id == 1);
    CHECK(kept.token(1).label == std::optional<std::string>("Y"));
    CHECK(kept.row(1)[0] == 1.0f);

    const auto same = frequency_filter(ds, 1, kUnboundedOccurrences);
    CHECK(same.tokens() == ds.tokens());

    // Bounds are inclusive on both sides.
    CHECK(frequency_filter(ds, 1, 1).n_points() == 1);
    CHECK(frequency_filter(ds, 2, 2).n_points() == 2);
    CHECK_THROWS_AS(frequency_filter(ds, 3, 1), Error);
}

TEST_CASE("frequency filter that removes everything is an error") {
    std::vector<std::vector<float>> rows;
    std::vector<std::string> words;
    for (int w = 0; w < 100; ++w)
        for (int r = 0; r < 4; ++r) {
            rows.push_back({static_cast<float>(w)});
            words.push_back("s" + std::to_string(w));
        }
    const auto ds = make_dataset(rows, words);
    const auto msg = error_of([&] { frequency_filter(ds, 5, 1000); });
    CHECK(msg.find("empty result") != std::string::npos);
}

TEST_CASE("surface counting is case sensitive") {
    const auto ds = make_dataset({{0}, {1}, {2}}, {"Apple", "apple", "apple"});
    CHECK(frequency_filter(ds, 2, 2).n_points() == 2);
}

TEST_CASE("token-only datasets carry annotations without vectors") {
    TempDir dir;
    spit(dir / "t.jsonl", token_lines(4));
    const auto ds = load_tokens_only(dir / "t.jsonl");
    CHECK(ds.n_points() == 4);
    CHECK_FALSE(ds.has_vectors());
    CHECK(build_ontology(ds).label_count() == 1);
}
