#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include <lcd/lcd.h>

#include "support.hpp"

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    lcd_string_free(s);
    return out;
}

lcd_dataset* synth(std::size_t n, std::size_t components, double phrasal = 0.0, std::size_t* spans = nullptr) {
    lcd_synth_config cfg;
    lcd_synth_config_default(&cfg);
    cfg.n_points = n;
    cfg.dim = 8;
    cfg.n_components = components;
    cfg.separation = 50.0;
    cfg.phrasal_fraction = phrasal;
    lcd_dataset* ds = nullptr;
    REQUIRE(lcd_synth_generate(&cfg, &ds, spans) == LCD_OK);
    return ds;
}

}  // namespace

TEST_CASE("version and method names") {
    CHECK(std::strlen(lcd_version()) > 0);
    CHECK(std::string(lcd_method_name(LCD_METHOD_LEADERS)) == "leaders");
    lcd_method m;
    CHECK(lcd_parse_method("agglomerative", &m) == LCD_OK);
    CHECK(m == LCD_METHOD_AGGLOMERATIVE);
    CHECK(lcd_parse_method("dbscan", &m) == LCD_E_VALIDATION);
    CHECK(std::string(lcd_last_error()).find("dbscan") != std::string::npos);
}

TEST_CASE("null arguments are validation errors") {
    lcd_dataset* ds = nullptr;
    CHECK(lcd_dataset_load(nullptr, nullptr, &ds) == LCD_E_VALIDATION);
    CHECK(lcd_kmeans_fit(nullptr, nullptr, nullptr) == LCD_E_VALIDATION);
    CHECK(std::strlen(lcd_last_error()) > 0);
    lcd_dataset_free(nullptr);
    lcd_assignment_free(nullptr);
    lcd_string_free(nullptr);
}

TEST_CASE("missing files are io errors") {
    lcd_dataset* ds = nullptr;
    CHECK(lcd_dataset_load("/nonexistent/e.bin", "/nonexistent/t.jsonl", &ds) == LCD_E_IO);
    CHECK(ds == nullptr);
    char hex[65];
    CHECK(lcd_sha256_file("/nonexistent/x", hex) == LCD_E_IO);
}

TEST_CASE("full pipeline through the handles") {
    std::size_t spans[6] = {};
    lcd_dataset* ds = synth(3000, 10, 0.1, spans);
    std::size_t n = 0, dim = 0;
    uint32_t layer = 99;
    REQUIRE(lcd_dataset_info(ds, &n, &dim, &layer) == LCD_OK);
    CHECK(n == 3000);
    CHECK(dim == 8);
    CHECK(spans[2] + spans[3] + spans[4] + spans[5] == 300);

    lcd_kmeans_config km;
    lcd_kmeans_config_default(&km);
    km.k = 10;
    km.restarts = 2;
    lcd_assignment* a = nullptr;
    REQUIRE(lcd_kmeans_fit(ds, &km, &a) == LCD_OK);
    std::size_t an = 0, ak = 0, iters = 0;
    double inertia = -1;
    REQUIRE(lcd_assignment_info(a, &an, &ak, &inertia, &iters) == LCD_OK);
    CHECK(an == 3000);
    CHECK(ak == 10);
    CHECK(inertia > 0);
    const int32_t* labels = nullptr;
    REQUIRE(lcd_assignment_labels(a, &labels) == LCD_OK);
    CHECK(labels[0] >= 0);

    lcd_concepts* cs = nullptr;
    REQUIRE(lcd_concepts_build(a, ds, &cs) == LCD_OK);
    CHECK(lcd_concepts_count(cs) == 10);
    lcd_concepts* kept = nullptr;
    REQUIRE(lcd_concepts_filter(cs, 5, &kept) == LCD_OK);
    lcd_ontology* ont = nullptr;
    REQUIRE(lcd_ontology_build(ds, &ont) == LCD_OK);
    CHECK(lcd_ontology_label_count(ont) == 10);

    lcd_report* r = nullptr;
    REQUIRE(lcd_evaluate(kept, ont, "0.95", LCD_COVERAGE_ENCODED, ds, &r) == LCD_OK);
    uint64_t lam[2];
    REQUIRE(lcd_report_fractions(r, nullptr, nullptr, lam) == LCD_OK);
    CHECK(lam[0] == lam[1]);
    char* json = nullptr;
    REQUIRE(lcd_report_json(r, 1, &json) == LCD_OK);
    CHECK(take(json).find("per_label_aligned_counts") != std::string::npos);
    char* table = nullptr;
    REQUIRE(lcd_report_table(r, 0, &table) == LCD_OK);
    CHECK(take(table).find("Align. %") != std::string::npos);
    lcd_report* bad = nullptr;
    CHECK(lcd_evaluate(kept, ont, "1.5", LCD_COVERAGE_ENCODED, ds, &bad) == LCD_E_VALIDATION);

    char* phrasal = nullptr;
    REQUIRE(lcd_concepts_phrasal_json(cs, ds, &phrasal) == LCD_OK);
    CHECK(take(phrasal).find("\"2\":" + std::to_string(spans[2])) != std::string::npos);
    char* hist = nullptr;
    REQUIRE(lcd_concepts_histogram_json(cs, 10, &hist) == LCD_OK);
    CHECK(take(hist).find("median") != std::string::npos);

    testing_support::TempDir dir;
    const auto path = (dir / "a.json").string();
    REQUIRE(lcd_assignment_save(a, path.c_str()) == LCD_OK);
    lcd_assignment* back = nullptr;
    REQUIRE(lcd_assignment_load(path.c_str(), &back) == LCD_OK);
    CHECK(lcd_assignment_hash(back) == lcd_assignment_hash(a));
    char hex[65];
    REQUIRE(lcd_sha256_file(path.c_str(), hex) == LCD_OK);
    CHECK(std::strlen(hex) == 64);

    lcd_assignment_free(back);
    lcd_report_free(r);
    lcd_ontology_free(ont);
    lcd_concepts_free(kept);
    lcd_concepts_free(cs);
    lcd_assignment_free(a);
    lcd_dataset_free(ds);
}

TEST_CASE("budget refusals carry their own code") {
    lcd_dataset* ds = synth(500, 5);
    lcd_assignment* a = nullptr;
    CHECK(lcd_agglomerative_fit(ds, 5, 1000, nullptr, &a) == LCD_E_BUDGET);
    CHECK(a == nullptr);
    CHECK(std::string(lcd_last_error()).find(std::to_string(lcd_ward_required_bytes(500))) != std::string::npos);
    REQUIRE(lcd_agglomerative_fit(ds, 5, lcd_ward_required_bytes(500), nullptr, &a) == LCD_OK);
    lcd_assignment_free(a);

    uint64_t bytes = 0;
    CHECK(lcd_parse_byte_size("2G", &bytes) == LCD_OK);
    CHECK(bytes == (2ULL << 30));
    CHECK(lcd_parse_byte_size("two", &bytes) == LCD_E_VALIDATION);
    lcd_dataset_free(ds);
}

TEST_CASE("leaders with compression output") {
    lcd_dataset* ds = synth(2000, 8);
    lcd_leaders_config cfg;
    lcd_leaders_config_default(&cfg);
    cfg.k = 8;
    cfg.target_m = 200;
    lcd_assignment* a = nullptr;
    lcd_compression* comp = nullptr;
    REQUIRE(lcd_leaders_fit(ds, &cfg, 1ULL << 30, &a, &comp) == LCD_OK);
    double tau = 0;
    std::size_t m = 0;
    REQUIRE(lcd_compression_info(comp, &tau, &m) == LCD_OK);
    CHECK(tau > 0);
    CHECK(m >= 190);
    CHECK(m <= 210);
    cfg.k = 5000;
    lcd_assignment* b = nullptr;
    CHECK(lcd_leaders_fit(ds, &cfg, 1ULL << 30, &b, nullptr) == LCD_E_VALIDATION);
    lcd_compression_free(comp);
    lcd_assignment_free(a);
    lcd_dataset_free(ds);
}

TEST_CASE("bench through the handles") {
    lcd_dataset* ds = synth(1000, 10);
    lcd_bench_config cfg;
    lcd_bench_config_default(&cfg);
    cfg.k = 10;
    cfg.kmeans_restarts = 1;
    lcd_bench_record rec;
    REQUIRE(lcd_bench_run(ds, LCD_METHOD_KMEANS, &cfg, &rec) == LCD_OK);
    CHECK(std::string(rec.status) == "ok");
    CHECK(rec.peak_mem_bytes > 0);
    char* row = nullptr;
    REQUIRE(lcd_bench_csv_row(&rec, &row) == LCD_OK);
    CHECK(take(row).rfind("kmeans,1000,", 0) == 0);
    double slope = 0;
    const double x[3] = {1, 2, 4}, y[3] = {1, 4, 16};
    REQUIRE(lcd_fit_log_slope(x, y, 3, &slope) == LCD_OK);
    CHECK(slope == doctest::Approx(2.0));
    char* host = nullptr;
    REQUIRE(lcd_host_fingerprint(&host) == LCD_OK);
    CHECK_FALSE(take(host).empty());
    lcd_dataset_free(ds);
}
