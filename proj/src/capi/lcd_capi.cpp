#include "lcd/lcd.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>

#include "agglomerative.hpp"
#include "alignment.hpp"
#include "bench.hpp"
#include "concepts.hpp"
#include "dataset.hpp"
#include "digest.hpp"
#include "error.hpp"
#include "kmeans.hpp"
#include "leaders.hpp"
#include "parallel.hpp"
#include "synth.hpp"

struct lcd_dataset {
    lcd::EmbeddingDataset value;
};
struct lcd_assignment {
    lcd::ClusterAssignment value;
};
struct lcd_compression {
    lcd::LeadersCompression value;
};
struct lcd_concepts {
    lcd::ConceptSet value;
};
struct lcd_ontology {
    lcd::HumanOntology value;
};
struct lcd_report {
    lcd::AlignmentReport value;
    std::map<std::string, std::size_t> breakdown;
};

namespace {

thread_local std::string last_error;

template <class F>
lcd_status guarded(F&& body) {
    try {
        last_error.clear();
        body();
        return LCD_OK;
    } catch (const lcd::Error& e) {
        last_error = e.what();
        switch (e.kind()) {
            case lcd::ErrorKind::Validation: return LCD_E_VALIDATION;
            case lcd::ErrorKind::Io: return LCD_E_IO;
            case lcd::ErrorKind::Budget: return LCD_E_BUDGET;
            case lcd::ErrorKind::Internal: return LCD_E_INTERNAL;
        }
        return LCD_E_INTERNAL;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return LCD_E_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return LCD_E_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return LCD_E_INTERNAL;
    }
}

template <class T>
const T& need(const T* p, const char* what) {
    if (p == nullptr) lcd::fail(std::string(what) + " is null");
    return *p;
}

const char* need(const char* p, const char* what) {
    if (p == nullptr) lcd::fail(std::string(what) + " is null");
    return p;
}

void need_out(const void* p) {
    if (p == nullptr) lcd::fail("output pointer is null");
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

lcd::Method to_method(lcd_method m) {
    switch (m) {
        case LCD_METHOD_KMEANS: return lcd::Method::KMeans;
        case LCD_METHOD_AGGLOMERATIVE: return lcd::Method::Agglomerative;
        case LCD_METHOD_LEADERS: return lcd::Method::Leaders;
    }
    lcd::fail("unknown method");
}

lcd_method from_method(lcd::Method m) {
    switch (m) {
        case lcd::Method::KMeans: return LCD_METHOD_KMEANS;
        case lcd::Method::Agglomerative: return LCD_METHOD_AGGLOMERATIVE;
        case lcd::Method::Leaders: return LCD_METHOD_LEADERS;
    }
    return LCD_METHOD_KMEANS;
}

lcd::KMeansInit to_init(lcd_kmeans_init init) {
    return init == LCD_INIT_SAMPLED ? lcd::KMeansInit::Sampled : lcd::KMeansInit::PlusPlus;
}

lcd::SynthConfig to_synth(const lcd_synth_config& c) {
    lcd::SynthConfig s;
    s.n_points = c.n_points;
    s.dim = c.dim;
    s.n_components = c.n_components;
    s.separation = c.separation;
    s.label_skew = c.label_skew;
    s.phrasal_fraction = c.phrasal_fraction;
    s.seed = c.seed;
    s.layer_id = c.layer_id;
    return s;
}

lcd::BenchConfig to_bench(const lcd_bench_config& c) {
    lcd::BenchConfig b;
    b.k = c.k;
    b.kmeans.restarts = c.kmeans_restarts;
    b.kmeans.seed = c.kmeans_seed;
    b.kmeans.init = to_init(c.kmeans_init);
    b.leaders.target_m = c.leaders_target_m;
    b.leaders.seed = c.leaders_seed;
    b.leaders.exact = c.leaders_exact != 0;
    b.memory_budget = c.memory_budget;
    return b;
}

void to_record(const lcd::BenchRecord& r, lcd_bench_record* out) {
    std::memset(out, 0, sizeof *out);
    out->method = from_method(r.method);
    out->n_points = r.n;
    out->dim = r.dim;
    out->k = r.k;
    out->seed = r.seed;
    out->runtime_user_sys_s = r.runtime_user_sys_s;
    out->runtime_wall_s = r.runtime_wall_s;
    out->peak_mem_bytes = r.peak_mem_bytes;
    std::strncpy(out->status, r.status.c_str(), sizeof out->status - 1);
    out->assignment_hash = r.assignment_hash;
    out->tau = r.tau;
    out->leaders = r.leaders;
}

lcd::BenchRecord from_record(const lcd_bench_record& r) {
    lcd::BenchRecord b;
    b.method = to_method(r.method);
    b.n = r.n_points;
    b.dim = r.dim;
    b.k = r.k;
    b.seed = r.seed;
    b.runtime_user_sys_s = r.runtime_user_sys_s;
    b.runtime_wall_s = r.runtime_wall_s;
    b.peak_mem_bytes = r.peak_mem_bytes;
    b.status = std::string(r.status, strnlen(r.status, sizeof r.status));
    return b;
}

}  // namespace

extern "C" {

const char* lcd_version(void) { return "1.0.0"; }

const char* lcd_last_error(void) { return last_error.c_str(); }

void lcd_string_free(char* s) { std::free(s); }

void lcd_set_threads(unsigned threads) { lcd::set_max_threads(threads); }

const char* lcd_method_name(lcd_method method) {
    switch (method) {
        case LCD_METHOD_KMEANS: return "kmeans";
        case LCD_METHOD_AGGLOMERATIVE: return "agglomerative";
        case LCD_METHOD_LEADERS: return "leaders";
    }
    return "unknown";
}

lcd_status lcd_parse_method(const char* name, lcd_method* out) {
    return guarded([&] {
        need_out(out);
        *out = from_method(lcd::parse_method(need(name, "method name")));
    });
}

lcd_status lcd_dataset_load(const char* embedding_path, const char* tokens_path, lcd_dataset** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_dataset{lcd::load_dataset(need(embedding_path, "embedding path"), need(tokens_path, "tokens path"))};
    });
}

lcd_status lcd_dataset_load_tokens(const char* tokens_path, lcd_dataset** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_dataset{lcd::load_tokens_only(need(tokens_path, "tokens path"))};
    });
}

lcd_status lcd_dataset_save(const lcd_dataset* ds, const char* embedding_path, const char* tokens_path) {
    return guarded([&] {
        lcd::save_dataset(need(ds, "dataset").value, need(embedding_path, "embedding path"),
                          need(tokens_path, "tokens path"));
    });
}

lcd_status lcd_dataset_info(const lcd_dataset* ds, size_t* n_points, size_t* dim, uint32_t* layer_id) {
    return guarded([&] {
        const auto& d = need(ds, "dataset").value;
        if (n_points) *n_points = d.n_points();
        if (dim) *dim = d.dim();
        if (layer_id) *layer_id = d.layer_id();
    });
}

lcd_status lcd_dataset_filter(const lcd_dataset* ds, uint64_t min_occ, uint64_t max_occ, lcd_dataset** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_dataset{lcd::frequency_filter(need(ds, "dataset").value, min_occ, max_occ)};
    });
}

void lcd_dataset_free(lcd_dataset* ds) { delete ds; }

void lcd_synth_config_default(lcd_synth_config* cfg) {
    if (cfg == nullptr) return;
    const lcd::SynthConfig d;
    cfg->n_points = d.n_points;
    cfg->dim = d.dim;
    cfg->n_components = d.n_components;
    cfg->separation = d.separation;
    cfg->label_skew = d.label_skew;
    cfg->phrasal_fraction = d.phrasal_fraction;
    cfg->seed = d.seed;
    cfg->layer_id = d.layer_id;
}

lcd_status lcd_synth_generate(const lcd_synth_config* cfg, lcd_dataset** out, size_t planted_spans[6]) {
    return guarded([&] {
        need_out(out);
        auto data = lcd::generate(to_synth(need(cfg, "config")));
        if (planted_spans)
            for (std::size_t i = 0; i < 6; ++i) planted_spans[i] = data.planted_spans[i];
        *out = new lcd_dataset{std::move(data.dataset)};
    });
}

void lcd_kmeans_config_default(lcd_kmeans_config* cfg) {
    if (cfg == nullptr) return;
    const lcd::KMeansConfig d;
    cfg->k = d.k;
    cfg->restarts = d.restarts;
    cfg->max_iter = d.max_iter;
    cfg->rel_tol = d.rel_tol;
    cfg->seed = d.seed;
    cfg->init = d.init == lcd::KMeansInit::Sampled ? LCD_INIT_SAMPLED : LCD_INIT_PLUSPLUS;
}

void lcd_leaders_config_default(lcd_leaders_config* cfg) {
    if (cfg == nullptr) return;
    const lcd::TauSearchConfig d;
    cfg->k = 600;
    cfg->target_m = 0;
    cfg->rel_band = d.rel_band;
    cfg->max_probes = d.max_probes;
    cfg->seed = d.seed;
    cfg->exact = d.exact ? 1 : 0;
}

uint64_t lcd_memory_budget_default(void) {
    try {
        return lcd::default_memory_budget();
    } catch (...) {
        return 0;
    }
}

lcd_status lcd_parse_byte_size(const char* text, uint64_t* out) {
    return guarded([&] {
        need_out(out);
        *out = lcd::parse_byte_size(need(text, "size"));
    });
}

uint64_t lcd_ward_required_bytes(size_t n_points) { return lcd::ward_required_bytes(n_points); }

lcd_status lcd_kmeans_fit(const lcd_dataset* ds, const lcd_kmeans_config* cfg, lcd_assignment** out) {
    return guarded([&] {
        need_out(out);
        const auto& c = need(cfg, "config");
        lcd::KMeansConfig k;
        k.k = c.k;
        k.restarts = c.restarts;
        k.max_iter = c.max_iter;
        k.rel_tol = c.rel_tol;
        k.seed = c.seed;
        k.init = to_init(c.init);
        *out = new lcd_assignment{lcd::kmeans_fit(need(ds, "dataset").value, k)};
    });
}

lcd_status lcd_agglomerative_fit(const lcd_dataset* ds, size_t k, uint64_t memory_budget, const char* dendrogram_path,
                                 lcd_assignment** out) {
    return guarded([&] {
        need_out(out);
        const auto dg = lcd::ward_fit(need(ds, "dataset").value, memory_budget);
        auto a = lcd::cut_tree(dg, k);
        if (dendrogram_path) lcd::save_dendrogram(dg, dendrogram_path);
        *out = new lcd_assignment{std::move(a)};
    });
}

lcd_status lcd_leaders_fit(const lcd_dataset* ds, const lcd_leaders_config* cfg, uint64_t memory_budget,
                           lcd_assignment** out, lcd_compression** compression) {
    return guarded([&] {
        need_out(out);
        const auto& c = need(cfg, "config");
        const auto& d = need(ds, "dataset").value;
        lcd::TauSearchConfig t;
        t.target_m = c.target_m != 0 ? c.target_m : std::max<std::size_t>(c.k, d.n_points() / 4);
        t.rel_band = c.rel_band;
        t.max_probes = c.max_probes;
        t.seed = c.seed;
        t.exact = c.exact != 0;
        lcd::LeadersCompression comp;
        auto a = lcd::leaders_cluster(d, t, c.k, memory_budget, 0, &comp);
        if (compression) *compression = new lcd_compression{std::move(comp)};
        *out = new lcd_assignment{std::move(a)};
    });
}

lcd_status lcd_compression_info(const lcd_compression* comp, double* tau, size_t* m) {
    return guarded([&] {
        const auto& c = need(comp, "compression").value;
        if (tau) *tau = c.tau;
        if (m) *m = c.m();
    });
}

lcd_status lcd_compression_save(const lcd_compression* comp, const char* path) {
    return guarded([&] { lcd::save_compression(need(comp, "compression").value, need(path, "path")); });
}

void lcd_compression_free(lcd_compression* comp) { delete comp; }

lcd_status lcd_assignment_load(const char* path, lcd_assignment** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_assignment{lcd::load_assignment(need(path, "path"))};
    });
}

lcd_status lcd_assignment_save(const lcd_assignment* a, const char* path) {
    return guarded([&] { lcd::save_assignment(need(a, "assignment").value, need(path, "path")); });
}

lcd_status lcd_assignment_info(const lcd_assignment* a, size_t* n_points, size_t* k, double* inertia,
                               size_t* iterations_run) {
    return guarded([&] {
        const auto& v = need(a, "assignment").value;
        if (n_points) *n_points = v.size();
        if (k) *k = v.k;
        if (inertia) *inertia = v.inertia;
        if (iterations_run) *iterations_run = v.iterations_run;
    });
}

lcd_status lcd_assignment_labels(const lcd_assignment* a, const int32_t** labels) {
    return guarded([&] {
        need_out(labels);
        *labels = need(a, "assignment").value.labels.data();
    });
}

uint64_t lcd_assignment_hash(const lcd_assignment* a) { return a ? lcd::assignment_hash(a->value) : 0; }

void lcd_assignment_free(lcd_assignment* a) { delete a; }

lcd_status lcd_concepts_build(const lcd_assignment* a, const lcd_dataset* ds, lcd_concepts** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_concepts{lcd::build_concepts(need(a, "assignment").value, need(ds, "dataset").value)};
    });
}

lcd_status lcd_concepts_filter(const lcd_concepts* cs, size_t min_types, lcd_concepts** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_concepts{lcd::filter_concepts(need(cs, "concepts").value, min_types)};
    });
}

lcd_status lcd_concepts_load(const char* path, const lcd_dataset* ds, lcd_concepts** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_concepts{lcd::load_concepts(need(path, "path"), need(ds, "dataset").value)};
    });
}

lcd_status lcd_concepts_save(const lcd_concepts* cs, const char* path) {
    return guarded([&] { lcd::save_concepts(need(cs, "concepts").value, need(path, "path")); });
}

size_t lcd_concepts_count(const lcd_concepts* cs) { return cs ? cs->value.concepts.size() : 0; }

lcd_status lcd_concepts_listing(const lcd_concepts* cs, const lcd_dataset* ds, size_t top, char** out) {
    return guarded([&] {
        need_out(out);
        *out = copy_string(lcd::concept_listing(need(cs, "concepts").value, need(ds, "dataset").value, top));
    });
}

lcd_status lcd_concepts_histogram_json(const lcd_concepts* cs, size_t bin_width, char** out) {
    return guarded([&] {
        need_out(out);
        *out = copy_string(lcd::histogram_to_json(lcd::size_histogram(need(cs, "concepts").value, bin_width)));
    });
}

lcd_status lcd_concepts_phrasal_json(const lcd_concepts* cs, const lcd_dataset* ds, char** out) {
    return guarded([&] {
        need_out(out);
        *out = copy_string(lcd::phrasal_to_json(lcd::phrasal_counts(need(cs, "concepts").value, need(ds, "dataset").value)));
    });
}

void lcd_concepts_free(lcd_concepts* cs) { delete cs; }

lcd_status lcd_ontology_build(const lcd_dataset* ds, lcd_ontology** out) {
    return guarded([&] {
        need_out(out);
        *out = new lcd_ontology{lcd::build_ontology(need(ds, "dataset").value)};
    });
}

size_t lcd_ontology_label_count(const lcd_ontology* ont) { return ont ? ont->value.label_count() : 0; }

void lcd_ontology_free(lcd_ontology* ont) { delete ont; }

lcd_status lcd_evaluate(const lcd_concepts* cs, const lcd_ontology* ont, const char* theta, lcd_coverage_rule rule,
                        const lcd_dataset* ds, lcd_report** out) {
    return guarded([&] {
        need_out(out);
        const auto t = lcd::Theta::parse(need(theta, "theta"));
        const auto& o = need(ont, "ontology").value;
        auto report = lcd::theta_alignment(need(cs, "concepts").value, o, t,
                                           rule == LCD_COVERAGE_HUMAN ? lcd::CoverageDenominator::Human
                                                                      : lcd::CoverageDenominator::Encoded);
        if (ds) {
            report.layer_id = ds->value.layer_id();
            report.n_points = ds->value.n_points();
        }
        auto breakdown = lcd::per_label_breakdown(report, o);
        *out = new lcd_report{std::move(report), std::move(breakdown)};
    });
}

lcd_status lcd_report_fractions(const lcd_report* r, uint64_t alignment[2], uint64_t coverage[2], uint64_t lambda[2]) {
    return guarded([&] {
        const auto& v = need(r, "report").value;
        if (alignment) {
            alignment[0] = v.alignment.num;
            alignment[1] = v.alignment.den;
        }
        if (coverage) {
            coverage[0] = v.coverage.num;
            coverage[1] = v.coverage.den;
        }
        if (lambda) {
            lambda[0] = v.lambda.num;
            lambda[1] = v.lambda.den;
        }
    });
}

lcd_status lcd_report_json(const lcd_report* r, int breakdown, char** out) {
    return guarded([&] {
        need_out(out);
        const auto& rep = need(r, "report");
        *out = copy_string(lcd::report_to_json(rep.value, breakdown ? &rep.breakdown : nullptr));
    });
}

lcd_status lcd_report_table(const lcd_report* r, int breakdown, char** out) {
    return guarded([&] {
        need_out(out);
        const auto& rep = need(r, "report");
        *out = copy_string(lcd::report_table(rep.value, breakdown ? &rep.breakdown : nullptr));
    });
}

void lcd_report_free(lcd_report* r) { delete r; }

void lcd_bench_config_default(lcd_bench_config* cfg) {
    if (cfg == nullptr) return;
    const lcd::BenchConfig d;
    cfg->k = d.k;
    cfg->kmeans_restarts = d.kmeans.restarts;
    cfg->kmeans_seed = d.kmeans.seed;
    cfg->kmeans_init = d.kmeans.init == lcd::KMeansInit::Sampled ? LCD_INIT_SAMPLED : LCD_INIT_PLUSPLUS;
    cfg->leaders_target_m = d.leaders.target_m;
    cfg->leaders_seed = d.leaders.seed;
    cfg->leaders_exact = d.leaders.exact ? 1 : 0;
    cfg->memory_budget = d.memory_budget;
}

lcd_status lcd_bench_run(const lcd_dataset* ds, lcd_method method, const lcd_bench_config* cfg,
                         lcd_bench_record* out) {
    return guarded([&] {
        need_out(out);
        const auto rec = lcd::run_bench(need(ds, "dataset").value, to_method(method), to_bench(need(cfg, "config")));
        to_record(rec, out);
    });
}

lcd_status lcd_bench_sweep(const lcd_synth_config* generator, const lcd_method* methods, size_t n_methods,
                           const size_t* sizes, size_t n_sizes, const lcd_bench_config* cfg, char** csv,
                           char** exponents_json) {
    return guarded([&] {
        need_out(csv);
        need_out(exponents_json);
        if (n_methods == 0 || methods == nullptr) lcd::fail("no methods given");
        if (sizes == nullptr) lcd::fail("no sizes given");
        std::vector<lcd::Method> ms;
        for (std::size_t i = 0; i < n_methods; ++i) ms.push_back(to_method(methods[i]));
        const std::vector<std::size_t> ns(sizes, sizes + n_sizes);
        const auto result = lcd::scaling_sweep(to_synth(need(generator, "generator")), ms, ns, to_bench(need(cfg, "config")));
        std::string table = lcd::bench_csv_header() + "\n";
        for (const auto& r : result.records) table += lcd::bench_csv_row(r) + "\n";
        std::string exps = "{";
        bool first = true;
        for (const auto& [m, e] : result.exponents) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%s\"%s\": %.4f", first ? "" : ", ", std::string(lcd::method_name(m)).c_str(), e);
            exps += buf;
            first = false;
        }
        exps += "}";
        char* c = copy_string(table);
        try {
            *exponents_json = copy_string(exps);
        } catch (...) {
            std::free(c);
            throw;
        }
        *csv = c;
    });
}

lcd_status lcd_fit_log_slope(const double* x, const double* y, size_t n, double* slope) {
    return guarded([&] {
        need_out(slope);
        if (n > 0 && (x == nullptr || y == nullptr)) lcd::fail("sample arrays are null");
        *slope = lcd::fit_log_slope(std::vector<double>(x, x + n), std::vector<double>(y, y + n));
    });
}

const char* lcd_bench_csv_header(void) {
    static const std::string header = lcd::bench_csv_header();
    return header.c_str();
}

lcd_status lcd_bench_csv_row(const lcd_bench_record* r, char** out) {
    return guarded([&] {
        need_out(out);
        *out = copy_string(lcd::bench_csv_row(from_record(need(r, "record"))));
    });
}

lcd_status lcd_host_fingerprint(char** out) {
    return guarded([&] {
        need_out(out);
        *out = copy_string(lcd::host_fingerprint());
    });
}

lcd_status lcd_sha256_file(const char* path, char out[65]) {
    return guarded([&] {
        need_out(out);
        const auto hex = lcd::sha256_file(need(path, "path"));
        std::memcpy(out, hex.c_str(), 65);
    });
}

}  // extern "C"
