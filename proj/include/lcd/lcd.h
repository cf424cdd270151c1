/* Latent concept discovery: clustering of contextual embeddings and
 * alignment of the resulting clusters with annotation labels.
 *
 * Every function returns an lcd_status. On failure the message is available
 * from lcd_last_error() on the calling thread until the next call. Objects are
 * opaque and released with the matching *_free function. Strings returned
 * through char** are released with lcd_string_free.
 */
#ifndef LCD_LCD_H
#define LCD_LCD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef LCD_BUILDING
#    define LCD_API __declspec(dllexport)
#  else
#    define LCD_API __declspec(dllimport)
#  endif
#else
#  define LCD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lcd_status {
    LCD_OK = 0,
    LCD_E_VALIDATION = 1, /* malformed input or bad argument */
    LCD_E_IO = 2,         /* file could not be read or written */
    LCD_E_BUDGET = 3,     /* refused by the memory budget */
    LCD_E_INTERNAL = 4
} lcd_status;

typedef enum lcd_method {
    LCD_METHOD_KMEANS = 0,
    LCD_METHOD_AGGLOMERATIVE = 1,
    LCD_METHOD_LEADERS = 2
} lcd_method;

typedef enum lcd_kmeans_init {
    LCD_INIT_SAMPLED = 0,
    LCD_INIT_PLUSPLUS = 1
} lcd_kmeans_init;

typedef enum lcd_coverage_rule {
    LCD_COVERAGE_ENCODED = 0, /* overlap / |encoded concept| */
    LCD_COVERAGE_HUMAN = 1    /* overlap / |label occurrences| */
} lcd_coverage_rule;

typedef struct lcd_dataset lcd_dataset;
typedef struct lcd_assignment lcd_assignment;
typedef struct lcd_compression lcd_compression;
typedef struct lcd_concepts lcd_concepts;
typedef struct lcd_ontology lcd_ontology;
typedef struct lcd_report lcd_report;

LCD_API const char* lcd_version(void);
LCD_API const char* lcd_last_error(void);
LCD_API void lcd_string_free(char* s);
/* Caps worker threads for all later calls; 0 means hardware concurrency. */
LCD_API void lcd_set_threads(unsigned threads);
LCD_API const char* lcd_method_name(lcd_method method);
LCD_API lcd_status lcd_parse_method(const char* name, lcd_method* out);

/* ---- datasets ---- */

LCD_API lcd_status lcd_dataset_load(const char* embedding_path, const char* tokens_path, lcd_dataset** out);
/* Token table only; enough for concepts, ontology and phrasal counts. */
LCD_API lcd_status lcd_dataset_load_tokens(const char* tokens_path, lcd_dataset** out);
LCD_API lcd_status lcd_dataset_save(const lcd_dataset* ds, const char* embedding_path, const char* tokens_path);
LCD_API lcd_status lcd_dataset_info(const lcd_dataset* ds, size_t* n_points, size_t* dim, uint32_t* layer_id);
/* Keeps rows whose surface occurs min_occ..max_occ times (inclusive). */
LCD_API lcd_status lcd_dataset_filter(const lcd_dataset* ds, uint64_t min_occ, uint64_t max_occ, lcd_dataset** out);
LCD_API void lcd_dataset_free(lcd_dataset* ds);

typedef struct lcd_synth_config {
    size_t n_points;
    size_t dim;
    size_t n_components;
    double separation;
    double label_skew;
    double phrasal_fraction;
    uint64_t seed;
    uint32_t layer_id;
} lcd_synth_config;

LCD_API void lcd_synth_config_default(lcd_synth_config* cfg);
/* planted_spans may be NULL; otherwise receives rows per span length, index 2..5. */
LCD_API lcd_status lcd_synth_generate(const lcd_synth_config* cfg, lcd_dataset** out, size_t planted_spans[6]);

/* ---- clustering ---- */

typedef struct lcd_kmeans_config {
    size_t k;
    size_t restarts;
    size_t max_iter;
    double rel_tol;
    uint64_t seed;
    lcd_kmeans_init init;
} lcd_kmeans_config;

typedef struct lcd_leaders_config {
    size_t k;
    size_t target_m;
    double rel_band;
    size_t max_probes;
    uint64_t seed;
    int exact; /* 0 selects the approximate candidate index */
} lcd_leaders_config;

LCD_API void lcd_kmeans_config_default(lcd_kmeans_config* cfg);
LCD_API void lcd_leaders_config_default(lcd_leaders_config* cfg);
/* 16 GiB unless LCD_MEMORY_BUDGET is set. */
LCD_API uint64_t lcd_memory_budget_default(void);
LCD_API lcd_status lcd_parse_byte_size(const char* text, uint64_t* out);
LCD_API uint64_t lcd_ward_required_bytes(size_t n_points);

LCD_API lcd_status lcd_kmeans_fit(const lcd_dataset* ds, const lcd_kmeans_config* cfg, lcd_assignment** out);
/* dendrogram_path may be NULL. */
LCD_API lcd_status lcd_agglomerative_fit(const lcd_dataset* ds, size_t k, uint64_t memory_budget,
                                         const char* dendrogram_path, lcd_assignment** out);
/* compression may be NULL. */
LCD_API lcd_status lcd_leaders_fit(const lcd_dataset* ds, const lcd_leaders_config* cfg, uint64_t memory_budget,
                                   lcd_assignment** out, lcd_compression** compression);

LCD_API lcd_status lcd_compression_info(const lcd_compression* comp, double* tau, size_t* m);
LCD_API lcd_status lcd_compression_save(const lcd_compression* comp, const char* path);
LCD_API void lcd_compression_free(lcd_compression* comp);

LCD_API lcd_status lcd_assignment_load(const char* path, lcd_assignment** out);
LCD_API lcd_status lcd_assignment_save(const lcd_assignment* a, const char* path);
LCD_API lcd_status lcd_assignment_info(const lcd_assignment* a, size_t* n_points, size_t* k, double* inertia,
                                       size_t* iterations_run);
/* The label array stays owned by the assignment. */
LCD_API lcd_status lcd_assignment_labels(const lcd_assignment* a, const int32_t** labels);
LCD_API uint64_t lcd_assignment_hash(const lcd_assignment* a);
LCD_API void lcd_assignment_free(lcd_assignment* a);

/* ---- concepts ---- */

LCD_API lcd_status lcd_concepts_build(const lcd_assignment* a, const lcd_dataset* ds, lcd_concepts** out);
/* Keeps concepts with more than min_types distinct surfaces. */
LCD_API lcd_status lcd_concepts_filter(const lcd_concepts* cs, size_t min_types, lcd_concepts** out);
LCD_API lcd_status lcd_concepts_load(const char* path, const lcd_dataset* ds, lcd_concepts** out);
LCD_API lcd_status lcd_concepts_save(const lcd_concepts* cs, const char* path);
LCD_API size_t lcd_concepts_count(const lcd_concepts* cs);
LCD_API lcd_status lcd_concepts_listing(const lcd_concepts* cs, const lcd_dataset* ds, size_t top, char** out);
LCD_API lcd_status lcd_concepts_histogram_json(const lcd_concepts* cs, size_t bin_width, char** out);
LCD_API lcd_status lcd_concepts_phrasal_json(const lcd_concepts* cs, const lcd_dataset* ds, char** out);
LCD_API void lcd_concepts_free(lcd_concepts* cs);

LCD_API lcd_status lcd_ontology_build(const lcd_dataset* ds, lcd_ontology** out);
LCD_API size_t lcd_ontology_label_count(const lcd_ontology* ont);
LCD_API void lcd_ontology_free(lcd_ontology* ont);

/* ---- evaluation ---- */

/* theta is a decimal string such as "0.95"; ds may be NULL and only adds
 * layer and size context to the report. */
LCD_API lcd_status lcd_evaluate(const lcd_concepts* cs, const lcd_ontology* ont, const char* theta,
                                lcd_coverage_rule rule, const lcd_dataset* ds, lcd_report** out);
/* Exact fractions in lowest terms; any pointer may be NULL. */
LCD_API lcd_status lcd_report_fractions(const lcd_report* r, uint64_t alignment[2], uint64_t coverage[2],
                                        uint64_t lambda[2]);
/* With breakdown != 0 a per-label table is appended. */
LCD_API lcd_status lcd_report_json(const lcd_report* r, int breakdown, char** out);
LCD_API lcd_status lcd_report_table(const lcd_report* r, int breakdown, char** out);
LCD_API void lcd_report_free(lcd_report* r);

/* ---- benchmarking ---- */

typedef struct lcd_bench_config {
    size_t k;
    size_t kmeans_restarts;
    uint64_t kmeans_seed;
    lcd_kmeans_init kmeans_init;
    size_t leaders_target_m; /* 0 means N / 4 */
    uint64_t leaders_seed;
    int leaders_exact;
    uint64_t memory_budget; /* 0 means lcd_memory_budget_default() */
} lcd_bench_config;

typedef struct lcd_bench_record {
    lcd_method method;
    size_t n_points;
    size_t dim;
    size_t k;
    uint64_t seed;
    double runtime_user_sys_s;
    double runtime_wall_s;
    uint64_t peak_mem_bytes;
    char status[16]; /* ok, infeasible or failed */
    uint64_t assignment_hash;
    double tau;
    size_t leaders;
} lcd_bench_record;

LCD_API void lcd_bench_config_default(lcd_bench_config* cfg);
LCD_API lcd_status lcd_bench_run(const lcd_dataset* ds, lcd_method method, const lcd_bench_config* cfg,
                                 lcd_bench_record* out);
/* Runs every method at every size on freshly generated data. csv receives
 * the records, exponents_json the fitted log-log slopes per method. */
LCD_API lcd_status lcd_bench_sweep(const lcd_synth_config* generator, const lcd_method* methods, size_t n_methods,
                                   const size_t* sizes, size_t n_sizes, const lcd_bench_config* cfg, char** csv,
                                   char** exponents_json);
/* Least-squares slope of log(y) against log(x). */
LCD_API lcd_status lcd_fit_log_slope(const double* x, const double* y, size_t n, double* slope);
LCD_API const char* lcd_bench_csv_header(void);
LCD_API lcd_status lcd_bench_csv_row(const lcd_bench_record* r, char** out);
LCD_API lcd_status lcd_host_fingerprint(char** out);

/* Lower-case hex SHA-256 of a file; out must hold 65 bytes. */
LCD_API lcd_status lcd_sha256_file(const char* path, char out[65]);

#ifdef __cplusplus
}
#endif

#endif
