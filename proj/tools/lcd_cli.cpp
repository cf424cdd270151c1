// Command-line front end over the lcd C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcd/lcd.h"

namespace {

using nlohmann::ordered_json;

enum Exit { kOk = 0, kValidation = 2, kBudget = 3, kInternal = 4 };

struct Failure {
    lcd_status status;
    std::string message;
};

void check(lcd_status s) {
    if (s != LCD_OK) throw Failure{s, lcd_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{LCD_E_VALIDATION, message}; }

int exit_code(lcd_status s) {
    switch (s) {
        case LCD_OK: return kOk;
        case LCD_E_VALIDATION:
        case LCD_E_IO: return kValidation;
        case LCD_E_BUDGET: return kBudget;
        default: return kInternal;
    }
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<lcd_dataset, Deleter<lcd_dataset, lcd_dataset_free>>;
using Assignment = std::unique_ptr<lcd_assignment, Deleter<lcd_assignment, lcd_assignment_free>>;
using Compression = std::unique_ptr<lcd_compression, Deleter<lcd_compression, lcd_compression_free>>;
using Concepts = std::unique_ptr<lcd_concepts, Deleter<lcd_concepts, lcd_concepts_free>>;
using Ontology = std::unique_ptr<lcd_ontology, Deleter<lcd_ontology, lcd_ontology_free>>;
using Report = std::unique_ptr<lcd_report, Deleter<lcd_report, lcd_report_free>>;

std::string take(char* s) {
    std::string out(s);
    lcd_string_free(s);
    return out;
}

std::string digest(const std::string& path) {
    char hex[65];
    check(lcd_sha256_file(path.c_str(), hex));
    return hex;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{LCD_E_IO, "cannot write " + path};
    out << text;
    if (!out) throw Failure{LCD_E_IO, "write failed: " + path};
}

// Emits text to a file (with manifest) or to stdout when no path was given.
struct Run {
    std::string command;
    std::string command_line;
    ordered_json params = ordered_json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    void emit(const std::string& path, const std::string& text) {
        if (path.empty() || path == "-") {
            std::cout << text;
            if (!text.empty() && text.back() != '\n') std::cout << '\n';
            return;
        }
        write_text(path, text);
        outputs.push_back(path);
    }

    void finish() const {
        if (outputs.empty()) return;
        ordered_json m;
        m["tool"] = "lcd";
        m["version"] = lcd_version();
        m["command"] = command;
        m["command_line"] = command_line;
        m["params"] = params;
        ordered_json in = ordered_json::object();
        for (const auto& p : inputs) in[p] = digest(p);
        m["inputs"] = in;
        m["outputs"] = outputs;
        const std::string text = m.dump(2) + "\n";
        for (const auto& p : outputs) write_text(p + ".manifest.json", text);
    }
};

std::uint64_t resolve_budget(const std::string& text) {
    if (text.empty()) {
        const auto b = lcd_memory_budget_default();
        if (b == 0) usage_error("LCD_MEMORY_BUDGET is not a valid byte size");
        return b;
    }
    std::uint64_t v = 0;
    check(lcd_parse_byte_size(text.c_str(), &v));
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, sep))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

Dataset load_full(const std::string& emb, const std::string& tok) {
    lcd_dataset* ds = nullptr;
    check(lcd_dataset_load(emb.c_str(), tok.c_str(), &ds));
    return Dataset(ds);
}

Dataset load_tokens(const std::string& tok) {
    lcd_dataset* ds = nullptr;
    check(lcd_dataset_load_tokens(tok.c_str(), &ds));
    return Dataset(ds);
}

Concepts concepts_from(const std::string& concepts_path, const std::string& assignment_path, const lcd_dataset* ds,
                       Run& run) {
    lcd_concepts* cs = nullptr;
    if (!concepts_path.empty()) {
        check(lcd_concepts_load(concepts_path.c_str(), ds, &cs));
        run.inputs.push_back(concepts_path);
    } else if (!assignment_path.empty()) {
        lcd_assignment* a = nullptr;
        check(lcd_assignment_load(assignment_path.c_str(), &a));
        Assignment owned(a);
        check(lcd_concepts_build(owned.get(), ds, &cs));
        run.inputs.push_back(assignment_path);
    } else {
        usage_error("one of --concepts or --assignment is required");
    }
    return Concepts(cs);
}

Concepts filtered(Concepts cs, std::size_t min_types) {
    if (min_types == 0) return cs;
    lcd_concepts* out = nullptr;
    check(lcd_concepts_filter(cs.get(), min_types, &out));
    return Concepts(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent concept discovery: cluster contextual embeddings and align clusters with labels"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(lcd_version()));
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker thread cap (0: all cores)");

    Run run;
    run.command_line = "lcd";
    for (int i = 1; i < argc; ++i) run.command_line += " " + std::string(argv[i]);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled embedding set");
    lcd_synth_config sc;
    lcd_synth_config_default(&sc);
    std::string synth_emb, synth_tok;
    synth->add_option("--n", sc.n_points, "Rows")->capture_default_str();
    synth->add_option("--dim", sc.dim, "Dimensions")->capture_default_str();
    synth->add_option("--components", sc.n_components, "Planted components")->capture_default_str();
    synth->add_option("--separation", sc.separation, "Centre distance in blob standard deviations")->capture_default_str();
    synth->add_option("--label-skew", sc.label_skew, "Zipf exponent of component sizes")->capture_default_str();
    synth->add_option("--phrasal-fraction", sc.phrasal_fraction, "Share of 2..5-gram rows")->capture_default_str();
    synth->add_option("--seed", sc.seed, "Seed")->capture_default_str();
    synth->add_option("--layer", sc.layer_id, "Layer id written to the header")->capture_default_str();
    synth->add_option("--emb", synth_emb, "Output embedding file")->required();
    synth->add_option("--tok", synth_tok, "Output token JSONL")->required();

    // cluster
    auto* cluster = app.add_subcommand("cluster", "Cluster an embedding set");
    std::string method_text = "kmeans", emb, tok, out, init_text = "plusplus", memory_budget, dendrogram, compression;
    lcd_kmeans_config kc;
    lcd_kmeans_config_default(&kc);
    lcd_leaders_config lc;
    lcd_leaders_config_default(&lc);
    bool approx = false;
    cluster->add_option("--method", method_text, "kmeans, agglo or leaders")->capture_default_str();
    cluster->add_option("--k", kc.k, "Clusters")->capture_default_str();
    cluster->add_option("--restarts", kc.restarts, "K-Means restarts")->capture_default_str();
    cluster->add_option("--max-iter", kc.max_iter, "K-Means iteration cap")->capture_default_str();
    cluster->add_option("--tol", kc.rel_tol, "K-Means shift tolerance relative to the widest feature range")
        ->capture_default_str();
    cluster->add_option("--init", init_text, "K-Means seeding: plusplus or sampled")->capture_default_str();
    cluster->add_option("--seed", kc.seed, "Seed")->capture_default_str();
    cluster->add_option("--budget", lc.target_m, "Leaders: target number of leaders (default N/4)");
    cluster->add_option("--band", lc.rel_band, "Leaders: relative tolerance on the target")->capture_default_str();
    cluster->add_option("--probes", lc.max_probes, "Leaders: binary search probes")->capture_default_str();
    cluster->add_flag("--approx", approx, "Leaders: approximate neighbour candidates");
    cluster->add_option("--memory-budget", memory_budget, "Ward matrix budget, e.g. 16G (env LCD_MEMORY_BUDGET)");
    cluster->add_option("--dendrogram", dendrogram, "Agglomerative: write the merge list");
    cluster->add_option("--compression", compression, "Leaders: write the leader assignment");
    cluster->add_option("--emb", emb, "Embedding file")->required();
    cluster->add_option("--tok", tok, "Token JSONL")->required();
    cluster->add_option("--out", out, "Assignment JSON")->required();

    // concepts
    auto* concepts = app.add_subcommand("concepts", "Project an assignment onto tokens");
    std::string assignment_path, concepts_path, listing;
    std::size_t min_types = 0, top = 10;
    concepts->add_option("--assignment", assignment_path, "Assignment JSON")->required();
    concepts->add_option("--tok", tok, "Token JSONL")->required();
    concepts->add_option("--out", out, "Concept JSONL")->required();
    concepts->add_option("--min-types", min_types, "Keep concepts with more distinct surfaces than this")
        ->capture_default_str();
    concepts->add_option("--listing", listing, "Write a text listing of each concept");
    concepts->add_option("--top", top, "Surfaces per concept in the listing")->capture_default_str();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Alignment, coverage and lambda against token labels");
    std::string theta = "0.95", coverage = "encoded", table;
    std::size_t eval_min_types = 5;
    bool breakdown = false;
    evaluate->add_option("--concepts", concepts_path, "Concept JSONL");
    evaluate->add_option("--assignment", assignment_path, "Assignment JSON (instead of --concepts)");
    evaluate->add_option("--tok", tok, "Token JSONL")->required();
    evaluate->add_option("--theta", theta, "Alignment threshold")->capture_default_str();
    evaluate->add_option("--min-types", eval_min_types, "Concept filter: more distinct surfaces than this")
        ->capture_default_str();
    evaluate->add_option("--coverage", coverage, "Coverage overlap denominator: encoded or human")->capture_default_str();
    evaluate->add_flag("--breakdown", breakdown, "Add the per-label table");
    evaluate->add_option("--out", out, "Report JSON (stdout if omitted)");
    evaluate->add_option("--table", table, "Also write a text table");

    // histogram
    auto* histogram = app.add_subcommand("histogram", "Concept size histogram");
    std::size_t bin_width = 10, hist_min_types = 5;
    histogram->add_option("--concepts", concepts_path, "Concept JSONL");
    histogram->add_option("--assignment", assignment_path, "Assignment JSON (instead of --concepts)");
    histogram->add_option("--tok", tok, "Token JSONL")->required();
    histogram->add_option("--bin-width", bin_width, "Bin width")->capture_default_str();
    histogram->add_option("--min-types", hist_min_types, "Concept filter")->capture_default_str();
    histogram->add_option("--out", out, "Histogram JSON (stdout if omitted)");

    // phrasal
    auto* phrasal = app.add_subcommand("phrasal", "Phrasal unit counts per span length");
    std::size_t phrasal_min_types = 0;
    phrasal->add_option("--concepts", concepts_path, "Concept JSONL");
    phrasal->add_option("--assignment", assignment_path, "Assignment JSON (instead of --concepts)");
    phrasal->add_option("--tok", tok, "Token JSONL")->required();
    phrasal->add_option("--min-types", phrasal_min_types, "Concept filter")->capture_default_str();
    phrasal->add_option("--out", out, "Counts JSON (stdout if omitted)");

    // filter
    auto* filter = app.add_subcommand("filter", "Keep rows whose surface frequency lies in a range");
    std::uint64_t min_occ = 1, max_occ = UINT64_MAX;
    std::string out_emb, out_tok;
    filter->add_option("--emb", emb, "Embedding file")->required();
    filter->add_option("--tok", tok, "Token JSONL")->required();
    filter->add_option("--min-occ", min_occ, "Minimum occurrences (inclusive)")->capture_default_str();
    filter->add_option("--max-occ", max_occ, "Maximum occurrences (inclusive)");
    filter->add_option("--out-emb", out_emb, "Output embedding file")->required();
    filter->add_option("--out-tok", out_tok, "Output token JSONL")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Runtime and peak memory per method and size on synthetic data");
    std::string methods_text = "kmeans,leaders,agglo", sizes_text = "10000,20000";
    lcd_bench_config bc;
    lcd_bench_config_default(&bc);
    lcd_synth_config gc;
    lcd_synth_config_default(&gc);
    gc.separation = 100.0;
    std::string exponents_out;
    bench->add_option("--methods", methods_text, "Comma-separated methods")->capture_default_str();
    bench->add_option("--sizes", sizes_text, "Comma-separated row counts")->capture_default_str();
    bench->add_option("--dim", gc.dim, "Dimensions")->capture_default_str();
    bench->add_option("--components", gc.n_components, "Planted components")->capture_default_str();
    bench->add_option("--separation", gc.separation, "Blob separation")->capture_default_str();
    bench->add_option("--data-seed", gc.seed, "Generator seed")->capture_default_str();
    bench->add_option("--k", bc.k, "Clusters")->capture_default_str();
    bench->add_option("--restarts", bc.kmeans_restarts, "K-Means restarts")->capture_default_str();
    bench->add_option("--seed", bc.kmeans_seed, "Clustering seed")->capture_default_str();
    bench->add_option("--leaders-budget", bc.leaders_target_m, "Leaders target (default N/4)");
    bench->add_flag("--approx", approx, "Leaders: approximate neighbour candidates");
    bench->add_option("--memory-budget", memory_budget, "Ward matrix budget");
    bench->add_option("--out", out, "CSV (stdout if omitted)");
    bench->add_option("--exponents", exponents_out, "Write fitted log-log slopes (needs 3+ sizes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }
    lcd_set_threads(threads);
    run.params["threads"] = threads;

    try {
        if (synth->parsed()) {
            run.command = "synth";
            run.params["n"] = sc.n_points;
            run.params["dim"] = sc.dim;
            run.params["components"] = sc.n_components;
            run.params["separation"] = sc.separation;
            run.params["label_skew"] = sc.label_skew;
            run.params["phrasal_fraction"] = sc.phrasal_fraction;
            run.params["seed"] = sc.seed;
            run.params["layer"] = sc.layer_id;
            lcd_dataset* ds = nullptr;
            check(lcd_synth_generate(&sc, &ds, nullptr));
            Dataset owned(ds);
            check(lcd_dataset_save(owned.get(), synth_emb.c_str(), synth_tok.c_str()));
            run.outputs = {synth_emb, synth_tok};
        } else if (cluster->parsed()) {
            run.command = "cluster";
            lcd_method method;
            check(lcd_parse_method(method_text.c_str(), &method));
            run.inputs = {emb, tok};
            auto ds = load_full(emb, tok);
            run.params["method"] = lcd_method_name(method);
            run.params["k"] = kc.k;
            lcd_assignment* a = nullptr;
            if (method == LCD_METHOD_KMEANS) {
                if (init_text == "sampled") {
                    kc.init = LCD_INIT_SAMPLED;
                } else if (init_text != "plusplus") {
                    usage_error("--init must be plusplus or sampled");
                }
                run.params["restarts"] = kc.restarts;
                run.params["max_iter"] = kc.max_iter;
                run.params["tol"] = kc.rel_tol;
                run.params["init"] = init_text;
                run.params["seed"] = kc.seed;
                check(lcd_kmeans_fit(ds.get(), &kc, &a));
            } else {
                const auto budget = resolve_budget(memory_budget);
                run.params["memory_budget"] = budget;
                if (method == LCD_METHOD_AGGLOMERATIVE) {
                    check(lcd_agglomerative_fit(ds.get(), kc.k, budget, dendrogram.empty() ? nullptr : dendrogram.c_str(),
                                                &a));
                    if (!dendrogram.empty()) run.outputs.push_back(dendrogram);
                } else {
                    lc.k = kc.k;
                    lc.seed = kc.seed;
                    lc.exact = approx ? 0 : 1;
                    lcd_compression* comp = nullptr;
                    check(lcd_leaders_fit(ds.get(), &lc, budget, &a, &comp));
                    Compression owned(comp);
                    double tau = 0.0;
                    std::size_t m = 0;
                    check(lcd_compression_info(comp, &tau, &m));
                    std::size_t n = 0;
                    check(lcd_dataset_info(ds.get(), &n, nullptr, nullptr));
                    run.params["target_m"] = lc.target_m != 0 ? lc.target_m : std::max<std::size_t>(lc.k, n / 4);
                    run.params["band"] = lc.rel_band;
                    run.params["probes"] = lc.max_probes;
                    run.params["exact"] = lc.exact != 0;
                    run.params["seed"] = lc.seed;
                    run.params["tau"] = tau;
                    run.params["leaders"] = m;
                    if (!compression.empty()) {
                        check(lcd_compression_save(comp, compression.c_str()));
                        run.outputs.push_back(compression);
                    }
                }
            }
            Assignment owned(a);
            check(lcd_assignment_save(owned.get(), out.c_str()));
            run.outputs.insert(run.outputs.begin(), out);
        } else if (concepts->parsed()) {
            run.command = "concepts";
            run.params["min_types"] = min_types;
            auto ds = load_tokens(tok);
            run.inputs.push_back(tok);
            auto cs = filtered(concepts_from("", assignment_path, ds.get(), run), min_types);
            check(lcd_concepts_save(cs.get(), out.c_str()));
            run.outputs.push_back(out);
            if (!listing.empty()) {
                char* text = nullptr;
                check(lcd_concepts_listing(cs.get(), ds.get(), top, &text));
                run.emit(listing, take(text));
            }
        } else if (evaluate->parsed()) {
            run.command = "evaluate";
            lcd_coverage_rule rule = LCD_COVERAGE_ENCODED;
            if (coverage == "human") {
                rule = LCD_COVERAGE_HUMAN;
            } else if (coverage != "encoded") {
                usage_error("--coverage must be encoded or human");
            }
            run.params["theta"] = theta;
            run.params["min_types"] = eval_min_types;
            run.params["coverage"] = coverage;
            run.params["breakdown"] = breakdown;
            auto ds = load_tokens(tok);
            run.inputs.push_back(tok);
            auto cs = filtered(concepts_from(concepts_path, assignment_path, ds.get(), run), eval_min_types);
            lcd_ontology* ont = nullptr;
            check(lcd_ontology_build(ds.get(), &ont));
            Ontology owned_ont(ont);
            lcd_report* rep = nullptr;
            check(lcd_evaluate(cs.get(), ont, theta.c_str(), rule, ds.get(), &rep));
            Report owned_rep(rep);
            char* text = nullptr;
            check(lcd_report_json(rep, breakdown ? 1 : 0, &text));
            run.emit(out, take(text));
            if (!table.empty()) {
                check(lcd_report_table(rep, breakdown ? 1 : 0, &text));
                run.emit(table, take(text));
            }
        } else if (histogram->parsed()) {
            run.command = "histogram";
            run.params["bin_width"] = bin_width;
            run.params["min_types"] = hist_min_types;
            auto ds = load_tokens(tok);
            run.inputs.push_back(tok);
            auto cs = filtered(concepts_from(concepts_path, assignment_path, ds.get(), run), hist_min_types);
            char* text = nullptr;
            check(lcd_concepts_histogram_json(cs.get(), bin_width, &text));
            run.emit(out, take(text));
        } else if (phrasal->parsed()) {
            run.command = "phrasal";
            run.params["min_types"] = phrasal_min_types;
            auto ds = load_tokens(tok);
            run.inputs.push_back(tok);
            auto cs = filtered(concepts_from(concepts_path, assignment_path, ds.get(), run), phrasal_min_types);
            char* text = nullptr;
            check(lcd_concepts_phrasal_json(cs.get(), ds.get(), &text));
            run.emit(out, take(text));
        } else if (filter->parsed()) {
            run.command = "filter";
            run.params["min_occ"] = min_occ;
            run.params["max_occ"] = max_occ;
            run.inputs = {emb, tok};
            auto ds = load_full(emb, tok);
            lcd_dataset* f = nullptr;
            check(lcd_dataset_filter(ds.get(), min_occ, max_occ, &f));
            Dataset owned(f);
            check(lcd_dataset_save(owned.get(), out_emb.c_str(), out_tok.c_str()));
            run.outputs = {out_emb, out_tok};
        } else if (bench->parsed()) {
            run.command = "bench";
            std::vector<lcd_method> methods;
            for (const auto& m : split(methods_text, ',')) {
                lcd_method parsed;
                check(lcd_parse_method(m.c_str(), &parsed));
                methods.push_back(parsed);
            }
            std::vector<std::size_t> sizes;
            for (const auto& s : split(sizes_text, ',')) {
                try {
                    sizes.push_back(static_cast<std::size_t>(std::stoull(s)));
                } catch (const std::exception&) {
                    usage_error("bad size: " + s);
                }
            }
            if (methods.empty() || sizes.empty()) usage_error("--methods and --sizes must be non-empty");
            bc.leaders_exact = approx ? 0 : 1;
            bc.leaders_seed = bc.kmeans_seed;
            bc.memory_budget = resolve_budget(memory_budget);
            run.params["methods"] = methods_text;
            run.params["sizes"] = sizes;
            run.params["dim"] = gc.dim;
            run.params["components"] = gc.n_components;
            run.params["separation"] = gc.separation;
            run.params["data_seed"] = gc.seed;
            run.params["k"] = bc.k;
            run.params["restarts"] = bc.kmeans_restarts;
            run.params["seed"] = bc.kmeans_seed;
            run.params["leaders_budget"] = bc.leaders_target_m;
            run.params["memory_budget"] = bc.memory_budget;
            char* host = nullptr;
            check(lcd_host_fingerprint(&host));
            run.params["host"] = take(host);

            std::string csv = std::string(lcd_bench_csv_header()) + "\n";
            std::map<int, std::pair<std::vector<double>, std::vector<double>>> samples;
            for (auto n : sizes) {
                lcd_synth_config g = gc;
                g.n_points = n;
                lcd_dataset* ds = nullptr;
                check(lcd_synth_generate(&g, &ds, nullptr));
                Dataset owned(ds);
                for (auto m : methods) {
                    lcd_bench_record rec;
                    check(lcd_bench_run(owned.get(), m, &bc, &rec));
                    char* row = nullptr;
                    check(lcd_bench_csv_row(&rec, &row));
                    csv += take(row) + "\n";
                    std::cerr << lcd_method_name(m) << " n=" << n << " " << rec.status << " "
                              << rec.runtime_user_sys_s << "s\n";
                    if (std::string(rec.status) == "ok" && rec.runtime_user_sys_s > 0.0) {
                        samples[m].first.push_back(static_cast<double>(n));
                        samples[m].second.push_back(rec.runtime_user_sys_s);
                    }
                }
            }
            run.emit(out, csv);
            if (!exponents_out.empty()) {
                ordered_json exps = ordered_json::object();
                for (auto m : methods) {
                    const auto& [xs, ys] = samples[m];
                    if (xs.size() < 3) usage_error(std::string("fewer than 3 successful sizes for ") + lcd_method_name(m));
                    double slope = 0.0;
                    check(lcd_fit_log_slope(xs.data(), ys.data(), xs.size(), &slope));
                    exps[lcd_method_name(m)] = slope;
                }
                run.emit(exponents_out, exps.dump(2) + "\n");
            }
        }
        run.finish();
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return exit_code(f.status);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
    return kOk;
}
