#include "assignment.hpp"

#include <fstream>
#include <span>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace lcd {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::KMeans: return "kmeans";
        case Method::Agglomerative: return "agglomerative";
        case Method::Leaders: return "leaders";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "kmeans") return Method::KMeans;
    if (name == "agglomerative" || name == "agglo") return Method::Agglomerative;
    if (name == "leaders") return Method::Leaders;
    fail("unknown clustering method \"" + std::string(name) + "\"");
}

void validate_assignment(const ClusterAssignment& a) {
    if (a.k == 0) fail("assignment has k = 0");
    if (!(a.inertia >= 0.0)) fail("assignment inertia must be non-negative");
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        if (a.labels[i] < 0 || static_cast<std::size_t>(a.labels[i]) >= a.k)
            fail("label " + std::to_string(a.labels[i]) + " at point " + std::to_string(i) +
                 " outside [0, " + std::to_string(a.k) + ")");
    }
}

double within_cluster_sse(const ClusterAssignment& a, std::span<const float> vectors,
                          std::size_t dim) {
    std::vector<double> sums(a.k * dim, 0.0);
    std::vector<std::size_t> counts(a.k, 0);
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(a.labels[i]);
        ++counts[c];
        for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += vectors[i * dim + d];
    }
    for (std::size_t c = 0; c < a.k; ++c)
        if (counts[c] != 0)
            for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] /= static_cast<double>(counts[c]);
    double sse = 0.0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(a.labels[i]);
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = vectors[i * dim + d] - sums[c * dim + d];
            sse += diff * diff;
        }
    }
    return sse;
}

std::uint64_t assignment_hash(const ClusterAssignment& a) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int32_t label : a.labels) {
        auto v = static_cast<std::uint32_t>(label);
        for (int b = 0; b < 4; ++b) {
            h ^= (v >> (8 * b)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string assignment_to_json(const ClusterAssignment& a) {
    nlohmann::ordered_json j;
    j["method"] = method_name(a.method);
    j["k"] = a.k;
    j["seed"] = a.seed;
    j["inertia"] = a.inertia;
    j["iterations"] = a.iterations_run;
    j["labels"] = a.labels;
    return j.dump();
}

ClusterAssignment assignment_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        ClusterAssignment a;
        a.method = parse_method(j.at("method").get<std::string>());
        a.k = j.at("k").get<std::size_t>();
        a.seed = j.value("seed", std::uint64_t{0});
        a.inertia = j.value("inertia", 0.0);
        a.iterations_run = j.value("iterations", std::size_t{0});
        a.labels = j.at("labels").get<std::vector<std::int32_t>>();
        validate_assignment(a);
        return a;
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed assignment JSON: ") + e.what());
    }
}

void save_assignment(const ClusterAssignment& a, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write assignment file " + path.string());
    out << assignment_to_json(a) << '\n';
    if (!out) fail_io("write failed for " + path.string());
}

ClusterAssignment load_assignment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open assignment file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return assignment_from_json(ss.str());
}

}  // namespace lcd
