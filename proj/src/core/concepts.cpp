#include "concepts.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace lcd {

namespace {

Concept make_concept(std::int32_t id, std::vector<std::uint32_t> members, const EmbeddingDataset& ds) {
    Concept c;
    c.concept_id = id;
    c.member_ids = std::move(members);
    for (auto m : c.member_ids) ++c.type_counts[ds.token(m).surface];
    return c;
}

}  // namespace

ConceptSet build_concepts(const ClusterAssignment& assignment, const EmbeddingDataset& ds) {
    if (assignment.labels.empty()) fail("cannot build concepts from an empty assignment");
    if (assignment.labels.size() != ds.n_points())
        fail("assignment has " + std::to_string(assignment.labels.size()) + " labels but dataset has " +
             std::to_string(ds.n_points()) + " points");
    std::map<std::int32_t, std::vector<std::uint32_t>> groups;
    for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
        if (assignment.labels[i] < 0) fail("negative cluster label at point " + std::to_string(i));
        if (assignment.k > 0 && static_cast<std::size_t>(assignment.labels[i]) >= assignment.k)
            fail("cluster label " + std::to_string(assignment.labels[i]) + " at point " + std::to_string(i) +
                 " is not below k=" + std::to_string(assignment.k));
        groups[assignment.labels[i]].push_back(static_cast<std::uint32_t>(i));
    }
    ConceptSet cs;
    cs.concepts.reserve(groups.size());
    for (auto& [id, members] : groups) cs.concepts.push_back(make_concept(id, std::move(members), ds));
    return cs;
}

ConceptSet filter_concepts(const ConceptSet& cs, std::size_t min_types) {
    ConceptSet out;
    out.filtered = true;
    out.min_types = cs.filtered ? std::max(cs.min_types, min_types) : min_types;
    for (const auto& c : cs.concepts)
        if (c.unique_types() > out.min_types) out.concepts.push_back(c);
    return out;
}

SizeHistogram size_histogram(const ConceptSet& cs, std::size_t bin_width) {
    if (cs.concepts.empty()) fail("size histogram of an empty concept set");
    if (bin_width == 0) fail("histogram bin width must be positive");
    std::vector<std::size_t> sizes;
    sizes.reserve(cs.concepts.size());
    for (const auto& c : cs.concepts) sizes.push_back(c.size());
    std::sort(sizes.begin(), sizes.end());

    SizeHistogram h;
    h.median = sizes[(sizes.size() - 1) / 2];
    const std::size_t largest = sizes.back();
    for (std::size_t lo = 1; lo <= largest; lo += bin_width) h.bins.push_back({lo, lo + bin_width - 1, 0});
    for (auto s : sizes) {
        if (s == 0) continue;
        ++h.bins[(s - 1) / bin_width].count;
    }
    return h;
}

PhrasalCounts phrasal_counts(const ConceptSet& cs, const EmbeddingDataset& ds) {
    PhrasalCounts out;
    std::array<std::set<std::string_view>, 6> seen;
    for (const auto& c : cs.concepts) {
        for (auto m : c.member_ids) {
            const auto& t = ds.token(m);
            if (t.span_len < 2 || t.span_len > 5) continue;
            ++out.tokens[t.span_len];
            seen[t.span_len].insert(t.surface);
        }
    }
    for (std::size_t n = 2; n <= 5; ++n) out.types[n] = seen[n].size();
    return out;
}

void save_concepts(const ConceptSet& cs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write concept file " + path.string());
    for (const auto& c : cs.concepts) {
        nlohmann::ordered_json j;
        j["concept_id"] = c.concept_id;
        j["members"] = c.member_ids;
        out << j.dump() << '\n';
    }
    if (!out) fail_io("write failed for " + path.string());
}

ConceptSet load_concepts(const std::filesystem::path& path, const EmbeddingDataset& ds) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open concept file " + path.string());
    ConceptSet cs;
    std::set<std::int32_t> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto id = j.at("concept_id").get<std::int32_t>();
            auto members = j.at("members").get<std::vector<std::uint32_t>>();
            if (members.empty()) fail("concept " + std::to_string(id) + " has no members");
            for (auto m : members)
                if (m >= ds.n_points())
                    fail("concept " + std::to_string(id) + " references token " + std::to_string(m) +
                         " beyond N=" + std::to_string(ds.n_points()));
            if (!ids.insert(id).second) fail("duplicate concept_id " + std::to_string(id));
            std::sort(members.begin(), members.end());
            cs.concepts.push_back(make_concept(id, std::move(members), ds));
        } catch (const nlohmann::json::exception& e) {
            fail("concept line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cs;
}

std::string concept_listing(const ConceptSet& cs, const EmbeddingDataset& ds, std::size_t top) {
    std::ostringstream out;
    for (const auto& c : cs.concepts) {
        std::vector<std::pair<std::string, std::size_t>> ranked(c.type_counts.begin(), c.type_counts.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        std::map<std::string, std::size_t> labels;
        for (auto m : c.member_ids) ++labels[ds.token(m).label.value_or("<none>")];
        const auto dominant = std::max_element(labels.begin(), labels.end(),
                                               [](const auto& a, const auto& b) { return a.second < b.second; });
        out << "concept " << c.concept_id << "  size=" << c.size() << "  types=" << c.unique_types()
            << "  majority=" << dominant->first << " (" << dominant->second << ")\n   ";
        for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i)
            out << ' ' << ranked[i].first << ':' << ranked[i].second;
        out << '\n';
    }
    return out.str();
}

std::string histogram_to_json(const SizeHistogram& h) {
    nlohmann::ordered_json j;
    j["median"] = h.median;
    auto bins = nlohmann::ordered_json::array();
    for (const auto& b : h.bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    j["bins"] = bins;
    return j.dump();
}

std::string phrasal_to_json(const PhrasalCounts& p) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json tokens;
    nlohmann::ordered_json types;
    for (std::size_t n = 2; n <= 5; ++n) {
        tokens[std::to_string(n)] = p.tokens[n];
        types[std::to_string(n)] = p.types[n];
    }
    j["tokens"] = tokens;
    j["types"] = types;
    return j.dump();
}

}  // namespace lcd
