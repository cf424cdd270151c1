#include "alignment.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "error.hpp"

namespace lcd {

using u128 = unsigned __int128;

Fraction Fraction::make(std::uint64_t num, std::uint64_t den) {
    if (den == 0) fail("fraction with zero denominator");
    const auto g = std::gcd(num, den);
    if (g == 0) return {0, 1};
    return {num / g, den / g};
}

std::string Fraction::percent() const {
    // tenths of a percent = num * 1000 / den, rounded half to even
    const u128 scaled = static_cast<u128>(num) * 1000u;
    auto q = static_cast<std::uint64_t>(scaled / den);
    const auto r = static_cast<std::uint64_t>(scaled % den);
    const u128 twice = static_cast<u128>(r) * 2u;
    if (twice > den || (twice == den && (q % 2 == 1))) ++q;
    return std::to_string(q / 10) + "." + std::to_string(q % 10);
}

Theta Theta::parse(const std::string& text) {
    std::size_t i = 0;
    std::uint64_t whole = 0;
    std::uint64_t frac = 0;
    std::uint64_t scale = 1;
    bool digits = false;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        whole = whole * 10 + static_cast<std::uint64_t>(text[i] - '0');
        digits = true;
        if (whole > 1) fail("theta must lie in (0, 1]: \"" + text + "\"");
    }
    if (i < text.size() && text[i] == '.') {
        for (++i; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            if (scale >= 1000000000000ULL) fail("theta has too many decimals: \"" + text + "\"");
            frac = frac * 10 + static_cast<std::uint64_t>(text[i] - '0');
            scale *= 10;
            digits = true;
        }
    }
    if (!digits || i != text.size()) fail("invalid theta \"" + text + "\"");
    const auto f = Fraction::make(whole * scale + frac, scale);
    if (f.num == 0 || f.num > f.den) fail("theta must lie in (0, 1]: \"" + text + "\"");
    return {f.num, f.den};
}

Theta Theta::from_double(double value) {
    if (!(value > 0.0 && value <= 1.0)) fail("theta must lie in (0, 1]");
    const auto micro = static_cast<std::uint64_t>(std::llround(value * 1e6));
    const auto f = Fraction::make(micro == 0 ? 1 : micro, 1000000);
    return {f.num, f.den};
}

AlignmentReport theta_alignment(const ConceptSet& cs, const HumanOntology& ont, Theta theta,
                                CoverageDenominator rule) {
    if (theta.den == 0 || theta.num == 0 || theta.num > theta.den) fail("theta must lie in (0, 1]");
    if (cs.concepts.empty()) fail("alignment needs at least one encoded concept");
    if (ont.concepts.empty()) fail("alignment needs at least one human-defined concept");

    // Token id -> label index; tokens outside every human concept stay -1.
    std::vector<std::string> labels;
    std::vector<std::size_t> label_sizes;
    std::vector<std::int32_t> label_of;
    for (const auto& [label, ids] : ont.concepts) {
        const auto index = static_cast<std::int32_t>(labels.size());
        labels.push_back(label);
        label_sizes.push_back(ids.size());
        for (auto id : ids) {
            if (id >= label_of.size()) label_of.resize(static_cast<std::size_t>(id) + 1, -1);
            if (label_of[id] >= 0) fail("token " + std::to_string(id) + " belongs to two human concepts");
            label_of[id] = index;
        }
    }

    // x / y >= num / den  <=>  x * den >= num * y
    auto meets = [&](std::uint64_t hits, std::uint64_t total) {
        return static_cast<u128>(hits) * theta.den >= static_cast<u128>(theta.num) * total;
    };

    AlignmentReport report;
    report.theta = theta;
    report.coverage_rule = rule;
    report.concept_count = cs.concepts.size();
    report.label_count = labels.size();
    report.filtered = cs.filtered;
    report.min_types = cs.min_types;

    std::vector<char> covered(labels.size(), 0);
    std::unordered_map<std::int32_t, std::size_t> hits;
    std::size_t aligned = 0;
    for (const auto& c : cs.concepts) {
        hits.clear();
        ConceptAlignment ca;
        ca.concept_id = c.concept_id;
        ca.size = c.size();
        for (auto m : c.member_ids) {
            const std::int32_t l = m < label_of.size() ? label_of[m] : -1;
            if (l < 0) {
                ++ca.unlabeled;
            } else {
                ++hits[l];
            }
        }
        std::vector<std::int32_t> matched;
        for (const auto& [l, count] : hits) {
            const auto li = static_cast<std::size_t>(l);
            if (meets(count, c.size())) matched.push_back(l);
            const std::uint64_t coverage_total = rule == CoverageDenominator::Encoded ? c.size() : label_sizes[li];
            if (meets(count, coverage_total)) covered[li] = 1;
        }
        std::sort(matched.begin(), matched.end());
        if (2 * theta.num > theta.den && matched.size() > 1)
            throw Error(ErrorKind::Internal, "concept aligned to several labels with theta > 1/2");
        for (auto l : matched) ca.aligned_labels.push_back(labels[static_cast<std::size_t>(l)]);
        if (!matched.empty()) {
            ++aligned;
            report.aligned_concept_ids.push_back(c.concept_id);
        }
        report.unlabeled_members += ca.unlabeled;
        report.per_concept.push_back(std::move(ca));
    }
    std::size_t covered_count = 0;
    for (std::size_t l = 0; l < labels.size(); ++l) {
        if (!covered[l]) continue;
        ++covered_count;
        report.covered_labels.push_back(labels[l]);
    }

    const std::uint64_t e = cs.concepts.size();
    const std::uint64_t h = labels.size();
    report.alignment = Fraction::make(aligned, e);
    report.coverage = Fraction::make(covered_count, h);
    const u128 lambda_num = static_cast<u128>(aligned) * h + static_cast<u128>(covered_count) * e;
    const u128 lambda_den = static_cast<u128>(2) * e * h;
    if (lambda_den > UINT64_MAX) fail("alignment instance too large for exact arithmetic");
    report.lambda = Fraction::make(static_cast<std::uint64_t>(lambda_num), static_cast<std::uint64_t>(lambda_den));
    return report;
}

std::map<std::string, std::size_t> per_label_breakdown(const AlignmentReport& report, const HumanOntology& ont) {
    std::map<std::string, std::size_t> counts;
    for (const auto& [label, ids] : ont.concepts) counts[label] = 0;
    for (const auto& ca : report.per_concept)
        for (const auto& l : ca.aligned_labels) ++counts[l];
    return counts;
}

std::string report_to_json(const AlignmentReport& report, const std::map<std::string, std::size_t>* breakdown) {
    using nlohmann::ordered_json;
    auto fraction = [](const Fraction& f, bool with_percent) {
        ordered_json j;
        j["num"] = f.num;
        j["den"] = f.den;
        j["value"] = f.value();
        if (with_percent) j["percent"] = f.percent();
        return j;
    };
    ordered_json j;
    j["theta"] = report.theta.value();
    j["theta_exact"] = std::to_string(report.theta.num) + "/" + std::to_string(report.theta.den);
    j["alignment"] = fraction(report.alignment, true);
    j["coverage"] = fraction(report.coverage, true);
    j["lambda"] = fraction(report.lambda, false);
    j["aligned_concept_ids"] = report.aligned_concept_ids;
    j["covered_labels"] = report.covered_labels;
    if (breakdown) j["per_label_aligned_counts"] = *breakdown;
    ordered_json settings;
    settings["concept_count"] = report.concept_count;
    settings["label_count"] = report.label_count;
    settings["filtered"] = report.filtered;
    settings["min_types"] = report.min_types;
    settings["coverage_denominator"] = report.coverage_rule == CoverageDenominator::Encoded ? "encoded" : "human";
    settings["unlabeled_members"] = report.unlabeled_members;
    if (report.layer_id) settings["layer_id"] = *report.layer_id;
    if (report.n_points) settings["n_points"] = *report.n_points;
    j["settings"] = settings;
    return j.dump(2);
}

std::string report_table(const AlignmentReport& report, const std::map<std::string, std::size_t>* breakdown) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "theta" << std::setw(10) << "concepts" << std::setw(8) << "labels"
        << std::setw(10) << "Align. %" << std::setw(9) << "Cov. %" << "lambda\n";
    std::ostringstream lambda;
    lambda << std::fixed << std::setprecision(2) << report.lambda.value();
    std::ostringstream theta;
    theta << report.theta.value();
    out << std::left << std::setw(8) << theta.str() << std::setw(10) << report.concept_count << std::setw(8)
        << report.label_count << std::setw(10) << report.alignment.percent() << std::setw(9)
        << report.coverage.percent() << lambda.str() << '\n';
    if (!report.filtered) out << "(encoded concepts were not type-filtered)\n";
    if (breakdown) {
        out << "\nlabel                aligned concepts\n";
        for (const auto& [label, count] : *breakdown) out << std::left << std::setw(21) << label << count << '\n';
    }
    return out.str();
}

}  // namespace lcd
