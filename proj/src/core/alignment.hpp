#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concepts.hpp"
#include "dataset.hpp"

namespace lcd {

/// Non-negative fraction kept in lowest terms.
struct Fraction {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    static Fraction make(std::uint64_t num, std::uint64_t den);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    /// Percentage rounded half-to-even to one decimal, e.g. "47.8".
    std::string percent() const;
    bool operator==(const Fraction&) const = default;
};

/// Alignment threshold held as an exact ratio so 0.95 means 95/100.
struct Theta {
    std::uint64_t num = 95;
    std::uint64_t den = 100;

    /// Exact decimal parse ("0.95", "1", "0.925").
    static Theta parse(const std::string& text);
    /// Rounds to the nearest multiple of 1e-6.
    static Theta from_double(double value);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

enum class CoverageDenominator {
    Encoded,  // |C_e ∩ C_h| / |C_e| >= theta, the same ratio as alignment (default)
    Human,    // |C_e ∩ C_h| / |C_h| >= theta
};

struct ConceptAlignment {
    std::int32_t concept_id = 0;
    std::size_t size = 0;
    std::size_t unlabeled = 0;
    std::vector<std::string> aligned_labels;
};

struct AlignmentReport {
    Theta theta;
    CoverageDenominator coverage_rule = CoverageDenominator::Encoded;
    Fraction alignment;  // sum alpha / |C_E|
    Fraction coverage;   // sum kappa / |C_H|
    Fraction lambda;     // (alignment + coverage) / 2
    std::vector<std::int32_t> aligned_concept_ids;
    std::vector<std::string> covered_labels;
    std::vector<ConceptAlignment> per_concept;
    std::size_t concept_count = 0;
    std::size_t label_count = 0;
    bool filtered = false;
    std::size_t min_types = 0;
    std::size_t unlabeled_members = 0;
    std::optional<std::uint32_t> layer_id;
    std::optional<std::size_t> n_points;
};

AlignmentReport theta_alignment(const ConceptSet& cs, const HumanOntology& ont, Theta theta,
                                CoverageDenominator rule = CoverageDenominator::Encoded);

/// Label -> number of encoded concepts aligned to it (every ontology label listed).
std::map<std::string, std::size_t> per_label_breakdown(const AlignmentReport& report, const HumanOntology& ont);

std::string report_to_json(const AlignmentReport& report,
                           const std::map<std::string, std::size_t>* breakdown = nullptr);
std::string report_table(const AlignmentReport& report,
                         const std::map<std::string, std::size_t>* breakdown = nullptr);

}  // namespace lcd
