#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "error.hpp"
#include "random.hpp"

namespace lcd {

namespace {

std::string label_name(std::size_t c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "C%03zu", c);
    return buf;
}

std::string word_name(std::size_t c, std::size_t w) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "c%03zuw%02zu", c, w);
    return buf;
}

// Inverse-CDF sampler over a fixed discrete distribution.
class Discrete {
public:
    explicit Discrete(const std::vector<double>& weights) : cdf_(weights.size()) {
        std::partial_sum(weights.begin(), weights.end(), cdf_.begin());
    }
    std::size_t operator()(Rng& rng) const {
        const double r = uniform01(rng) * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), r);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

}  // namespace

std::vector<std::size_t> zipf_sizes(std::size_t n, std::size_t components, double skew) {
    if (components == 0 || components > n) fail("need 1 <= n_components <= n_points");
    std::vector<double> w(components);
    for (std::size_t r = 0; r < components; ++r) w[r] = std::pow(static_cast<double>(r + 1), -skew);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const std::size_t rest = n - components;
    std::vector<std::size_t> sizes(components, 1);
    std::vector<double> remainder(components);
    std::size_t assigned = 0;
    for (std::size_t r = 0; r < components; ++r) {
        const double share = static_cast<double>(rest) * w[r] / total;
        const auto whole = static_cast<std::size_t>(std::floor(share));
        sizes[r] += whole;
        assigned += whole;
        remainder[r] = share - static_cast<double>(whole);
    }
    std::vector<std::size_t> order(components);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < rest; ++i, ++assigned) ++sizes[order[i % components]];
    return sizes;
}

SynthData generate(const SynthConfig& cfg) {
    if (cfg.dim == 0) fail("synthetic data needs dim >= 1");
    if (cfg.n_components == 0 || cfg.n_components > cfg.n_points)
        fail("synthetic data needs 1 <= n_components <= n_points");
    if (!(cfg.separation > 0.0)) fail("separation must be positive");
    if (!(cfg.label_skew >= 0.0)) fail("label_skew must be non-negative");
    if (!(cfg.phrasal_fraction >= 0.0 && cfg.phrasal_fraction <= 1.0)) fail("phrasal_fraction must lie in [0, 1]");
    if (cfg.n_points > UINT32_MAX) fail("too many points");

    const std::size_t n = cfg.n_points;
    const std::size_t dim = cfg.dim;
    Rng rng = make_rng(cfg.seed, 0x5717);

    SynthData out;
    out.component_sizes = zipf_sizes(n, cfg.n_components, cfg.label_skew);

    // Centre coordinates ~ N(0, s^2) with 2 * dim * s^2 = separation^2.
    const double centre_sd = cfg.separation / std::sqrt(2.0 * static_cast<double>(dim));
    std::vector<double> centres(cfg.n_components * dim);
    for (double& v : centres) v = centre_sd * standard_normal(rng);

    std::vector<std::int32_t> component_of;
    component_of.reserve(n);
    for (std::size_t c = 0; c < cfg.n_components; ++c)
        component_of.insert(component_of.end(), out.component_sizes[c], static_cast<std::int32_t>(c));
    for (std::size_t i = n; i > 1; --i) std::swap(component_of[i - 1], component_of[uniform_index(rng, i)]);

    std::vector<Discrete> vocab;
    vocab.reserve(cfg.n_components);
    for (std::size_t c = 0; c < cfg.n_components; ++c) {
        const auto v = cfg.vocab_base +
            static_cast<std::size_t>(std::floor(cfg.vocab_log_scale * std::log(static_cast<double>(out.component_sizes[c]))));
        std::vector<double> w(std::max<std::size_t>(v, 1));
        for (std::size_t r = 0; r < w.size(); ++r) w[r] = std::pow(static_cast<double>(r + 1), -cfg.word_skew);
        vocab.emplace_back(w);
    }

    const auto phrasal_rows = static_cast<std::size_t>(std::llround(cfg.phrasal_fraction * static_cast<double>(n)));
    std::vector<char> phrasal(n, 0);
    std::fill(phrasal.begin(), phrasal.begin() + static_cast<std::ptrdiff_t>(phrasal_rows), 1);
    for (std::size_t i = n; i > 1; --i) std::swap(phrasal[i - 1], phrasal[uniform_index(rng, i)]);

    std::vector<float> vectors(n * dim);
    std::vector<TokenRecord> tokens(n);
    constexpr std::size_t kSentenceLength = 20;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(component_of[i]);
        for (std::size_t d = 0; d < dim; ++d)
            vectors[i * dim + d] = static_cast<float>(centres[c * dim + d] + standard_normal(rng));
        auto& t = tokens[i];
        t.id = static_cast<std::uint32_t>(i);
        t.sentence_idx = i / kSentenceLength;
        t.token_idx = i % kSentenceLength;
        t.label = label_name(c);
        t.span_len = phrasal[i] ? static_cast<std::uint32_t>(2 + uniform_index(rng, 4)) : 1u;
        t.surface = word_name(c, vocab[c](rng));
        for (std::uint32_t extra = 1; extra < t.span_len; ++extra) t.surface += "_" + word_name(c, vocab[c](rng));
        if (t.span_len >= 2) ++out.planted_spans[t.span_len];
    }
    out.component_of = std::move(component_of);
    out.dataset = EmbeddingDataset(cfg.layer_id, dim, std::move(vectors), std::move(tokens));
    return out;
}

}  // namespace lcd
