#include "dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "error.hpp"

namespace lcd {

namespace {

constexpr char kMagic[4] = {'L', 'C', 'E', '1'};
constexpr std::size_t kHeaderBytes = 16;

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
    p[2] = static_cast<unsigned char>(v >> 16);
    p[3] = static_cast<unsigned char>(v >> 24);
}

void swap_floats_if_big_endian(std::span<float> values) {
    if constexpr (std::endian::native == std::endian::big) {
        for (float& f : values) {
            auto bits = std::bit_cast<std::uint32_t>(f);
            bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
            f = std::bit_cast<float>(bits);
        }
    }
}

struct EmbeddingFile {
    std::uint32_t n = 0;
    std::uint32_t dim = 0;
    std::uint32_t layer = 0;
    std::vector<float> values;
};

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open embedding file " + path.string());
    unsigned char header[kHeaderBytes];
    in.read(reinterpret_cast<char*>(header), kHeaderBytes);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes))
        fail("malformed header: embedding file shorter than 16 bytes");
    if (std::memcmp(header, kMagic, 4) != 0) fail("malformed header: bad magic, expected LCE1");
    EmbeddingFile f;
    f.n = read_u32_le(header + 4);
    f.dim = read_u32_le(header + 8);
    f.layer = read_u32_le(header + 12);
    if (f.dim == 0) fail("malformed header: dimension is zero");

    const std::uint64_t count = static_cast<std::uint64_t>(f.n) * f.dim;
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::uint64_t>(in.tellg());
    if (size != kHeaderBytes + count * sizeof(float)) {
        std::ostringstream msg;
        msg << "N/D mismatch: header declares " << f.n << "x" << f.dim << " ("
            << kHeaderBytes + count * sizeof(float) << " bytes) but file has " << size << " bytes";
        fail(msg.str());
    }
    in.seekg(kHeaderBytes);
    f.values.resize(count);
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) fail_io("short read in embedding file " + path.string());
    swap_floats_if_big_endian(f.values);
    return f;
}

TokenRecord parse_token(const std::string& line, std::size_t line_no) {
    using nlohmann::json;
    auto where = [&] { return "token line " + std::to_string(line_no + 1) + ": "; };
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        fail(where() + "invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) fail(where() + "expected a JSON object");
    auto get_uint = [&](const char* key, bool required, std::uint64_t fallback) -> std::uint64_t {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) fail(where() + "missing field \"" + key + "\"");
            return fallback;
        }
        if (!it->is_number_unsigned())
            fail(where() + "field \"" + key + "\" must be a non-negative integer");
        return it->get<std::uint64_t>();
    };
    TokenRecord t;
    t.id = static_cast<std::uint32_t>(get_uint("id", true, 0));
    t.sentence_idx = get_uint("sent", true, 0);
    t.token_idx = get_uint("pos", true, 0);
    t.span_len = static_cast<std::uint32_t>(get_uint("span", false, 1));
    auto word = j.find("word");
    if (word == j.end() || !word->is_string()) fail(where() + "field \"word\" must be a string");
    t.surface = word->get<std::string>();
    auto label = j.find("label");
    if (label != j.end() && !label->is_null()) {
        if (!label->is_string()) fail(where() + "field \"label\" must be a string or null");
        t.label = label->get<std::string>();
    }
    return t;
}

void check_tokens(const std::vector<TokenRecord>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (t.id != i)
            fail("token " + std::to_string(i) + " has id " + std::to_string(t.id) +
                 "; ids must equal their row index");
        if (t.surface.empty()) fail("token " + std::to_string(i) + " has an empty surface");
        if (t.span_len < 1) fail("token " + std::to_string(i) + " has span < 1");
    }
}

}  // namespace

EmbeddingDataset::EmbeddingDataset(std::uint32_t layer_id, std::size_t dim,
                                   std::vector<float> vectors, std::vector<TokenRecord> tokens)
    : layer_id_(layer_id), dim_(dim), vectors_(std::move(vectors)), tokens_(std::move(tokens)) {
    if (dim_ != 0 && vectors_.size() != tokens_.size() * dim_) {
        if (vectors_.size() % dim_ == 0)
            fail("token count mismatch: " + std::to_string(vectors_.size() / dim_) +
                 " embedding rows but " + std::to_string(tokens_.size()) + " token records");
        fail("vector buffer size is not a multiple of dim");
    }
    if (dim_ == 0 && !vectors_.empty()) fail("vectors given for a zero-dimensional dataset");
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
        if (!std::isfinite(vectors_[i]))
            fail("non-finite value at row " + std::to_string(i / dim_) + ", column " +
                 std::to_string(i % dim_));
    }
    check_tokens(tokens_);
}

std::vector<TokenRecord> read_tokens(const std::filesystem::path& tokens_path) {
    std::ifstream in(tokens_path);
    if (!in) fail_io("cannot open token file " + tokens_path.string());
    std::vector<TokenRecord> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            ++line_no;
            continue;
        }
        tokens.push_back(parse_token(line, line_no++));
    }
    return tokens;
}

void write_tokens(const std::vector<TokenRecord>& tokens, const std::filesystem::path& tokens_path) {
    std::ofstream out(tokens_path, std::ios::binary);
    if (!out) fail_io("cannot write token file " + tokens_path.string());
    for (const auto& t : tokens) {
        nlohmann::ordered_json j;
        j["id"] = t.id;
        j["sent"] = t.sentence_idx;
        j["pos"] = t.token_idx;
        j["word"] = t.surface;
        j["label"] = t.label ? nlohmann::ordered_json(*t.label) : nlohmann::ordered_json(nullptr);
        j["span"] = t.span_len;
        out << j.dump() << '\n';
    }
    if (!out) fail_io("write failed for " + tokens_path.string());
}

EmbeddingDataset load_dataset(const std::filesystem::path& embedding_path,
                              const std::filesystem::path& tokens_path) {
    auto emb = read_embedding_file(embedding_path);
    auto tokens = read_tokens(tokens_path);
    if (tokens.size() != emb.n)
        fail("token count mismatch: embedding file has N=" + std::to_string(emb.n) +
             " but token file has " + std::to_string(tokens.size()) + " records");
    return EmbeddingDataset(emb.layer, emb.dim, std::move(emb.values), std::move(tokens));
}

EmbeddingDataset load_tokens_only(const std::filesystem::path& tokens_path) {
    return EmbeddingDataset(0, 0, {}, read_tokens(tokens_path));
}

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& embedding_path,
                  const std::filesystem::path& tokens_path) {
    if (!ds.has_vectors()) fail("cannot save a token-only dataset as an embedding file");
    if (ds.n_points() > UINT32_MAX || ds.dim() > UINT32_MAX) fail("dataset too large for LCE1");
    std::ofstream out(embedding_path, std::ios::binary);
    if (!out) fail_io("cannot write embedding file " + embedding_path.string());
    unsigned char header[kHeaderBytes];
    std::memcpy(header, kMagic, 4);
    write_u32_le(header + 4, static_cast<std::uint32_t>(ds.n_points()));
    write_u32_le(header + 8, static_cast<std::uint32_t>(ds.dim()));
    write_u32_le(header + 12, ds.layer_id());
    out.write(reinterpret_cast<const char*>(header), kHeaderBytes);
    if constexpr (std::endian::native == std::endian::big) {
        std::vector<float> copy(ds.vectors().begin(), ds.vectors().end());
        swap_floats_if_big_endian(copy);
        out.write(reinterpret_cast<const char*>(copy.data()),
                  static_cast<std::streamsize>(copy.size() * sizeof(float)));
    } else {
        out.write(reinterpret_cast<const char*>(ds.vectors().data()),
                  static_cast<std::streamsize>(ds.vectors().size() * sizeof(float)));
    }
    if (!out) fail_io("write failed for " + embedding_path.string());
    write_tokens(ds.tokens(), tokens_path);
}

HumanOntology build_ontology(const EmbeddingDataset& ds) {
    HumanOntology ont;
    for (const auto& t : ds.tokens()) {
        if (t.label) ont.concepts[*t.label].push_back(t.id);
    }
    if (ont.concepts.empty()) fail("cannot build an ontology: no token carries a label");
    return ont;
}

EmbeddingDataset frequency_filter(const EmbeddingDataset& ds, std::uint64_t min_occ,
                                  std::uint64_t max_occ) {
    if (min_occ > max_occ) fail("frequency filter requires min_occ <= max_occ");
    std::unordered_map<std::string_view, std::uint64_t> counts;
    for (const auto& t : ds.tokens()) ++counts[t.surface];

    std::vector<float> vectors;
    std::vector<TokenRecord> tokens;
    for (std::size_t i = 0; i < ds.n_points(); ++i) {
        const auto& t = ds.token(i);
        const auto c = counts[t.surface];
        if (c < min_occ || c > max_occ) continue;
        TokenRecord kept = t;
        kept.id = static_cast<std::uint32_t>(tokens.size());
        tokens.push_back(std::move(kept));
        const auto r = ds.row(i);
        vectors.insert(vectors.end(), r.begin(), r.end());
    }
    if (tokens.empty()) fail("frequency filter produced an empty result");
    return EmbeddingDataset(ds.layer_id(), ds.dim(), std::move(vectors), std::move(tokens));
}

}  // namespace lcd
