#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vucal/errors.hpp"
#include "vucal/tinylm/model.hpp"

namespace vucal::tinylm {

// Versioned little-endian binary weights file. All matrices are stored
// row-major as raw float32, so a round trip is bit-exact.
namespace weights_io {

inline constexpr char kMagic[4] = {'V', 'U', 'T', 'L'};
inline constexpr uint32_t kVersion = 1;

namespace detail {

inline void write_bytes(std::ostream& out, const void* data, size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

inline void read_bytes(std::istream& in, void* data, size_t size) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (!in) throw DataError("weights file truncated");
}

inline void write_i32(std::ostream& out, int32_t v) { write_bytes(out, &v, sizeof v); }
inline void write_u32(std::ostream& out, uint32_t v) { write_bytes(out, &v, sizeof v); }
inline void write_u64(std::ostream& out, uint64_t v) { write_bytes(out, &v, sizeof v); }

inline int32_t read_i32(std::istream& in) {
    int32_t v = 0;
    read_bytes(in, &v, sizeof v);
    return v;
}
inline uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    read_bytes(in, &v, sizeof v);
    return v;
}
inline uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    read_bytes(in, &v, sizeof v);
    return v;
}

inline void write_matrix(std::ostream& out, const MatF& m) {
    write_i32(out, static_cast<int32_t>(m.rows()));
    write_i32(out, static_cast<int32_t>(m.cols()));
    write_bytes(out, m.data(), sizeof(float) * static_cast<size_t>(m.size()));
}

inline MatF read_matrix(std::istream& in) {
    const int32_t rows = read_i32(in);
    const int32_t cols = read_i32(in);
    if (rows < 0 || cols < 0 || rows > (1 << 22) || cols > (1 << 22)) {
        throw DataError("weights file has implausible matrix shape");
    }
    MatF m(rows, cols);
    read_bytes(in, m.data(), sizeof(float) * static_cast<size_t>(m.size()));
    return m;
}

inline void write_vector(std::ostream& out, const VecF& v) {
    write_i32(out, static_cast<int32_t>(v.size()));
    write_bytes(out, v.data(), sizeof(float) * static_cast<size_t>(v.size()));
}

inline VecF read_vector(std::istream& in) {
    const int32_t n = read_i32(in);
    if (n < 0 || n > (1 << 22)) throw DataError("weights file has implausible vector size");
    VecF v(n);
    read_bytes(in, v.data(), sizeof(float) * static_cast<size_t>(v.size()));
    return v;
}

}  // namespace detail

inline void save(const ModelWeights& weights, std::ostream& out) {
    using namespace detail;
    write_bytes(out, kMagic, 4);
    write_u32(out, kVersion);

    const ModelConfig& c = weights.config;
    write_i32(out, c.vocab_size);
    write_i32(out, c.d_model);
    write_i32(out, c.n_layers);
    write_i32(out, c.n_heads);
    write_i32(out, c.context_len);
    write_u64(out, c.seed);

    write_u32(out, weights.planted.present ? 1 : 0);
    if (weights.planted.present) {
        write_i32(out, weights.planted.injection_layer);
        write_i32(out, static_cast<int32_t>(weights.planted.hedge_tokens.size()));
        for (int t : weights.planted.hedge_tokens) write_i32(out, t);
        write_vector(out, weights.planted.direction);
    }

    write_matrix(out, weights.embedding);
    write_matrix(out, weights.pos_embedding);
    write_matrix(out, weights.unembedding);
    for (const LayerWeights& lw : weights.layers) {
        write_matrix(out, lw.wq);
        write_matrix(out, lw.wk);
        write_matrix(out, lw.wv);
        write_matrix(out, lw.wo);
        write_matrix(out, lw.w1);
        write_matrix(out, lw.w2);
        write_vector(out, lw.attn_norm_gain);
        write_vector(out, lw.mlp_norm_gain);
    }
}

inline ModelWeights load(std::istream& in) {
    using namespace detail;
    char magic[4];
    read_bytes(in, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw VersioningError("not a weights file");
    const uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw VersioningError("unsupported weights version " + std::to_string(version));
    }

    ModelWeights weights;
    ModelConfig& c = weights.config;
    c.vocab_size = read_i32(in);
    c.d_model = read_i32(in);
    c.n_layers = read_i32(in);
    c.n_heads = read_i32(in);
    c.context_len = read_i32(in);
    c.seed = read_u64(in);
    c.validate();

    if (read_u32(in) != 0) {
        weights.planted.present = true;
        weights.planted.injection_layer = read_i32(in);
        const int32_t n_hedge = read_i32(in);
        for (int32_t i = 0; i < n_hedge; ++i) {
            weights.planted.hedge_tokens.push_back(read_i32(in));
        }
        weights.planted.direction = read_vector(in);
    }

    weights.embedding = read_matrix(in);
    weights.pos_embedding = read_matrix(in);
    weights.unembedding = read_matrix(in);
    weights.layers.resize(c.n_layers);
    for (LayerWeights& lw : weights.layers) {
        lw.wq = read_matrix(in);
        lw.wk = read_matrix(in);
        lw.wv = read_matrix(in);
        lw.wo = read_matrix(in);
        lw.w1 = read_matrix(in);
        lw.w2 = read_matrix(in);
        lw.attn_norm_gain = read_vector(in);
        lw.mlp_norm_gain = read_vector(in);
    }
    return weights;
}

inline void save_file(const ModelWeights& weights, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    save(weights, out);
    if (!out) throw DataError("failed writing " + path);
}

inline ModelWeights load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return load(in);
}

}  // namespace weights_io

}  // namespace vucal::tinylm
