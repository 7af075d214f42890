#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vucal/errors.hpp"
#include "vucal/rng.hpp"
#include "vucal/tinylm/tokenizer.hpp"

namespace vucal::tinylm {

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VecF = Eigen::VectorXf;

struct ModelConfig {
    int vocab_size = tok::kMinVocab;
    int d_model = 64;
    int n_layers = 6;
    int n_heads = 4;
    int context_len = 96;
    uint64_t seed = 0;

    void validate() const {
        if (vocab_size < 258) throw ConfigError("vocab_size must be >= 258");
        if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || context_len <= 0) {
            throw ConfigError("model dimensions must be positive");
        }
        if (d_model % n_heads != 0) {
            throw ConfigError("d_model must be divisible by n_heads");
        }
    }

    int head_dim() const { return d_model / n_heads; }
};

struct LayerWeights {
    MatF wq, wk, wv, wo;  // [d, d]
    MatF w1;              // [d, 4d]
    MatF w2;              // [4d, d]
    VecF attn_norm_gain;  // [d]
    VecF mlp_norm_gain;   // [d]
};

struct PlantedMeta {
    bool present = false;
    VecF direction;               // v_star, unit norm
    int injection_layer = -1;     // layer whose attention broadcasts v_star
    std::vector<int> hedge_tokens;
};

struct ModelWeights {
    ModelConfig config;
    MatF embedding;      // [vocab, d]
    MatF pos_embedding;  // [context_len, d]
    MatF unembedding;    // [vocab, d]
    std::vector<LayerWeights> layers;
    PlantedMeta planted;
};

enum class Positions { all_tokens, last_token };

struct InterventionSpec {
    std::vector<int> layers;  // ascending, each < n_layers
    VecF direction;           // length d_model
    float alpha = 0.0f;
    Positions positions = Positions::all_tokens;

    void validate(const ModelConfig& config) const {
        for (int layer : layers) {
            if (layer < 0 || layer >= config.n_layers) {
                throw InputError("intervention layer out of range");
            }
        }
        if (direction.size() != config.d_model) {
            throw InputError("intervention direction length != d_model");
        }
    }
};

struct SamplingParams {
    float temperature = 1.0f;
    float top_p = 0.9f;
    int top_k = 50;
    int max_new_tokens = 12;
    uint64_t rng_seed = 1;

    void validate() const {
        if (!(temperature > 0.0f)) throw InputError("temperature must be > 0");
        if (top_k < 1) throw InputError("top_k must be >= 1");
        if (!(top_p > 0.0f) || top_p > 1.0f) throw InputError("top_p must be in (0, 1]");
        if (max_new_tokens < 0) throw InputError("max_new_tokens must be >= 0");
    }
};

// T=1.0 / P=0.9 / K=50 high-temperature sampling; T=0.1 most-likely pass.
inline SamplingParams high_temperature_defaults() { return SamplingParams{}; }

inline SamplingParams most_likely_defaults() {
    SamplingParams p;
    p.temperature = 0.1f;
    return p;
}

struct GenerationSample {
    std::string text;
    std::vector<int> tokens;       // generated ids, EOS included when emitted
    std::vector<float> logprobs;   // chosen-token log prob under the tempered softmax
    SamplingParams params;
    std::map<int, VecF> last_token_activations;  // last prompt position, per layer
};

struct ForwardResult {
    VecF logits;                 // next-token logits at the final position
    std::map<int, MatF> captured;  // layer -> [T, d] residual stream, post-intervention
};

namespace detail {

inline void rmsnorm_rows(const MatF& in, const VecF& gain, MatF& out) {
    constexpr float kEps = 1e-5f;
    out.resize(in.rows(), in.cols());
    const float inv_d = 1.0f / static_cast<float>(in.cols());
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
        const float ms = in.row(r).squaredNorm() * inv_d;
        const float scale = 1.0f / std::sqrt(ms + kEps);
        out.row(r) = in.row(r).cwiseProduct(gain.transpose()) * scale;
    }
}

inline float gelu(float x) {
    // tanh approximation, fixed so results do not depend on libm's erf
    const float c = 0.7978845608028654f;  // sqrt(2/pi)
    const float inner = c * (x + 0.044715f * x * x * x);
    return 0.5f * x * (1.0f + std::tanh(inner));
}

inline void softmax_rows_causal(MatF& scores) {
    // scores[i][j] valid for j <= i; upper triangle is masked out
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        float max_v = -std::numeric_limits<float>::infinity();
        for (Eigen::Index j = 0; j <= i; ++j) max_v = std::max(max_v, scores(i, j));
        float denom = 0.0f;
        for (Eigen::Index j = 0; j <= i; ++j) {
            scores(i, j) = std::exp(scores(i, j) - max_v);
            denom += scores(i, j);
        }
        const float inv = 1.0f / denom;
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            scores(i, j) = j <= i ? scores(i, j) * inv : 0.0f;
        }
    }
}

inline void apply_interventions(MatF& residual, int layer,
                                std::span<const InterventionSpec> interventions) {
    for (const InterventionSpec& spec : interventions) {
        if (spec.alpha == 0.0f) continue;  // exact no-op keeps bit identity
        if (!std::binary_search(spec.layers.begin(), spec.layers.end(), layer)) continue;
        const VecF shift = spec.alpha * spec.direction;
        if (spec.positions == Positions::all_tokens) {
            residual.rowwise() += shift.transpose();
        } else {
            residual.row(residual.rows() - 1) += shift.transpose();
        }
    }
}

}  // namespace detail

// Full forward pass over `tokens`. Interventions are added to the residual
// stream after each block, before the next layer reads it; captured
// activations are the post-intervention values.
inline ForwardResult forward(const ModelWeights& weights, std::span<const int> tokens,
                             std::span<const InterventionSpec> interventions = {},
                             const std::set<int>& capture = {}) {
    const ModelConfig& config = weights.config;
    const int seq_len = static_cast<int>(tokens.size());
    if (seq_len == 0) throw InputError("token sequence is empty");
    if (seq_len > config.context_len) {
        throw InputError("sequence length " + std::to_string(seq_len) +
                         " exceeds context_len " + std::to_string(config.context_len));
    }
    for (const InterventionSpec& spec : interventions) spec.validate(config);
    for (int layer : capture) {
        if (layer < 0 || layer >= config.n_layers) throw InputError("capture layer out of range");
    }

    const int d = config.d_model;
    const int heads = config.n_heads;
    const int dh = config.head_dim();
    const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));

    MatF residual(seq_len, d);
    for (int pos = 0; pos < seq_len; ++pos) {
        const int id = tokens[pos];
        if (id < 0 || id >= config.vocab_size) throw InputError("token id out of vocabulary");
        residual.row(pos) = weights.embedding.row(id) + weights.pos_embedding.row(pos);
    }

    ForwardResult result;
    MatF normed, q, k, v, attn_concat, scores, h1;
    for (int layer = 0; layer < config.n_layers; ++layer) {
        const LayerWeights& lw = weights.layers[layer];

        detail::rmsnorm_rows(residual, lw.attn_norm_gain, normed);
        q.noalias() = normed * lw.wq;
        k.noalias() = normed * lw.wk;
        v.noalias() = normed * lw.wv;
        attn_concat.resize(seq_len, d);
        for (int h = 0; h < heads; ++h) {
            const auto qh = q.middleCols(h * dh, dh);
            const auto kh = k.middleCols(h * dh, dh);
            const auto vh = v.middleCols(h * dh, dh);
            scores.noalias() = qh * kh.transpose() * inv_sqrt_dh;
            detail::softmax_rows_causal(scores);
            attn_concat.middleCols(h * dh, dh).noalias() = scores * vh;
        }
        residual.noalias() += attn_concat * lw.wo;

        detail::rmsnorm_rows(residual, lw.mlp_norm_gain, normed);
        h1.noalias() = normed * lw.w1;
        for (Eigen::Index i = 0; i < h1.size(); ++i) {
            h1.data()[i] = detail::gelu(h1.data()[i]);
        }
        residual.noalias() += h1 * lw.w2;

        detail::apply_interventions(residual, layer, interventions);
        if (capture.count(layer)) {
            result.captured.emplace(layer, residual);
        }
    }

    result.logits.noalias() = weights.unembedding * residual.row(seq_len - 1).transpose();
    return result;
}

namespace detail {

// Tempered softmax over the full vocabulary; returns probabilities.
inline std::vector<double> tempered_softmax(const VecF& logits, float temperature) {
    const Eigen::Index n = logits.size();
    std::vector<double> probs(static_cast<size_t>(n));
    double max_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        max_v = std::max(max_v, static_cast<double>(logits[i]) / temperature);
    }
    double denom = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        probs[static_cast<size_t>(i)] =
            std::exp(static_cast<double>(logits[i]) / temperature - max_v);
        denom += probs[static_cast<size_t>(i)];
    }
    for (double& p : probs) p /= denom;
    return probs;
}

struct TruncatedDistribution {
    std::vector<int> ids;       // sorted by probability desc, index asc
    std::vector<double> probs;  // renormalized over the kept ids
};

// Temperature -> top-k -> top-p (nucleus) -> renormalize.
inline TruncatedDistribution truncate_distribution(const std::vector<double>& probs,
                                                   int top_k, float top_p) {
    std::vector<int> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs[static_cast<size_t>(a)] != probs[static_cast<size_t>(b)]) {
            return probs[static_cast<size_t>(a)] > probs[static_cast<size_t>(b)];
        }
        return a < b;
    });

    const size_t keep_k = std::min<size_t>(static_cast<size_t>(top_k), order.size());
    size_t keep = keep_k;
    double cumulative = 0.0;
    for (size_t i = 0; i < keep_k; ++i) {
        cumulative += probs[static_cast<size_t>(order[i])];
        if (cumulative >= static_cast<double>(top_p)) {
            keep = i + 1;
            break;
        }
    }

    TruncatedDistribution out;
    out.ids.reserve(keep);
    out.probs.reserve(keep);
    double mass = 0.0;
    for (size_t i = 0; i < keep; ++i) {
        out.ids.push_back(order[i]);
        mass += probs[static_cast<size_t>(order[i])];
    }
    for (size_t i = 0; i < keep; ++i) {
        out.probs.push_back(probs[static_cast<size_t>(out.ids[i])] / mass);
    }
    return out;
}

inline int sample_index(const TruncatedDistribution& dist, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (size_t i = 0; i < dist.ids.size(); ++i) {
        cumulative += dist.probs[i];
        if (u < cumulative) return dist.ids[i];
    }
    return dist.ids.back();
}

}  // namespace detail

// Autoregressive sampling. Interventions are applied at every decode step to
// the configured positions. `capture` records the residual stream at the
// last prompt position (the prefill read probes consume).
inline GenerationSample generate(const ModelWeights& weights, std::span<const int> prompt,
                                 const SamplingParams& params,
                                 std::span<const InterventionSpec> interventions = {},
                                 const std::set<int>& capture = {}) {
    if (prompt.empty()) throw InputError("prompt is empty");
    params.validate();

    GenerationSample sample;
    sample.params = params;

    std::vector<int> sequence(prompt.begin(), prompt.end());
    Rng rng(params.rng_seed);

    for (int step = 0; step < params.max_new_tokens; ++step) {
        if (static_cast<int>(sequence.size()) >= weights.config.context_len) break;
        const std::set<int>& want_capture = (step == 0) ? capture : std::set<int>{};
        ForwardResult fwd = forward(weights, sequence, interventions, want_capture);
        if (step == 0) {
            const Eigen::Index last = static_cast<Eigen::Index>(prompt.size()) - 1;
            for (auto& [layer, acts] : fwd.captured) {
                sample.last_token_activations.emplace(layer, acts.row(last).transpose());
            }
        }

        const std::vector<double> probs =
            detail::tempered_softmax(fwd.logits, params.temperature);
        const detail::TruncatedDistribution dist =
            detail::truncate_distribution(probs, params.top_k, params.top_p);
        const int token = detail::sample_index(dist, rng);

        sample.tokens.push_back(token);
        sample.logprobs.push_back(
            static_cast<float>(std::log(probs[static_cast<size_t>(token)])));
        sequence.push_back(token);
        if (token == tok::kEos) break;
    }

    sample.text = decode(sample.tokens);
    return sample;
}

// Residual-stream vector at the final prompt position for every layer,
// no interventions.
inline std::map<int, VecF> capture_last_token_activations(const ModelWeights& weights,
                                                          std::span<const int> prompt) {
    if (prompt.empty()) throw InputError("prompt is empty");
    std::set<int> all_layers;
    for (int layer = 0; layer < weights.config.n_layers; ++layer) all_layers.insert(layer);
    ForwardResult fwd = forward(weights, prompt, {}, all_layers);
    std::map<int, VecF> out;
    const Eigen::Index last = static_cast<Eigen::Index>(prompt.size()) - 1;
    for (auto& [layer, acts] : fwd.captured) {
        out.emplace(layer, acts.row(last).transpose());
    }
    return out;
}

}  // namespace vucal::tinylm
