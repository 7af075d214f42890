#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "vucal/errors.hpp"
#include "vucal/rng.hpp"
#include "vucal/tinylm/model.hpp"
#include "vucal/tinylm/tokenizer.hpp"

namespace vucal::tinylm {

// Deterministic byte-successor language shared by the planted model and the
// synthetic dataset generator. Questions ending in a "known" byte have a
// unique chain continuation the model is built to emit; "unknown" bytes have
// no continuation signal, so sampled answers scatter.
struct PlantedLanguage {
    std::vector<int> known_bytes;    // bytes with a planted successor chain
    std::vector<int> unknown_bytes;  // bytes with flat continuation logits
    std::map<int, int> successor;    // byte -> next byte, chain ends map to EOS

    static PlantedLanguage derive(uint64_t model_seed) {
        PlantedLanguage lang;
        for (int c = 'a'; c <= 'm'; ++c) lang.known_bytes.push_back(c);
        for (int c = 'n'; c <= 'z'; ++c) lang.unknown_bytes.push_back(c);

        std::vector<int> shuffled = lang.known_bytes;
        Rng rng(derive_seed(model_seed, "planted-chains"));
        for (size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
        }
        // two chains (6 and 7 bytes) over the known alphabet
        const size_t split = 6;
        for (size_t i = 0; i < shuffled.size(); ++i) {
            const bool chain_end = (i + 1 == split) || (i + 1 == shuffled.size());
            lang.successor[shuffled[i]] = chain_end ? tok::kEos : shuffled[i + 1];
        }
        return lang;
    }

    bool is_known(int byte) const {
        return std::find(known_bytes.begin(), known_bytes.end(), byte) != known_bytes.end();
    }

    // The deterministic continuation the model emits for a known topic byte.
    std::string chain_answer(int topic_byte) const {
        std::string out;
        int current = topic_byte;
        while (true) {
            auto it = successor.find(current);
            if (it == successor.end() || it->second == tok::kEos) break;
            current = it->second;
            out.push_back(static_cast<char>(current));
        }
        return out;
    }

    // Topic bytes whose chain continuation has at least `min_len` characters.
    std::vector<int> usable_topics(size_t min_len = 2) const {
        std::vector<int> out;
        for (int byte : known_bytes) {
            if (chain_answer(byte).size() >= min_len) out.push_back(byte);
        }
        return out;
    }
};

namespace planted_detail {

// Construction constants. Calibrated so that, at temperature 1.0 with the
// default sampler, a +mode prompt hedges on roughly half its decode steps,
// a -mode prompt emits confidence markers instead, a neutral prompt does
// neither, and known-byte chains survive nucleus truncation intact.
struct Constants {
    float mode_scale = 1.0f;       // mode embeddings are +/- mode_scale * v_star
    float pos_dc = 0.5f;           // DC component along c_hat in every position row
    float mode_slot = 1.0f;        // pi_hat component marking position 1
    float sigma_pos = 0.02f;
    float sigma_block = 0.02f;
    float qk_scale = 1.414f;       // per-factor; product ~2.0
    float value_scale = 0.4f;
    float kappa = 8.5f;            // successor-chain logit boost
    float sigma_unembed = 0.35f;
    float hedge_gain = 2.22f;      // logit(hedge) ~ gain * (h . v_star) + bias * (h . c_hat)
    float hedge_bias = -1.06f;
    float sure_gain = 2.22f;       // same, along -v_star
    float sure_bias = -1.06f;
    float special_suppression = 8.0f;
};

inline MatF gaussian_matrix(int rows, int cols, float sigma, Rng& rng) {
    MatF m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            m(r, c) = sigma * rng.gaussian_f();
        }
    }
    return m;
}

inline VecF random_unit(int d, Rng& rng) {
    VecF v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.gaussian_f();
    const double norm = v.cast<double>().norm();
    return (v.cast<double>() / norm).cast<float>();
}

// Unit vector orthogonal to everything in `basis`.
inline VecF random_unit_orthogonal(int d, Rng& rng, const std::vector<VecF>& basis) {
    VecF v = random_unit(d, rng);
    for (const VecF& b : basis) {
        v -= v.dot(b) * b;
    }
    const double norm = v.cast<double>().norm();
    return (v.cast<double>() / norm).cast<float>();
}

}  // namespace planted_detail

// Builds a toy model with a planted verbal-uncertainty direction v_star:
//  (a) the two mode tokens embed as +c*v_star and -c*v_star;
//  (b) blocks are near-identity (small seeded noise), so the v_star component
//      of the residual stream persists to the final layer; one attention head
//      at `injection_layer` reads the v_star component of the position-1
//      token (the mode slot) and broadcasts it to every position;
//  (c) the unembedding maps +v_star to raised logits on `hedge_tokens` and
//      -v_star to raised logits on the confidence token.
// Byte-successor chains (PlantedLanguage) give some prompts a deterministic
// continuation so semantic uncertainty varies across questions.
inline ModelWeights build_planted_model(const ModelConfig& config,
                                        const std::vector<int>& hedge_tokens,
                                        int injection_layer) {
    config.validate();
    if (injection_layer < 0 || injection_layer >= config.n_layers) {
        throw ConfigError("injection_layer out of range");
    }
    if (config.vocab_size < tok::kMinVocab) {
        throw ConfigError("planted model needs vocab_size >= " +
                          std::to_string(tok::kMinVocab));
    }
    if (hedge_tokens.empty()) throw ConfigError("hedge_tokens is empty");
    for (int t : hedge_tokens) {
        if (t < 0 || t >= config.vocab_size) throw ConfigError("hedge token out of vocabulary");
    }
    if (config.d_model < 8) throw ConfigError("planted model needs d_model >= 8");

    const planted_detail::Constants k;
    const int d = config.d_model;
    const int dh = config.head_dim();

    Rng dir_rng(derive_seed(config.seed, "planted-directions"));
    const VecF v_star = planted_detail::random_unit(d, dir_rng);
    const VecF c_hat = planted_detail::random_unit_orthogonal(d, dir_rng, {v_star});
    const VecF pi_hat = planted_detail::random_unit_orthogonal(d, dir_rng, {v_star, c_hat});

    ModelWeights weights;
    weights.config = config;

    Rng emb_rng(derive_seed(config.seed, "planted-embeddings"));
    weights.embedding.resize(config.vocab_size, d);
    for (int t = 0; t < config.vocab_size; ++t) {
        weights.embedding.row(t) = planted_detail::random_unit(d, emb_rng).transpose();
    }
    weights.embedding.row(tok::kModeUncertain) = (k.mode_scale * v_star).transpose();
    weights.embedding.row(tok::kModeCertain) = (-k.mode_scale * v_star).transpose();

    Rng pos_rng(derive_seed(config.seed, "planted-positions"));
    weights.pos_embedding =
        planted_detail::gaussian_matrix(config.context_len, d, k.sigma_pos, pos_rng);
    for (int p = 0; p < config.context_len; ++p) {
        weights.pos_embedding.row(p) += (k.pos_dc * c_hat).transpose();
    }
    if (config.context_len > 1) {
        weights.pos_embedding.row(1) += (k.mode_slot * pi_hat).transpose();
    }

    weights.layers.resize(config.n_layers);
    for (int layer = 0; layer < config.n_layers; ++layer) {
        Rng lrng(derive_seed(config.seed, {fnv1a64("planted-layer"), static_cast<uint64_t>(layer)}));
        LayerWeights& lw = weights.layers[layer];
        lw.wq = planted_detail::gaussian_matrix(d, d, k.sigma_block, lrng);
        lw.wk = planted_detail::gaussian_matrix(d, d, k.sigma_block, lrng);
        lw.wv = planted_detail::gaussian_matrix(d, d, k.sigma_block, lrng);
        lw.wo = planted_detail::gaussian_matrix(d, d, k.sigma_block, lrng);
        lw.w1 = planted_detail::gaussian_matrix(d, 4 * d, k.sigma_block, lrng);
        lw.w2 = planted_detail::gaussian_matrix(4 * d, d, k.sigma_block, lrng);
        lw.attn_norm_gain = VecF::Ones(d);
        lw.mlp_norm_gain = VecF::Ones(d);
    }

    // Broadcast head: head 0 of the injection layer. Queries read the DC
    // component (positive at every position), keys read the position-1
    // marker, values carry the v_star component of the attended token.
    {
        LayerWeights& lw = weights.layers[injection_layer];
        Rng head_rng(derive_seed(config.seed, "planted-head"));
        const VecF kappa_hat = planted_detail::random_unit(dh, head_rng);
        lw.wq.leftCols(dh) = k.qk_scale * c_hat * kappa_hat.transpose();
        lw.wk.leftCols(dh) = k.qk_scale * pi_hat * kappa_hat.transpose();
        lw.wv.leftCols(dh).setZero();
        lw.wv.col(0) = k.value_scale * v_star;
        lw.wo.topRows(dh).setZero();
        lw.wo.row(0) = v_star.transpose();
    }

    const PlantedLanguage lang = PlantedLanguage::derive(config.seed);

    Rng unemb_rng(derive_seed(config.seed, "planted-unembedding"));
    weights.unembedding =
        planted_detail::gaussian_matrix(config.vocab_size, d, k.sigma_unembed, unemb_rng);
    for (const auto& [byte, next] : lang.successor) {
        weights.unembedding.row(next) += k.kappa * weights.embedding.row(byte);
    }
    for (int h : hedge_tokens) {
        weights.unembedding.row(h) =
            (k.hedge_gain * v_star + k.hedge_bias * c_hat).transpose();
    }
    weights.unembedding.row(tok::kSure) =
        (-k.sure_gain * v_star + k.sure_bias * c_hat).transpose();
    // structural tokens should never be sampled
    for (int t : {tok::kBos, tok::kModeCertain, tok::kModeUncertain}) {
        weights.unembedding.row(t) -= (k.special_suppression * c_hat).transpose();
    }

    weights.planted.present = true;
    weights.planted.direction = v_star;
    weights.planted.injection_layer = injection_layer;
    weights.planted.hedge_tokens = hedge_tokens;
    return weights;
}

// Prompt layout the planted model expects: BOS, then the mode slot, then the
// question bytes. A neutral prompt omits the mode token (content shifts into
// the slot, which then carries no v_star component).
enum class PromptMode { neutral, certain, uncertain };

inline std::vector<int> build_prompt(std::string_view question, PromptMode mode) {
    std::vector<int> ids;
    ids.reserve(question.size() + 2);
    ids.push_back(tok::kBos);
    if (mode == PromptMode::certain) ids.push_back(tok::kModeCertain);
    if (mode == PromptMode::uncertain) ids.push_back(tok::kModeUncertain);
    const std::vector<int> bytes = encode(question);
    ids.insert(ids.end(), bytes.begin(), bytes.end());
    return ids;
}

}  // namespace vucal::tinylm
