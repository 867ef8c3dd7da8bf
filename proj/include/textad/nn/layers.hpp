#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "textad/errors.hpp"
#include "textad/nn/graph.hpp"
#include "textad/nn/tensor.hpp"

namespace textad::nn {

/// Key-validity mask: 1 for positions that may be attended to, 0 for PAD.
using KeyMask = std::vector<std::uint8_t>;

// ---------------------------------------------------------------------------
// Building blocks

struct Linear {
    Parameter* weight = nullptr;  // in x out
    Parameter* bias = nullptr;    // 1 x out

    static Linear create(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng) {
        return {&store.add(name + ".w", in, out, Init::xavier_uniform, rng),
                &store.add(name + ".b", 1, out, Init::zeros, rng)};
    }

    Var operator()(Graph& g, Var x) const { return g.add_row(g.matmul(x, g.param(*weight)), g.param(*bias)); }
};

struct LayerNorm {
    Parameter* gain = nullptr;
    Parameter* bias = nullptr;

    static LayerNorm create(ParamStore& store, const std::string& name, Eigen::Index dim, Rng& rng) {
        return {&store.add(name + ".gain", 1, dim, Init::ones, rng), &store.add(name + ".bias", 1, dim, Init::zeros, rng)};
    }

    Var operator()(Graph& g, Var x) const { return g.layer_norm(x, g.param(*gain), g.param(*bias)); }
};

/// softmax(Q K^T / sqrt(d_k)) V with PAD keys excluded.
inline Var attention(Graph& g, Var q, Var k, Var v, std::span<const std::uint8_t> key_valid) {
    if (q.cols() != k.cols() || k.rows() != v.rows()) throw ShapeError("attention: Q/K/V shapes do not conform");
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Var scores = g.scale(g.matmul_nt(q, k), inv_sqrt_dk);
    return g.matmul(g.softmax_rows(scores, key_valid), v);
}

/// Multi-head self-attention. The per-head projections W_i^Q, W_i^K, W_i^V are
/// the column blocks of wq, wk, wv; the rows of wo are blocked the same way.
struct MultiHeadAttention {
    Linear wq, wk, wv, wo;
    std::size_t heads = 1;

    static MultiHeadAttention create(ParamStore& store, const std::string& name, Eigen::Index d_model,
                                     std::size_t heads, Rng& rng) {
        if (heads == 0 || d_model % static_cast<Eigen::Index>(heads) != 0) {
            throw ConfigError("d_model must be divisible by the number of heads");
        }
        return {Linear::create(store, name + ".q", d_model, d_model, rng),
                Linear::create(store, name + ".k", d_model, d_model, rng),
                Linear::create(store, name + ".v", d_model, d_model, rng),
                Linear::create(store, name + ".o", d_model, d_model, rng), heads};
    }

    Var operator()(Graph& g, Var x, std::span<const std::uint8_t> key_valid) const {
        const Var q = wq(g, x), k = wk(g, x), v = wv(g, x);
        const Eigen::Index dk = q.cols() / static_cast<Eigen::Index>(heads);
        std::vector<Var> outs;
        outs.reserve(heads);
        for (std::size_t h = 0; h < heads; ++h) {
            const Eigen::Index off = static_cast<Eigen::Index>(h) * dk;
            outs.push_back(attention(g, g.slice_cols(q, off, dk), g.slice_cols(k, off, dk), g.slice_cols(v, off, dk),
                                     key_valid));
        }
        Var cat = heads == 1 ? outs[0] : g.concat_cols(outs);
        return wo(g, cat);
    }
};

/// max(0, x W1 + b1) W2 + b2
struct FeedForward {
    Linear in, out;

    static FeedForward create(ParamStore& store, const std::string& name, Eigen::Index d_model, Eigen::Index d_ff,
                              Rng& rng) {
        return {Linear::create(store, name + ".in", d_model, d_ff, rng),
                Linear::create(store, name + ".out", d_ff, d_model, rng)};
    }

    Var operator()(Graph& g, Var x) const { return out(g, g.relu(in(g, x))); }
};

// ---------------------------------------------------------------------------
// Encoder

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t max_len = 0;  // T
    std::size_t d_emb = 128;
    std::size_t d_model = 256;
    std::size_t heads = 4;
    std::size_t d_ff = 1024;
    std::size_t layers = 4;
    bool pre_norm = true;
    double dropout = 0.1;
};

struct EncoderBlock {
    LayerNorm ln_attn, ln_ffn;
    MultiHeadAttention attn;
    FeedForward ffn;
};

/// Token + positional embeddings, a projection to d_model, then a stack of
/// residual self-attention / feed-forward blocks. With pre-norm wiring a final
/// layer norm closes a non-empty stack.
class Encoder {
public:
    Encoder() = default;

    /// Creates the encoder's own parameters under `name`. The embedding
    /// tables are passed in so several encoders can share them.
    Encoder(ParamStore& store, const std::string& name, const EncoderConfig& cfg, Parameter& token_emb,
            Parameter& pos_emb, Rng& rng)
        : cfg_(cfg), token_emb_(&token_emb), pos_emb_(&pos_emb) {
        if (token_emb.value.cols() != static_cast<Eigen::Index>(cfg.d_emb) ||
            pos_emb.value.cols() != static_cast<Eigen::Index>(cfg.d_emb)) {
            throw ConfigError("embedding tables do not match d_emb");
        }
        proj_ = Linear::create(store, name + ".proj", static_cast<Eigen::Index>(cfg.d_emb),
                               static_cast<Eigen::Index>(cfg.d_model), rng);
        for (std::size_t l = 0; l < cfg.layers; ++l) {
            const std::string p = name + ".layer" + std::to_string(l);
            blocks_.push_back({LayerNorm::create(store, p + ".ln_attn", static_cast<Eigen::Index>(cfg.d_model), rng),
                               LayerNorm::create(store, p + ".ln_ffn", static_cast<Eigen::Index>(cfg.d_model), rng),
                               MultiHeadAttention::create(store, p + ".attn", static_cast<Eigen::Index>(cfg.d_model),
                                                          cfg.heads, rng),
                               FeedForward::create(store, p + ".ffn", static_cast<Eigen::Index>(cfg.d_model),
                                                   static_cast<Eigen::Index>(cfg.d_ff), rng)});
        }
        if (cfg.pre_norm && cfg.layers > 0) {
            final_ln_ = LayerNorm::create(store, name + ".ln_final", static_cast<Eigen::Index>(cfg.d_model), rng);
        }
    }

    [[nodiscard]] const EncoderConfig& config() const { return cfg_; }

    /// Contextual embeddings, one row per input id. `key_valid` marks non-PAD
    /// positions; pass an empty span when every position is valid.
    /// `dropout_rng` enables dropout (training); null means evaluation.
    Var forward(Graph& g, std::span<const std::int32_t> ids, std::span<const std::uint8_t> key_valid,
                Rng* dropout_rng = nullptr) const {
        const auto n = static_cast<Eigen::Index>(ids.size());
        if (n == 0 || n > pos_emb_->value.rows()) throw ShapeError("encoder input length out of range");
        KeyMask all_valid;
        if (key_valid.empty()) {
            all_valid.assign(ids.size(), 1);
            key_valid = all_valid;
        }
        if (key_valid.size() != ids.size()) throw ShapeError("key mask length differs from input length");
        Var emb = g.add(g.gather_rows(g.param(*token_emb_), ids), g.slice_rows(g.param(*pos_emb_), 0, n));
        Var h = proj_(g, g.dropout(emb, cfg_.dropout, dropout_rng));
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            const EncoderBlock& b = blocks_[l];
            if (cfg_.pre_norm) {
                h = g.add(h, g.dropout(b.attn(g, b.ln_attn(g, h), key_valid), cfg_.dropout, dropout_rng));
                h = g.add(h, g.dropout(b.ffn(g, b.ln_ffn(g, h)), cfg_.dropout, dropout_rng));
            } else {
                h = b.ln_attn(g, g.add(h, g.dropout(b.attn(g, h, key_valid), cfg_.dropout, dropout_rng)));
                h = b.ln_ffn(g, g.add(h, g.dropout(b.ffn(g, h), cfg_.dropout, dropout_rng)));
            }
            if (!all_finite(h.value())) {
                throw NumericalError("encoder layer " + std::to_string(l) + " produced non-finite activations");
            }
        }
        if (final_ln_.gain != nullptr) h = final_ln_(g, h);
        return h;
    }

private:
    EncoderConfig cfg_;
    Parameter* token_emb_ = nullptr;
    Parameter* pos_emb_ = nullptr;
    Linear proj_;
    std::vector<EncoderBlock> blocks_;
    LayerNorm final_ln_;
};

/// Stable softmax and -log p[target] for a single logit vector.
struct SoftmaxXent {
    double loss = 0.0;
    std::vector<double> probs;
};

inline SoftmaxXent softmax_xent(std::span<const double> logits, std::size_t target) {
    if (logits.empty()) throw ShapeError("softmax_xent: empty logits");
    if (target >= logits.size()) throw RangeError("softmax_xent: target out of range");
    double mx = logits[0];
    for (double z : logits) mx = std::max(mx, z);
    SoftmaxXent out;
    out.probs.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.probs[i] = std::exp(logits[i] - mx);
        sum += out.probs[i];
    }
    for (double& p : out.probs) p /= sum;
    out.loss = std::log(sum) + mx - logits[target];
    return out;
}

}  // namespace textad::nn
