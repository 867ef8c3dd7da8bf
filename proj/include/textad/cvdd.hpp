#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "textad/embeddings.hpp"
#include "textad/errors.hpp"
#include "textad/nn/graph.hpp"
#include "textad/nn/optim.hpp"
#include "textad/nn/tensor.hpp"
#include "textad/rng.hpp"

namespace textad::baselines {

using nn::Graph;
using nn::Tensor;
using nn::Var;

enum class AlphaSchedule { constant, linear, logarithmic };

inline AlphaSchedule parse_alpha_schedule(const std::string& s) {
    if (s == "constant") return AlphaSchedule::constant;
    if (s == "linear") return AlphaSchedule::linear;
    if (s == "logarithmic") return AlphaSchedule::logarithmic;
    throw ConfigError("alpha schedule must be constant, linear or logarithmic; got '" + s + "'");
}

struct CvddConfig {
    std::size_t r = 3;     // context vectors / attention heads
    std::size_t d_a = 150;
    std::size_t steps = 300;
    std::size_t batch_size = 32;
    double lr = 0.01;
    AlphaSchedule schedule = AlphaSchedule::logarithmic;
    double alpha_max = 1.0;
    std::uint64_t seed = 0;
    double max_oov_fraction = 0.5;
};

/// alpha at `step` of `steps`: 0 at the start, alpha_max at the end. The
/// logarithmic ramp is evenly spaced on a log scale over four decades.
inline double alpha_at(const CvddConfig& cfg, std::size_t step) {
    if (cfg.schedule == AlphaSchedule::constant || cfg.steps <= 1) return cfg.alpha_max;
    const double t = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
    if (cfg.schedule == AlphaSchedule::linear) return cfg.alpha_max * t;
    return cfg.alpha_max * (std::pow(10.0, 4.0 * t) - 1.0) / (1e4 - 1.0);
}

class CvddModel {
public:
    CvddModel() = default;
    CvddModel(std::size_t p, std::size_t d_a, std::size_t r, std::uint64_t seed) {
        if (r < 1) throw ConfigError("CVDD needs r >= 1");
        if (r > p) throw ConfigError("CVDD needs r <= embedding dimension");
        Rng rng = Rng::stream(seed, 0xC7DD);
        const auto P = static_cast<Eigen::Index>(p);
        w1_ = &store_.add("cvdd.w1", P, static_cast<Eigen::Index>(d_a), nn::Init::xavier_uniform, rng);
        w2_ = &store_.add("cvdd.w2", static_cast<Eigen::Index>(d_a), static_cast<Eigen::Index>(r),
                          nn::Init::xavier_uniform, rng);
        c_ = &store_.add("cvdd.c", P, static_cast<Eigen::Index>(r), nn::Init::xavier_uniform, rng);
    }
    CvddModel(CvddModel&&) noexcept = default;
    CvddModel& operator=(CvddModel&&) noexcept = default;

    [[nodiscard]] nn::ParamStore& params() { return store_; }
    [[nodiscard]] const nn::ParamStore& params() const { return store_; }
    [[nodiscard]] Tensor& W1() { return w1_->value; }
    [[nodiscard]] Tensor& W2() { return w2_->value; }
    [[nodiscard]] Tensor& C() { return c_->value; }
    [[nodiscard]] const Tensor& C() const { return c_->value; }
    [[nodiscard]] std::size_t r() const { return static_cast<std::size_t>(c_->value.cols()); }
    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(c_->value.rows()); }

    struct Forward {
        Var A;      // l x r, columns sum to 1
        Var M;      // p x r
        Var dists;  // 1 x r cosine distances d(c_k, m_k)
    };

    /// A = column-softmax(tanh(H^T W1) W2), M = H A. Requires l >= 1.
    Forward forward(Graph& g, const Eigen::MatrixXd& H) const {
        if (static_cast<std::size_t>(H.rows()) != dim()) throw ShapeError("H rows differ from embedding dimension");
        if (H.cols() == 0) throw ShapeError("H has no columns");
        const Var h = g.constant(Tensor(H));
        const Var ht = g.constant(Tensor(H.transpose()));
        const Var scores = g.matmul(g.tanh(g.matmul(ht, g.param(*w1_))), g.param(*w2_));
        const Var A = g.transpose(g.softmax_rows(g.transpose(scores)));
        const Var M = g.matmul(h, A);
        return {A, M, g.column_cosine_distance(g.param(*c_), M)};
    }

    /// Objective for one sentence: sum_k sigma_k d_k with sigma = softmax(-alpha d).
    Var sentence_loss(Graph& g, const Eigen::MatrixXd& H, double alpha) const {
        const Forward f = forward(g, H);
        const Var sigma = g.softmax_rows(g.scale(f.dists, -alpha));
        return g.sum(g.mul(sigma, f.dists));
    }

    /// ||C^T C - I||_F^2
    Var orthogonality(Graph& g) const {
        const Var c = g.param(*c_);
        const auto r_ = static_cast<Eigen::Index>(r());
        return g.sum_squares(g.sub(g.matmul(g.transpose(c), c), g.constant(Tensor::Identity(r_, r_))));
    }

    /// Mean cosine distance between contexts and attended sentence embeddings,
    /// in [0, 2]. A document without known words scores 1.
    [[nodiscard]] double score(const Eigen::MatrixXd& H) const {
        if (H.cols() == 0) return 1.0;
        Graph g;
        return forward(g, H).dists.value().mean();
    }

private:
    nn::ParamStore store_;
    nn::Parameter* w1_ = nullptr;
    nn::Parameter* w2_ = nullptr;
    nn::Parameter* c_ = nullptr;
};

/// Batch objective: (1/n) sum_i sum_k sigma_k d_k + ||C^T C - I||^2.
inline Var cvdd_loss(Graph& g, const CvddModel& model, std::span<const Eigen::MatrixXd* const> batch, double alpha) {
    std::vector<Var> terms;
    std::vector<double> ws;
    const double w = 1.0 / static_cast<double>(batch.size());
    for (const auto* H : batch) {
        terms.push_back(model.sentence_loss(g, *H, alpha));
        ws.push_back(w);
    }
    terms.push_back(model.orthogonality(g));
    ws.push_back(1.0);
    return g.weighted_sum(terms, ws);
}

struct CvddTrainLog {
    std::vector<double> loss;
    double initial_orthogonality = 0.0;
    double final_orthogonality = 0.0;
};

/// Adam over W1, W2, C on minibatches of sentences with at least one known word.
inline CvddModel cvdd_train(std::span<const EmbeddedDoc> docs, std::size_t p, const CvddConfig& cfg,
                            CvddTrainLog* log = nullptr) {
    check_coverage(docs, cfg.max_oov_fraction);
    std::vector<const Eigen::MatrixXd*> usable;
    for (const auto& d : docs) {
        if (d.H.cols() > 0) usable.push_back(&d.H);
    }
    if (usable.empty()) throw DataError("no document has a known word");
    if (cfg.steps < 1 || cfg.batch_size < 1 || !(cfg.lr > 0.0)) throw ConfigError("invalid CVDD training settings");
    CvddModel model(p, cfg.d_a, cfg.r, cfg.seed);
    nn::AdamW opt(model.params().all(), {cfg.lr, 0.9, 0.999, 1e-8, 0.0, false});
    Rng rng = Rng::stream(cfg.seed, 0xC7DE);
    if (log) {
        Graph g;
        log->initial_orthogonality = model.orthogonality(g).scalar();
    }
    std::vector<const Eigen::MatrixXd*> batch;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        batch.clear();
        for (std::size_t b = 0; b < cfg.batch_size; ++b) batch.push_back(usable[rng.uniform_index(usable.size())]);
        model.params().zero_grad();
        Graph g;
        const Var loss = cvdd_loss(g, model, batch, alpha_at(cfg, step));
        if (!std::isfinite(loss.scalar())) throw NumericalError("CVDD loss diverged at step " + std::to_string(step));
        g.backward(loss);
        opt.step();
        if (log) log->loss.push_back(loss.scalar());
    }
    if (log) {
        Graph g;
        log->final_orthogonality = model.orthogonality(g).scalar();
    }
    return model;
}

}  // namespace textad::baselines
