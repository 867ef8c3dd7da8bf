#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "textad/nn/checkpoint.hpp"
#include "textad/nn/grad_check.hpp"
#include "textad/nn/layers.hpp"
#include "textad/nn/optim.hpp"

namespace textad::nn {
namespace {

Tensor random_tensor(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.normal();
    return t;
}

/// Loop-based attention used as an independent reference.
Tensor reference_attention(const Tensor& q, const Tensor& k, const Tensor& v, const KeyMask& valid) {
    const Eigen::Index n = q.rows(), m = k.rows(), d = q.cols();
    Tensor out = Tensor::Zero(n, v.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> s(static_cast<std::size_t>(m), 0.0);
        double mx = -1e300;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (!valid.empty() && !valid[static_cast<std::size_t>(j)]) continue;
            double dot = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) dot += q(i, c) * k(j, c);
            s[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(d));
            mx = std::max(mx, s[static_cast<std::size_t>(j)]);
        }
        double z = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (!valid.empty() && !valid[static_cast<std::size_t>(j)]) {
                s[static_cast<std::size_t>(j)] = 0.0;
                continue;
            }
            s[static_cast<std::size_t>(j)] = std::exp(s[static_cast<std::size_t>(j)] - mx);
            z += s[static_cast<std::size_t>(j)];
        }
        for (Eigen::Index j = 0; j < m; ++j) out.row(i) += (s[static_cast<std::size_t>(j)] / z) * v.row(j);
    }
    return out;
}

TEST(Attention, SingleKeyReturnsItsValue) {
    Rng rng(1);
    Graph g;
    const Tensor v = random_tensor(1, 5, rng);
    Var out = attention(g, g.constant(random_tensor(1, 4, rng)), g.constant(random_tensor(1, 4, rng)), g.constant(v), {});
    EXPECT_TRUE(out.value().isApprox(v, 1e-15));
}

TEST(Attention, ZeroQueryAveragesValidValues) {
    Rng rng(2);
    Graph g;
    const Tensor v = random_tensor(4, 3, rng);
    const KeyMask valid = {1, 1, 1, 0};
    Var out = attention(g, g.constant(Tensor::Zero(2, 6)), g.constant(random_tensor(4, 6, rng)), g.constant(v), valid);
    const Eigen::RowVectorXd mean = v.topRows(3).colwise().mean();
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LT((out.value().row(i) - mean).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Attention, MatchesLoopReference) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform_index(7));
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.uniform_index(8));
        KeyMask valid(static_cast<std::size_t>(n), 1);
        for (std::size_t j = 1; j < valid.size(); ++j) valid[j] = rng.bernoulli(0.7) ? 1 : 0;
        const Tensor q = random_tensor(n, d, rng), k = random_tensor(n, d, rng), v = random_tensor(n, 3, rng);
        Graph g;
        Var out = attention(g, g.constant(q), g.constant(k), g.constant(v), valid);
        EXPECT_LT((out.value() - reference_attention(q, k, v, valid)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Attention, OutputsLieInConvexHullOfValidValues) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(8));
        KeyMask valid(static_cast<std::size_t>(n), 1);
        for (std::size_t j = 1; j < valid.size(); ++j) valid[j] = rng.bernoulli(0.6) ? 1 : 0;
        const Tensor v = random_tensor(n, 4, rng, 3.0);
        Graph g;
        Var out = attention(g, g.constant(random_tensor(n, 4, rng, 2.0)), g.constant(random_tensor(n, 4, rng, 2.0)),
                            g.constant(v), valid);
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
            double lo = 1e300, hi = -1e300;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!valid[static_cast<std::size_t>(j)]) continue;
                lo = std::min(lo, v(j, c));
                hi = std::max(hi, v(j, c));
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                EXPECT_GE(out.value()(i, c), lo - 1e-12);
                EXPECT_LE(out.value()(i, c), hi + 1e-12);
            }
        }
    }
}

TEST(Attention, PadKeysHaveNoInfluence) {
    Rng rng(5);
    const Tensor q = random_tensor(4, 3, rng), k = random_tensor(4, 3, rng);
    Tensor v = random_tensor(4, 3, rng);
    const KeyMask valid = {1, 1, 0, 0};
    Graph g1, g2;
    const Tensor a = attention(g1, g1.constant(q), g1.constant(k), g1.constant(v), valid).value();
    v.bottomRows(2).setConstant(1e6);
    const Tensor b = attention(g2, g2.constant(q), g2.constant(k), g2.constant(v), valid).value();
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultiHeadAttention, SingleHeadIsPlainAttentionOfProjections) {
    Rng rng(6);
    ParamStore store;
    auto mha = MultiHeadAttention::create(store, "a", 6, 1, rng);
    const Tensor x = random_tensor(3, 6, rng);
    Graph g;
    const Tensor out = mha(g, g.constant(x), {}).value();
    auto proj = [&](const Linear& l, const Tensor& in) -> Tensor {
        return (in * l.weight->value).rowwise() + l.bias->value.row(0);
    };
    const Tensor ref = proj(mha.wo, reference_attention(proj(mha.wq, x), proj(mha.wk, x), proj(mha.wv, x), {}));
    EXPECT_LT((out - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultiHeadAttention, HeadOrderDoesNotMatter) {
    Rng rng(7);
    ParamStore store;
    auto mha = MultiHeadAttention::create(store, "a", 8, 2, rng);
    const Tensor x = random_tensor(5, 8, rng);
    const KeyMask valid = {1, 1, 1, 1, 0};
    Graph g1;
    const Tensor before = mha(g1, g1.constant(x), valid).value();
    auto swap_cols = [](Tensor& t) {
        Tensor left = t.leftCols(4);
        t.leftCols(4) = t.rightCols(4);
        t.rightCols(4) = left;
    };
    for (const Linear* l : {&mha.wq, &mha.wk, &mha.wv}) {
        swap_cols(l->weight->value);
        swap_cols(l->bias->value);
    }
    Tensor& wo = mha.wo.weight->value;
    Tensor top = wo.topRows(4);
    wo.topRows(4) = wo.bottomRows(4);
    wo.bottomRows(4) = top;
    Graph g2;
    const Tensor after = mha(g2, g2.constant(x), valid).value();
    EXPECT_LT((before - after).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultiHeadAttention, RejectsIndivisibleHeads) {
    Rng rng(0);
    ParamStore store;
    EXPECT_THROW(MultiHeadAttention::create(store, "a", 6, 4, rng), ConfigError);
}

TEST(MultiHeadAttention, GradientsMatchFiniteDifferences) {
    Rng rng(8);
    ParamStore store;
    auto mha = MultiHeadAttention::create(store, "a", 8, 2, rng);
    const Tensor x = random_tensor(4, 8, rng);
    const KeyMask valid = {1, 1, 1, 0};
    auto params = store.all();
    const auto r = grad_check([&](Graph& g) { return g.sum_squares(mha(g, g.constant(x), valid)); }, params);
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(FeedForward, ZeroWeightsGiveOutputBias) {
    Rng rng(9);
    ParamStore store;
    auto ffn = FeedForward::create(store, "f", 3, 5, rng);
    ffn.in.weight->value.setZero();
    ffn.out.bias->value << 1.0, -2.0, 0.5;
    Graph g;
    const Tensor out = ffn(g, g.constant(random_tensor(2, 3, rng))).value();
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_TRUE(out.row(i).isApprox(ffn.out.bias->value.row(0)));
}

TEST(FeedForward, NegativePreActivationsAreClipped) {
    Rng rng(10);
    ParamStore store;
    auto ffn = FeedForward::create(store, "f", 2, 2, rng);
    ffn.in.weight->value = Tensor::Identity(2, 2);
    ffn.out.weight->value = Tensor::Identity(2, 2);
    Tensor x(1, 2);
    x << -3.0, 2.0;
    Graph g;
    const Tensor out = ffn(g, g.constant(x)).value();
    EXPECT_DOUBLE_EQ(out(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(out(0, 1), 2.0);
}

TEST(FeedForward, GradientsMatchFiniteDifferences) {
    Rng rng(11);
    ParamStore store;
    auto ffn = FeedForward::create(store, "f", 4, 6, rng);
    ffn.in.bias->value = random_tensor(1, 6, rng, 0.3);
    const Tensor x = random_tensor(3, 4, rng);
    auto params = store.all();
    const auto r = grad_check([&](Graph& g) { return g.sum_squares(ffn(g, g.constant(x))); }, params);
    EXPECT_LT(r.max_rel_error, 1e-6);
}

struct EncoderFixture {
    ParamStore store;
    Encoder enc;
    EncoderConfig cfg;

    explicit EncoderFixture(std::size_t layers, bool pre_norm = true, std::uint64_t seed = 12) {
        cfg.vocab_size = 11;
        cfg.max_len = 6;
        cfg.d_emb = 4;
        cfg.d_model = 8;
        cfg.heads = 2;
        cfg.d_ff = 12;
        cfg.layers = layers;
        cfg.pre_norm = pre_norm;
        cfg.dropout = 0.1;
        Rng rng(seed);
        auto& tok = store.add("tok", 11, 4, Init::xavier_uniform, rng);
        auto& pos = store.add("pos", 6, 4, Init::xavier_uniform, rng);
        enc = Encoder(store, "enc", cfg, tok, pos, rng);
    }
};

TEST(Encoder, ZeroLayersIsProjectedEmbedding) {
    EncoderFixture f(0);
    EXPECT_EQ(f.store.find("enc.ln_final"), nullptr);
    const std::vector<std::int32_t> ids = {2, 5, 7};
    Graph g;
    const Tensor out = f.enc.forward(g, ids, {}).value();
    const Tensor& tok = f.store.at("tok").value;
    const Tensor& pos = f.store.at("pos").value;
    for (Eigen::Index i = 0; i < 3; ++i) {
        const Eigen::RowVectorXd e = tok.row(ids[static_cast<std::size_t>(i)]) + pos.row(i);
        const Eigen::RowVectorXd ref = e * f.store.at("enc.proj.w").value + f.store.at("enc.proj.b").value;
        EXPECT_LT((out.row(i) - ref).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Encoder, ParameterNamesFollowLayout) {
    EncoderFixture f(2);
    for (const char* n : {"enc.proj.w", "enc.layer0.ln_attn.gain", "enc.layer1.attn.q.w", "enc.layer1.attn.o.b",
                          "enc.layer0.ffn.in.w", "enc.layer1.ln_ffn.bias", "enc.ln_final.gain"}) {
        EXPECT_NE(f.store.find(n), nullptr) << n;
    }
}

TEST(Encoder, PadTailDoesNotAffectValidPositions) {
    for (bool pre : {true, false}) {
        EncoderFixture f(2, pre);
        const KeyMask valid = {1, 1, 1, 0, 0, 0};
        const std::vector<std::int32_t> a = {2, 5, 7, 0, 0, 0};
        const std::vector<std::int32_t> b = {2, 5, 7, 9, 4, 1};
        Graph g1, g2, g3;
        const Tensor oa = f.enc.forward(g1, a, valid).value();
        const Tensor ob = f.enc.forward(g2, b, valid).value();
        const std::vector<std::int32_t> prefix = {2, 5, 7};
        const Tensor op = f.enc.forward(g3, prefix, {}).value();
        EXPECT_LT((oa.topRows(3) - ob.topRows(3)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((oa.topRows(3) - op).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
    for (bool pre : {true, false}) {
        EncoderFixture f(2, pre);
        const std::vector<std::int32_t> ids = {2, 5, 7, 7, 0};
        const KeyMask valid = {1, 1, 1, 1, 0};
        // key biases: gradient must vanish, checked on its own
        std::vector<Parameter*> params, key_biases;
        for (Parameter* p : f.store.all()) {
            (p->name.ends_with(".attn.k.b") ? key_biases : params).push_back(p);
        }
        const LossBuilder loss = [&](Graph& g) { return g.sum_squares(g.tanh(f.enc.forward(g, ids, valid))); };
        const auto r = grad_check(loss, params, 1e-5, 8);
        EXPECT_LT(r.max_rel_error, 1e-6) << "pre_norm=" << pre;
        for (Parameter* p : key_biases) EXPECT_LT(p->grad.cwiseAbs().maxCoeff(), 1e-12) << p->name;
    }
}

TEST(Encoder, DeterministicForSeedAndDropoutStream) {
    EncoderFixture a(2, true, 77), b(2, true, 77);
    const std::vector<std::int32_t> ids = {2, 3, 4, 5};
    Rng ra(5), rb(5);
    Graph g1, g2;
    EXPECT_EQ(a.enc.forward(g1, ids, {}, &ra).value(), b.enc.forward(g2, ids, {}, &rb).value());
}

TEST(Encoder, DropoutOnlyWhenRngGiven) {
    EncoderFixture f(1);
    const std::vector<std::int32_t> ids = {2, 3, 4, 5};
    Graph g1, g2, g3;
    Rng r(1);
    const Tensor eval1 = f.enc.forward(g1, ids, {}).value();
    const Tensor eval2 = f.enc.forward(g2, ids, {}).value();
    const Tensor train = f.enc.forward(g3, ids, {}, &r).value();
    EXPECT_EQ(eval1, eval2);
    EXPECT_NE(eval1, train);
}

TEST(Encoder, RejectsOverlongInput) {
    EncoderFixture f(1);
    const std::vector<std::int32_t> ids(7, 2);
    Graph g;
    EXPECT_THROW(f.enc.forward(g, ids, {}), ShapeError);
}

TEST(SoftmaxXent, UniformBinaryLogitsGiveLn2) {
    const std::vector<double> z = {0.0, 0.0};
    const auto r = softmax_xent(z, 1);
    EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
    EXPECT_DOUBLE_EQ(r.probs[0], 0.5);
}

TEST(SoftmaxXent, EqualLogitsAreUniform) {
    const std::vector<double> z(4, 3.5);
    const auto r = softmax_xent(z, 2);
    EXPECT_NEAR(r.loss, std::log(4.0), 1e-15);
    for (double p : r.probs) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(SoftmaxXent, SaturatedTargetHasZeroLoss) {
    const std::vector<double> z = {0.0, 1e6, 0.0};
    EXPECT_EQ(softmax_xent(z, 1).loss, 0.0);
}

TEST(SoftmaxXent, LargeLogitsStayFinite) {
    const std::vector<double> z = {1000.0, 0.0, -1000.0};
    EXPECT_NEAR(softmax_xent(z, 0).loss, 0.0, 1e-15);
    EXPECT_NEAR(softmax_xent(z, 1).loss, 1000.0, 1e-9);
    EXPECT_THROW(softmax_xent(z, 3), RangeError);
}

TEST(SoftmaxXent, ShiftInvariance) {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> z(2 + rng.uniform_index(8));
        for (double& v : z) v = 5.0 * rng.normal();
        std::vector<double> shifted = z;
        const double c = trial == 0 ? 1000.0 : 50.0 * rng.normal();
        for (double& v : shifted) v += c;
        const std::size_t t = rng.uniform_index(z.size());
        const auto a = softmax_xent(z, t), b = softmax_xent(shifted, t);
        EXPECT_NEAR(a.loss, b.loss, 1e-9);
        for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(a.probs[i], b.probs[i], 1e-12);
        EXPECT_NEAR(std::accumulate(a.probs.begin(), a.probs.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(Graph, CrossEntropyMatchesScalarHelper) {
    Rng rng(14);
    const Tensor z = random_tensor(3, 4, rng);
    const std::vector<std::int32_t> t = {0, 3, 1};
    const std::vector<double> w = {1.0, 0.5, 2.0};
    Graph g;
    const double loss = g.cross_entropy_rows(g.constant(z), t, w).scalar();
    double ref = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) {
        const std::vector<double> row(z.row(i).data(), z.row(i).data() + 4);
        ref += w[static_cast<std::size_t>(i)] * softmax_xent(row, static_cast<std::size_t>(t[static_cast<std::size_t>(i)])).loss;
    }
    EXPECT_NEAR(loss, ref, 1e-12);
    const std::vector<std::int32_t> bad = {0, 4, 1};
    EXPECT_THROW(g.cross_entropy_rows(g.constant(z), bad, w), RangeError);
}

TEST(Graph, MiscOpsGradientCheck) {
    Rng rng(15);
    ParamStore store;
    auto& a = store.add("a", 3, 4, Init::xavier_uniform, rng);
    auto& b = store.add("b", 3, 4, Init::xavier_uniform, rng);
    auto& gain = store.add("gain", 1, 4, Init::ones, rng);
    auto& bias = store.add("bias", 1, 4, Init::zeros, rng);
    auto& table = store.add("table", 5, 4, Init::xavier_uniform, rng);
    const std::vector<std::int32_t> ids = {4, 0, 4};
    const std::vector<std::int32_t> targets = {1, 0, 3};
    const std::vector<double> weights = {1.0, 0.0, 0.7};
    auto params = store.all();
    const auto r = grad_check(
        [&](Graph& g) {
            Var x = g.add(g.param(a), g.gather_rows(g.param(table), ids));
            Var ln = g.layer_norm(g.gelu(x), g.param(gain), g.param(bias));
            Var ce = g.cross_entropy_rows(g.mul(ln, g.param(b)), targets, weights);
            Var cos = g.sum(g.column_cosine_distance(g.param(a), g.param(b)));
            const std::vector<Var> parts = {g.slice_cols(ln, 0, 2), g.slice_rows(g.transpose(g.param(b)), 0, 3)};
            Var cat = g.concat_cols(std::vector<Var>{g.slice_cols(ln, 0, 2), g.slice_cols(g.param(b), 1, 2)});
            const std::vector<Var> terms = {ce, cos, g.sum_squares(cat)};
            const std::vector<double> ws = {1.0, 0.3, 0.1};
            return g.weighted_sum(terms, ws);
        },
        params, 1e-5, 64);
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(Graph, SoftmaxRowsShiftInvariantAndMasked) {
    Rng rng(16);
    Tensor z = random_tensor(2, 5, rng);
    const KeyMask valid = {1, 0, 1, 1, 0};
    Graph g;
    const Tensor p = g.softmax_rows(g.constant(z), valid).value();
    z.array() += 123.0;
    const Tensor q = g.softmax_rows(g.constant(z), valid).value();
    EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(p(0, 1), 0.0);
    EXPECT_EQ(p(1, 4), 0.0);
    EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-15);
}

TEST(Graph, ZeroNormColumnHasUnitDistance) {
    Graph g;
    Tensor a = Tensor::Zero(3, 2), b = Tensor::Ones(3, 2);
    a(0, 1) = 2.0;
    b.col(1) << 4.0, 0.0, 0.0;
    const Tensor d = g.column_cosine_distance(g.constant(a), g.constant(b)).value();
    EXPECT_DOUBLE_EQ(d(0, 0), 1.0);
    EXPECT_NEAR(d(0, 1), 0.0, 1e-15);
}

TEST(GradCheck, QuadraticHasExactGradient) {
    Rng rng(17);
    ParamStore store;
    auto& p = store.add("p", 4, 3, Init::xavier_uniform, rng);
    std::vector<Parameter*> params = {&p};
    const auto r = grad_check([&](Graph& g) { return g.sum_squares(g.param(p)); }, params);
    EXPECT_EQ(r.coordinates, 12u);
    EXPECT_LT(r.max_rel_error, 1e-8);
    EXPECT_TRUE(p.grad.isApprox(2.0 * p.value));
}

TEST(GradCheck, SumHasUnitGradient) {
    Rng rng(20);
    ParamStore store;
    auto& p = store.add("p", 3, 3, Init::xavier_uniform, rng);
    std::vector<Parameter*> params = {&p};
    const auto r = grad_check([&](Graph& g) { return g.sum(g.param(p)); }, params);
    EXPECT_LT(r.max_rel_error, 1e-9);
    EXPECT_TRUE(p.grad.isApprox(Tensor::Ones(3, 3)));
}

TEST(GradCheck, HalfSquaredNormBelowOneInABillion) {
    Rng rng(21);
    ParamStore store;
    auto& p = store.add("p", 5, 2, Init::xavier_uniform, rng);
    std::vector<Parameter*> params = {&p};
    const auto r = grad_check([&](Graph& g) { return g.scale(g.sum_squares(g.param(p)), 0.5); }, params);
    EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(GradCheck, ConstantLossHasZeroError) {
    Rng rng(18);
    ParamStore store;
    auto& p = store.add("p", 2, 2, Init::xavier_uniform, rng);
    std::vector<Parameter*> params = {&p};
    const auto r = grad_check([&](Graph& g) { return g.sum(g.constant(Tensor::Ones(2, 2))); }, params);
    EXPECT_EQ(r.max_rel_error, 0.0);
    EXPECT_DOUBLE_EQ(r.loss, 4.0);
}

TEST(AdamW, FirstStepMatchesHandComputation) {
    Rng rng(0);
    ParamStore store;
    auto& p = store.add("p", 1, 2, Init::ones, rng);
    p.grad << 0.5, -2.0;
    AdamW opt(store.all(), {0.1, 0.9, 0.999, 1e-8, 0.01, true});
    opt.step();
    // m_hat = g, v_hat = g^2 after one step.
    EXPECT_NEAR(p.value(0, 0), 0.999 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
    EXPECT_NEAR(p.value(0, 1), 0.999 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
    EXPECT_EQ(opt.steps(), 1);
}

TEST(AdamW, AmsgradKeepsLargestSecondMoment) {
    Rng rng(0);
    ParamStore s1, s2;
    auto& a = s1.add("p", 1, 1, Init::ones, rng);
    auto& b = s2.add("p", 1, 1, Init::ones, rng);
    AdamW ams(s1.all(), {0.1, 0.9, 0.999, 1e-8, 0.0, true});
    AdamW plain(s2.all(), {0.1, 0.9, 0.999, 1e-8, 0.0, false});
    for (double grad : {10.0, 0.01, 0.01}) {
        a.grad(0, 0) = grad;
        b.grad(0, 0) = grad;
        ams.step();
        plain.step();
    }
    EXPECT_GT(a.value(0, 0), b.value(0, 0));
}

TEST(AdamW, MinimisesQuadratic) {
    Rng rng(19);
    ParamStore store;
    auto& p = store.add("p", 3, 3, Init::xavier_uniform, rng);
    AdamW opt(store.all(), {0.05, 0.9, 0.999, 1e-8, 0.0, true});
    for (int i = 0; i < 500; ++i) {
        p.grad = 2.0 * p.value;
        opt.step();
    }
    EXPECT_LT(p.value.cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Checkpoint, RoundTripIsExactAndByteStable) {
    EncoderFixture f(1);
    Checkpoint ck{R"({"kind":"test"})", snapshot(f.store)};
    const std::string bytes = serialize_checkpoint(ck);
    EXPECT_EQ(bytes.substr(0, 8), "TXADCKPT");
    const Checkpoint back = parse_checkpoint(bytes);
    EXPECT_EQ(back.metadata, ck.metadata);
    EXPECT_EQ(serialize_checkpoint(back), bytes);

    EncoderFixture other(1, true, 999);
    restore(other.store, back.tensors);
    const std::vector<std::int32_t> ids = {2, 3, 4};
    Graph g1, g2;
    EXPECT_EQ(f.enc.forward(g1, ids, {}).value(), other.enc.forward(g2, ids, {}).value());
}

TEST(Checkpoint, RejectsDamagedOrMismatchedInput) {
    EncoderFixture f(1);
    const std::string bytes = serialize_checkpoint({"{}", snapshot(f.store)});
    EXPECT_THROW(parse_checkpoint(bytes.substr(0, bytes.size() - 1)), FormatError);
    EXPECT_THROW(parse_checkpoint(bytes + "x"), FormatError);
    EXPECT_THROW(parse_checkpoint("NOTACKPT" + bytes.substr(8)), FormatError);
    EncoderFixture deeper(2);
    EXPECT_THROW(restore(deeper.store, parse_checkpoint(bytes).tensors), FormatError);
}

}  // namespace
}  // namespace textad::nn
