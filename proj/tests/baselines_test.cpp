#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_util.hpp"
#include "textad/cvdd.hpp"
#include "textad/iforest.hpp"
#include "textad/nn/grad_check.hpp"

namespace textad::baselines {
namespace {

TEST(AvgPathC, ConventionsAndFrozenValue) {
    EXPECT_EQ(avg_path_c(1), 0.0);
    EXPECT_EQ(avg_path_c(2), 1.0);
    EXPECT_NEAR(avg_path_c(256), 10.244770920116851, 1e-12);
    EXPECT_THROW(avg_path_c(0), DomainError);
    EXPECT_THROW(avg_path_c(-3), DomainError);
    for (int n = 2; n < 2000; ++n) EXPECT_LT(avg_path_c(n), avg_path_c(n + 1));
}

IForest hand_tree() {
    // root: x < 2.5 ? leaf(1) : (x < 3.5 ? leaf(2) : leaf(1))
    ITree t;
    t.nodes = {{0, 2.5, 1, 2, 4}, {-1, 0, -1, -1, 1}, {0, 3.5, 3, 4, 3}, {-1, 0, -1, -1, 2}, {-1, 0, -1, -1, 1}};
    IForest f;
    f.trees = {t};
    f.psi = 4;
    f.dim = 1;
    return f;
}

TEST(IForest, HandTracedSingleTree) {
    const IForest f = hand_tree();
    Eigen::RowVectorXd x(1);
    x << 1.0;
    EXPECT_NEAR(f.score(x), 0.6877436677784063, 1e-12);
    x << 3.0;
    EXPECT_NEAR(f.score(x), 0.3252968076434763, 1e-12);
    x << 4.0;
    EXPECT_NEAR(f.score(x), 0.472991352569295, 1e-12);
    EXPECT_THROW((void)f.score(Eigen::RowVectorXd::Zero(2)), ShapeError);
}

TEST(IForest, ScoreIsOneHalfAtExpectedPathLength) {
    ITree t;
    t.nodes = {{-1, 0, -1, -1, 256}};
    IForest f;
    f.trees = {t, t};
    f.psi = 256;
    f.dim = 3;
    EXPECT_EQ(f.mean_path_length(Eigen::RowVectorXd::Zero(3)), f.c_psi());
    EXPECT_EQ(f.score(Eigen::RowVectorXd::Zero(3)), 0.5);
}

TEST(IForest, ShortPathsScoreNearOne) {
    ITree t;
    t.nodes = {{0, 0.0, 1, 2, 1000}, {-1, 0, -1, -1, 1}, {-1, 0, -1, -1, 999}};
    IForest f;
    f.trees = {t};
    f.psi = 1000;
    f.dim = 1;
    Eigen::RowVectorXd x(1);
    x << -1.0;
    EXPECT_GT(f.score(x), 0.9);
}

TEST(IForest, TwoPointsIsolatedAtDepthOne) {
    Eigen::MatrixXd X(2, 1);
    X << 0.0, 1.0;
    const IForest f = fit_iforest(X, {20, 256, 3});
    EXPECT_EQ(f.psi, 2u);
    for (const auto& t : f.trees) {
        ASSERT_EQ(t.nodes.size(), 3u);
        EXPECT_EQ(t.path_length(X.row(0)), 1.0);
        EXPECT_EQ(t.path_length(X.row(1)), 1.0);
    }
}

TEST(IForest, TreeStructureInvariants) {
    Rng rng(4);
    Eigen::MatrixXd X(300, 3);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    const IForest f = fit_iforest(X, {10, 64, 5});
    const auto limit = static_cast<std::size_t>(std::ceil(std::log2(64.0)));
    for (const auto& t : f.trees) {
        std::uint64_t leaf_total = 0;
        for (const auto& n : t.nodes) {
            if (n.attr < 0) {
                leaf_total += n.size;
            } else {
                EXPECT_EQ(t.nodes[static_cast<std::size_t>(n.left)].size + t.nodes[static_cast<std::size_t>(n.right)].size,
                          n.size);
            }
        }
        EXPECT_EQ(leaf_total, 64u);
        // Depth bound: every query follows at most `limit` edges.
        for (Eigen::Index i = 0; i < 20; ++i) EXPECT_LE(t.path_length(X.row(i)) - avg_path_c(64), limit);
    }
}

TEST(IForest, ScoresInUnitIntervalAndTreeOrderInvariant) {
    Rng rng(5);
    Eigen::MatrixXd X(200, 2);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    IForest f = fit_iforest(X, {25, 128, 6});
    const auto before = f.score_all(X);
    for (double s : before) {
        EXPECT_GT(s, 0.0);
        EXPECT_LT(s, 1.0);
    }
    std::reverse(f.trees.begin(), f.trees.end());
    const auto after = f.score_all(X);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-15);
}

TEST(IForest, DuplicatedPointNeverOutscoresIsolatedExtreme) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Eigen::MatrixXd X(502, 2);
        for (Eigen::Index i = 0; i < 500; ++i) X.row(i) << rng.normal(), rng.normal();
        X.row(500) = X.row(0);
        X.row(501) << 7.0, -7.0;
        const IForest f = fit_iforest(X, {100, 256, seed});
        EXPECT_LT(f.score(X.row(0)), f.score(X.row(501))) << "seed " << seed;
        EXPECT_EQ(f.score(X.row(0)), f.score(X.row(500)));
    }
}

TEST(IForest, ConstantDataGivesEqualScores) {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(50, 2, 3.0);
    const IForest f = fit_iforest(X, {10, 32, 1});
    EXPECT_TRUE(f.degenerate);
    EXPECT_EQ(f.score(X.row(0)), 0.5);
}

TEST(IForest, RejectsBadInput) {
    EXPECT_THROW(fit_iforest(Eigen::MatrixXd::Zero(1, 2), {}), DataError);
    EXPECT_THROW(fit_iforest(Eigen::MatrixXd::Zero(5, 2), {0, 256, 0}), ConfigError);
}

TEST(IForest, DeterministicAndFileRoundTrip) {
    Rng rng(6);
    Eigen::MatrixXd X(100, 4);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    const auto a = serialize_iforest(fit_iforest(X, {8, 64, 2}));
    EXPECT_EQ(a, serialize_iforest(fit_iforest(X, {8, 64, 2})));
    EXPECT_NE(a, serialize_iforest(fit_iforest(X, {8, 64, 3})));
    const IForest back = parse_iforest(a);
    EXPECT_EQ(serialize_iforest(back), a);
    EXPECT_THROW(parse_iforest(a.substr(0, a.size() - 3)), FormatError);
    EXPECT_THROW(parse_iforest("XXXXXXXX"), FormatError);
}

EmbeddedDoc doc_from(const Eigen::MatrixXd& H) { return {H, static_cast<std::size_t>(H.cols()), 0}; }

TEST(EmbeddingFile, ParsesAndValidates) {
    const auto e = EmbeddingFile::parse("3 2\ncat 1 0\ndog 0.5 -1e-1\n\nfish 2 2\n");
    EXPECT_EQ(e.dim(), 2u);
    EXPECT_EQ(e.size(), 3u);
    EXPECT_DOUBLE_EQ((*e.find("dog"))(1), -0.1);
    EXPECT_EQ(e.find("bird"), nullptr);
    EXPECT_THROW(EmbeddingFile::parse("a 1 2\nb 1\n"), FormatError);
    EXPECT_THROW(EmbeddingFile::parse("a 1 x\n"), FormatError);
    EXPECT_THROW(EmbeddingFile::parse("a 1 nan\n"), FormatError);
    EXPECT_THROW(EmbeddingFile::parse("a 1\na 2\n"), FormatError);
    EXPECT_THROW(EmbeddingFile::parse("\n"), EmptyInputError);
    EXPECT_THROW(EmbeddingFile::load("/nonexistent/vectors.txt"), ConfigError);
}

TEST(EmbeddingFile, DocumentEmbeddingDropsUnknownWords) {
    const auto e = EmbeddingFile::parse("cat 1 0\ndog 0 2\n");
    const auto d = embed_document("cat bird dog", e);
    EXPECT_EQ(d.H.cols(), 2);
    EXPECT_EQ(d.oov, 1u);
    EXPECT_TRUE(mean_pool(d).isApprox(Eigen::RowVector2d(0.5, 1.0)));
    EXPECT_EQ(mean_pool(embed_document("bird", e)), Eigen::RowVector2d::Zero());
    const std::vector<EmbeddedDoc> docs = {embed_document("bird fish", e), embed_document("cat", e)};
    EXPECT_THROW(check_coverage(docs, 0.5), DataError);
    EXPECT_NO_THROW(check_coverage(docs, 0.7));
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

TEST(Cvdd, SinglePositionAttention) {
    CvddModel m(4, 5, 2, 1);
    Rng rng(1);
    const Eigen::MatrixXd H = random_matrix(4, 1, rng);
    Graph g;
    const auto f = m.forward(g, H);
    EXPECT_EQ(f.A.value(), Tensor::Ones(1, 2));
    for (Eigen::Index k = 0; k < 2; ++k) EXPECT_TRUE(f.M.value().col(k).isApprox(H.col(0)));
}

TEST(Cvdd, ZeroW2GivesMeanEmbedding) {
    CvddModel m(4, 5, 3, 2);
    m.W2().setZero();
    Rng rng(2);
    const Eigen::MatrixXd H = random_matrix(4, 6, rng);
    Graph g;
    const auto f = m.forward(g, H);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_LT((f.M.value().col(k) - H.rowwise().mean()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Cvdd, MatchesLoopReference) {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        CvddModel m(5, 4, 3, static_cast<std::uint64_t>(trial));
        const Eigen::MatrixXd H = random_matrix(5, 1 + static_cast<Eigen::Index>(rng.uniform_index(7)), rng);
        const Eigen::Index l = H.cols();
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(l, 3);
        for (Eigen::Index i = 0; i < l; ++i) {
            for (Eigen::Index k = 0; k < 3; ++k) {
                for (Eigen::Index a = 0; a < 4; ++a) {
                    double u = 0.0;
                    for (Eigen::Index p = 0; p < 5; ++p) u += H(p, i) * m.W1()(p, a);
                    S(i, k) += std::tanh(u) * m.W2()(a, k);
                }
            }
        }
        double score = 0.0;
        for (Eigen::Index k = 0; k < 3; ++k) {
            const double mx = S.col(k).maxCoeff();
            Eigen::VectorXd a = (S.col(k).array() - mx).exp();
            a /= a.sum();
            const Eigen::VectorXd mk = H * a;
            const Eigen::VectorXd ck = m.C().col(k);
            score += 1.0 - ck.dot(mk) / (ck.norm() * mk.norm());
        }
        EXPECT_NEAR(m.score(H), score / 3.0, 1e-12);
    }
}

TEST(Cvdd, AttentionColumnsSumToOne) {
    Rng rng(4);
    CvddModel m(6, 8, 4, 4);
    for (int trial = 0; trial < 20; ++trial) {
        Graph g;
        const auto f = m.forward(g, random_matrix(6, 1 + static_cast<Eigen::Index>(rng.uniform_index(12)), rng));
        for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(f.A.value().col(k).sum(), 1.0, 1e-9);
    }
}

TEST(Cvdd, CosineDistanceCases) {
    CvddModel m(2, 3, 1, 0);
    m.C() << 1.0, 0.0;
    Eigen::MatrixXd H(2, 1);
    H << 3.0, 0.0;
    EXPECT_EQ(m.score(H), 0.0);
    H << 0.0, 2.0;
    EXPECT_EQ(m.score(H), 1.0);
    H << -5.0, 0.0;
    EXPECT_EQ(m.score(H), 2.0);
    H << 0.0, 0.0;
    EXPECT_EQ(m.score(H), 1.0);
    EXPECT_EQ(m.score(Eigen::MatrixXd(2, 0)), 1.0);
}

TEST(Cvdd, SingleContextAtZeroAlphaCollapses) {
    CvddModel m(3, 4, 1, 5);
    Rng rng(5);
    const Eigen::MatrixXd H1 = random_matrix(3, 4, rng), H2 = random_matrix(3, 2, rng);
    const std::vector<const Eigen::MatrixXd*> batch = {&H1, &H2};
    Graph g;
    const double loss = cvdd_loss(g, m, batch, 0.0).scalar();
    const double c2 = m.C().col(0).squaredNorm();
    EXPECT_NEAR(loss, 0.5 * (m.score(H1) + m.score(H2)) + (c2 - 1.0) * (c2 - 1.0), 1e-12);
}

TEST(Cvdd, GradientsMatchFiniteDifferences) {
    CvddModel m(4, 3, 2, 6);
    Rng rng(6);
    const Eigen::MatrixXd H1 = random_matrix(4, 5, rng), H2 = random_matrix(4, 3, rng);
    const std::vector<const Eigen::MatrixXd*> batch = {&H1, &H2};
    auto params = m.params().all();
    for (double alpha : {0.0, 0.7, 5.0}) {
        const auto r = nn::grad_check([&](Graph& g) { return cvdd_loss(g, m, batch, alpha); }, params, 1e-5, 32);
        EXPECT_LT(r.max_rel_error, 1e-4) << alpha;
    }
}

TEST(Cvdd, ConfigErrors) {
    EXPECT_THROW(CvddModel(2, 3, 3, 0), ConfigError);
    EXPECT_THROW(CvddModel(2, 3, 0, 0), ConfigError);
    EXPECT_THROW(parse_alpha_schedule("cosine"), ConfigError);
}

TEST(Cvdd, AlphaScheduleRampsFromZero) {
    CvddConfig c;
    c.steps = 11;
    EXPECT_EQ(alpha_at(c, 0), 0.0);
    EXPECT_DOUBLE_EQ(alpha_at(c, 10), 1.0);
    for (std::size_t s = 1; s < 11; ++s) EXPECT_GT(alpha_at(c, s), alpha_at(c, s - 1));
    c.schedule = AlphaSchedule::constant;
    EXPECT_EQ(alpha_at(c, 0), 1.0);
}

std::vector<EmbeddedDoc> rank_one_corpus(std::size_t p, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd u(static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.normal();
    std::vector<EmbeddedDoc> docs;
    for (std::size_t d = 0; d < n; ++d) {
        const auto l = static_cast<Eigen::Index>(2 + rng.uniform_index(8));
        Eigen::MatrixXd H(static_cast<Eigen::Index>(p), l);
        for (Eigen::Index j = 0; j < l; ++j) H.col(j) = rng.uniform(0.5, 2.0) * u;
        docs.push_back(doc_from(H));
    }
    return docs;
}

TEST(Cvdd, ConvergesOnRankOneCorpus) {
    const auto docs = rank_one_corpus(8, 60, 7);
    CvddConfig cfg;
    cfg.r = 1;
    cfg.d_a = 10;
    cfg.steps = 200;
    cfg.batch_size = 8;
    CvddTrainLog log;
    const CvddModel m = cvdd_train(docs, 8, cfg, &log);
    Graph g;
    EXPECT_LT(m.forward(g, docs[0].H).dists.value()(0, 0), 0.05);
}

TEST(Cvdd, OrthogonalityPenaltyDecreases) {
    Rng rng(8);
    std::vector<EmbeddedDoc> docs;
    for (int d = 0; d < 40; ++d) docs.push_back(doc_from(random_matrix(10, 6, rng)));
    CvddConfig cfg;
    cfg.r = 3;
    cfg.d_a = 8;
    cfg.steps = 150;
    cfg.batch_size = 8;
    CvddTrainLog log;
    cvdd_train(docs, 10, cfg, &log);
    EXPECT_LT(log.final_orthogonality, log.initial_orthogonality);
}

TEST(Cvdd, RejectsPoorCoverage) {
    std::vector<EmbeddedDoc> docs = {{Eigen::MatrixXd(3, 0), 5, 5}};
    EXPECT_THROW(cvdd_train(docs, 3, {}), DataError);
}

}  // namespace
}  // namespace textad::baselines
