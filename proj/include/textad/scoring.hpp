#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "textad/date.hpp"
#include "textad/errors.hpp"
#include "textad/textprep.hpp"

namespace textad::scoring {

using date::DateModel;
using textprep::TokenSequence;

/// Row y holds the class probabilities after applying transformation y.
using ScoreMatrix = Eigen::MatrixXd;

inline void check_score_matrix(const ScoreMatrix& p) {
    if (p.rows() == 0 || p.rows() != p.cols()) throw ShapeError("score matrix must be square and non-empty");
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double v = p.data()[i];
        if (!(v >= 0.0)) throw DomainError("score matrix holds a negative or NaN probability");
        if (v > 1.0 + 1e-12) throw DomainError("score matrix holds a probability above 1");
    }
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        if (std::abs(p.row(r).sum() - 1.0) > 1e-9) throw DomainError("score matrix row does not sum to 1");
    }
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

/// Maximum Probability: (1/K) sum_y max_t P^(t)(x^(y)).
inline double mp(const ScoreMatrix& p) {
    check_score_matrix(p);
    CompensatedSum s;
    for (Eigen::Index r = 0; r < p.rows(); ++r) s.add(p.row(r).maxCoeff());
    return s.value() / static_cast<double>(p.rows());
}

/// Negative Entropy: (1/K) sum_y sum_t P log P, natural log, 0 log 0 = 0.
inline double ne(const ScoreMatrix& p) {
    check_score_matrix(p);
    CompensatedSum total;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        CompensatedSum row;
        for (Eigen::Index c = 0; c < p.cols(); ++c) {
            const double v = p(r, c);
            if (v > 0.0) row.add(v * std::log(v));
        }
        total.add(row.value());
    }
    return total.value() / static_cast<double>(p.rows());
}

namespace detail {
inline void require_tokens(const TokenSequence& seq) {
    if (seq.true_len <= 1) throw DegenerateInputError("sequence holds only [CLS]; nothing to score");
}

inline std::vector<double> softmax(const Eigen::Ref<const Eigen::RowVectorXd>& z) {
    const double mx = z.maxCoeff();
    std::vector<double> p(static_cast<std::size_t>(z.size()));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) sum += (p[static_cast<std::size_t>(i)] = std::exp(z(i) - mx));
    for (double& v : p) v /= sum;
    return p;
}

inline std::vector<double> rmd_probs(const DateModel& model, const TokenSequence& corrupted) {
    nn::Graph g;
    const auto heads = model.discriminate(g, date::detail::prefix(corrupted));
    if (!heads.rmd_logits) throw ModeError("model has no RMD head");
    return softmax(heads.rmd_logits->value().row(0));
}
}  // namespace detail

/// P_D(original) at positions 0..true_len-1 of the uncorrupted input.
inline std::vector<double> original_probs(const DateModel& model, const TokenSequence& seq) {
    detail::require_tokens(seq);
    nn::Graph g;
    const auto heads = model.discriminate(g, date::detail::prefix(seq));
    const auto& z = heads.rtd_logits.value();
    std::vector<double> p(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) p[static_cast<std::size_t>(i)] = detail::softmax(z.row(i))[0];
    return p;
}

/// Mean of per-token P(original) over positions 1..true_len-1.
inline double mean_included(std::span<const double> p_original) {
    if (p_original.size() <= 1) throw DegenerateInputError("no scorable tokens");
    double s = 0.0;
    for (std::size_t i = 1; i < p_original.size(); ++i) s += p_original[i];
    return s / static_cast<double>(p_original.size() - 1);
}

/// Single-pass token-level pseudo-label score; higher = more normal.
inline double pl_rtd(const DateModel& model, const TokenSequence& seq) {
    return mean_included(original_probs(model, seq));
}

/// K x K matrix: row y = P_M(. | x corrupted with pattern y). Pattern y uses
/// the random stream (seed, y).
inline ScoreMatrix rmd_score_matrix(const DateModel& model, const TokenSequence& seq, std::uint64_t seed) {
    detail::require_tokens(seq);
    const std::size_t K = model.K();
    ScoreMatrix m(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    for (std::size_t y = 0; y < K; ++y) {
        Rng rng = Rng::stream(seed, y);
        const auto rec = date::corrupt(seq, y, model, rng);
        const auto p = detail::rmd_probs(model, rec.corrupted);
        for (std::size_t t = 0; t < K; ++t) m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(t)) = p[t];
    }
    return m;
}

/// K-pass pseudo-label score: mean over k of P_M(k | x corrupted with m^(k)).
inline double pl_rmd(const DateModel& model, const TokenSequence& seq, std::uint64_t seed) {
    return rmd_score_matrix(model, seq, seed).diagonal().mean();
}

enum class ScoreKind { pl_rtd, pl_rmd, mp, ne };

inline ScoreKind parse_score_kind(const std::string& s) {
    if (s == "pl_rtd") return ScoreKind::pl_rtd;
    if (s == "pl_rmd") return ScoreKind::pl_rmd;
    if (s == "mp") return ScoreKind::mp;
    if (s == "ne") return ScoreKind::ne;
    throw ConfigError("score must be one of pl_rtd, pl_rmd, mp, ne; got '" + s + "'");
}

inline std::string to_string(ScoreKind k) {
    switch (k) {
        case ScoreKind::pl_rtd: return "pl_rtd";
        case ScoreKind::pl_rmd: return "pl_rmd";
        case ScoreKind::mp: return "mp";
        case ScoreKind::ne: return "ne";
    }
    return "pl_rtd";
}

/// Higher = more anomalous: 1 - PL, 1 - MP, or -NE / ln K.
inline double anomaly_score(const DateModel& model, const TokenSequence& seq, ScoreKind kind, std::uint64_t seed = 0) {
    switch (kind) {
        case ScoreKind::pl_rtd: return 1.0 - pl_rtd(model, seq);
        case ScoreKind::pl_rmd: return 1.0 - pl_rmd(model, seq, seed);
        case ScoreKind::mp: return 1.0 - mp(rmd_score_matrix(model, seq, seed));
        case ScoreKind::ne: {
            const double K = static_cast<double>(model.K());
            return K > 1.0 ? -ne(rmd_score_matrix(model, seq, seed)) / std::log(K) : 0.0;
        }
    }
    return 0.0;
}

/// Runs `fn(i)` for i in [0, n) over `threads` workers; results land by index.
template <typename Fn>
std::vector<double> parallel_map(std::size_t n, Fn fn, std::size_t threads) {
    std::vector<double> out(n);
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) out[i] = fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

/// Anomaly scores for many sequences. Sequence i uses seed `seed + i` for
/// the multi-pass scores, so results do not depend on the thread count.
inline std::vector<double> score_all(const DateModel& model, std::span<const TokenSequence> seqs, ScoreKind kind,
                                     std::uint64_t seed = 0, std::size_t threads = 1) {
    return parallel_map(
        seqs.size(), [&](std::size_t i) { return anomaly_score(model, seqs[i], kind, seed + i); }, threads);
}

// ---------------------------------------------------------------------------
// Token report

struct TokenScoreReport {
    std::vector<std::string> tokens;
    std::vector<double> p_original;  // NaN at excluded positions
    std::vector<std::uint8_t> included;
    double sequence_score = 0.0;

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        os.precision(6);
        os << "score " << sequence_score << '\n';
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            os << tokens[i] << '\t';
            if (included[i]) {
                os << p_original[i];
            } else {
                os << "excluded";
            }
            os << '\n';
        }
        return os.str();
    }

    /// Standalone HTML; each token's background alpha is 1 - p_original.
    [[nodiscard]] std::string to_html() const {
        std::ostringstream os;
        os << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>token scores</title></head>\n<body>\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", sequence_score);
        os << "<p>sequence score " << buf << "</p>\n<p>";
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (!included[i]) continue;
            std::snprintf(buf, sizeof buf, "%.4f", 1.0 - p_original[i]);
            os << "<span style=\"background-color: rgba(255,0,0," << buf << ")\" title=\"p_original=";
            std::snprintf(buf, sizeof buf, "%.4f", p_original[i]);
            os << buf << "\">" << escape(tokens[i]) << "</span> ";
        }
        os << "</p>\n</body></html>\n";
        return os.str();
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            switch (c) {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                case '"': out += "&quot;"; break;
                case '\'': out += "&#39;"; break;
                default: out.push_back(c);
            }
        }
        return out;
    }
};

/// Per-token P(original) aligned with decoded tokens; CLS and PAD are excluded.
inline TokenScoreReport token_report(const DateModel& model, const TokenSequence& seq, const textprep::Vocab& vocab) {
    const auto probs = original_probs(model, seq);
    TokenScoreReport r;
    r.tokens = textprep::decode(seq.ids, vocab);
    r.p_original.assign(seq.length(), std::nan(""));
    r.included.assign(seq.length(), 0);
    for (std::size_t i = 1; i < probs.size(); ++i) {
        r.p_original[i] = probs[i];
        r.included[i] = 1;
    }
    r.sequence_score = mean_included(probs);
    return r;
}

/// Score file: "doc_id,score[,truth]".
inline std::string score_csv(std::span<const std::string> ids, std::span<const double> scores,
                             std::span<const int> truth = {}) {
    if (ids.size() != scores.size() || (!truth.empty() && truth.size() != ids.size())) {
        throw ShapeError("score file columns differ in length");
    }
    std::ostringstream os;
    os << (truth.empty() ? "doc_id,score\n" : "doc_id,score,truth\n");
    char buf[40];
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", scores[i]);
        os << ids[i] << ',' << buf;
        if (!truth.empty()) os << ',' << truth[i];
        os << '\n';
    }
    return os.str();
}

}  // namespace textad::scoring
