#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <functional>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "textad/config.hpp"
#include "textad/corpus.hpp"
#include "textad/cvdd.hpp"
#include "textad/date.hpp"
#include "textad/embeddings.hpp"
#include "textad/hashing.hpp"
#include "textad/iforest.hpp"
#include "textad/maskbank.hpp"
#include "textad/metrics.hpp"
#include "textad/scoring.hpp"
#include "textad/synthetic.hpp"
#include "textad/textprep.hpp"

namespace textad::eval {

using config::RunConfig;
using corpus::Document;

// ---------------------------------------------------------------------------
// Data preparation

/// Preprocessed partition plus the vocabulary and mask bank shared by all splits.
struct Prepared {
    corpus::Partition partition;
    textprep::Vocab vocab;
    maskbank::MaskBank bank;
    std::size_t dropped_train = 0;  // documents left empty by preprocessing
    std::size_t dropped_test = 0;
};

inline corpus::Partition load_partition(const RunConfig& cfg) {
    const auto& d = cfg.data;
    if (d.source == "synthetic") return corpus::holdout_partition(make_synthetic(d.synthetic), d.test_fraction);
    const auto format = corpus::parse_corpus_format(d.format);
    if (!std::filesystem::exists(d.path)) throw ConfigError("corpus path does not exist: " + d.path);
    auto docs = corpus::load_corpus(d.path, format);
    if (d.test_path.empty()) return corpus::holdout_partition(docs, d.test_fraction);
    if (!std::filesystem::exists(d.test_path)) throw ConfigError("test corpus path does not exist: " + d.test_path);
    return {std::move(docs), corpus::load_corpus(d.test_path, format)};
}

inline std::vector<Document> drop_empty(std::vector<Document> docs, std::size_t& dropped) {
    const auto before = docs.size();
    std::erase_if(docs, [](const Document& doc) { return !corpus::has_tokens(doc.text); });
    dropped = before - docs.size();
    return docs;
}

/// Preprocessed partition only; empty documents are removed.
inline corpus::Partition preprocess_partition(const RunConfig& cfg, const corpus::Partition& raw,
                                              std::size_t* dropped_train = nullptr,
                                              std::size_t* dropped_test = nullptr) {
    const auto profile = cfg.profile();
    const auto stop = cfg.stopwords();
    std::size_t dtr = 0, dte = 0;
    corpus::Partition p{drop_empty(corpus::preprocess_all(raw.train, profile, stop), dtr),
                        drop_empty(corpus::preprocess_all(raw.test, profile, stop), dte)};
    if (dropped_train) *dropped_train = dtr;
    if (dropped_test) *dropped_test = dte;
    if (p.train.empty()) throw EmptyInputError("no training documents survive preprocessing");
    if (p.test.empty()) throw EmptyInputError("no test documents survive preprocessing");
    return p;
}

/// Vocabulary over the whole training partition, every class included.
inline Prepared prepare(const RunConfig& cfg) {
    cfg.validate();
    Prepared out;
    out.partition = preprocess_partition(cfg, load_partition(cfg), &out.dropped_train, &out.dropped_test);
    out.vocab = textprep::build_vocab(out.partition.train, cfg.vocab.max_size, cfg.vocab.min_freq);
    out.bank = maskbank::generate_bank(cfg.mask.K, cfg.mask.T, cfg.mask.fraction, cfg.mask.seed);
    return out;
}

inline std::string documents_hash(std::span<const Document> docs) {
    std::string buf;
    for (const auto& d : docs) buf += d.id + '\t' + d.label + '\t' + d.text + '\n';
    return sha256_hex(buf);
}

/// "all" expands to every label of the partition, sorted.
inline std::vector<std::string> resolve_splits(const std::vector<std::string>& requested, const corpus::Partition& p) {
    std::set<std::string> labels = corpus::label_set(p.train);
    for (const auto& l : corpus::label_set(p.test)) labels.insert(l);
    if (requested.size() == 1 && requested[0] == "all") return {labels.begin(), labels.end()};
    std::set<std::string> picked;
    for (const auto& r : requested) {
        if (!labels.contains(r)) throw ConfigError("inlier label '" + r + "' does not occur in the corpus");
        picked.insert(r);
    }
    return {picked.begin(), picked.end()};
}

inline std::vector<textprep::TokenSequence> encode_all(std::span<const Document> docs, const textprep::Vocab& vocab,
                                                       std::size_t T) {
    std::vector<textprep::TokenSequence> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(textprep::encode(d, vocab, T));
    return out;
}

/// 1 for outliers, 0 for inliers.
inline std::vector<int> outlier_truth(const corpus::ADSplit& split) {
    std::vector<int> t;
    for (bool in : split.test_is_inlier) t.push_back(in ? 0 : 1);
    return t;
}

// ---------------------------------------------------------------------------
// Methods. Each returns test-set anomaly scores, higher = more anomalous.

inline date::DateModel train_date(const RunConfig& cfg, const Prepared& prep, const corpus::ADSplit& split,
                                  const std::function<void(const date::TrainLogRow&)>& on_step = {}) {
    date::DateModel model(cfg.model_config(prep.vocab.size()), prep.bank, cfg.train.seed);
    const auto train = encode_all(split.train, prep.vocab, cfg.mask.T);
    date::train(model, train, cfg.train_config(), on_step);
    return model;
}

inline std::vector<double> date_scores(const RunConfig& cfg, const Prepared& prep, const corpus::ADSplit& split) {
    const date::DateModel model = train_date(cfg, prep, split);
    const auto test = encode_all(split.test, prep.vocab, cfg.mask.T);
    return scoring::score_all(model, test, scoring::parse_score_kind(cfg.score.kind), cfg.score.seed,
                              cfg.score.threads);
}

inline baselines::EmbeddingFile load_embeddings(const RunConfig& cfg) {
    if (cfg.embeddings.path.empty()) {
        throw ConfigError("missing key 'embeddings.path' (required by method " + cfg.eval.method + ")");
    }
    return baselines::EmbeddingFile::load(cfg.embeddings.path);
}

inline std::vector<baselines::EmbeddedDoc> embed_all(std::span<const Document> docs,
                                                     const baselines::EmbeddingFile& emb) {
    std::vector<baselines::EmbeddedDoc> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(baselines::embed_document(d.text, emb));
    return out;
}

inline Eigen::MatrixXd pooled(std::span<const baselines::EmbeddedDoc> docs, std::size_t dim) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < docs.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = baselines::mean_pool(docs[i]);
    return X;
}

inline std::vector<double> iforest_scores(const RunConfig& cfg, const baselines::EmbeddingFile& emb,
                                          const corpus::ADSplit& split) {
    const auto train = embed_all(split.train, emb);
    baselines::check_coverage(train, cfg.cvdd.max_oov_fraction);
    const auto forest = baselines::fit_iforest(pooled(train, emb.dim()), cfg.iforest);
    const auto test = embed_all(split.test, emb);
    return forest.score_all(pooled(test, emb.dim()));
}

inline std::vector<double> cvdd_scores(const RunConfig& cfg, const baselines::EmbeddingFile& emb,
                                       const corpus::ADSplit& split) {
    const auto train = embed_all(split.train, emb);
    const auto model = baselines::cvdd_train(train, emb.dim(), cfg.cvdd);
    std::vector<double> out;
    for (const auto& d : embed_all(split.test, emb)) out.push_back(model.score(d.H));
    return out;
}

// ---------------------------------------------------------------------------
// Reports

struct EvalReport {
    std::string split;
    std::string method;
    double auroc = 0.0;  // percentages
    double aupr_in = 0.0;
    double aupr_out = 0.0;
    double contamination = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;
    std::string test_hash;
    std::string config_hash;
    double wallclock_ms = 0.0;
    bool aggregate = false;  // the Mean row
};

inline EvalReport make_report(std::string split, std::string method, std::span<const double> scores,
                              std::span<const int> truth) {
    EvalReport r;
    r.split = std::move(split);
    r.method = std::move(method);
    r.auroc = 100.0 * auroc(scores, truth);
    r.aupr_in = 100.0 * aupr(scores, truth, Positive::inlier);
    r.aupr_out = 100.0 * aupr(scores, truth, Positive::outlier);
    return r;
}

/// Unweighted mean of the metric columns.
inline EvalReport mean_row(std::span<const EvalReport> rows) {
    EvalReport m;
    m.split = "Mean";
    m.aggregate = true;
    if (rows.empty()) return m;
    m.method = rows.front().method;
    m.config_hash = rows.front().config_hash;
    for (const auto& r : rows) {
        m.auroc += r.auroc;
        m.aupr_in += r.aupr_in;
        m.aupr_out += r.aupr_out;
        m.contamination += r.contamination;
        m.wallclock_ms += r.wallclock_ms;
    }
    const auto n = static_cast<double>(rows.size());
    m.auroc /= n;
    m.aupr_in /= n;
    m.aupr_out /= n;
    m.contamination /= n;
    return m;
}

inline std::string reports_csv_header() {
    return "split,method,contamination,auroc,aupr_in,aupr_out,n_train,n_test,seed,test_hash,config_hash\n";
}

/// No wallclock column.
inline std::string reports_csv(std::span<const EvalReport> rows) {
    std::string out = reports_csv_header();
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,", r.contamination, r.auroc, r.aupr_in, r.aupr_out);
        out += r.split + ',' + r.method + buf;
        if (!r.aggregate) {
            out += std::to_string(r.n_train) + ',' + std::to_string(r.n_test) + ',' + std::to_string(r.seed);
        } else {
            out += ",,";
        }
        out += ',' + r.test_hash + ',' + r.config_hash + '\n';
    }
    return out;
}

inline std::string reports_table(std::span<const EvalReport> rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %-8s %8s %8s %8s %8s\n", "split", "method", "contam", "AUROC", "AUPR-in",
                  "AUPR-out");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-16s %-8s %7.2f%% %8.2f %8.2f %8.2f\n", r.split.c_str(), r.method.c_str(),
                      100.0 * r.contamination, r.auroc, r.aupr_in, r.aupr_out);
        os << buf;
    }
    return os.str();
}

/// Reads a file written by reports_csv. Mean rows come back with aggregate set.
inline std::vector<EvalReport> parse_reports_csv(std::string_view text, const std::string& where) {
    std::vector<EvalReport> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line + '\n' != reports_csv_header()) {
        throw FormatError(where + ": not a report file (unexpected header)");
    }
    const auto number = [&](const std::string& field, std::size_t line_no) {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || end != field.data() + field.size()) {
            throw FormatError(where + " line " + std::to_string(line_no) + ": bad number '" + field + "'");
        }
        return v;
    };
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
            f.push_back(line.substr(start, pos - start));
        }
        f.push_back(line.substr(start));
        if (f.size() != 11) throw FormatError(where + " line " + std::to_string(line_no) + ": expected 11 fields");
        EvalReport r;
        r.split = f[0];
        r.method = f[1];
        r.contamination = number(f[2], line_no);
        r.auroc = number(f[3], line_no);
        r.aupr_in = number(f[4], line_no);
        r.aupr_out = number(f[5], line_no);
        r.aggregate = f[6].empty();
        if (!r.aggregate) {
            r.n_train = static_cast<std::size_t>(number(f[6], line_no));
            r.n_test = static_cast<std::size_t>(number(f[7], line_no));
            r.seed = static_cast<std::uint64_t>(std::stoull(f[8]));
        }
        r.test_hash = f[9];
        r.config_hash = f[10];
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Best AUROC per (split, contamination) over several configurations, then a
/// Mean row per contamination level. Ties keep the earlier row.
inline std::vector<EvalReport> best_per_split(std::span<const EvalReport> rows) {
    std::map<std::pair<std::string, std::string>, EvalReport> best;  // (contamination, split)
    for (const auto& r : rows) {
        if (r.aggregate) continue;
        char key[32];
        std::snprintf(key, sizeof key, "%.6f", r.contamination);
        const auto k = std::make_pair(std::string(key), r.split);
        auto it = best.find(k);
        if (it == best.end() || r.auroc > it->second.auroc) best[k] = r;
    }
    std::vector<EvalReport> out, level;
    std::string current;
    const auto flush = [&] {
        if (level.empty()) return;
        out.insert(out.end(), level.begin(), level.end());
        EvalReport m = mean_row(level);
        m.method = "best";
        m.config_hash.clear();
        out.push_back(m);
        level.clear();
    };
    for (auto& [k, r] : best) {
        if (k.first != current) {
            flush();
            current = k.first;
        }
        r.method = "best:" + r.method;
        level.push_back(r);
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------
// Runners

/// Trains the configured method on `split` and evaluates it on the test set.
inline EvalReport evaluate_split(const RunConfig& cfg, const Prepared& prep, const corpus::ADSplit& split,
                                 const std::optional<baselines::EmbeddingFile>& emb) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> scores;
    try {
        if (cfg.eval.method == "date") {
            scores = date_scores(cfg, prep, split);
        } else if (cfg.eval.method == "iforest") {
            scores = iforest_scores(cfg, *emb, split);
        } else {
            scores = cvdd_scores(cfg, *emb, split);
        }
    } catch (const NumericalError& e) {
        throw NumericalError("split '" + split.inlier_label + "': " + e.detail());
    } catch (const DataError& e) {
        throw DataError("split '" + split.inlier_label + "': " + e.detail());
    }
    EvalReport r = make_report(split.inlier_label, cfg.eval.method, scores, outlier_truth(split));
    r.contamination = split.contamination_rate;
    r.n_train = split.train.size();
    r.n_test = split.test.size();
    r.seed = cfg.eval.method == "date" ? cfg.train.seed
                                       : (cfg.eval.method == "iforest" ? cfg.iforest.seed : cfg.cvdd.seed);
    r.test_hash = documents_hash(split.test);
    r.config_hash = config::config_hash(cfg);
    r.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline std::optional<baselines::EmbeddingFile> embeddings_for(const RunConfig& cfg) {
    if (cfg.eval.method == "date") return std::nullopt;
    return load_embeddings(cfg);
}

/// One report per inlier label, sorted by label, then the Mean row.
inline std::vector<EvalReport> run_semi_supervised(const RunConfig& cfg, const Prepared& prep) {
    const auto emb = embeddings_for(cfg);
    std::vector<EvalReport> rows;
    for (const auto& label : resolve_splits(cfg.eval.splits, prep.partition)) {
        rows.push_back(evaluate_split(cfg, prep, corpus::make_ad_split(prep.partition, label), emb));
    }
    rows.push_back(mean_row(rows));
    return rows;
}

/// For each inlier label and each rate: contaminate, train, evaluate on the
/// unchanged test set. Rows are ordered by label, then by rate as given.
inline std::vector<EvalReport> run_unsupervised_sweep(const RunConfig& cfg, const Prepared& prep,
                                                      std::span<const double> rates) {
    const auto emb = embeddings_for(cfg);
    const auto sampling = corpus::parse_pool_sampling(cfg.eval.pool_sampling);
    std::vector<EvalReport> rows;
    for (const auto& label : resolve_splits(cfg.eval.splits, prep.partition)) {
        const auto clean = corpus::make_ad_split(prep.partition, label);
        const auto pool = corpus::outlier_pool(prep.partition, label);
        for (double rate : rates) {
            rows.push_back(evaluate_split(
                cfg, prep, corpus::contaminate(clean, rate, pool, cfg.eval.contamination_seed, sampling), emb));
        }
    }
    return rows;
}

}  // namespace textad::eval
