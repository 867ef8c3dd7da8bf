#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "textad/corpus.hpp"
#include "textad/cvdd.hpp"
#include "textad/date.hpp"
#include "textad/errors.hpp"
#include "textad/hashing.hpp"
#include "textad/iforest.hpp"
#include "textad/scoring.hpp"
#include "textad/synthetic.hpp"

namespace textad::config {

using nlohmann::json;

struct DataConfig {
    std::string source = "synthetic";  // synthetic | file
    std::string path;                  // corpus (train partition when test_path is set)
    std::string test_path;             // official test partition, optional
    std::string format = "jsonl";
    double test_fraction = 0.2;        // holdout share when no official test partition exists
    std::string inlier_label = "in";   // split used by train / score
    eval::SyntheticSpec synthetic;
};

struct PreprocessConfig {
    std::string profile = "minimal";
    std::string stopwords;  // empty: bundled English list
};

struct VocabConfig {
    std::size_t max_size = 20000;
    std::size_t min_freq = 1;
};

struct MaskConfig {
    std::size_t T = 128;
    std::size_t K = 50;
    double fraction = 0.5;
    std::uint64_t seed = 0;
};

struct TrainSection {
    std::size_t steps = 5000;
    std::size_t batch_size = 16;
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    bool amsgrad = true;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // 0: only at the end
    std::size_t eval_every = 0;        // 0: no periodic test-split rows
};

struct ScoreSection {
    std::string kind = "pl_rtd";
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct EvalSection {
    std::string method = "date";              // date | iforest | cvdd
    std::vector<std::string> splits{"all"};
    std::vector<double> sweep;                // empty: semi-supervised
    std::uint64_t contamination_seed = 0;
    std::string pool_sampling = "uniform_across_classes";
};

struct EmbeddingsSection {
    std::string path;
};

struct RunConfig {
    std::string name = "run";
    std::string output_dir = "runs/default";
    DataConfig data;
    PreprocessConfig preprocess;
    VocabConfig vocab;
    MaskConfig mask;
    date::ModelConfig model;  // vocab_size and max_len are filled in from vocab / mask
    TrainSection train;
    ScoreSection score;
    EvalSection eval;
    EmbeddingsSection embeddings;
    baselines::IForestConfig iforest;
    baselines::CvddConfig cvdd;

    [[nodiscard]] json to_json() const;
    static RunConfig from_json(const json& j);
    static RunConfig load(const std::filesystem::path& path);
    void validate() const;

    /// Model config with vocabulary size and sequence length filled in.
    [[nodiscard]] date::ModelConfig model_config(std::size_t vocab_size) const {
        date::ModelConfig m = model;
        m.vocab_size = vocab_size;
        m.max_len = mask.T;
        return m;
    }

    [[nodiscard]] date::TrainConfig train_config() const {
        date::TrainConfig t;
        t.steps = train.steps;
        t.batch_size = train.batch_size;
        t.optim = {train.lr, train.beta1, train.beta2, train.eps, train.weight_decay, train.amsgrad};
        t.seed = train.seed;
        return t;
    }

    [[nodiscard]] corpus::PreprocessProfile profile() const {
        return corpus::PreprocessProfile::from_name(preprocess.profile);
    }

    /// Stopword list for the profile; empty when the profile keeps stopwords.
    [[nodiscard]] corpus::StopwordSet stopwords() const {
        if (!profile().strip_stopwords) return {};
        const std::filesystem::path p =
            preprocess.stopwords.empty() ? std::filesystem::path(TEXTAD_DATA_DIR) / "stopwords_en.txt"
                                         : std::filesystem::path(preprocess.stopwords);
        return corpus::load_stopwords(p);
    }
};

/// Fingerprint of every field except the output location.
inline std::string config_hash(const RunConfig& cfg) {
    json j = cfg.to_json();
    j.erase("output_dir");
    return sha256_hex(j.dump());
}

/// Fingerprint of the fields that shape prepared artifacts (corpus, vocab, bank).
/// The inlier label only selects a split and is left out.
inline std::string prepare_hash(const RunConfig& cfg) {
    json j = cfg.to_json();
    j["data"].erase("inlier_label");
    return sha256_hex(json{{"data", j["data"]}, {"preprocess", j["preprocess"]}, {"vocab", j["vocab"]},
                           {"mask", j["mask"]}}
                          .dump());
}

// ---------------------------------------------------------------------------
// Strict reading: every key must be known, every value must have the right type.

namespace detail {

class Section {
public:
    Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("'" + where() + "' must be an object");
        const std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items()) {
            if (!known.contains(k)) throw ConfigError("unknown key '" + qualified(k) + "'");
        }
    }

    template <typename T>
    void get(const char* key, T& out) const {
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("key '" + qualified(key) + "' has the wrong type");
        }
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }
    [[nodiscard]] const json& at(const char* key) const { return j_.at(key); }
    [[nodiscard]] std::string qualified(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    [[nodiscard]] std::string where() const { return path_.empty() ? "<root>" : path_; }
    const json& j_;
    std::string path_;
};

// Unsigned fields reject negative numbers instead of wrapping.
template <typename T>
void get_unsigned(const Section& s, const char* key, T& out) {
    if (!s.has(key)) return;
    const json& v = s.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError("key '" + s.qualified(key) + "' must be a non-negative integer");
    }
    out = v.get<T>();
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const json& j) {
    using detail::get_unsigned;
    using detail::Section;
    RunConfig c;
    const Section root(j, "",
                       {"name", "output_dir", "data", "preprocess", "vocab", "mask", "model", "train", "score", "eval",
                        "embeddings", "iforest", "cvdd"});
    root.get("name", c.name);
    root.get("output_dir", c.output_dir);

    if (root.has("data")) {
        const Section s(j.at("data"), "data",
                        {"source", "path", "test_path", "format", "test_fraction", "inlier_label", "synthetic"});
        s.get("source", c.data.source);
        s.get("path", c.data.path);
        s.get("test_path", c.data.test_path);
        s.get("format", c.data.format);
        s.get("test_fraction", c.data.test_fraction);
        s.get("inlier_label", c.data.inlier_label);
        if (s.has("synthetic")) {
            const Section y(s.at("synthetic"), "data.synthetic",
                            {"vocab_in", "vocab_out", "overlap", "docs_per_class", "min_len", "max_len", "successors",
                             "follow_prob", "zipf_exponent", "seed"});
            auto& sp = c.data.synthetic;
            get_unsigned(y, "vocab_in", sp.vocab_in);
            get_unsigned(y, "vocab_out", sp.vocab_out);
            y.get("overlap", sp.overlap);
            get_unsigned(y, "docs_per_class", sp.docs_per_class);
            get_unsigned(y, "min_len", sp.min_len);
            get_unsigned(y, "max_len", sp.max_len);
            get_unsigned(y, "successors", sp.successors);
            y.get("follow_prob", sp.follow_prob);
            y.get("zipf_exponent", sp.zipf_exponent);
            get_unsigned(y, "seed", sp.seed);
        }
    }
    if (root.has("preprocess")) {
        const Section s(j.at("preprocess"), "preprocess", {"profile", "stopwords"});
        s.get("profile", c.preprocess.profile);
        s.get("stopwords", c.preprocess.stopwords);
    }
    if (root.has("vocab")) {
        const Section s(j.at("vocab"), "vocab", {"max_size", "min_freq"});
        get_unsigned(s, "max_size", c.vocab.max_size);
        get_unsigned(s, "min_freq", c.vocab.min_freq);
    }
    if (root.has("mask")) {
        const Section s(j.at("mask"), "mask", {"T", "K", "fraction", "seed"});
        get_unsigned(s, "T", c.mask.T);
        get_unsigned(s, "K", c.mask.K);
        s.get("fraction", c.mask.fraction);
        get_unsigned(s, "seed", c.mask.seed);
    }
    if (root.has("model")) {
        const Section s(j.at("model"), "model",
                        {"d_emb", "d_model", "heads", "d_ff", "layers", "pre_norm", "dropout", "generator",
                         "generator_d_ff", "lambda", "mu", "use_rmd", "electra_relabel"});
        auto& m = c.model;
        get_unsigned(s, "d_emb", m.d_emb);
        get_unsigned(s, "d_model", m.d_model);
        get_unsigned(s, "heads", m.heads);
        get_unsigned(s, "d_ff", m.d_ff);
        get_unsigned(s, "layers", m.layers);
        s.get("pre_norm", m.pre_norm);
        s.get("dropout", m.dropout);
        if (s.has("generator")) {
            std::string g;
            s.get("generator", g);
            m.generator = date::parse_generator_mode(g);
        }
        get_unsigned(s, "generator_d_ff", m.generator_d_ff);
        s.get("lambda", m.lambda);
        s.get("mu", m.mu);
        s.get("use_rmd", m.use_rmd);
        s.get("electra_relabel", m.electra_relabel);
    }
    if (root.has("train")) {
        const Section s(j.at("train"), "train",
                        {"steps", "batch_size", "lr", "beta1", "beta2", "eps", "weight_decay", "amsgrad", "seed",
                         "checkpoint_every", "eval_every"});
        auto& t = c.train;
        get_unsigned(s, "steps", t.steps);
        get_unsigned(s, "batch_size", t.batch_size);
        s.get("lr", t.lr);
        s.get("beta1", t.beta1);
        s.get("beta2", t.beta2);
        s.get("eps", t.eps);
        s.get("weight_decay", t.weight_decay);
        s.get("amsgrad", t.amsgrad);
        get_unsigned(s, "seed", t.seed);
        get_unsigned(s, "checkpoint_every", t.checkpoint_every);
        get_unsigned(s, "eval_every", t.eval_every);
    }
    if (root.has("score")) {
        const Section s(j.at("score"), "score", {"kind", "seed", "threads"});
        s.get("kind", c.score.kind);
        get_unsigned(s, "seed", c.score.seed);
        get_unsigned(s, "threads", c.score.threads);
    }
    if (root.has("eval")) {
        const Section s(j.at("eval"), "eval", {"method", "splits", "sweep", "contamination_seed", "pool_sampling"});
        s.get("method", c.eval.method);
        s.get("splits", c.eval.splits);
        s.get("sweep", c.eval.sweep);
        get_unsigned(s, "contamination_seed", c.eval.contamination_seed);
        s.get("pool_sampling", c.eval.pool_sampling);
    }
    if (root.has("embeddings")) {
        const Section s(j.at("embeddings"), "embeddings", {"path"});
        s.get("path", c.embeddings.path);
    }
    if (root.has("iforest")) {
        const Section s(j.at("iforest"), "iforest", {"n_trees", "psi", "seed"});
        get_unsigned(s, "n_trees", c.iforest.n_trees);
        get_unsigned(s, "psi", c.iforest.psi);
        get_unsigned(s, "seed", c.iforest.seed);
    }
    if (root.has("cvdd")) {
        const Section s(j.at("cvdd"), "cvdd",
                        {"r", "d_a", "steps", "batch_size", "lr", "alpha_schedule", "alpha_max", "seed",
                         "max_oov_fraction"});
        auto& v = c.cvdd;
        get_unsigned(s, "r", v.r);
        get_unsigned(s, "d_a", v.d_a);
        get_unsigned(s, "steps", v.steps);
        get_unsigned(s, "batch_size", v.batch_size);
        s.get("lr", v.lr);
        if (s.has("alpha_schedule")) {
            std::string a;
            s.get("alpha_schedule", a);
            v.schedule = baselines::parse_alpha_schedule(a);
        }
        s.get("alpha_max", v.alpha_max);
        get_unsigned(s, "seed", v.seed);
        s.get("max_oov_fraction", v.max_oov_fraction);
    }
    return c;
}

inline const char* to_string(baselines::AlphaSchedule a) {
    switch (a) {
        case baselines::AlphaSchedule::constant: return "constant";
        case baselines::AlphaSchedule::linear: return "linear";
        case baselines::AlphaSchedule::logarithmic: return "logarithmic";
    }
    return "logarithmic";
}

inline json RunConfig::to_json() const {
    json model_j = model.to_json();
    model_j.erase("vocab_size");
    model_j.erase("max_len");
    return {
        {"name", name},
        {"output_dir", output_dir},
        {"data",
         {{"source", data.source},
          {"path", data.path},
          {"test_path", data.test_path},
          {"format", data.format},
          {"test_fraction", data.test_fraction},
          {"inlier_label", data.inlier_label},
          {"synthetic", data.synthetic.to_json()}}},
        {"preprocess", {{"profile", preprocess.profile}, {"stopwords", preprocess.stopwords}}},
        {"vocab", {{"max_size", vocab.max_size}, {"min_freq", vocab.min_freq}}},
        {"mask", {{"T", mask.T}, {"K", mask.K}, {"fraction", mask.fraction}, {"seed", mask.seed}}},
        {"model", model_j},
        {"train",
         {{"steps", train.steps},
          {"batch_size", train.batch_size},
          {"lr", train.lr},
          {"beta1", train.beta1},
          {"beta2", train.beta2},
          {"eps", train.eps},
          {"weight_decay", train.weight_decay},
          {"amsgrad", train.amsgrad},
          {"seed", train.seed},
          {"checkpoint_every", train.checkpoint_every},
          {"eval_every", train.eval_every}}},
        {"score", {{"kind", score.kind}, {"seed", score.seed}, {"threads", score.threads}}},
        {"eval",
         {{"method", eval.method},
          {"splits", eval.splits},
          {"sweep", eval.sweep},
          {"contamination_seed", eval.contamination_seed},
          {"pool_sampling", eval.pool_sampling}}},
        {"embeddings", {{"path", embeddings.path}}},
        {"iforest", {{"n_trees", iforest.n_trees}, {"psi", iforest.psi}, {"seed", iforest.seed}}},
        {"cvdd",
         {{"r", cvdd.r},
          {"d_a", cvdd.d_a},
          {"steps", cvdd.steps},
          {"batch_size", cvdd.batch_size},
          {"lr", cvdd.lr},
          {"alpha_schedule", to_string(cvdd.schedule)},
          {"alpha_max", cvdd.alpha_max},
          {"seed", cvdd.seed},
          {"max_oov_fraction", cvdd.max_oov_fraction}}},
    };
}

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
    return from_json(j);
}

inline void RunConfig::validate() const {
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (data.source == "synthetic") {
        data.synthetic.validate();
    } else if (data.source == "file") {
        if (data.path.empty()) throw ConfigError("missing key 'data.path' for source 'file'");
        (void)corpus::parse_corpus_format(data.format);
    } else {
        throw ConfigError("data.source must be 'synthetic' or 'file'; got '" + data.source + "'");
    }
    if (data.test_path.empty() && !(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
        throw ConfigError("data.test_fraction must lie in (0, 1)");
    }
    (void)profile();
    if (vocab.max_size < 1) throw ConfigError("vocab.max_size must be positive");
    if (mask.T < 2) throw ConfigError("mask.T must be at least 2");
    if (mask.K < 1) throw ConfigError("mask.K must be positive");
    if (!(mask.fraction > 0.0 && mask.fraction < 1.0)) throw ConfigError("mask.fraction must lie in (0, 1)");
    date::ModelConfig m = model_config(5);
    m.validate();
    if (m.d_model % m.heads != 0) throw ConfigError("model.d_model must be divisible by model.heads");
    train_config().validate();
    (void)scoring::parse_score_kind(score.kind);
    if (score.threads < 1) throw ConfigError("score.threads must be positive");
    if (eval.method != "date" && eval.method != "iforest" && eval.method != "cvdd") {
        throw ConfigError("eval.method must be date, iforest or cvdd; got '" + eval.method + "'");
    }
    if (eval.splits.empty()) throw ConfigError("eval.splits must list at least one label or 'all'");
    for (double r : eval.sweep) {
        if (!(r >= 0.0 && r < 0.5)) throw ConfigError("eval.sweep rates must lie in [0, 0.5)");
    }
    (void)corpus::parse_pool_sampling(eval.pool_sampling);
    if (iforest.n_trees < 1 || iforest.psi < 2) throw ConfigError("iforest needs n_trees >= 1 and psi >= 2");
    if (cvdd.r < 1 || cvdd.d_a < 1 || cvdd.steps < 1 || cvdd.batch_size < 1 || !(cvdd.lr > 0.0)) {
        throw ConfigError("invalid cvdd settings");
    }
    if (!(cvdd.max_oov_fraction >= 0.0 && cvdd.max_oov_fraction <= 1.0)) {
        throw ConfigError("cvdd.max_oov_fraction must lie in [0, 1]");
    }
}

}  // namespace textad::config
