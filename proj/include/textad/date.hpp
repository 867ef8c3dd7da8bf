#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "textad/errors.hpp"
#include "textad/hashing.hpp"
#include "textad/maskbank.hpp"
#include "textad/nn/checkpoint.hpp"
#include "textad/nn/graph.hpp"
#include "textad/nn/layers.hpp"
#include "textad/nn/optim.hpp"
#include "textad/rng.hpp"
#include "textad/textprep.hpp"

namespace textad::date {

using nn::Graph;
using nn::Tensor;
using nn::Var;
using textprep::TokenId;
using textprep::TokenSequence;

enum class GeneratorMode { random, small, large };

inline GeneratorMode parse_generator_mode(const std::string& s) {
    if (s == "random") return GeneratorMode::random;
    if (s == "small") return GeneratorMode::small;
    if (s == "large") return GeneratorMode::large;
    throw ConfigError("generator mode must be random, small or large, got '" + s + "'");
}

inline std::string to_string(GeneratorMode m) {
    switch (m) {
        case GeneratorMode::random: return "random";
        case GeneratorMode::small: return "small";
        case GeneratorMode::large: return "large";
    }
    return "random";
}

/// Generator hidden size for the learned modes.
inline std::size_t generator_hidden(GeneratorMode m) { return m == GeneratorMode::large ? 64 : 16; }

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t max_len = 128;
    std::size_t d_emb = 128;
    std::size_t d_model = 256;
    std::size_t heads = 4;
    std::size_t d_ff = 1024;
    std::size_t layers = 4;
    bool pre_norm = true;
    double dropout = 0.1;
    GeneratorMode generator = GeneratorMode::random;
    std::size_t generator_d_ff = 1024;
    double lambda = 50.0;  // RTD weight
    double mu = 100.0;     // RMD weight
    bool use_rmd = true;   // false drops the RMD head entirely
    bool electra_relabel = false;

    void validate() const {
        if (vocab_size < 5) throw ConfigError("vocabulary must hold at least one regular token (size >= 5)");
        if (max_len < 2) throw ConfigError("max_len must be at least 2");
        if (!(std::isfinite(lambda) && std::isfinite(mu)) || lambda < 0.0 || mu < 0.0) {
            throw ConfigError("loss weights must be finite and non-negative");
        }
        if (lambda == 0.0 && (mu == 0.0 || !use_rmd)) throw ConfigError("at least one of lambda, mu must be positive");
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
    }

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"vocab_size", vocab_size}, {"max_len", max_len},
                {"d_emb", d_emb},           {"d_model", d_model},
                {"heads", heads},           {"d_ff", d_ff},
                {"layers", layers},         {"pre_norm", pre_norm},
                {"dropout", dropout},       {"generator", to_string(generator)},
                {"generator_d_ff", generator_d_ff}, {"lambda", lambda},
                {"mu", mu},                 {"use_rmd", use_rmd},
                {"electra_relabel", electra_relabel}};
    }

    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        try {
            c.vocab_size = j.at("vocab_size").get<std::size_t>();
            c.max_len = j.at("max_len").get<std::size_t>();
            c.d_emb = j.at("d_emb").get<std::size_t>();
            c.d_model = j.at("d_model").get<std::size_t>();
            c.heads = j.at("heads").get<std::size_t>();
            c.d_ff = j.at("d_ff").get<std::size_t>();
            c.layers = j.at("layers").get<std::size_t>();
            c.pre_norm = j.at("pre_norm").get<bool>();
            c.dropout = j.at("dropout").get<double>();
            c.generator = parse_generator_mode(j.at("generator").get<std::string>());
            c.generator_d_ff = j.at("generator_d_ff").get<std::size_t>();
            c.lambda = j.at("lambda").get<double>();
            c.mu = j.at("mu").get<double>();
            c.use_rmd = j.at("use_rmd").get<bool>();
            c.electra_relabel = j.at("electra_relabel").get<bool>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("model config: ") + e.what());
        }
        return c;
    }
};

/// One corrupted training example.
struct CorruptionRecord {
    static constexpr std::size_t kNoPattern = static_cast<std::size_t>(-1);
    std::size_t k = kNoPattern;
    TokenSequence original;
    TokenSequence masked;
    TokenSequence corrupted;
    std::vector<std::uint8_t> replaced;  // 1 = replaced; always 0 at CLS and PAD
};

/// Draws the replacement for masked position `pos`.
using ReplacementSampler = std::function<TokenId(std::size_t pos)>;

/// Masks `seq` with `pattern` and fills masked valid positions from `sample`.
/// Positions at or beyond true_len are never touched.
inline CorruptionRecord corrupt_with(const TokenSequence& seq, const maskbank::MaskPattern& pattern, std::size_t k,
                                     const ReplacementSampler& sample, bool electra_relabel = false) {
    CorruptionRecord rec;
    rec.k = k;
    rec.original = seq;
    rec.masked = maskbank::apply_mask(seq, pattern);
    rec.corrupted = seq;
    rec.replaced.assign(seq.length(), 0);
    for (std::size_t i = 0; i < seq.true_len && i < seq.length(); ++i) {
        if (!pattern.bits[i] || seq.ids[i] == textprep::kPad) continue;
        rec.corrupted.ids[i] = sample(i);
        rec.replaced[i] = (electra_relabel && rec.corrupted.ids[i] == seq.ids[i]) ? 0 : 1;
    }
    return rec;
}

/// The DATE network: tied embeddings, an optional MLM generator, and a
/// discriminator with a per-token RTD head and a sequence-level RMD head.
class DateModel {
public:
    struct Heads {
        Var rtd_logits;                  // rows x 2, column 0 = original
        std::optional<Var> rmd_logits;   // 1 x K
    };

    DateModel(const ModelConfig& cfg, maskbank::MaskBank bank, std::uint64_t init_seed)
        : cfg_(cfg), bank_(std::move(bank)) {
        cfg_.validate();
        if (bank_.T != cfg_.max_len) {
            throw ConfigError("mask bank length " + std::to_string(bank_.T) + " differs from max_len " +
                              std::to_string(cfg_.max_len));
        }
        if (bank_.K() < 1) throw ConfigError("mask bank is empty");
        const auto V = static_cast<Eigen::Index>(cfg_.vocab_size);
        const auto T = static_cast<Eigen::Index>(cfg_.max_len);
        const auto E = static_cast<Eigen::Index>(cfg_.d_emb);
        const auto D = static_cast<Eigen::Index>(cfg_.d_model);
        Rng emb_rng = Rng::stream(init_seed, 1);
        tok_ = &store_.add("emb.token", V, E, nn::Init::xavier_uniform, emb_rng);
        pos_ = &store_.add("emb.position", T, E, nn::Init::xavier_uniform, emb_rng);

        Rng disc_rng = Rng::stream(init_seed, 2);
        nn::EncoderConfig dc{cfg_.vocab_size, cfg_.max_len, cfg_.d_emb, cfg_.d_model, cfg_.heads,
                             cfg_.d_ff,       cfg_.layers,  cfg_.pre_norm, cfg_.dropout};
        disc_ = nn::Encoder(store_, "disc", dc, *tok_, *pos_, disc_rng);

        Rng rtd_rng = Rng::stream(init_seed, 3);
        rtd_dense_ = nn::Linear::create(store_, "rtd.dense", D, D, rtd_rng);
        rtd_out_ = nn::Linear::create(store_, "rtd.out", D, 2, rtd_rng);

        if (cfg_.use_rmd) {
            Rng rmd_rng = Rng::stream(init_seed, 4);
            const auto K = static_cast<Eigen::Index>(bank_.K());
            rmd_dense_ = nn::Linear::create(store_, "rmd.dense", D, D, rmd_rng);
            rmd_out_ = nn::Linear::create(store_, "rmd.out", D, K, rmd_rng);
        }

        if (cfg_.generator != GeneratorMode::random) {
            Rng gen_rng = Rng::stream(init_seed, 5);
            const std::size_t hidden = generator_hidden(cfg_.generator);
            nn::EncoderConfig gc{cfg_.vocab_size, cfg_.max_len, cfg_.d_emb, hidden, 4,
                                 cfg_.generator_d_ff, 1, cfg_.pre_norm, cfg_.dropout};
            gen_ = nn::Encoder(store_, "gen", gc, *tok_, *pos_, gen_rng);
            gen_head_ = nn::Linear::create(store_, "gen.head", static_cast<Eigen::Index>(hidden), V, gen_rng);
        }
    }

    DateModel(DateModel&&) noexcept = default;
    DateModel& operator=(DateModel&&) noexcept = default;

    [[nodiscard]] const ModelConfig& config() const { return cfg_; }
    [[nodiscard]] const maskbank::MaskBank& bank() const { return bank_; }
    [[nodiscard]] std::size_t K() const { return bank_.K(); }
    [[nodiscard]] bool has_generator() const { return cfg_.generator != GeneratorMode::random; }
    [[nodiscard]] nn::ParamStore& params() { return store_; }
    [[nodiscard]] const nn::ParamStore& params() const { return store_; }

    /// Discriminator heads over `ids`. With an empty `key_valid` every position
    /// is attended.
    Heads discriminate(Graph& g, std::span<const TokenId> ids, std::span<const std::uint8_t> key_valid = {},
                       Rng* dropout_rng = nullptr) const {
        const Var h = disc_.forward(g, ids, key_valid, dropout_rng);
        Heads out;
        out.rtd_logits = rtd_out_(g, g.gelu(rtd_dense_(g, h)));
        if (cfg_.use_rmd) out.rmd_logits = rmd_out_(g, g.gelu(rmd_dense_(g, g.slice_rows(h, 0, 1))));
        return out;
    }

    /// Generator vocabulary logits for every position of `masked_ids`.
    Var generate(Graph& g, std::span<const TokenId> masked_ids, Rng* dropout_rng = nullptr) const {
        if (!has_generator()) throw ModeError("generator is not available in random mode");
        return gen_head_(g, gen_.forward(g, masked_ids, {}, dropout_rng));
    }

private:
    ModelConfig cfg_;
    maskbank::MaskBank bank_;
    nn::ParamStore store_;
    nn::Parameter* tok_ = nullptr;
    nn::Parameter* pos_ = nullptr;
    nn::Encoder disc_;
    nn::Linear rtd_dense_, rtd_out_, rmd_dense_, rmd_out_;
    nn::Encoder gen_;
    nn::Linear gen_head_;
};

namespace detail {
inline std::span<const TokenId> prefix(const TokenSequence& s) {
    return std::span<const TokenId>(s.ids).first(std::min(s.true_len, s.ids.size()));
}

inline std::vector<std::size_t> masked_positions(const CorruptionRecord& rec) {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < rec.masked.true_len; ++i) {
        if (rec.masked.ids[i] == textprep::kMask) pos.push_back(i);
    }
    return pos;
}

inline Tensor softmax_rows(const Tensor& z) {
    Tensor p(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double mx = z.row(r).maxCoeff();
        p.row(r) = (z.row(r).array() - mx).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

inline TokenId sample_regular(const Eigen::Ref<const Eigen::RowVectorXd>& probs, Rng& rng) {
    double mass = 0.0;
    for (Eigen::Index v = textprep::kFirstRegular; v < probs.size(); ++v) mass += probs(v);
    double u = rng.uniform01() * mass;
    for (Eigen::Index v = textprep::kFirstRegular; v < probs.size(); ++v) {
        u -= probs(v);
        if (u < 0.0) return static_cast<TokenId>(v);
    }
    return static_cast<TokenId>(probs.size() - 1);
}
}  // namespace detail

/// P_G over the vocabulary at each masked valid position of `masked`, one row
/// per position in increasing order.
inline Tensor generator_forward(const DateModel& model, const TokenSequence& masked) {
    if (!model.has_generator()) throw ModeError("generator_forward called in random generator mode");
    Graph g;
    const Tensor logits = model.generate(g, detail::prefix(masked)).value();
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < masked.true_len; ++i) {
        if (masked.ids[i] == textprep::kMask) rows.push_back(static_cast<Eigen::Index>(i));
    }
    Tensor picked(static_cast<Eigen::Index>(rows.size()), logits.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) picked.row(static_cast<Eigen::Index>(r)) = logits.row(rows[r]);
    return detail::softmax_rows(picked);
}

/// Corrupts `seq` with `pattern`: uniform regular-token replacements in random
/// mode, samples from P_G (restricted to regular tokens) otherwise.
inline CorruptionRecord corrupt(const TokenSequence& seq, const maskbank::MaskPattern& pattern, std::size_t k,
                                const DateModel& model, Rng& rng) {
    const auto V = model.config().vocab_size;
    if (!model.has_generator()) {
        const auto n_regular = V - static_cast<std::size_t>(textprep::kFirstRegular);
        return corrupt_with(
            seq, pattern, k,
            [&](std::size_t) { return static_cast<TokenId>(textprep::kFirstRegular + rng.uniform_index(n_regular)); },
            model.config().electra_relabel);
    }
    const TokenSequence masked = maskbank::apply_mask(seq, pattern);
    const Tensor probs = generator_forward(model, masked);
    Eigen::Index row = 0;
    return corrupt_with(
        seq, pattern, k, [&](std::size_t) { return detail::sample_regular(probs.row(row++), rng); },
        model.config().electra_relabel);
}

inline CorruptionRecord corrupt(const TokenSequence& seq, std::size_t k, const DateModel& model, Rng& rng) {
    if (k >= model.K()) throw RangeError("pattern index " + std::to_string(k) + " outside bank of " +
                                         std::to_string(model.K()));
    return corrupt(seq, model.bank().patterns[k], k, model, rng);
}

struct DiscriminatorOutput {
    Tensor rtd_logits;  // T x 2
    Tensor rmd_logits;  // 1 x K (empty without an RMD head)
};

/// Full-length discriminator pass with PAD positions masked out of attention.
inline DiscriminatorOutput discriminator_forward(const DateModel& model, const TokenSequence& seq) {
    if (seq.length() != model.config().max_len) {
        throw ShapeError("sequence length " + std::to_string(seq.length()) + " differs from model T " +
                         std::to_string(model.config().max_len));
    }
    nn::KeyMask valid(seq.length(), 0);
    for (std::size_t i = 0; i < seq.true_len; ++i) valid[i] = 1;
    Graph g;
    const auto heads = model.discriminate(g, seq.ids, valid);
    DiscriminatorOutput out;
    out.rtd_logits = heads.rtd_logits.value();
    if (heads.rmd_logits) out.rmd_logits = heads.rmd_logits->value();
    return out;
}

// ---------------------------------------------------------------------------
// Loss

struct LossParts {
    double total = 0.0;
    double l_rmd = 0.0;
    double l_rtd = 0.0;
    double l_mlm = 0.0;
};

struct ExampleLoss {
    Var total;  // weight * (mu L_RMD + L_MLM + lambda L_RTD) for this example
    LossParts parts;  // unweighted per-example values
};

/// Composes the per-example loss from head outputs. `rtd_logits` covers the
/// valid prefix; `mlm_logits`, when present, has one row per masked position.
inline ExampleLoss compose_example_loss(Graph& g, const CorruptionRecord& rec, Var rtd_logits,
                                        std::optional<Var> rmd_logits, std::optional<Var> mlm_logits, double lambda,
                                        double mu, double weight) {
    const std::size_t n = static_cast<std::size_t>(rtd_logits.rows());
    if (n != rec.corrupted.true_len) throw ShapeError("RTD logits do not cover the valid prefix");
    std::vector<std::int32_t> rtd_targets(n);
    std::vector<double> rtd_weights(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) rtd_targets[i] = rec.replaced[i];
    rtd_weights[0] = 0.0;  // CLS
    std::vector<Var> terms;
    std::vector<double> ws;
    ExampleLoss out;

    const Var rtd = g.cross_entropy_rows(rtd_logits, rtd_targets, rtd_weights);
    out.parts.l_rtd = rtd.scalar();
    terms.push_back(rtd);
    ws.push_back(lambda * weight);

    if (rmd_logits) {
        if (rec.k == CorruptionRecord::kNoPattern) throw RangeError("record has no pattern index for RMD");
        const std::vector<std::int32_t> t = {static_cast<std::int32_t>(rec.k)};
        const std::vector<double> w = {1.0};
        const Var rmd = g.cross_entropy_rows(*rmd_logits, t, w);
        out.parts.l_rmd = rmd.scalar();
        terms.push_back(rmd);
        ws.push_back(mu * weight);
    }
    if (mlm_logits) {
        const auto pos = detail::masked_positions(rec);
        if (static_cast<std::size_t>(mlm_logits->rows()) != pos.size()) {
            throw ShapeError("MLM logits do not match the masked positions");
        }
        if (!pos.empty()) {
            std::vector<std::int32_t> t;
            for (std::size_t p : pos) t.push_back(rec.original.ids[p]);
            const std::vector<double> w(pos.size(), 1.0);
            const Var mlm = g.cross_entropy_rows(*mlm_logits, t, w);
            out.parts.l_mlm = mlm.scalar();
            terms.push_back(mlm);
            ws.push_back(weight);
        }
    }
    out.parts.total = (rmd_logits ? mu * out.parts.l_rmd : 0.0) + out.parts.l_mlm + lambda * out.parts.l_rtd;
    out.total = g.weighted_sum(terms, ws);
    return out;
}

/// Builds the example's loss graph through the model's heads.
inline ExampleLoss build_example_loss(Graph& g, const DateModel& model, const CorruptionRecord& rec, double weight,
                                      Rng* dropout_rng = nullptr) {
    const auto heads = model.discriminate(g, detail::prefix(rec.corrupted), {}, dropout_rng);
    std::optional<Var> mlm;
    if (model.has_generator()) {
        const Var logits = model.generate(g, detail::prefix(rec.masked), dropout_rng);
        const auto pos = detail::masked_positions(rec);
        const std::vector<std::int32_t> idx(pos.begin(), pos.end());
        mlm = g.gather_rows(logits, idx);
    }
    return compose_example_loss(g, rec, heads.rtd_logits, heads.rmd_logits, mlm, model.config().lambda,
                                model.config().mu, weight);
}

/// Batch loss: batch means of the per-example parts. With `accumulate` the
/// gradient of the total is added into every parameter's grad.
inline LossParts loss_date(const DateModel& model, std::span<const CorruptionRecord> batch, bool accumulate = false,
                           Rng* dropout_rng = nullptr) {
    if (batch.empty()) throw EmptyInputError("loss over an empty batch");
    const double w = 1.0 / static_cast<double>(batch.size());
    LossParts sum;
    for (const auto& rec : batch) {
        Graph g;
        const ExampleLoss ex = build_example_loss(g, model, rec, w, dropout_rng);
        if (!std::isfinite(ex.total.scalar())) throw NumericalError("non-finite loss");
        sum.l_rmd += w * ex.parts.l_rmd;
        sum.l_rtd += w * ex.parts.l_rtd;
        sum.l_mlm += w * ex.parts.l_mlm;
        if (accumulate) g.backward(ex.total);
    }
    const auto& c = model.config();
    sum.total = (c.use_rmd ? c.mu * sum.l_rmd : 0.0) + sum.l_mlm + c.lambda * sum.l_rtd;
    if (!std::isfinite(sum.total)) throw NumericalError("non-finite loss");
    return sum;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::size_t steps = 5000;
    std::size_t batch_size = 16;
    nn::AdamWConfig optim{};
    std::uint64_t seed = 0;

    void validate() const {
        if (steps < 1) throw ConfigError("steps must be at least 1");
        if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
        if (!(optim.lr > 0.0)) throw ConfigError("learning rate must be positive");
    }
};

struct TrainLogRow {
    std::size_t step = 0;
    LossParts loss;
    double wallclock_ms = 0.0;
};

inline std::string log_csv_header() { return "step,total,l_rmd,l_rtd,l_mlm,wallclock_ms\n"; }

inline std::string log_csv_row(const TrainLogRow& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.step << ',' << r.loss.total << ',' << r.loss.l_rmd << ',' << r.loss.l_rtd << ',' << r.loss.l_mlm << ','
       << static_cast<long long>(std::llround(r.wallclock_ms)) << '\n';
    return os.str();
}

/// Random streams derived from the training seed.
enum TrainStream : std::uint64_t { kOrderStream = 11, kPatternStream = 12, kCorruptStream = 13, kDropoutStream = 14 };

/// Trains `model` on `data`. Divergence raises NumericalError before the
/// offending update, so the model still holds the last finite parameters.
inline std::vector<TrainLogRow> train(DateModel& model, std::span<const TokenSequence> data, const TrainConfig& cfg,
                                      const std::function<void(const TrainLogRow&)>& on_step = {}) {
    cfg.validate();
    if (data.empty()) throw EmptyInputError("training set is empty");
    for (const auto& s : data) {
        if (s.length() != model.config().max_len) throw ShapeError("training sequence length differs from model T");
    }
    Rng order = Rng::stream(cfg.seed, kOrderStream);
    Rng pattern_rng = Rng::stream(cfg.seed, kPatternStream);
    Rng corrupt_rng = Rng::stream(cfg.seed, kCorruptStream);
    Rng dropout_rng = Rng::stream(cfg.seed, kDropoutStream);
    nn::AdamW opt(model.params().all(), cfg.optim);

    std::vector<std::size_t> perm(data.size());
    std::size_t cursor = perm.size();
    const auto start = std::chrono::steady_clock::now();
    std::vector<TrainLogRow> log;
    log.reserve(cfg.steps);
    std::vector<CorruptionRecord> batch;
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        batch.clear();
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            if (cursor == perm.size()) {
                for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
                order.shuffle(perm);
                cursor = 0;
            }
            const std::size_t k = pattern_rng.uniform_index(model.K());
            batch.push_back(corrupt(data[perm[cursor++]], k, model, corrupt_rng));
        }
        model.params().zero_grad();
        LossParts parts;
        try {
            parts = loss_date(model, batch, true, &dropout_rng);
        } catch (const NumericalError&) {
            throw NumericalError("training diverged at step " + std::to_string(step));
        }
        for (const nn::Parameter* p : model.params().all()) {
            if (!nn::all_finite(p->grad)) {
                throw NumericalError("non-finite gradient for " + p->name + " at step " + std::to_string(step));
            }
        }
        opt.step();
        TrainLogRow row{step, parts,
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()};
        if (on_step) on_step(row);
        log.push_back(row);
    }
    return log;
}

// ---------------------------------------------------------------------------
// Persistence

inline std::string serialize_model(const DateModel& model) {
    nlohmann::json meta = {{"kind", "date"}, {"config", model.config().to_json()}};
    return nn::serialize_checkpoint({meta.dump(), nn::snapshot(model.params())});
}

/// Rebuilds a model from checkpoint bytes; `bank` must be the bank it was trained with.
inline DateModel parse_model(std::string_view bytes, maskbank::MaskBank bank) {
    const nn::Checkpoint ck = nn::parse_checkpoint(bytes);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(ck.metadata);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint metadata: ") + e.what());
    }
    if (meta.value("kind", "") != "date") throw FormatError("checkpoint does not hold a DATE model");
    DateModel model(ModelConfig::from_json(meta.at("config")), std::move(bank), 0);
    nn::restore(model.params(), ck.tensors);
    return model;
}

inline void save_model(const std::filesystem::path& path, const DateModel& model) {
    write_file_bytes(path, serialize_model(model));
}

inline DateModel load_model(const std::filesystem::path& path, maskbank::MaskBank bank) {
    return parse_model(read_file_bytes(path), std::move(bank));
}

}  // namespace textad::date
