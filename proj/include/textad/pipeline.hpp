#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "textad/config.hpp"
#include "textad/date.hpp"
#include "textad/errors.hpp"
#include "textad/harness.hpp"
#include "textad/hashing.hpp"
#include "textad/maskbank.hpp"
#include "textad/metrics.hpp"
#include "textad/scoring.hpp"
#include "textad/textprep.hpp"

/// The command implementations behind the `textad` tool. Every command reads a
/// validated RunConfig and writes its artifacts plus a JSON manifest into
/// `cfg.output_dir`.
namespace textad::pipeline {

namespace fs = std::filesystem;
using config::RunConfig;
using nlohmann::json;

struct Layout {
    fs::path dir;

    [[nodiscard]] fs::path vocab() const { return dir / "vocab.txt"; }
    [[nodiscard]] fs::path bank() const { return dir / "bank.txt"; }
    [[nodiscard]] fs::path train_docs() const { return dir / "docs_train.jsonl"; }
    [[nodiscard]] fs::path test_docs() const { return dir / "docs_test.jsonl"; }
    [[nodiscard]] fs::path train_encoded() const { return dir / "encoded_train.bin"; }
    [[nodiscard]] fs::path test_encoded() const { return dir / "encoded_test.bin"; }
    [[nodiscard]] fs::path prepare_manifest() const { return dir / "manifest_prepare.json"; }
    [[nodiscard]] fs::path model() const { return dir / "model.ckpt"; }
    [[nodiscard]] fs::path train_log() const { return dir / "train_log.csv"; }
    [[nodiscard]] fs::path train_eval() const { return dir / "train_eval.csv"; }
    [[nodiscard]] fs::path train_manifest() const { return dir / "manifest_train.json"; }
    [[nodiscard]] fs::path scores() const { return dir / "scores.csv"; }
    [[nodiscard]] fs::path score_manifest() const { return dir / "manifest_score.json"; }
    [[nodiscard]] fs::path report_csv(const std::string& stem) const { return dir / (stem + ".csv"); }
    [[nodiscard]] fs::path report_table(const std::string& stem) const { return dir / (stem + ".txt"); }
    [[nodiscard]] fs::path eval_manifest(const std::string& stem) const { return dir / ("manifest_" + stem + ".json"); }
    [[nodiscard]] fs::path maskgen_table() const { return dir / "maskgen.tsv"; }
    [[nodiscard]] fs::path maskgen_manifest() const { return dir / "manifest_maskgen.json"; }
};

inline Layout layout(const RunConfig& cfg) { return {fs::path(cfg.output_dir)}; }

inline void write_json(const fs::path& path, const json& j) { write_file_bytes(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_file_bytes(path));
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline json manifest_base(const std::string& command, const RunConfig& cfg) {
    return {{"command", command},
            {"config", cfg.to_json()},
            {"config_hash", config::config_hash(cfg)},
            {"prepare_hash", config::prepare_hash(cfg)}};
}

// ---------------------------------------------------------------------------
// Document files keep ids: one {"id","text","label"} object per line.

inline void save_documents(const fs::path& path, std::span<const corpus::Document> docs) {
    std::string out;
    for (const auto& d : docs) out += json{{"id", d.id}, {"text", d.text}, {"label", d.label}}.dump() + "\n";
    write_file_bytes(path, out);
}

/// Reads documents; `id` and `label` are optional (defaults: "<stem>:<n>" and "").
inline std::vector<corpus::Document> load_documents(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open document file " + path.string());
    std::vector<corpus::Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string where = path.string() + " line " + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error&) {
            throw FormatError(where + ": invalid JSON");
        }
        if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string()) {
            throw FormatError(where + ": missing string field `text`");
        }
        corpus::Document d;
        d.id = rec.contains("id") && rec["id"].is_string() ? rec["id"].get<std::string>()
                                                             : path.stem().string() + ":" + std::to_string(docs.size());
        d.text = rec["text"].get<std::string>();
        if (rec.contains("label")) {
            if (!rec["label"].is_string()) throw FormatError(where + ": `label` must be a string");
            d.label = rec["label"].get<std::string>();
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareResult {
    std::map<std::string, std::string> hashes;  // artifact name -> sha256
    std::size_t n_train = 0, n_test = 0, dropped_train = 0, dropped_test = 0;
    std::size_t vocab_size = 0;
};

inline PrepareResult cmd_prepare(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const Layout L = layout(cfg);
    const eval::Prepared prep = eval::prepare(cfg);
    fs::create_directories(L.dir);
    textprep::save_vocab(L.vocab(), prep.vocab);
    maskbank::save_bank(L.bank(), prep.bank);
    save_documents(L.train_docs(), prep.partition.train);
    save_documents(L.test_docs(), prep.partition.test);
    write_file_bytes(L.train_encoded(),
                     textprep::serialize_encoded(eval::encode_all(prep.partition.train, prep.vocab, cfg.mask.T)));
    write_file_bytes(L.test_encoded(),
                     textprep::serialize_encoded(eval::encode_all(prep.partition.test, prep.vocab, cfg.mask.T)));

    PrepareResult r;
    r.hashes = {{"vocab", file_sha256(L.vocab())},
                {"bank", file_sha256(L.bank())},
                {"docs_train", file_sha256(L.train_docs())},
                {"docs_test", file_sha256(L.test_docs())},
                {"encoded_train", file_sha256(L.train_encoded())},
                {"encoded_test", file_sha256(L.test_encoded())}};
    r.n_train = prep.partition.train.size();
    r.n_test = prep.partition.test.size();
    r.dropped_train = prep.dropped_train;
    r.dropped_test = prep.dropped_test;
    r.vocab_size = prep.vocab.size();

    json m = manifest_base("prepare", cfg);
    m["artifacts"] = r.hashes;
    m["seeds"] = {{"mask", cfg.mask.seed}, {"synthetic", cfg.data.synthetic.seed}};
    m["counts"] = {{"train", r.n_train},
                   {"test", r.n_test},
                   {"dropped_train", r.dropped_train},
                   {"dropped_test", r.dropped_test},
                   {"vocab", r.vocab_size},
                   {"bank_K", prep.bank.K()},
                   {"bank_M", prep.bank.M}};
    write_json(L.prepare_manifest(), m);

    for (const auto& [name, h] : r.hashes) log << name << ' ' << h << '\n';
    log << "documents: " << r.n_train << " train, " << r.n_test << " test (dropped empty: " << r.dropped_train << " + "
        << r.dropped_test << "); vocabulary " << r.vocab_size << "; bank K=" << prep.bank.K()
        << " M=" << prep.bank.M << '\n';
    return r;
}

/// Loads the prepared artifacts and checks them against their manifest and the config.
inline eval::Prepared load_prepared(const RunConfig& cfg) {
    const Layout L = layout(cfg);
    if (!fs::exists(L.prepare_manifest())) {
        throw ConfigError("no prepared artifacts in " + L.dir.string() + "; run `textad prepare` first");
    }
    const json m = read_json(L.prepare_manifest());
    if (m.value("prepare_hash", "") != config::prepare_hash(cfg)) {
        throw ArtifactMismatchError("prepared artifacts in " + L.dir.string() +
                                    " come from different data/preprocess/vocab/mask settings; rerun prepare");
    }
    const std::map<std::string, fs::path> files{{"vocab", L.vocab()},
                                                {"bank", L.bank()},
                                                {"docs_train", L.train_docs()},
                                                {"docs_test", L.test_docs()}};
    for (const auto& [name, path] : files) {
        if (!fs::exists(path)) throw ArtifactMismatchError(path.string() + " is missing");
        const std::string want = m.at("artifacts").value(name, "");
        if (file_sha256(path) != want) throw ArtifactMismatchError(path.string() + " does not match its manifest hash");
    }
    eval::Prepared p;
    p.vocab = textprep::load_vocab(L.vocab());
    p.bank = maskbank::load_bank(L.bank());
    p.partition.train = load_documents(L.train_docs());
    p.partition.test = load_documents(L.test_docs());
    return p;
}

// ---------------------------------------------------------------------------
// train

struct TrainResult {
    fs::path checkpoint;
    std::size_t steps = 0;
    date::LossParts last;
};

inline TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const Layout L = layout(cfg);
    const eval::Prepared prep = load_prepared(cfg);
    const corpus::ADSplit split = corpus::make_ad_split(prep.partition, cfg.data.inlier_label);
    const auto train = eval::encode_all(split.train, prep.vocab, cfg.mask.T);
    const auto test = eval::encode_all(split.test, prep.vocab, cfg.mask.T);
    const auto truth = eval::outlier_truth(split);
    const auto kind = scoring::parse_score_kind(cfg.score.kind);

    date::DateModel model(cfg.model_config(prep.vocab.size()), prep.bank, cfg.train.seed);
    std::ofstream csv(L.train_log(), std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot write " + L.train_log().string());
    csv << date::log_csv_header();
    std::ofstream eval_csv;
    if (cfg.train.eval_every > 0) {
        eval_csv.open(L.train_eval(), std::ios::binary | std::ios::trunc);
        eval_csv << "step,auroc\n";
    }
    std::string last_checkpoint;
    TrainResult result;
    const auto on_step = [&](const date::TrainLogRow& row) {
        csv << date::log_csv_row(row);
        result.steps = row.step;
        result.last = row.loss;
        if (cfg.train.checkpoint_every > 0 && row.step % cfg.train.checkpoint_every == 0) {
            date::save_model(L.model(), model);
            last_checkpoint = L.model().string();
        }
        if (cfg.train.eval_every > 0 && row.step % cfg.train.eval_every == 0) {
            const auto s = scoring::score_all(model, test, kind, cfg.score.seed, cfg.score.threads);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", eval::auroc(s, truth));
            eval_csv << row.step << ',' << buf << '\n';
        }
    };
    try {
        date::train(model, train, cfg.train_config(), on_step);
    } catch (const NumericalError& e) {
        csv.flush();
        throw NumericalError(e.detail() +
                             "; last checkpoint: " + (last_checkpoint.empty() ? "none" : last_checkpoint));
    }
    csv.close();
    date::save_model(L.model(), model);
    result.checkpoint = L.model();

    json m = manifest_base("train", cfg);
    const json pm = read_json(L.prepare_manifest());
    m["artifacts"] = {{"vocab", pm["artifacts"]["vocab"]},
                      {"bank", pm["artifacts"]["bank"]},
                      {"checkpoint", file_sha256(L.model())}};
    m["seeds"] = {{"train", cfg.train.seed}, {"mask", cfg.mask.seed}};
    m["split"] = {{"inlier_label", split.inlier_label}, {"n_train", split.train.size()}};
    write_json(L.train_manifest(), m);
    log << "trained " << result.steps << " steps on " << split.train.size() << " '" << split.inlier_label
        << "' documents; final loss " << result.last.total << "\ncheckpoint " << L.model().string() << '\n';
    return result;
}

// ---------------------------------------------------------------------------
// score

struct ScoreRequest {
    fs::path checkpoint;  // empty: <output_dir>/model.ckpt
    fs::path input;
    fs::path output;       // empty: <output_dir>/scores.csv
    fs::path heatmap_dir;  // empty: no heatmaps
};

struct ScoreResult {
    std::vector<std::string> ids;
    std::vector<double> scores;
    std::size_t dropped = 0;  // documents without tokens after preprocessing
    fs::path output;
};

/// Refuses checkpoints whose training manifest disagrees with the current artifacts.
inline void verify_checkpoint(const RunConfig& cfg, const fs::path& checkpoint) {
    const Layout L = layout(cfg);
    if (!fs::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
    const fs::path manifest = checkpoint.parent_path() / "manifest_train.json";
    if (!fs::exists(manifest)) throw ArtifactMismatchError("no training manifest next to " + checkpoint.string());
    const json m = read_json(manifest);
    const auto& a = m.at("artifacts");
    if (a.value("checkpoint", "") != file_sha256(checkpoint)) {
        throw ArtifactMismatchError("checkpoint hash differs from its training manifest");
    }
    if (a.value("vocab", "") != file_sha256(L.vocab())) {
        throw ArtifactMismatchError("vocabulary hash differs from the one the checkpoint was trained with");
    }
    if (a.value("bank", "") != file_sha256(L.bank())) {
        throw ArtifactMismatchError("mask bank hash differs from the one the checkpoint was trained with");
    }
    if (m.value("prepare_hash", "") != config::prepare_hash(cfg)) {
        throw ArtifactMismatchError("checkpoint was trained under different data/vocab/mask settings");
    }
}

inline std::string safe_file_stem(const std::string& id, std::size_t index) {
    std::string s = std::to_string(index) + "_";
    for (char c : id) s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    return s;
}

inline ScoreResult cmd_score(const RunConfig& cfg, const ScoreRequest& req, std::ostream& log) {
    cfg.validate();
    const Layout L = layout(cfg);
    const fs::path ckpt = req.checkpoint.empty() ? L.model() : req.checkpoint;
    if (req.input.empty()) throw ConfigError("score needs an input document file");
    const eval::Prepared prep = load_prepared(cfg);
    verify_checkpoint(cfg, ckpt);
    const date::DateModel model = date::load_model(ckpt, prep.bank);
    if (model.config().vocab_size != prep.vocab.size() || model.config().max_len != cfg.mask.T) {
        throw ArtifactMismatchError("checkpoint shape does not match the vocabulary or T");
    }

    const auto raw = load_documents(req.input);
    const auto profile = cfg.profile();
    const auto stop = cfg.stopwords();
    ScoreResult r;
    std::vector<textprep::TokenSequence> seqs;
    std::vector<int> truth;
    bool labeled = !raw.empty();
    for (const auto& d : raw) {
        const auto p = corpus::preprocess(d, profile, stop);
        if (!corpus::has_tokens(p.text)) {
            ++r.dropped;
            continue;
        }
        r.ids.push_back(p.id);
        seqs.push_back(textprep::encode(p, prep.vocab, cfg.mask.T));
        labeled = labeled && !d.label.empty();
        truth.push_back(d.label == cfg.data.inlier_label ? 0 : 1);
    }
    r.scores = scoring::score_all(model, seqs, scoring::parse_score_kind(cfg.score.kind), cfg.score.seed,
                                  cfg.score.threads);
    r.output = req.output.empty() ? L.scores() : req.output;
    if (!labeled) truth.clear();
    write_file_bytes(r.output, scoring::score_csv(r.ids, r.scores, truth));

    if (!req.heatmap_dir.empty()) {
        fs::create_directories(req.heatmap_dir);
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            const auto rep = scoring::token_report(model, seqs[i], prep.vocab);
            write_file_bytes(req.heatmap_dir / (safe_file_stem(r.ids[i], i) + ".html"), rep.to_html());
        }
    }
    json m = manifest_base("score", cfg);
    m["artifacts"] = {{"checkpoint", file_sha256(ckpt)},
                      {"input", file_sha256(req.input)},
                      {"scores", file_sha256(r.output)}};
    m["inputs"] = {{"checkpoint", ckpt.string()}, {"input", req.input.string()}};
    m["seeds"] = {{"score", cfg.score.seed}};
    m["counts"] = {{"scored", r.ids.size()}, {"dropped_empty", r.dropped}};
    write_json(L.score_manifest(), m);
    log << "scored " << r.ids.size() << " documents";
    if (r.dropped > 0) log << " (" << r.dropped << " without tokens after preprocessing skipped)";
    log << " -> " << r.output.string() << '\n';
    return r;
}

// ---------------------------------------------------------------------------
// eval

struct EvalResult {
    std::vector<eval::EvalReport> reports;
    fs::path csv;
    fs::path table;
};

inline EvalResult cmd_eval(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const Layout L = layout(cfg);
    const eval::Prepared prep = load_prepared(cfg);
    EvalResult r;
    const bool sweep = !cfg.eval.sweep.empty();
    r.reports = sweep ? eval::run_unsupervised_sweep(cfg, prep, cfg.eval.sweep) : eval::run_semi_supervised(cfg, prep);
    const std::string stem = (sweep ? "sweep_" : "eval_") + cfg.eval.method;
    r.csv = L.report_csv(stem);
    r.table = L.report_table(stem);
    write_file_bytes(r.csv, eval::reports_csv(r.reports));
    const std::string table = eval::reports_table(r.reports);
    write_file_bytes(r.table, table);

    json m = manifest_base("eval", cfg);
    m["artifacts"] = {{"report_csv", file_sha256(r.csv)}, {"report_table", file_sha256(r.table)}};
    m["seeds"] = {{"train", cfg.train.seed},
                  {"mask", cfg.mask.seed},
                  {"score", cfg.score.seed},
                  {"contamination", cfg.eval.contamination_seed},
                  {"iforest", cfg.iforest.seed},
                  {"cvdd", cfg.cvdd.seed}};
    if (!cfg.embeddings.path.empty() && cfg.eval.method != "date") {
        m["inputs"] = {{"embeddings", cfg.embeddings.path}, {"embeddings_sha256", file_sha256(cfg.embeddings.path)}};
    }
    write_json(L.eval_manifest(stem), m);
    log << table;
    return r;
}

// ---------------------------------------------------------------------------
// summarize

/// Collects the per-split rows of several eval report files (one per
/// configuration) and appends the best-of rows. Writes summary.csv/.txt.
inline EvalResult cmd_summarize(const RunConfig& cfg, std::span<const fs::path> inputs, std::ostream& log) {
    if (inputs.empty()) throw ConfigError("summarize needs at least one report file");
    const Layout L = layout(cfg);
    EvalResult r;
    json sources = json::array();
    for (const auto& in : inputs) {
        if (!fs::exists(in)) throw ConfigError("report file not found: " + in.string());
        for (auto& row : eval::parse_reports_csv(read_file_bytes(in), in.string())) {
            if (!row.aggregate) r.reports.push_back(std::move(row));
        }
        sources.push_back({{"path", in.string()}, {"sha256", file_sha256(in)}});
    }
    if (r.reports.empty()) throw EmptyInputError("report files hold no per-split rows");
    const auto best = eval::best_per_split(r.reports);
    r.reports.insert(r.reports.end(), best.begin(), best.end());
    fs::create_directories(L.dir);
    r.csv = L.report_csv("summary");
    r.table = L.report_table("summary");
    write_file_bytes(r.csv, eval::reports_csv(r.reports));
    const std::string table = eval::reports_table(r.reports);
    write_file_bytes(r.table, table);
    json m = manifest_base("summarize", cfg);
    m["inputs"] = sources;
    m["artifacts"] = {{"report_csv", file_sha256(r.csv)}, {"report_table", file_sha256(r.table)}};
    write_json(L.eval_manifest("summary"), m);
    log << table;
    return r;
}

// ---------------------------------------------------------------------------
// maskgen-analyze

struct MaskgenGrid {
    std::int64_t S = 0;
    std::vector<std::int64_t> M, p, N;
};

/// Grid from the config: S = T - 1 maskable positions, M as the bank draws it.
inline MaskgenGrid default_grid(const RunConfig& cfg) {
    const auto S = static_cast<std::int64_t>(cfg.mask.T) - 1;
    const auto M = static_cast<std::int64_t>(std::llround(cfg.mask.fraction * static_cast<double>(S)));
    return {S, {M}, {12}, {static_cast<std::int64_t>(cfg.mask.K)}};
}

inline std::string maskgen_table(const MaskgenGrid& g) {
    std::string out = "S\tM\tp\tN\tr\tr_float\tub2\tub2_float\tubN\tubN_float\n";
    char buf[96];
    for (auto M : g.M) {
        for (auto p : g.p) {
            for (auto N : g.N) {
                const auto b = maskbank::collision_upper_bound(g.S, M, p, N);
                std::snprintf(buf, sizeof buf, "%lld\t%lld\t%lld\t%lld\t", static_cast<long long>(g.S),
                              static_cast<long long>(M), static_cast<long long>(p), static_cast<long long>(N));
                out += buf;
                std::snprintf(buf, sizeof buf, "%.6e", b.r_value());
                out += maskbank::to_string(b.r) + '\t' + buf + '\t';
                std::snprintf(buf, sizeof buf, "%.6e", b.ub2_value());
                out += maskbank::to_string(b.ub2) + '\t' + buf + '\t';
                std::snprintf(buf, sizeof buf, "%.6e", b.ubN_value());
                out += maskbank::to_string(b.ubN) + '\t' + buf + '\n';
            }
        }
    }
    return out;
}

inline std::string cmd_maskgen_analyze(const RunConfig& cfg, const MaskgenGrid& grid, std::ostream& log) {
    if (grid.M.empty() || grid.p.empty() || grid.N.empty()) throw ConfigError("maskgen grid lists must be non-empty");
    const std::string table = maskgen_table(grid);
    const Layout L = layout(cfg);
    fs::create_directories(L.dir);
    write_file_bytes(L.maskgen_table(), table);
    json m = manifest_base("maskgen-analyze", cfg);
    m["grid"] = {{"S", grid.S}, {"M", grid.M}, {"p", grid.p}, {"N", grid.N}};
    m["artifacts"] = {{"table", file_sha256(L.maskgen_table())}};
    write_json(L.maskgen_manifest(), m);
    log << table;
    return table;
}

}  // namespace textad::pipeline
