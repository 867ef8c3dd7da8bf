// textad: prepare data, train DATE, score documents, run and summarize
// evaluations, analyze mask-bank overlap bounds.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textad/config.hpp"
#include "textad/errors.hpp"
#include "textad/pipeline.hpp"

namespace {

using textad::config::RunConfig;

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
    std::vector<T> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        std::istringstream is(item);
        T v{};
        if (!(is >> v) || !is.eof()) throw textad::ConfigError(std::string("bad value '") + item + "' in " + flag);
        out.push_back(v);
    }
    if (out.empty()) throw textad::ConfigError(std::string(flag) + " needs at least one value");
    return out;
}

/// Flag overrides, applied after the config file and TEXTAD_OUTPUT_DIR.
struct Overrides {
    std::string config_path;
    std::optional<std::string> output_dir, corpus, format, test_corpus, profile, inlier, generator, method, splits,
        sweep, embeddings, kind;
    std::optional<std::size_t> T, K, steps, batch_size, threads, checkpoint_every, eval_every;
    std::optional<double> mask_fraction, lr, lambda, mu;
    std::optional<std::uint64_t> mask_seed, data_seed, train_seed, score_seed;

    [[nodiscard]] RunConfig resolve() const {
        RunConfig c = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        if (const char* env = std::getenv("TEXTAD_OUTPUT_DIR"); env && *env) c.output_dir = env;
        if (output_dir) c.output_dir = *output_dir;
        if (corpus) {
            c.data.source = "file";
            c.data.path = *corpus;
        }
        if (format) c.data.format = *format;
        if (test_corpus) c.data.test_path = *test_corpus;
        if (profile) c.preprocess.profile = *profile;
        if (inlier) c.data.inlier_label = *inlier;
        if (T) c.mask.T = *T;
        if (K) c.mask.K = *K;
        if (mask_fraction) c.mask.fraction = *mask_fraction;
        if (mask_seed) c.mask.seed = *mask_seed;
        if (data_seed) c.data.synthetic.seed = *data_seed;
        if (generator) c.model.generator = textad::date::parse_generator_mode(*generator);
        if (lambda) c.model.lambda = *lambda;
        if (mu) c.model.mu = *mu;
        if (steps) c.train.steps = *steps;
        if (batch_size) c.train.batch_size = *batch_size;
        if (lr) c.train.lr = *lr;
        if (train_seed) c.train.seed = *train_seed;
        if (checkpoint_every) c.train.checkpoint_every = *checkpoint_every;
        if (eval_every) c.train.eval_every = *eval_every;
        if (kind) c.score.kind = *kind;
        if (score_seed) c.score.seed = *score_seed;
        if (threads) c.score.threads = *threads;
        if (method) c.eval.method = *method;
        if (splits) c.eval.splits = parse_list<std::string>(*splits, "--splits");
        if (sweep) c.eval.sweep = parse_list<double>(*sweep, "--sweep");
        if (embeddings) c.embeddings.path = *embeddings;
        c.validate();
        return c;
    }
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("-c,--config", o.config_path, "JSON run configuration (defaults apply to missing keys)");
    sub->add_option("-o,--output-dir", o.output_dir, "Artifact directory (overrides config and TEXTAD_OUTPUT_DIR)");
}

void add_data(CLI::App* sub, Overrides& o) {
    sub->add_option("--corpus", o.corpus, "Corpus path; switches data.source to 'file'");
    sub->add_option("--format", o.format, "Corpus format: jsonl or labeled_dirs");
    sub->add_option("--test-corpus", o.test_corpus, "Official test partition (same format)");
    sub->add_option("--profile", o.profile, "Preprocessing profile: minimal or cvdd_style");
    sub->add_option("--T", o.T, "Sequence length including [CLS]");
    sub->add_option("--K", o.K, "Number of mask patterns");
    sub->add_option("--mask-fraction", o.mask_fraction, "Share of maskable positions per pattern");
    sub->add_option("--seed", o.mask_seed, "Mask-bank seed");
    sub->add_option("--data-seed", o.data_seed, "Synthetic corpus seed");
}

void add_training(CLI::App* sub, Overrides& o) {
    sub->add_option("--steps", o.steps, "Optimizer steps");
    sub->add_option("--batch-size", o.batch_size, "Sequences per step");
    sub->add_option("--lr", o.lr, "Learning rate");
    sub->add_option("--generator", o.generator, "Generator mode: random, small or large");
    sub->add_option("--lambda", o.lambda, "RTD loss weight");
    sub->add_option("--mu", o.mu, "RMD loss weight");
    sub->add_option("--train-seed", o.train_seed, "Training seed (init, order, corruption, dropout)");
    sub->add_option("--inlier", o.inlier, "Inlier label of the training split");
}

void add_scoring(CLI::App* sub, Overrides& o) {
    sub->add_option("--kind", o.kind, "Anomaly score: pl_rtd, pl_rmd, mp or ne");
    sub->add_option("--score-seed", o.score_seed, "Seed for the multi-pass scores");
    sub->add_option("--threads", o.threads, "Scoring threads");
}

int run(int argc, char** argv) {
    CLI::App app{"textad: text anomaly detection by replaced mask and replaced token detection"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Overrides o;

    auto* prepare = app.add_subcommand("prepare", "Preprocess the corpus, build vocabulary, mask bank and caches");
    add_common(prepare, o);
    add_data(prepare, o);

    auto* train = app.add_subcommand("train", "Train DATE on the inlier split; writes checkpoint and log");
    add_common(train, o);
    add_training(train, o);
    add_scoring(train, o);
    train->add_option("--checkpoint-every", o.checkpoint_every, "Save the model every N steps (0: end only)");
    train->add_option("--eval-every", o.eval_every, "Log test AUROC every N steps (0: never)");

    textad::pipeline::ScoreRequest sreq;
    std::string checkpoint, input, output, heatmap;
    auto* score = app.add_subcommand("score", "Score documents with a trained checkpoint");
    add_common(score, o);
    add_scoring(score, o);
    score->add_option("--checkpoint", checkpoint, "Checkpoint (default: <output-dir>/model.ckpt)");
    score->add_option("-i,--input", input, "Documents, one JSON object per line with `text` (and optional id, label)")
        ->required();
    score->add_option("--out", output, "Score CSV (default: <output-dir>/scores.csv)");
    score->add_option("--heatmap", heatmap, "Directory for one token heatmap HTML per document");
    score->add_option("--inlier", o.inlier, "Label treated as inlier for the truth column");

    auto* eval = app.add_subcommand("eval", "Train and evaluate a method on every requested split");
    add_common(eval, o);
    add_training(eval, o);
    add_scoring(eval, o);
    eval->add_option("--method", o.method, "date, iforest or cvdd");
    eval->add_option("--splits", o.splits, "Comma-separated inlier labels, or 'all'");
    eval->add_option("--sweep", o.sweep, "Comma-separated contamination rates in [0, 0.5)");
    eval->add_option("--embeddings", o.embeddings, "Word-vector file for iforest and cvdd");

    std::vector<std::string> report_files;
    auto* summarize =
        app.add_subcommand("summarize", "Merge eval reports from several configurations and add best-of rows");
    add_common(summarize, o);
    summarize->add_option("reports", report_files, "Report CSV files written by eval")->required();

    std::optional<std::int64_t> S;
    std::string Ms, ps, Ns;
    auto* maskgen = app.add_subcommand("maskgen-analyze", "Exact overlap bounds r, UB2 and UB_N over a grid");
    add_common(maskgen, o);
    maskgen->add_option("--S", S, "Maskable positions (default: T - 1)");
    maskgen->add_option("--M", Ms, "Comma-separated masked counts (default: from the mask fraction)");
    maskgen->add_option("--p", ps, "Comma-separated overlap sizes (default: 12)");
    maskgen->add_option("--N", Ns, "Comma-separated bank sizes (default: K)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(textad::ExitCode::config_or_data);
    }

    try {
        const RunConfig cfg = o.resolve();
        if (*prepare) {
            textad::pipeline::cmd_prepare(cfg, std::cout);
        } else if (*train) {
            textad::pipeline::cmd_train(cfg, std::cout);
        } else if (*score) {
            sreq.checkpoint = checkpoint;
            sreq.input = input;
            sreq.output = output;
            sreq.heatmap_dir = heatmap;
            textad::pipeline::cmd_score(cfg, sreq, std::cout);
        } else if (*eval) {
            textad::pipeline::cmd_eval(cfg, std::cout);
        } else if (*summarize) {
            const std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
            textad::pipeline::cmd_summarize(cfg, paths, std::cout);
        } else if (*maskgen) {
            auto grid = textad::pipeline::default_grid(cfg);
            if (S) grid.S = *S;
            if (!Ms.empty()) grid.M = parse_list<std::int64_t>(Ms, "--M");
            if (!ps.empty()) grid.p = parse_list<std::int64_t>(ps, "--p");
            if (!Ns.empty()) grid.N = parse_list<std::int64_t>(Ns, "--N");
            textad::pipeline::cmd_maskgen_analyze(cfg, grid, std::cout);
        }
    } catch (const textad::Error& e) {
        std::cerr << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return static_cast<int>(textad::ExitCode::config_or_data);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
