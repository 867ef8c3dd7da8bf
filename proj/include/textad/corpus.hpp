#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "textad/errors.hpp"
#include "textad/rng.hpp"
#include "textad/unicode.hpp"

namespace textad::corpus {

struct Document {
    std::string id;
    std::string text;
    std::string label;

    bool operator==(const Document&) const = default;
};

/// Official train/test partition of a labeled corpus.
struct Partition {
    std::vector<Document> train;
    std::vector<Document> test;
};

/// One-class-in anomaly detection split.
struct ADSplit {
    std::vector<Document> train;
    std::vector<Document> test;
    std::string inlier_label;
    std::vector<bool> test_is_inlier;  // parallel to test
    double contamination_rate = 0.0;   // realized outlier fraction of train
};

enum class CorpusFormat { jsonl, labeled_dirs };

inline CorpusFormat parse_corpus_format(std::string_view s) {
    if (s == "jsonl") return CorpusFormat::jsonl;
    if (s == "labeled_dirs") return CorpusFormat::labeled_dirs;
    throw ConfigError("unknown corpus format '" + std::string(s) + "' (expected jsonl or labeled_dirs)");
}

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline std::vector<Document> load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus file " + path.string());
    const std::string source = path.stem().string();
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path.string() + " line " + std::to_string(line_no) + ": invalid JSON (" +
                              e.what() + ")");
        }
        for (const char* field : {"text", "label"}) {
            if (!rec.is_object() || !rec.contains(field) || !rec[field].is_string()) {
                throw FormatError(path.string() + " line " + std::to_string(line_no) +
                                  ": missing string field `" + field + "`");
            }
        }
        Document doc{source + ":" + std::to_string(docs.size()), rec["text"].get<std::string>(),
                     rec["label"].get<std::string>()};
        if (doc.text.empty()) {
            throw FormatError(path.string() + " line " + std::to_string(line_no) + ": empty `text`");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

inline std::vector<Document> load_labeled_dirs(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw ConfigError("corpus directory not found: " + root.string());
    std::vector<fs::path> classes;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) classes.push_back(e.path());
    }
    std::sort(classes.begin(), classes.end());
    const std::string source = root.filename().empty() ? root.parent_path().filename().string()
                                                         : root.filename().string();
    std::vector<Document> docs;
    for (const auto& cls : classes) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(cls)) {
            if (e.is_regular_file()) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f, std::ios::binary);
            std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
            if (text.empty()) throw FormatError(f.string() + ": empty document");
            docs.push_back({source + ":" + std::to_string(docs.size()), std::move(text),
                            cls.filename().string()});
        }
    }
    return docs;
}

}  // namespace detail

/// Reads a labeled corpus. Documents come back in line order (jsonl) or in
/// sorted class-directory / file-name order (labeled_dirs).
inline std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    auto docs = format == CorpusFormat::jsonl ? detail::load_jsonl(path) : detail::load_labeled_dirs(path);
    if (docs.empty()) throw EmptyInputError("corpus at " + path.string() + " has no documents");
    return docs;
}

inline void write_jsonl(const std::filesystem::path& path, std::span<const Document> docs) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& d : docs) {
        out << nlohmann::json{{"text", d.text}, {"label", d.label}}.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Preprocessing

enum class ProfileName { cvdd_style, minimal };

struct PreprocessProfile {
    ProfileName name = ProfileName::minimal;
    bool strip_headers = false;
    bool lowercase = true;
    bool strip_punctuation = false;
    bool strip_numbers = false;
    bool strip_stopwords = false;
    bool drop_short_words = false;
    std::size_t min_word_length = 3;

    static PreprocessProfile cvdd_style() {
        return {ProfileName::cvdd_style, true, true, true, true, true, true, 3};
    }
    static PreprocessProfile minimal() { return {}; }

    static PreprocessProfile from_name(std::string_view s) {
        if (s == "cvdd_style") return cvdd_style();
        if (s == "minimal") return minimal();
        throw ConfigError("unknown preprocess profile '" + std::string(s) + "'");
    }
};

using StopwordSet = std::unordered_set<std::string>;

/// One lowercase token per line; blank lines and '#' comments ignored.
inline StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open stopword file " + path.string());
    StopwordSet words;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        words.insert(line.substr(b, e - b + 1));
    }
    return words;
}

/// Cuts a newsgroup-style header block: everything before the first blank
/// line, provided every line of that block looks like "Field: value".
inline std::string strip_header_block(const std::string& text) {
    std::size_t pos = 0;
    bool saw_line = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            if (!saw_line) return text;
            return nl == std::string::npos ? std::string() : text.substr(nl + 1);
        }
        const auto colon = line.find(':');
        if (colon == std::string_view::npos || colon == 0) return text;
        for (std::size_t i = 0; i < colon; ++i) {
            const char c = line[i];
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return text;
        }
        saw_line = true;
        if (nl == std::string::npos) return text;
        pos = nl + 1;
    }
    return text;
}

inline std::vector<std::u32string> split_whitespace(std::u32string_view s) {
    std::vector<std::u32string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && unicode::is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !unicode::is_space(s[j])) ++j;
        if (j > i) tokens.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return tokens;
}

/// Applies the profile's rules in the fixed order header strip, lowercase,
/// punctuation, numbers, stopwords, short words. Profiles with any token-level
/// rule emit single-space-joined tokens.
inline std::string preprocess_text(const std::string& text, const PreprocessProfile& profile,
                                   const StopwordSet& stopwords = {}) {
    std::string work = profile.strip_headers ? strip_header_block(text) : text;
    std::u32string cps = unicode::decode_utf8(work);
    if (profile.lowercase) {
        for (char32_t& c : cps) c = unicode::to_lower(c);
    }
    if (profile.strip_punctuation) {
        for (char32_t& c : cps) {
            if (unicode::is_punctuation(c)) c = U' ';
        }
    }
    const bool tokenize = profile.strip_headers || profile.strip_punctuation || profile.strip_numbers ||
                          profile.strip_stopwords || profile.drop_short_words;
    if (!tokenize) return unicode::encode_utf8(cps);

    std::string out;
    for (const auto& tok : split_whitespace(cps)) {
        if (profile.strip_numbers &&
            std::all_of(tok.begin(), tok.end(), [](char32_t c) { return unicode::is_decimal_digit(c); })) {
            continue;
        }
        std::string utf8 = unicode::encode_utf8(tok);
        if (profile.strip_stopwords && stopwords.contains(utf8)) continue;
        if (profile.drop_short_words && tok.size() < profile.min_word_length) continue;
        if (!out.empty()) out.push_back(' ');
        out += utf8;
    }
    return out;
}

/// False for text that is empty or whitespace only.
inline bool has_tokens(const std::string& text) { return !split_whitespace(unicode::decode_utf8(text)).empty(); }

inline Document preprocess(const Document& doc, const PreprocessProfile& profile,
                           const StopwordSet& stopwords = {}) {
    return {doc.id, preprocess_text(doc.text, profile, stopwords), doc.label};
}

inline std::vector<Document> preprocess_all(std::span<const Document> docs, const PreprocessProfile& profile,
                                            const StopwordSet& stopwords = {}) {
    std::vector<Document> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(preprocess(d, profile, stopwords));
    return out;
}

// ---------------------------------------------------------------------------
// Splits

inline std::set<std::string> label_set(std::span<const Document> docs) {
    std::set<std::string> labels;
    for (const auto& d : docs) labels.insert(d.label);
    return labels;
}

/// Class-stratified holdout for corpora without an official split: the last
/// ceil(test_fraction * n_c) documents of each class (in corpus order) go to test.
inline Partition holdout_partition(std::span<const Document> docs, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must lie in (0,1)");
    }
    std::map<std::string, std::size_t> totals;
    for (const auto& d : docs) ++totals[d.label];
    std::map<std::string, std::size_t> seen;
    Partition p;
    for (const auto& d : docs) {
        const std::size_t n = totals[d.label];
        const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n)));
        const std::size_t ordinal = seen[d.label]++;
        (ordinal + n_test >= n ? p.test : p.train).push_back(d);
    }
    return p;
}

/// One class as inliers, everything else in the test partition as outliers.
inline ADSplit make_ad_split(const Partition& partition, const std::string& inlier_label) {
    const bool known = std::any_of(partition.train.begin(), partition.train.end(),
                                   [&](const Document& d) { return d.label == inlier_label; }) ||
                       std::any_of(partition.test.begin(), partition.test.end(),
                                   [&](const Document& d) { return d.label == inlier_label; });
    if (!known) throw ConfigError("inlier label '" + inlier_label + "' does not occur in the corpus");
    ADSplit split;
    split.inlier_label = inlier_label;
    for (const auto& d : partition.train) {
        if (d.label == inlier_label) split.train.push_back(d);
    }
    split.test = partition.test;
    split.test_is_inlier.reserve(split.test.size());
    for (const auto& d : split.test) split.test_is_inlier.push_back(d.label == inlier_label);
    return split;
}

/// Training-partition documents of every other class; the candidate pool for contamination.
inline std::vector<Document> outlier_pool(const Partition& partition, const std::string& inlier_label) {
    std::vector<Document> pool;
    for (const auto& d : partition.train) {
        if (d.label != inlier_label) pool.push_back(d);
    }
    return pool;
}

enum class PoolSampling { uniform_across_classes, proportional };

inline PoolSampling parse_pool_sampling(std::string_view s) {
    if (s == "uniform_across_classes") return PoolSampling::uniform_across_classes;
    if (s == "proportional") return PoolSampling::proportional;
    throw ConfigError("unknown contamination sampling '" + std::string(s) + "'");
}

/// Number of outliers to mix into `n_inliers` documents so that the mixed
/// training set has outlier fraction `rate`.
inline std::size_t contamination_count(std::size_t n_inliers, double rate) {
    return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n_inliers) / (1.0 - rate)));
}

/// Mixes outliers drawn without replacement from `pool` into the training set.
/// Contaminants are appended after the inliers, in draw order.
inline ADSplit contaminate(const ADSplit& split, double rate, std::span<const Document> pool, std::uint64_t seed,
                           PoolSampling sampling = PoolSampling::uniform_across_classes) {
    if (!(rate >= 0.0 && rate < 0.5)) throw ConfigError("contamination rate must lie in [0, 0.5)");
    const std::size_t n_inliers = split.train.size();
    const std::size_t n = contamination_count(n_inliers, rate);
    if (n == 0) return split;
    {
        std::unordered_set<std::string> test_ids;
        for (const auto& d : split.test) test_ids.insert(d.id);
        for (const auto& d : pool) {
            if (test_ids.contains(d.id)) throw ConfigError("outlier pool overlaps the test set (" + d.id + ")");
        }
    }
    if (pool.size() < n) {
        throw CapacityError("contamination needs " + std::to_string(n) + " outlier documents, pool has " +
                            std::to_string(pool.size()));
    }

    Rng rng = Rng::stream(seed, 0xC0A7);
    ADSplit out = split;
    if (sampling == PoolSampling::proportional) {
        for (std::size_t i : rng.sample_without_replacement(pool.size(), n)) out.train.push_back(pool[i]);
    } else {
        // Pick a class uniformly among those with documents left, then a document within it.
        std::map<std::string, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < pool.size(); ++i) by_class[pool[i].label].push_back(i);
        std::vector<std::vector<std::size_t>> buckets;
        for (auto& [label, idx] : by_class) buckets.push_back(std::move(idx));
        for (std::size_t drawn = 0; drawn < n; ++drawn) {
            std::vector<std::size_t> live;
            for (std::size_t b = 0; b < buckets.size(); ++b) {
                if (!buckets[b].empty()) live.push_back(b);
            }
            auto& bucket = buckets[live[rng.uniform_index(live.size())]];
            const std::size_t j = rng.uniform_index(bucket.size());
            out.train.push_back(pool[bucket[j]]);
            bucket.erase(bucket.begin() + static_cast<std::ptrdiff_t>(j));
        }
    }
    out.contamination_rate = static_cast<double>(n) / static_cast<double>(n_inliers + n);
    return out;
}

}  // namespace textad::corpus
