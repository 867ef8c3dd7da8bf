#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "textad/errors.hpp"
#include "textad/textprep.hpp"

namespace textad::baselines {

/// Fixed pretrained word vectors, one per token, all of dimension p.
class EmbeddingFile {
public:
    EmbeddingFile() = default;
    explicit EmbeddingFile(std::size_t dim) : dim_(dim) {}

    void add(const std::string& token, const Eigen::VectorXd& v) {
        if (static_cast<std::size_t>(v.size()) != dim_) {
            throw FormatError("embedding for '" + token + "' has dimension " + std::to_string(v.size()) +
                              ", expected " + std::to_string(dim_));
        }
        if (!v.allFinite()) throw FormatError("embedding for '" + token + "' holds non-finite values");
        const auto [it, fresh] = index_.emplace(token, vectors_.size());
        if (!fresh) throw FormatError("duplicate embedding for '" + token + "'");
        vectors_.push_back(v);
    }

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t size() const { return vectors_.size(); }
    [[nodiscard]] const Eigen::VectorXd* find(std::string_view token) const {
        const auto it = index_.find(std::string(token));
        return it == index_.end() ? nullptr : &vectors_[it->second];
    }

    /// Parses "token v1 ... vp" lines. A leading "count dim" header line, as
    /// written by common tools, is skipped.
    static EmbeddingFile parse(std::string_view text) {
        std::istringstream in{std::string(text)};
        std::string line;
        EmbeddingFile out;
        bool first = true;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::istringstream ls(line);
            std::vector<std::string> fields;
            for (std::string f; ls >> f;) fields.push_back(f);
            if (fields.empty()) continue;
            if (first && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) {
                first = false;
                out.dim_ = std::stoul(fields[1]);
                continue;
            }
            if (fields.size() < 2) throw FormatError("embedding line " + std::to_string(line_no) + " has no vector");
            Eigen::VectorXd v(static_cast<Eigen::Index>(fields.size() - 1));
            for (std::size_t i = 1; i < fields.size(); ++i) {
                try {
                    std::size_t used = 0;
                    v(static_cast<Eigen::Index>(i - 1)) = std::stod(fields[i], &used);
                    if (used != fields[i].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw FormatError("embedding line " + std::to_string(line_no) + ": bad number '" + fields[i] + "'");
                }
            }
            if (first) out.dim_ = static_cast<std::size_t>(v.size());
            first = false;
            const std::string where = "embedding line " + std::to_string(line_no) + ": ";
            if (static_cast<std::size_t>(v.size()) != out.dim_) {
                throw FormatError(where + "dimension " + std::to_string(v.size()) + ", expected " +
                                  std::to_string(out.dim_));
            }
            if (!v.allFinite()) throw FormatError(where + "non-finite value");
            if (out.find(fields[0]) != nullptr) throw FormatError(where + "duplicate token '" + fields[0] + "'");
            out.add(fields[0], v);
        }
        if (out.size() == 0) throw EmptyInputError("embedding file has no vectors");
        return out;
    }

    static EmbeddingFile load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open embedding file " + path.string());
        return parse(std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
    }

private:
    static bool is_integer(const std::string& s) {
        long long v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        return r.ec == std::errc() && r.ptr == s.data() + s.size();
    }

    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<Eigen::VectorXd> vectors_;
};

/// Word-embedding matrix H (p x l) of a document; tokens without a vector are dropped.
struct EmbeddedDoc {
    Eigen::MatrixXd H;
    std::size_t tokens = 0;
    std::size_t oov = 0;
};

inline EmbeddedDoc embed_document(std::string_view text, const EmbeddingFile& emb,
                                  const textprep::Tokenizer& tok = textprep::default_tokenizer()) {
    const auto words = tok.tokenize(text);
    std::vector<const Eigen::VectorXd*> hits;
    for (const auto& w : words) {
        if (const auto* v = emb.find(w)) hits.push_back(v);
    }
    EmbeddedDoc d;
    d.tokens = words.size();
    d.oov = words.size() - hits.size();
    d.H.resize(static_cast<Eigen::Index>(emb.dim()), static_cast<Eigen::Index>(hits.size()));
    for (std::size_t i = 0; i < hits.size(); ++i) d.H.col(static_cast<Eigen::Index>(i)) = *hits[i];
    return d;
}

/// Mean of the document's word vectors (zero when none are known).
inline Eigen::RowVectorXd mean_pool(const EmbeddedDoc& d) {
    if (d.H.cols() == 0) return Eigen::RowVectorXd::Zero(d.H.rows());
    return d.H.rowwise().mean().transpose();
}

/// Rejects corpora whose out-of-vocabulary share exceeds `max_oov_fraction`.
inline void check_coverage(std::span<const EmbeddedDoc> docs, double max_oov_fraction) {
    std::size_t total = 0, oov = 0;
    for (const auto& d : docs) {
        total += d.tokens;
        oov += d.oov;
    }
    if (total == 0) throw DataError("no tokens to embed");
    const double frac = static_cast<double>(oov) / static_cast<double>(total);
    if (frac > max_oov_fraction) {
        throw DataError("embedding file misses " + std::to_string(frac * 100.0) + "% of tokens (limit " +
                        std::to_string(max_oov_fraction * 100.0) + "%)");
    }
}

}  // namespace textad::baselines
