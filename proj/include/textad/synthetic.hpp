#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "textad/corpus.hpp"
#include "textad/errors.hpp"
#include "textad/rng.hpp"

namespace textad::eval {

/// Two-class corpus from mostly disjoint vocabularies. Each class draws words
/// from a Zipf unigram over its own vocabulary and, with probability
/// `follow_prob`, continues with one of a few fixed successors of the previous word.
struct SyntheticSpec {
    std::size_t vocab_in = 200;
    std::size_t vocab_out = 200;
    double overlap = 0.1;  // share of V_out taken from V_in
    std::size_t docs_per_class = 500;
    std::size_t min_len = 8;
    std::size_t max_len = 20;
    std::size_t successors = 4;
    double follow_prob = 0.7;
    double zipf_exponent = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("synthetic overlap must lie in [0, 1)");
        if (vocab_in == 0 || vocab_out == 0) throw ConfigError("synthetic vocabularies must be non-empty");
        if (min_len < 1 || max_len < min_len) throw ConfigError("synthetic length range is invalid");
        if (docs_per_class == 0) throw ConfigError("synthetic corpus needs documents");
        if (successors == 0) throw ConfigError("synthetic successors must be positive");
        if (!(follow_prob >= 0.0 && follow_prob <= 1.0)) throw ConfigError("follow_prob must lie in [0, 1]");
        if (shared() > vocab_in) throw ConfigError("overlap asks for more shared words than V_in holds");
    }

    [[nodiscard]] std::size_t shared() const {
        return static_cast<std::size_t>(std::llround(overlap * static_cast<double>(vocab_out)));
    }

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"vocab_in", vocab_in},   {"vocab_out", vocab_out},         {"overlap", overlap},
                {"docs_per_class", docs_per_class}, {"min_len", min_len},   {"max_len", max_len},
                {"successors", successors}, {"follow_prob", follow_prob},   {"zipf_exponent", zipf_exponent},
                {"seed", seed}};
    }
};

inline std::string synthetic_word(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%04zu", i);
    return buf;
}

/// Word indices of the two classes: V_in = [0, vocab_in), V_out = the last
/// `shared` words of V_in followed by fresh words.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> synthetic_vocabularies(const SyntheticSpec& s) {
    s.validate();
    std::vector<std::size_t> vin(s.vocab_in), vout;
    for (std::size_t i = 0; i < s.vocab_in; ++i) vin[i] = i;
    for (std::size_t i = s.vocab_in - s.shared(); i < s.vocab_in; ++i) vout.push_back(i);
    for (std::size_t i = 0; vout.size() < s.vocab_out; ++i) vout.push_back(s.vocab_in + i);
    return {vin, vout};
}

namespace detail {
class ClassGenerator {
public:
    ClassGenerator(std::vector<std::size_t> words, const SyntheticSpec& spec, Rng& rng)
        : words_(std::move(words)), spec_(spec) {
        rng.shuffle(words_);  // random rank order
        double acc = 0.0;
        for (std::size_t r = 0; r < words_.size(); ++r) {
            acc += 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
            cdf_.push_back(acc);
        }
        for (auto& c : cdf_) c /= acc;
        next_.resize(words_.size());
        for (auto& succ : next_) {
            for (std::size_t j = 0; j < spec.successors; ++j) succ.push_back(rng.uniform_index(words_.size()));
        }
    }

    std::string sentence(Rng& rng) const {
        const std::size_t len = spec_.min_len + rng.uniform_index(spec_.max_len - spec_.min_len + 1);
        std::string out;
        std::size_t cur = zipf(rng);
        for (std::size_t i = 0; i < len; ++i) {
            if (i > 0) {
                cur = rng.bernoulli(spec_.follow_prob) ? next_[cur][rng.uniform_index(next_[cur].size())] : zipf(rng);
                out.push_back(' ');
            }
            out += synthetic_word(words_[cur]);
        }
        return out;
    }

private:
    std::size_t zipf(Rng& rng) const {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min(static_cast<std::size_t>(it - cdf_.begin()), words_.size() - 1);
    }

    std::vector<std::size_t> words_;
    const SyntheticSpec& spec_;
    std::vector<double> cdf_;
    std::vector<std::vector<std::size_t>> next_;
};
}  // namespace detail

/// Labels "in" and "out"; ids "synthetic:<n>", class "in" first.
inline std::vector<corpus::Document> make_synthetic(const SyntheticSpec& spec) {
    const auto [vin, vout] = synthetic_vocabularies(spec);
    Rng rng = Rng::stream(spec.seed, 0x5A7E);
    const detail::ClassGenerator gin(vin, spec, rng);
    const detail::ClassGenerator gout(vout, spec, rng);
    std::vector<corpus::Document> docs;
    std::size_t n = 0;
    for (const auto* g : {&gin, &gout}) {
        const std::string label = g == &gin ? "in" : "out";
        for (std::size_t d = 0; d < spec.docs_per_class; ++d) {
            docs.push_back({"synthetic:" + std::to_string(n++), g->sentence(rng), label});
        }
    }
    return docs;
}

}  // namespace textad::eval
