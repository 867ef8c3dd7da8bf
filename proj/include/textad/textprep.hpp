#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textad/corpus.hpp"
#include "textad/errors.hpp"
#include "textad/unicode.hpp"

namespace textad::textprep {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kCls = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kFirstRegular = 4;

inline constexpr std::string_view kSpecialNames[] = {"[PAD]", "[UNK]", "[CLS]", "[MASK]"};

/// Splits text into tokens. Word-level whitespace splitting is the default;
/// alternative tokenizers implement the same interface.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    [[nodiscard]] virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
public:
    [[nodiscard]] std::vector<std::string> tokenize(std::string_view text) const override {
        std::vector<std::string> out;
        for (const auto& t : corpus::split_whitespace(unicode::decode_utf8(text))) {
            out.push_back(unicode::encode_utf8(t));
        }
        return out;
    }
};

inline const Tokenizer& default_tokenizer() {
    static const WhitespaceTokenizer tok;
    return tok;
}

class Vocab {
public:
    Vocab() : token_of_(std::begin(kSpecialNames), std::end(kSpecialNames)) {
        for (std::size_t i = 0; i < token_of_.size(); ++i) id_of_.emplace(token_of_[i], static_cast<TokenId>(i));
    }

    explicit Vocab(std::vector<std::string> regular_tokens) : Vocab() {
        for (auto& t : regular_tokens) {
            if (id_of_.contains(t)) throw FormatError("duplicate vocabulary token '" + t + "'");
            id_of_.emplace(t, static_cast<TokenId>(token_of_.size()));
            token_of_.push_back(std::move(t));
        }
    }

    [[nodiscard]] std::size_t size() const { return token_of_.size(); }

    [[nodiscard]] TokenId id(std::string_view token) const {
        auto it = id_of_.find(std::string(token));
        return it == id_of_.end() ? kUnk : it->second;
    }

    [[nodiscard]] bool contains(std::string_view token) const { return id_of_.contains(std::string(token)); }

    [[nodiscard]] const std::string& token(TokenId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= token_of_.size()) {
            throw RangeError("token id " + std::to_string(id) + " outside vocabulary of size " +
                             std::to_string(token_of_.size()));
        }
        return token_of_[static_cast<std::size_t>(id)];
    }

    [[nodiscard]] const std::vector<std::string>& tokens() const { return token_of_; }

    /// Serialized file contents: header line, then one token per line in id order.
    [[nodiscard]] std::string serialize() const {
        std::string out = "vocab v1 " + std::to_string(size()) + "\n";
        for (const auto& t : token_of_) {
            out += t;
            out.push_back('\n');
        }
        return out;
    }

    static Vocab parse(std::string_view contents) {
        std::istringstream in{std::string(contents)};
        std::string header;
        std::getline(in, header);
        std::istringstream hs(header);
        std::string magic, version;
        std::size_t n = 0;
        if (!(hs >> magic >> version >> n) || magic != "vocab" || version != "v1") {
            throw FormatError("vocab file: bad header '" + header + "'");
        }
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        if (lines.size() != n) {
            throw FormatError("vocab file: header says " + std::to_string(n) + " tokens, found " +
                              std::to_string(lines.size()));
        }
        if (n < kFirstRegular) throw FormatError("vocab file: missing special tokens");
        for (std::size_t i = 0; i < kFirstRegular; ++i) {
            if (lines[i] != kSpecialNames[i]) throw FormatError("vocab file: special token mismatch at id " + std::to_string(i));
        }
        return Vocab(std::vector<std::string>(lines.begin() + kFirstRegular, lines.end()));
    }

    bool operator==(const Vocab& o) const { return token_of_ == o.token_of_; }

private:
    std::unordered_map<std::string, TokenId> id_of_;
    std::vector<std::string> token_of_;
};

/// Ranks tokens by (frequency desc, token asc); keeps those with
/// frequency >= min_freq, up to max_size - 4 regular entries.
inline Vocab build_vocab(std::span<const corpus::Document> docs, std::size_t max_size, std::size_t min_freq,
                         const Tokenizer& tokenizer = default_tokenizer()) {
    if (max_size < kFirstRegular + 1) throw ConfigError("vocab max_size must be at least 5");
    std::map<std::string, std::size_t> freq;
    for (const auto& d : docs) {
        for (auto& t : tokenizer.tokenize(d.text)) ++freq[std::move(t)];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [tok, n] : freq) {
        const bool special = std::find(std::begin(kSpecialNames), std::end(kSpecialNames), tok) != std::end(kSpecialNames);
        if (n >= min_freq && !special) ranked.emplace_back(tok, n);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > max_size - kFirstRegular) ranked.resize(max_size - kFirstRegular);
    if (ranked.empty()) throw EmptyInputError("no token survives the vocabulary filters");
    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [tok, n] : ranked) tokens.push_back(tok);
    return Vocab(std::move(tokens));
}

inline void save_vocab(const std::filesystem::path& path, const Vocab& vocab) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << vocab.serialize();
}

inline Vocab load_vocab(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocab file " + path.string());
    return Vocab::parse(std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

/// Fixed-length encoded document: [CLS] tokens... [PAD]...
struct TokenSequence {
    std::vector<TokenId> ids;
    std::size_t true_len = 1;

    [[nodiscard]] std::size_t length() const { return ids.size(); }
    bool operator==(const TokenSequence&) const = default;
};

inline TokenSequence encode(std::string_view text, const Vocab& vocab, std::size_t T,
                            const Tokenizer& tokenizer = default_tokenizer()) {
    if (T < 2) throw ConfigError("sequence length T must be at least 2");
    TokenSequence seq;
    seq.ids.assign(T, kPad);
    seq.ids[0] = kCls;
    std::size_t pos = 1;
    for (const auto& tok : tokenizer.tokenize(text)) {
        if (pos == T) break;
        seq.ids[pos++] = vocab.id(tok);
    }
    seq.true_len = pos;
    return seq;
}

inline TokenSequence encode(const corpus::Document& doc, const Vocab& vocab, std::size_t T) {
    return encode(doc.text, vocab, T);
}

inline std::vector<std::string> decode(std::span<const TokenId> ids, const Vocab& vocab) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId id : ids) out.push_back(vocab.token(id));
    return out;
}

/// Encoded-corpus cache: little-endian int32 ids, row-major [num_docs x T].
inline std::string serialize_encoded(std::span<const TokenSequence> seqs) {
    std::string out;
    for (const auto& s : seqs) {
        for (TokenId id : s.ids) {
            const auto u = static_cast<std::uint32_t>(id);
            for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
        }
    }
    return out;
}

inline std::vector<TokenSequence> parse_encoded(std::string_view bytes, std::size_t T) {
    if (T == 0 || bytes.size() % (4 * T) != 0) throw FormatError("encoded cache size is not a multiple of 4*T");
    std::vector<TokenSequence> seqs(bytes.size() / (4 * T));
    for (std::size_t r = 0; r < seqs.size(); ++r) {
        auto& s = seqs[r];
        s.ids.resize(T);
        for (std::size_t c = 0; c < T; ++c) {
            std::uint32_t u = 0;
            for (int b = 0; b < 4; ++b) {
                u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * (r * T + c) + b])) << (8 * b);
            }
            s.ids[c] = static_cast<TokenId>(u);
        }
        s.true_len = T;
        while (s.true_len > 1 && s.ids[s.true_len - 1] == kPad) --s.true_len;
    }
    return seqs;
}

}  // namespace textad::textprep
