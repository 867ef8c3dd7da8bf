#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "textad/errors.hpp"
#include "textad/rng.hpp"
#include "textad/textprep.hpp"

namespace textad::maskbank {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Binary mask over token positions; position 0 ([CLS]) is never set.
struct MaskPattern {
    std::vector<std::uint8_t> bits;
    std::size_t ones = 0;

    static MaskPattern from_bits(std::vector<std::uint8_t> bits) {
        MaskPattern p;
        p.ones = static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
        p.bits = std::move(bits);
        return p;
    }

    /// The all-zeros pattern; applying it leaves the input unchanged.
    static MaskPattern identity(std::size_t T) { return from_bits(std::vector<std::uint8_t>(T, 0)); }

    [[nodiscard]] std::size_t length() const { return bits.size(); }
    [[nodiscard]] std::string to_string() const {
        std::string s;
        for (auto b : bits) s.push_back(b ? '1' : '0');
        return s;
    }
    bool operator==(const MaskPattern&) const = default;
    auto operator<=>(const MaskPattern& o) const { return bits <=> o.bits; }
};

struct MaskBank {
    std::vector<MaskPattern> patterns;
    std::size_t T = 0;
    std::size_t M = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t K() const { return patterns.size(); }
    [[nodiscard]] std::size_t maskable() const { return T - 1; }
    bool operator==(const MaskBank&) const = default;
};

// ---------------------------------------------------------------------------
// Exact combinatorics

/// C(n, k) by the multiplicative formula; 0 when k > n.
inline BigInt binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    BigInt c = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        c *= n - k + i;
        c /= i;  // exact: c holds C(n-k+i, i) after each step
    }
    return c;
}

/// n! for n = 0..max, built incrementally. Used as an arithmetic path
/// independent of `binomial`.
class FactorialTable {
public:
    explicit FactorialTable(std::size_t max) : f_(max + 1) {
        f_[0] = 1;
        for (std::size_t i = 1; i <= max; ++i) f_[i] = f_[i - 1] * i;
    }
    [[nodiscard]] const BigInt& operator[](std::size_t n) const { return f_.at(n); }
    [[nodiscard]] BigInt choose(std::size_t n, std::size_t k) const {
        if (k > n) return 0;
        return f_.at(n) / (f_[k] * f_[n - k]);
    }

private:
    std::vector<BigInt> f_;
};

inline std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1) os << '/' << boost::multiprecision::denominator(r);
    return os.str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline void check_overlap_args(std::int64_t S, std::int64_t M, std::int64_t p) {
    if (!(0 <= p && p <= M && M <= S)) {
        throw DomainError("require 0 <= p <= M <= S, got S=" + std::to_string(S) + " M=" + std::to_string(M) +
                          " p=" + std::to_string(p));
    }
}

/// Probability that a uniformly drawn M-subset of S positions contains a fixed
/// set of p positions: C(S-p, M-p) / C(S, M).
inline Rational collision_ratio(std::int64_t S, std::int64_t M, std::int64_t p) {
    check_overlap_args(S, M, p);
    const auto s = static_cast<std::uint64_t>(S), m = static_cast<std::uint64_t>(M), q = static_cast<std::uint64_t>(p);
    return Rational(binomial(s - q, m - q), binomial(s, m));
}

struct OverlapBound {
    std::int64_t S = 0, M = 0, p = 0, N = 0;
    Rational r, ub2, ubN;

    [[nodiscard]] double r_value() const { return to_double(r); }
    [[nodiscard]] double ub2_value() const { return to_double(ub2); }
    [[nodiscard]] double ubN_value() const { return to_double(ubN); }
};

/// Upper bounds on the probability that two (UB2) or any pair among N (UBN)
/// patterns share at least p masked positions.
inline OverlapBound collision_upper_bound(std::int64_t S, std::int64_t M, std::int64_t p, std::int64_t N) {
    if (N < 2) throw DomainError("N must be at least 2");
    OverlapBound b{S, M, p, N, collision_ratio(S, M, p), 0, 0};
    b.ub2 = Rational(binomial(static_cast<std::uint64_t>(S), static_cast<std::uint64_t>(p))) * b.r * b.r;
    b.ubN = Rational(binomial(static_cast<std::uint64_t>(N), 2)) * b.ub2;
    return b;
}

/// UBN computed from a factorial table in one fraction, without reusing
/// `binomial` or `collision_ratio`.
inline Rational collision_upper_bound_factorial(std::int64_t S, std::int64_t M, std::int64_t p, std::int64_t N) {
    check_overlap_args(S, M, p);
    if (N < 2) throw DomainError("N must be at least 2");
    const FactorialTable f(static_cast<std::size_t>(std::max(S, N)));
    const auto s = static_cast<std::size_t>(S), m = static_cast<std::size_t>(M), q = static_cast<std::size_t>(p),
               n = static_cast<std::size_t>(N);
    // C(N,2) C(S,p) [C(S-p,M-p)/C(S,M)]^2 with every binomial expanded into factorials.
    const BigInt c_s_m_inv_num = f[m] * f[s - m];
    const BigInt c_sp_mp_num = f[s - q];
    const BigInt c_sp_mp_den = f[m - q] * f[s - m];
    BigInt num = f[n] * f[s] * c_sp_mp_num * c_sp_mp_num * c_s_m_inv_num * c_s_m_inv_num;
    BigInt den = f[2] * f[n - 2] * f[q] * f[s - q] * c_sp_mp_den * c_sp_mp_den * f[s] * f[s];
    return Rational(num, den);
}

// ---------------------------------------------------------------------------
// Bank generation and application

/// Draws K distinct patterns with M = round(fraction * (T-1)) ones placed
/// uniformly over positions 1..T-1.
inline MaskBank generate_bank(std::size_t K, std::size_t T, double mask_fraction, std::uint64_t seed) {
    if (K < 2) throw ConfigError("mask bank needs K >= 2");
    if (T < 2) throw ConfigError("sequence length T must be at least 2");
    const std::size_t S = T - 1;
    const auto M = static_cast<std::size_t>(std::llround(mask_fraction * static_cast<double>(S)));
    if (M < 1 || M > S) throw ConfigError("mask fraction yields M=" + std::to_string(M) + " outside [1, T-1]");
    const BigInt available = binomial(S, M);
    if (available < K) {
        throw InfeasibleError("only C(" + std::to_string(S) + "," + std::to_string(M) + ")=" + available.str() +
                              " distinct patterns exist, " + std::to_string(K) + " requested");
    }
    MaskBank bank;
    bank.T = T;
    bank.M = M;
    bank.seed = seed;
    Rng rng = Rng::stream(seed, 0xBA4C);
    std::set<std::vector<std::uint8_t>> seen;
    const std::size_t max_attempts = 1000 * K;
    std::size_t attempts = 0;
    while (bank.patterns.size() < K) {
        if (++attempts > max_attempts) {
            throw InfeasibleError("could not draw " + std::to_string(K) + " distinct patterns in " +
                                  std::to_string(max_attempts) + " attempts");
        }
        std::vector<std::uint8_t> bits(T, 0);
        for (std::size_t pos : rng.sample_without_replacement(S, M)) bits[pos + 1] = 1;
        if (seen.insert(bits).second) bank.patterns.push_back(MaskPattern::from_bits(std::move(bits)));
    }
    return bank;
}

/// x_i (1 - m_i) + [MASK] m_i, except PAD positions stay PAD.
inline textprep::TokenSequence apply_mask(const textprep::TokenSequence& seq, const MaskPattern& pattern) {
    if (pattern.length() != seq.length()) {
        throw ShapeError("pattern length " + std::to_string(pattern.length()) + " != sequence length " +
                         std::to_string(seq.length()));
    }
    textprep::TokenSequence out = seq;
    for (std::size_t i = 0; i < out.ids.size(); ++i) {
        if (pattern.bits[i] && out.ids[i] != textprep::kPad) out.ids[i] = textprep::kMask;
    }
    return out;
}

inline std::size_t overlap(const MaskPattern& a, const MaskPattern& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(a.length(), b.length()); ++i) n += (a.bits[i] & b.bits[i]);
    return n;
}

/// Largest number of shared masked positions over all unordered pattern pairs.
inline std::size_t pairwise_max_overlap(const MaskBank& bank) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < bank.patterns.size(); ++i) {
        for (std::size_t j = i + 1; j < bank.patterns.size(); ++j) {
            best = std::max(best, overlap(bank.patterns[i], bank.patterns[j]));
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Bank file: "maskbank v1 K T M seed" then K lines of 0/1 strings.

inline std::string serialize_bank(const MaskBank& bank) {
    std::ostringstream os;
    os << "maskbank v1 " << bank.K() << ' ' << bank.T << ' ' << bank.M << ' ' << bank.seed << '\n';
    for (const auto& p : bank.patterns) os << p.to_string() << '\n';
    return os.str();
}

inline MaskBank parse_bank(std::string_view contents) {
    std::istringstream in{std::string(contents)};
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic, version;
    MaskBank bank;
    std::size_t K = 0;
    if (!(hs >> magic >> version >> K >> bank.T >> bank.M >> bank.seed) || magic != "maskbank" || version != "v1") {
        throw FormatError("mask bank file: bad header '" + header + "'");
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.size() != bank.T) throw FormatError("mask bank file: pattern length != T");
        std::vector<std::uint8_t> bits;
        for (char c : line) {
            if (c != '0' && c != '1') throw FormatError("mask bank file: pattern must be a 0/1 string");
            bits.push_back(c == '1');
        }
        auto p = MaskPattern::from_bits(std::move(bits));
        if (p.ones != bank.M || p.bits[0] != 0) throw FormatError("mask bank file: pattern violates M or CLS rule");
        bank.patterns.push_back(std::move(p));
    }
    if (bank.patterns.size() != K) throw FormatError("mask bank file: header K disagrees with pattern count");
    return bank;
}

inline void save_bank(const std::filesystem::path& path, const MaskBank& bank) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize_bank(bank);
}

inline MaskBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mask bank " + path.string());
    return parse_bank(std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

}  // namespace textad::maskbank
