#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "textad/errors.hpp"
#include "textad/rng.hpp"

namespace textad::baselines {

inline constexpr double kEulerGamma = 0.5772156649;

/// Average path length of an unsuccessful binary-search-tree lookup among n
/// points: 2 H(n-1) - 2 (n-1) / n with H(k) = ln k + gamma; c(2) = 1, c(1) = 0.
inline double avg_path_c(double n) {
    if (!(n > 0.0)) throw DomainError("c(n) needs n >= 1");
    if (n < 2.0) return 0.0;
    if (n == 2.0) return 1.0;
    return 2.0 * (std::log(n - 1.0) + kEulerGamma) - 2.0 * (n - 1.0) / n;
}

struct ITreeNode {
    std::int32_t attr = -1;  // -1 marks an external node
    double split = 0.0;      // x[attr] < split goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint64_t size = 0;  // points routed here
};

struct ITree {
    std::vector<ITreeNode> nodes;  // root at 0

    /// Edges to the external node plus c(size) for its unresolved points.
    [[nodiscard]] double path_length(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        std::size_t i = 0;
        double depth = 0.0;
        while (nodes[i].attr >= 0) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x(n.attr) < n.split ? n.left : n.right);
            depth += 1.0;
        }
        return depth + avg_path_c(static_cast<double>(std::max<std::uint64_t>(nodes[i].size, 1)));
    }
};

struct IForestConfig {
    std::size_t n_trees = 100;
    std::size_t psi = 256;  // clamped to the number of points
    std::uint64_t seed = 0;
};

struct IForest {
    std::vector<ITree> trees;
    std::size_t psi = 0;
    std::size_t dim = 0;
    bool degenerate = false;  // every training point identical

    [[nodiscard]] double c_psi() const { return avg_path_c(static_cast<double>(psi)); }

    [[nodiscard]] double mean_path_length(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        if (static_cast<std::size_t>(x.size()) != dim) {
            throw ShapeError("point has dimension " + std::to_string(x.size()) + ", forest expects " +
                             std::to_string(dim));
        }
        double s = 0.0;
        for (const auto& t : trees) s += t.path_length(x);
        return s / static_cast<double>(trees.size());
    }

    /// 2^(-E[h(x)] / c(psi)); near 1 = anomalous, near 0.5 or below = normal.
    [[nodiscard]] double score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        return std::exp2(-mean_path_length(x) / c_psi());
    }

    [[nodiscard]] std::vector<double> score_all(const Eigen::MatrixXd& points) const {
        std::vector<double> out(static_cast<std::size_t>(points.rows()));
        for (Eigen::Index i = 0; i < points.rows(); ++i) out[static_cast<std::size_t>(i)] = score(points.row(i));
        return out;
    }
};

namespace detail {
inline std::int32_t grow(ITree& tree, const Eigen::MatrixXd& X, std::vector<Eigen::Index>& idx, std::size_t lo,
                         std::size_t hi, std::size_t height, std::size_t limit, Rng& rng) {
    const auto node = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.back().size = hi - lo;
    if (hi - lo <= 1 || height >= limit) return node;
    std::vector<std::int32_t> live;
    std::vector<double> mins, maxs;
    for (Eigen::Index a = 0; a < X.cols(); ++a) {
        double mn = X(idx[lo], a), mx = mn;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            mn = std::min(mn, X(idx[i], a));
            mx = std::max(mx, X(idx[i], a));
        }
        if (mx > mn) {
            live.push_back(static_cast<std::int32_t>(a));
            mins.push_back(mn);
            maxs.push_back(mx);
        }
    }
    if (live.empty()) return node;  // identical values
    const std::size_t pick = rng.uniform_index(live.size());
    const std::int32_t attr = live[pick];
    double split = mins[pick];
    while (split <= mins[pick]) split = rng.uniform(mins[pick], maxs[pick]);
    const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                       idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                       [&](Eigen::Index r) { return X(r, attr) < split; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    const std::int32_t left = grow(tree, X, idx, lo, mid, height + 1, limit, rng);
    const std::int32_t right = grow(tree, X, idx, mid, hi, height + 1, limit, rng);
    auto& n = tree.nodes[static_cast<std::size_t>(node)];
    n.attr = attr;
    n.split = split;
    n.left = left;
    n.right = right;
    return node;
}
}  // namespace detail

/// Grows `n_trees` isolation trees, each on a psi-subsample drawn without
/// replacement, to height ceil(log2 psi).
inline IForest fit_iforest(const Eigen::MatrixXd& points, const IForestConfig& cfg) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n < 2) throw DataError("isolation forest needs at least 2 points");
    if (cfg.n_trees < 1) throw ConfigError("isolation forest needs at least one tree");
    if (cfg.psi < 2) throw ConfigError("subsample size psi must be at least 2");
    if (!points.allFinite()) throw DataError("isolation forest input holds non-finite values");
    IForest forest;
    forest.psi = std::min(cfg.psi, n);
    forest.dim = static_cast<std::size_t>(points.cols());
    const auto limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(forest.psi))));
    Rng rng = Rng::stream(cfg.seed, 0x1F0E);
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        const auto sample = rng.sample_without_replacement(n, forest.psi);
        std::vector<Eigen::Index> idx(sample.begin(), sample.end());
        ITree tree;
        detail::grow(tree, points, idx, 0, idx.size(), 0, limit, rng);
        forest.trees.push_back(std::move(tree));
    }
    forest.degenerate = (points.rowwise() - points.row(0)).cwiseAbs().maxCoeff() == 0.0;
    return forest;
}

// ---------------------------------------------------------------------------
// Model file: "TXADIFOR", u32 version, u64 psi, u64 dim, u32 trees, then per
// tree u32 node count and nodes (i32 attr, f64 split, i32 left, i32 right, u64 size).

namespace detail {
template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}
template <typename T>
T take(std::string_view b, std::size_t& pos) {
    if (pos + sizeof(T) > b.size()) throw FormatError("isolation forest file truncated");
    T v;
    std::memcpy(&v, b.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}
}  // namespace detail

inline std::string serialize_iforest(const IForest& f) {
    static_assert(std::endian::native == std::endian::little);
    std::string out = "TXADIFOR";
    detail::put<std::uint32_t>(out, 1);
    detail::put<std::uint64_t>(out, f.psi);
    detail::put<std::uint64_t>(out, f.dim);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.trees.size()));
    for (const auto& t : f.trees) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.nodes.size()));
        for (const auto& n : t.nodes) {
            detail::put(out, n.attr);
            detail::put(out, n.split);
            detail::put(out, n.left);
            detail::put(out, n.right);
            detail::put(out, n.size);
        }
    }
    return out;
}

inline IForest parse_iforest(std::string_view b) {
    if (b.substr(0, 8) != "TXADIFOR") throw FormatError("not an isolation forest file");
    std::size_t pos = 8;
    if (detail::take<std::uint32_t>(b, pos) != 1) throw FormatError("unsupported isolation forest version");
    IForest f;
    f.psi = detail::take<std::uint64_t>(b, pos);
    f.dim = detail::take<std::uint64_t>(b, pos);
    const auto n_trees = detail::take<std::uint32_t>(b, pos);
    for (std::uint32_t t = 0; t < n_trees; ++t) {
        ITree tree;
        const auto n_nodes = detail::take<std::uint32_t>(b, pos);
        for (std::uint32_t i = 0; i < n_nodes; ++i) {
            ITreeNode n;
            n.attr = detail::take<std::int32_t>(b, pos);
            n.split = detail::take<double>(b, pos);
            n.left = detail::take<std::int32_t>(b, pos);
            n.right = detail::take<std::int32_t>(b, pos);
            n.size = detail::take<std::uint64_t>(b, pos);
            const auto lim = static_cast<std::int32_t>(n_nodes);
            if (n.attr >= 0 && (n.left <= 0 || n.left >= lim || n.right <= 0 || n.right >= lim ||
                                static_cast<std::uint64_t>(n.attr) >= f.dim)) {
                throw FormatError("isolation forest node references are out of range");
            }
            tree.nodes.push_back(n);
        }
        if (tree.nodes.empty()) throw FormatError("isolation tree without nodes");
        f.trees.push_back(std::move(tree));
    }
    if (pos != b.size()) throw FormatError("trailing bytes after isolation forest");
    if (f.trees.empty() || f.psi < 2) throw FormatError("isolation forest header is invalid");
    return f;
}

}  // namespace textad::baselines
