#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "textad/errors.hpp"

namespace textad::eval {

/// truth: 1 = outlier (positive for AUROC), 0 = inlier. Higher score = more anomalous.
namespace detail {
inline void check_labeled(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size()) throw ShapeError("scores and truth differ in length");
    std::size_t pos = 0;
    for (int t : truth) {
        if (t != 0 && t != 1) throw DomainError("truth labels must be 0 or 1");
        pos += static_cast<std::size_t>(t);
    }
    if (pos == 0 || pos == truth.size()) throw UndefinedMetricError("both classes must be present");
    for (double s : scores) {
        if (std::isnan(s)) throw DomainError("score is NaN");
    }
}
}  // namespace detail

/// P(random outlier outscores random inlier), ties counted 1/2, over all pairs.
inline double auroc_pairwise(std::span<const double> scores, std::span<const int> truth) {
    detail::check_labeled(scores, truth);
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (truth[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (truth[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                wins += 1.0;
            } else if (scores[i] == scores[j]) {
                wins += 0.5;
            }
        }
    }
    return wins / static_cast<double>(pairs);
}

/// Same quantity from average ranks (Mann-Whitney U), O(n log n).
inline double auroc_sorted(std::span<const double> scores, std::span<const int> truth) {
    detail::check_labeled(scores, truth);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (truth[order[k]] == 1) {
                rank_sum += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n - n_pos);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double auroc(std::span<const double> scores, std::span<const int> truth) {
    return scores.size() <= 10000 ? auroc_pairwise(scores, truth) : auroc_sorted(scores, truth);
}

enum class Positive { outlier, inlier };

/// Average precision: sum over distinct thresholds (descending) of
/// (R_n - R_{n-1}) P_n. With positive = inlier, scores are negated and labels flipped.
inline double aupr(std::span<const double> scores, std::span<const int> truth, Positive positive = Positive::outlier) {
    detail::check_labeled(scores, truth);
    const std::size_t n = scores.size();
    std::vector<double> s(scores.begin(), scores.end());
    std::vector<int> t(truth.begin(), truth.end());
    if (positive == Positive::inlier) {
        for (auto& v : s) v = -v;
        for (auto& v : t) v = 1 - v;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    const double total_pos = static_cast<double>(std::count(t.begin(), t.end(), 1));
    double tp = 0.0, seen = 0.0, prev_recall = 0.0, ap = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && s[order[j]] == s[order[i]]) {
            tp += t[order[j]];
            seen += 1.0;
            ++j;
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / seen);
        prev_recall = recall;
        i = j;
    }
    return ap;
}

}  // namespace textad::eval
