#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "textad/nn/graph.hpp"
#include "textad/nn/tensor.hpp"
#include "textad/rng.hpp"

namespace textad::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t coordinates = 0;
    double loss = 0.0;
};

/// Builds a graph for the current parameter values and returns the scalar loss node.
using LossBuilder = std::function<Var(Graph&)>;

/// Compares reverse-mode gradients with central differences
/// (f(t+eps) - f(t-eps)) / 2eps on up to `coords_per_param` random coordinates
/// of each parameter (all coordinates when the tensor is smaller).
///
/// Relative error is |a - n| / max(|a|, |n|, floor) where
/// floor = 1e-6 * max(1, |f|).
inline GradCheckResult grad_check(const LossBuilder& build, std::span<Parameter* const> params, double eps = 1e-5,
                                  std::size_t coords_per_param = 16, std::uint64_t seed = 0) {
    for (Parameter* p : params) p->zero_grad();
    GradCheckResult result;
    {
        Graph g;
        Var loss = build(g);
        result.loss = loss.scalar();
        g.backward(loss);
    }
    auto eval = [&]() {
        Graph g;
        return build(g).scalar();
    };
    const double floor = 1e-6 * std::max(1.0, std::abs(result.loss));
    Rng rng(seed);
    for (Parameter* p : params) {
        const auto n = static_cast<std::size_t>(p->value.size());
        std::vector<std::size_t> coords;
        if (n <= coords_per_param) {
            for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
        } else {
            coords = rng.sample_without_replacement(n, coords_per_param);
        }
        for (std::size_t c : coords) {
            double& theta = p->value.data()[c];
            const double saved = theta;
            theta = saved + eps;
            const double f_plus = eval();
            theta = saved - eps;
            const double f_minus = eval();
            theta = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double analytic = p->grad.data()[c];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
            result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
            ++result.coordinates;
        }
    }
    return result;
}

}  // namespace textad::nn
