#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "textad/nn/tensor.hpp"

namespace textad::nn {

struct AdamWConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    bool amsgrad = true;
};

/// Adam with decoupled weight decay; with `amsgrad` the denominator uses the
/// running maximum of the second-moment estimate.
class AdamW {
public:
    AdamW(std::vector<Parameter*> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
        for (Parameter* p : params_) {
            State s;
            s.m.setZero(p->value.rows(), p->value.cols());
            s.v = s.m;
            s.v_max = s.m;
            state_.push_back(std::move(s));
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Parameter& p = *params_[i];
            State& s = state_[i];
            p.value *= 1.0 - cfg_.lr * cfg_.weight_decay;
            s.m = cfg_.beta1 * s.m + (1.0 - cfg_.beta1) * p.grad;
            s.v = cfg_.beta2 * s.v + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
            const Tensor* second = &s.v;
            if (cfg_.amsgrad) {
                s.v_max = s.v_max.cwiseMax(s.v);
                second = &s.v_max;
            }
            const double step = cfg_.lr / bc1;
            p.value.array() -= step * s.m.array() / ((second->array() / bc2).sqrt() + cfg_.eps);
        }
    }

    [[nodiscard]] long steps() const { return t_; }
    [[nodiscard]] const AdamWConfig& config() const { return cfg_; }

private:
    struct State {
        Tensor m, v, v_max;
    };
    std::vector<Parameter*> params_;
    std::vector<State> state_;
    AdamWConfig cfg_;
    long t_ = 0;
};

}  // namespace textad::nn
