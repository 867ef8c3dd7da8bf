#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "textad/errors.hpp"
#include "textad/rng.hpp"

namespace textad::nn {

/// Dense row-major 2-D tensor of 64-bit floats. Vectors are 1 x n.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline bool all_finite(const Tensor& t) { return t.allFinite(); }

/// A named trainable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(value.size()); }
};

enum class Init { xavier_uniform, zeros, ones };

/// Owns parameters in insertion order with stable addresses.
class ParamStore {
public:
    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;
    ParamStore(ParamStore&&) noexcept = default;
    ParamStore& operator=(ParamStore&&) noexcept = default;

    Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init init, Rng& rng) {
        if (find(name) != nullptr) throw ConfigError("duplicate parameter name " + name);
        Tensor v(rows, cols);
        switch (init) {
            case Init::zeros: v.setZero(); break;
            case Init::ones: v.setOnes(); break;
            case Init::xavier_uniform: {
                const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
                for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-a, a);
                break;
            }
        }
        params_.push_back(std::make_unique<Parameter>(name, std::move(v)));
        return *params_.back();
    }

    [[nodiscard]] Parameter* find(const std::string& name) const {
        for (const auto& p : params_) {
            if (p->name == name) return p.get();
        }
        return nullptr;
    }

    [[nodiscard]] Parameter& at(const std::string& name) const {
        Parameter* p = find(name);
        if (!p) throw ConfigError("unknown parameter " + name);
        return *p;
    }

    void zero_grad() {
        for (auto& p : params_) p->zero_grad();
    }

    [[nodiscard]] std::vector<Parameter*> all() const {
        std::vector<Parameter*> out;
        out.reserve(params_.size());
        for (const auto& p : params_) out.push_back(p.get());
        return out;
    }

    [[nodiscard]] std::size_t count() const { return params_.size(); }

    [[nodiscard]] std::size_t num_scalars() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p->size();
        return n;
    }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace textad::nn
