#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "textad/errors.hpp"
#include "textad/nn/tensor.hpp"
#include "textad/rng.hpp"

namespace textad::nn {

class Graph;

/// Handle to a node of a Graph.
struct Var {
    Graph* graph = nullptr;
    std::size_t index = 0;

    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
    [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
    [[nodiscard]] double scalar() const { return value()(0, 0); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
/// sweep visits every node after all of its consumers.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // -- leaves ---------------------------------------------------------------

    Var param(Parameter& p) {
        Node n;
        n.param = &p;
        n.needs_grad = true;
        return push(std::move(n));
    }

    Var constant(Tensor v) {
        Node n;
        n.value = std::move(v);
        return push(std::move(n));
    }

    // -- linear algebra -------------------------------------------------------

    /// a * b
    Var matmul(Var a, Var b) {
        check(a.cols() == b.rows(), "matmul: inner dimensions differ");
        Tensor out;
        out.noalias() = val(a) * val(b);
        return make(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
            const Tensor& d = g.grad_of(self);
            if (g.needs(a)) g.grad_of(a.index).noalias() += d * g.val(b).transpose();
            if (g.needs(b)) g.grad_of(b.index).noalias() += g.val(a).transpose() * d;
        });
    }

    /// a * b^T
    Var matmul_nt(Var a, Var b) {
        check(a.cols() == b.cols(), "matmul_nt: column counts differ");
        Tensor out;
        out.noalias() = val(a) * val(b).transpose();
        return make(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
            const Tensor& d = g.grad_of(self);
            if (g.needs(a)) g.grad_of(a.index).noalias() += d * g.val(b);
            if (g.needs(b)) g.grad_of(b.index).noalias() += d.transpose() * g.val(a);
        });
    }

    Var transpose(Var a) {
        Tensor out = val(a).transpose();
        return make(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            g.grad_of(a.index) += g.grad_of(self).transpose();
        });
    }

    // -- elementwise ----------------------------------------------------------

    Var add(Var a, Var b) {
        check_same(a, b, "add");
        return make(val(a) + val(b), {a, b}, [a, b](Graph& g, std::size_t self) {
            if (g.needs(a)) g.grad_of(a.index) += g.grad_of(self);
            if (g.needs(b)) g.grad_of(b.index) += g.grad_of(self);
        });
    }

    Var sub(Var a, Var b) {
        check_same(a, b, "sub");
        return make(val(a) - val(b), {a, b}, [a, b](Graph& g, std::size_t self) {
            if (g.needs(a)) g.grad_of(a.index) += g.grad_of(self);
            if (g.needs(b)) g.grad_of(b.index) -= g.grad_of(self);
        });
    }

    /// Hadamard product.
    Var mul(Var a, Var b) {
        check_same(a, b, "mul");
        return make(val(a).cwiseProduct(val(b)), {a, b}, [a, b](Graph& g, std::size_t self) {
            const Tensor& d = g.grad_of(self);
            if (g.needs(a)) g.grad_of(a.index) += d.cwiseProduct(g.val(b));
            if (g.needs(b)) g.grad_of(b.index) += d.cwiseProduct(g.val(a));
        });
    }

    Var scale(Var a, double s) {
        return make(val(a) * s, {a}, [a, s](Graph& g, std::size_t self) { g.grad_of(a.index) += s * g.grad_of(self); });
    }

    /// Adds the 1 x n row `bias` to every row of `a`.
    Var add_row(Var a, Var bias) {
        check(bias.rows() == 1 && bias.cols() == a.cols(), "add_row: bias must be 1 x cols");
        Tensor out = val(a);
        out.rowwise() += val(bias).row(0);
        return make(std::move(out), {a, bias}, [a, bias](Graph& g, std::size_t self) {
            const Tensor& d = g.grad_of(self);
            if (g.needs(a)) g.grad_of(a.index) += d;
            if (g.needs(bias)) g.grad_of(bias.index) += d.colwise().sum();
        });
    }

    Var relu(Var a) {
        Tensor out = val(a).cwiseMax(0.0);
        return make(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Tensor& x = g.val(a);
            g.grad_of(a.index).array() += (x.array() > 0.0).select(g.grad_of(self).array(), 0.0);
        });
    }

    /// Exact GELU, x * Phi(x).
    Var gelu(Var a) {
        const Tensor& x = val(a);
        Tensor out = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * 0.7071067811865476)); });
        return make(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Tensor& xv = g.val(a);
            Tensor deriv = xv.unaryExpr([](double v) {
                const double cdf = 0.5 * (1.0 + std::erf(v * 0.7071067811865476));
                const double pdf = std::exp(-0.5 * v * v) * 0.3989422804014327;
                return cdf + v * pdf;
            });
            g.grad_of(a.index) += g.grad_of(self).cwiseProduct(deriv);
        });
    }

    Var tanh(Var a) {
        Tensor out = val(a).array().tanh().matrix();
        return make(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Tensor& y = g.val(self);
            g.grad_of(a.index) += g.grad_of(self).cwiseProduct((1.0 - y.array().square()).matrix());
        });
    }

    /// Inverted dropout; identity when rng is null or rate is 0.
    Var dropout(Var a, double rate, Rng* rng) {
        if (rng == nullptr || rate <= 0.0) return a;
        Tensor mask(a.rows(), a.cols());
        const double keep = 1.0 / (1.0 - rate);
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->bernoulli(rate) ? 0.0 : keep;
        return mul(a, constant(std::move(mask)));
    }

    // -- reductions -----------------------------------------------------------

    Var sum(Var a) {
        Tensor out(1, 1);
        out(0, 0) = val(a).sum();
        return make(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            g.grad_of(a.index).array() += g.grad_of(self)(0, 0);
        });
    }

    Var sum_squares(Var a) {
        Tensor out(1, 1);
        out(0, 0) = val(a).squaredNorm();
        return make(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            g.grad_of(a.index) += (2.0 * g.grad_of(self)(0, 0)) * g.val(a);
        });
    }

    /// Weighted sum of scalar nodes.
    Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
        check(terms.size() == weights.size() && !terms.empty(), "weighted_sum: size mismatch");
        Tensor out = Tensor::Zero(1, 1);
        for (std::size_t i = 0; i < terms.size(); ++i) {
            check(terms[i].rows() == 1 && terms[i].cols() == 1, "weighted_sum: terms must be scalars");
            out(0, 0) += weights[i] * val(terms[i])(0, 0);
        }
        std::vector<Var> ts(terms.begin(), terms.end());
        std::vector<double> ws(weights.begin(), weights.end());
        return make(std::move(out), ts, [ts, ws](Graph& g, std::size_t self) {
            const double d = g.grad_of(self)(0, 0);
            for (std::size_t i = 0; i < ts.size(); ++i) {
                if (g.needs(ts[i])) g.grad_of(ts[i].index)(0, 0) += ws[i] * d;
            }
        });
    }

    // -- structural -----------------------------------------------------------

    Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
        check(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
        Tensor out = val(a).middleRows(start, count);
        return make(std::move(out), {a}, [a, start, count](Graph& g, std::size_t self) {
            g.grad_of(a.index).middleRows(start, count) += g.grad_of(self);
        });
    }

    Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
        check(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
        Tensor out = val(a).middleCols(start, count);
        return make(std::move(out), {a}, [a, start, count](Graph& g, std::size_t self) {
            g.grad_of(a.index).middleCols(start, count) += g.grad_of(self);
        });
    }

    Var concat_cols(std::span<const Var> parts) {
        check(!parts.empty(), "concat_cols: no inputs");
        Eigen::Index cols = 0;
        for (const Var& p : parts) {
            check(p.rows() == parts[0].rows(), "concat_cols: row counts differ");
            cols += p.cols();
        }
        Tensor out(parts[0].rows(), cols);
        Eigen::Index c = 0;
        for (const Var& p : parts) {
            out.middleCols(c, p.cols()) = val(p);
            c += p.cols();
        }
        std::vector<Var> ps(parts.begin(), parts.end());
        return make(std::move(out), ps, [ps](Graph& g, std::size_t self) {
            Eigen::Index off = 0;
            for (const Var& p : ps) {
                if (g.needs(p)) g.grad_of(p.index) += g.grad_of(self).middleCols(off, p.cols());
                off += p.cols();
            }
        });
    }

    /// Rows of a parameter table selected by ids (embedding lookup).
    Var gather_rows(Var table, std::span<const std::int32_t> ids) {
        const Tensor& t = val(table);
        Tensor out(static_cast<Eigen::Index>(ids.size()), t.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            check(ids[i] >= 0 && ids[i] < t.rows(), "gather_rows: id out of range");
            out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
        }
        std::vector<std::int32_t> idx(ids.begin(), ids.end());
        return make(std::move(out), {table}, [table, idx = std::move(idx)](Graph& g, std::size_t self) {
            const Tensor& d = g.grad_of(self);
            Tensor& gt = g.grad_of(table.index);
            for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += d.row(static_cast<Eigen::Index>(i));
        });
    }

    // -- normalization and probability ----------------------------------------

    /// Row-wise softmax. Columns with key_valid[j] == 0 get probability 0.
    Var softmax_rows(Var a, std::span<const std::uint8_t> key_valid = {}) {
        const Tensor& x = val(a);
        check(key_valid.empty() || static_cast<Eigen::Index>(key_valid.size()) == x.cols(), "softmax_rows: mask width");
        Tensor out(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                if (key_valid.empty() || key_valid[c]) {
                    if (!std::isfinite(x(r, c))) throw NumericalError("softmax_rows: non-finite input");
                    mx = std::max(mx, x(r, c));
                }
            }
            check(std::isfinite(mx), "softmax_rows: row has no valid column");
            double z = 0.0;
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                const double e = (key_valid.empty() || key_valid[c]) ? std::exp(x(r, c) - mx) : 0.0;
                out(r, c) = e;
                z += e;
            }
            out.row(r) /= z;
        }
        return make(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Tensor& p = g.val(self);
            const Tensor& d = g.grad_of(self);
            Eigen::VectorXd dot = d.cwiseProduct(p).rowwise().sum();
            Tensor dx = d;
            dx.colwise() -= dot;
            g.grad_of(a.index) += dx.cwiseProduct(p);
        });
    }

    /// Per-row layer normalization with gain and bias (1 x cols each).
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-12) {
        const Tensor& xv = val(x);
        const Eigen::Index n = xv.cols();
        check(gain.cols() == n && bias.cols() == n && gain.rows() == 1 && bias.rows() == 1, "layer_norm: shape");
        Tensor xhat(xv.rows(), n);
        Eigen::VectorXd inv_std(xv.rows());
        for (Eigen::Index r = 0; r < xv.rows(); ++r) {
            const double mean = xv.row(r).mean();
            const double var = (xv.row(r).array() - mean).square().mean();
            inv_std(r) = 1.0 / std::sqrt(var + eps);
            xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
        }
        Tensor out = xhat.array().rowwise() * val(gain).row(0).array();
        out.rowwise() += val(bias).row(0);
        return make(std::move(out), {x, gain, bias},
                    [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
                        const Tensor& d = g.grad_of(self);
                        if (g.needs(gain)) g.grad_of(gain.index) += d.cwiseProduct(xhat).colwise().sum();
                        if (g.needs(bias)) g.grad_of(bias.index) += d.colwise().sum();
                        if (g.needs(x)) {
                            Tensor dxhat = d.array().rowwise() * g.val(gain).row(0).array();
                            Tensor& gx = g.grad_of(x.index);
                            const double n_inv = 1.0 / static_cast<double>(d.cols());
                            for (Eigen::Index r = 0; r < d.rows(); ++r) {
                                const double m1 = dxhat.row(r).sum() * n_inv;
                                const double m2 = dxhat.row(r).dot(xhat.row(r)) * n_inv;
                                gx.row(r).array() +=
                                    inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                            }
                        }
                    });
    }

    /// sum_i w_i * (-log softmax(logits_i)[target_i]); rows with w_i == 0 are skipped.
    Var cross_entropy_rows(Var logits, std::span<const std::int32_t> targets, std::span<const double> weights) {
        const Tensor& z = val(logits);
        check(static_cast<Eigen::Index>(targets.size()) == z.rows() && weights.size() == targets.size(),
              "cross_entropy_rows: targets/weights length");
        Tensor probs(z.rows(), z.cols());
        double loss = 0.0;
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const auto t = targets[static_cast<std::size_t>(r)];
            if (t < 0 || t >= z.cols()) throw RangeError("cross-entropy target out of range");
            const double mx = z.row(r).maxCoeff();
            probs.row(r) = (z.row(r).array() - mx).exp();
            const double sum = probs.row(r).sum();
            probs.row(r) /= sum;
            const double w = weights[static_cast<std::size_t>(r)];
            if (w != 0.0) loss += w * (std::log(sum) + mx - z(r, t));
        }
        Tensor out(1, 1);
        out(0, 0) = loss;
        std::vector<std::int32_t> ts(targets.begin(), targets.end());
        std::vector<double> ws(weights.begin(), weights.end());
        return make(std::move(out), {logits},
                    [logits, probs = std::move(probs), ts = std::move(ts), ws = std::move(ws)](Graph& g, std::size_t self) {
                        const double d = g.grad_of(self)(0, 0);
                        Tensor& gz = g.grad_of(logits.index);
                        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                            const double w = ws[static_cast<std::size_t>(r)];
                            if (w == 0.0) continue;
                            gz.row(r) += (d * w) * probs.row(r);
                            gz(r, ts[static_cast<std::size_t>(r)]) -= d * w;
                        }
                    });
    }

    /// Cosine distance 1 - cos(a_k, b_k) between matching columns; 1 x cols.
    /// A zero-norm column yields distance 1 with zero gradient.
    Var column_cosine_distance(Var a, Var b) {
        check_same(a, b, "column_cosine_distance");
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        const Eigen::Index r = av.cols();
        Tensor out(1, r);
        Eigen::VectorXd na(r), nb(r), cs(r);
        for (Eigen::Index k = 0; k < r; ++k) {
            na(k) = av.col(k).norm();
            nb(k) = bv.col(k).norm();
            if (na(k) == 0.0 || nb(k) == 0.0) {
                cs(k) = 0.0;
            } else {
                cs(k) = av.col(k).dot(bv.col(k)) / (na(k) * nb(k));
            }
            out(0, k) = 1.0 - cs(k);
        }
        return make(std::move(out), {a, b}, [a, b, na, nb, cs](Graph& g, std::size_t self) {
            const Tensor& d = g.grad_of(self);
            const Tensor& av2 = g.val(a);
            const Tensor& bv2 = g.val(b);
            for (Eigen::Index k = 0; k < av2.cols(); ++k) {
                if (na(k) == 0.0 || nb(k) == 0.0) continue;
                // d cos / d a = b/(|a||b|) - cos * a/|a|^2
                const double dk = -d(0, k);
                if (g.needs(a)) {
                    g.grad_of(a.index).col(k) +=
                        dk * (bv2.col(k) / (na(k) * nb(k)) - cs(k) * av2.col(k) / (na(k) * na(k)));
                }
                if (g.needs(b)) {
                    g.grad_of(b.index).col(k) +=
                        dk * (av2.col(k) / (na(k) * nb(k)) - cs(k) * bv2.col(k) / (nb(k) * nb(k)));
                }
            }
        });
    }

    // -- evaluation -----------------------------------------------------------

    /// Back-propagates from a 1 x 1 node; parameter gradients accumulate into
    /// Parameter::grad.
    void backward(Var loss) {
        check(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be scalar");
        if (!nodes_[loss.index].needs_grad) return;
        grad_of(loss.index)(0, 0) += 1.0;
        for (std::size_t i = loss.index + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.needs_grad || !n.backward || !n.grad_live) continue;
            n.backward(*this, i);
        }
    }

    [[nodiscard]] const Tensor& val(Var v) const { return val(v.index); }
    [[nodiscard]] const Tensor& val(std::size_t i) const {
        const Node& n = nodes_[i];
        return n.param ? n.param->value : n.value;
    }

    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool grad_live = false;
        bool needs_grad = false;
        Parameter* param = nullptr;
        std::function<void(Graph&, std::size_t)> backward;
    };

    static void check(bool ok, const char* what) {
        if (!ok) throw ShapeError(what);
    }
    void check_same(Var a, Var b, const char* op) const {
        if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols()) {
            throw ShapeError(std::string(op) + ": shapes differ");
        }
    }

    [[nodiscard]] bool needs(Var v) const { return nodes_[v.index].needs_grad; }

    Tensor& grad_of(std::size_t i) {
        Node& n = nodes_[i];
        if (n.param) return n.param->grad;
        if (!n.grad_live) {
            n.grad.setZero(n.value.rows(), n.value.cols());
            n.grad_live = true;
        }
        return n.grad;
    }

    Var push(Node n) {
        if (n.param) n.grad_live = true;
        nodes_.push_back(std::move(n));
        return Var{this, nodes_.size() - 1};
    }

    Var make(Tensor value, std::initializer_list<Var> inputs, std::function<void(Graph&, std::size_t)> bw) {
        return make(std::move(value), std::vector<Var>(inputs), std::move(bw));
    }

    Var make(Tensor value, const std::vector<Var>& inputs, std::function<void(Graph&, std::size_t)> bw) {
        Node n;
        n.value = std::move(value);
        for (const Var& in : inputs) n.needs_grad = n.needs_grad || nodes_[in.index].needs_grad;
        if (n.needs_grad) n.backward = std::move(bw);
        nodes_.push_back(std::move(n));
        return Var{this, nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph->val(*this); }

}  // namespace textad::nn
