#include "multisol/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "multisol/kernels.hpp"

namespace msol::ad {

const Matrix& Var::value() const {
    if (!tape_) {
        throw std::logic_error("Var: not recorded on a tape");
    }
    return tape_->value(*this);
}

const Matrix& Var::grad() const {
    if (!tape_) {
        throw std::logic_error("Var: not recorded on a tape");
    }
    return tape_->grad(*this);
}

void Tape::check(Var v) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
        throw std::logic_error("Var does not belong to this tape");
    }
}

Var Tape::variable(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, true, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, false, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backprop backprop) {
    bool needs = false;
    for (const Var& p : parents) {
        check(p);
        needs = needs || nodes_[p.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backprop) : Backprop{}});
    return Var(this, nodes_.size() - 1);
}

bool Tape::requires_grad(Var v) const {
    check(v);
    return nodes_[v.id()].requires_grad;
}

const Matrix& Tape::value(Var v) const {
    check(v);
    return nodes_[v.id()].value;
}

const Matrix& Tape::grad(Var v) const {
    check(v);
    return nodes_[v.id()].grad;
}

void Tape::accumulate(Var target, const Matrix& contribution) {
    check(target);
    Node& node = nodes_[target.id()];
    if (!node.requires_grad) {
        return;
    }
    if (!contribution.same_shape(node.value)) {
        throw std::logic_error("gradient shape mismatch on node " + std::to_string(target.id()));
    }
    if (node.grad.empty()) {
        node.grad = contribution;
        return;
    }
    auto& g = node.grad.data();
    const auto& c = contribution.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += c[i];
    }
}

void Tape::backward(Var output) {
    if (!output.valid()) {
        throw std::logic_error("backward: output was not recorded on a tape");
    }
    check(output);
    if (backward_done_) {
        throw std::logic_error("backward: tape already consumed");
    }
    Node& out = nodes_[output.id()];
    if (out.value.rows() != 1 || out.value.cols() != 1) {
        throw std::invalid_argument("backward: output must be a scalar");
    }
    backward_done_ = true;
    if (!out.requires_grad) {
        return;
    }
    out.grad = Matrix(1, 1, 1.0);
    for (std::size_t i = output.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.backprop && !node.grad.empty()) {
            node.backprop(*this, node.value, node.grad);
        }
    }
}

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
    }
}

template <typename F>
Matrix map(const Matrix& a, F&& f) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = f(a.data()[i]);
    }
    return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, F&& f) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = f(a.data()[i], b.data()[i]);
    }
    return out;
}

Tape& tape_of(Var a) {
    if (!a.valid()) {
        throw std::logic_error("op on a Var that was not recorded");
    }
    return *a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a);
    Matrix out;
    kernels::matmul_parallel(a.value(), b.value(), out);
    return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
        if (t.requires_grad(a)) {
            Matrix ga;
            kernels::matmul_a_bt_parallel(g, b.value(), ga);
            t.accumulate(a, ga);
        }
        if (t.requires_grad(b)) {
            Matrix gb;
            kernels::matmul_at_b_parallel(a.value(), g, gb);
            t.accumulate(b, gb);
        }
    });
}

Var add_row(Var a, Var b) {
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (bv.rows() != 1 || bv.cols() != av.cols()) {
        throw std::invalid_argument("add_row: bias must be 1 x cols");
    }
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) += bv(0, j);
        }
    }
    return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
        t.accumulate(a, g);
        if (t.requires_grad(b)) {
            Matrix gb(1, g.cols());
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    gb(0, j) += g(i, j);
                }
            }
            t.accumulate(b, gb);
        }
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of(a);
    same_shape(a.value(), b.value(), "add");
    return t.record(zip(a.value(), b.value(), [](double x, double y) { return x + y; }), {a, b},
                    [a, b](Tape& t, const Matrix&, const Matrix& g) {
                        t.accumulate(a, g);
                        t.accumulate(b, g);
                    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a);
    same_shape(a.value(), b.value(), "sub");
    return t.record(zip(a.value(), b.value(), [](double x, double y) { return x - y; }), {a, b},
                    [a, b](Tape& t, const Matrix&, const Matrix& g) {
                        t.accumulate(a, g);
                        if (t.requires_grad(b)) {
                            t.accumulate(b, map(g, [](double x) { return -x; }));
                        }
                    });
}

Var mul(Var a, Var b) {
    Tape& t = tape_of(a);
    same_shape(a.value(), b.value(), "mul");
    return t.record(zip(a.value(), b.value(), [](double x, double y) { return x * y; }), {a, b},
                    [a, b](Tape& t, const Matrix&, const Matrix& g) {
                        const auto times = [](double x, double y) { return x * y; };
                        if (t.requires_grad(a)) {
                            t.accumulate(a, zip(g, b.value(), times));
                        }
                        if (t.requires_grad(b)) {
                            t.accumulate(b, zip(g, a.value(), times));
                        }
                    });
}

Var div(Var a, Var b) {
    Tape& t = tape_of(a);
    same_shape(a.value(), b.value(), "div");
    return t.record(zip(a.value(), b.value(), [](double x, double y) { return x / y; }), {a, b},
                    [a, b](Tape& t, const Matrix& out, const Matrix& g) {
                        const Matrix& bv = b.value();
                        if (t.requires_grad(a)) {
                            t.accumulate(a, zip(g, bv, [](double x, double y) { return x / y; }));
                        }
                        if (t.requires_grad(b)) {
                            Matrix gb(g.rows(), g.cols());
                            for (std::size_t i = 0; i < g.size(); ++i) {
                                gb.data()[i] = -g.data()[i] * out.data()[i] / bv.data()[i];
                            }
                            t.accumulate(b, gb);
                        }
                    });
}

Var scale(Var a, double c) {
    Tape& t = tape_of(a);
    return t.record(map(a.value(), [c](double x) { return c * x; }), {a},
                    [a, c](Tape& t, const Matrix&, const Matrix& g) {
                        t.accumulate(a, map(g, [c](double x) { return c * x; }));
                    });
}

Var add_scalar(Var a, double c) {
    Tape& t = tape_of(a);
    return t.record(map(a.value(), [c](double x) { return x + c; }), {a},
                    [a](Tape& t, const Matrix&, const Matrix& g) { t.accumulate(a, g); });
}

Var relu(Var a) {
    Tape& t = tape_of(a);
    return t.record(map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {a},
                    [a](Tape& t, const Matrix&, const Matrix& g) {
                        t.accumulate(a, zip(g, a.value(), [](double gi, double x) {
                                         return x > 0.0 ? gi : 0.0;
                                     }));
                    });
}

Var sigmoid(Var a) {
    Tape& t = tape_of(a);
    const auto sig = [](double x) {
        if (x >= 0.0) {
            return 1.0 / (1.0 + std::exp(-x));
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    };
    return t.record(map(a.value(), sig), {a}, [a](Tape& t, const Matrix& out, const Matrix& g) {
        t.accumulate(a, zip(g, out, [](double gi, double s) { return gi * s * (1.0 - s); }));
    });
}

Var square(Var a) {
    Tape& t = tape_of(a);
    return t.record(map(a.value(), [](double x) { return x * x; }), {a},
                    [a](Tape& t, const Matrix&, const Matrix& g) {
                        t.accumulate(a, zip(g, a.value(),
                                            [](double gi, double x) { return 2.0 * x * gi; }));
                    });
}

Var log_clamped(Var a, double floor) {
    Tape& t = tape_of(a);
    return t.record(map(a.value(), [floor](double x) { return std::log(std::max(x, floor)); }), {a},
                    [a, floor](Tape& t, const Matrix&, const Matrix& g) {
                        t.accumulate(a, zip(g, a.value(), [floor](double gi, double x) {
                                         return x > floor ? gi / x : 0.0;
                                     }));
                    });
}

Var softmax_rows(Var a) {
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        const auto row = av.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) {
            out(i, j) = std::exp(row[j] - mx);
            total += out(i, j);
        }
        for (std::size_t j = 0; j < av.cols(); ++j) {
            out(i, j) /= total;
        }
    }
    return t.record(std::move(out), {a}, [a](Tape& t, const Matrix& p, const Matrix& g) {
        Matrix ga(p.rows(), p.cols());
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) {
                dot += g(i, j) * p(i, j);
            }
            for (std::size_t j = 0; j < p.cols(); ++j) {
                ga(i, j) = p(i, j) * (g(i, j) - dot);
            }
        }
        t.accumulate(a, ga);
    });
}

Var sum(Var a) {
    Tape& t = tape_of(a);
    double total = 0.0;
    for (double x : a.value().data()) {
        total += x;
    }
    return t.record(Matrix(1, 1, total), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
        const Matrix& av = a.value();
        t.accumulate(a, Matrix(av.rows(), av.cols(), g(0, 0)));
    });
}

Var mean(Var a) {
    const auto n = static_cast<double>(a.value().size());
    if (n == 0) {
        throw std::invalid_argument("mean: empty matrix");
    }
    return scale(sum(a), 1.0 / n);
}

Var column_sum(Var a) {
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    Matrix out(1, av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) {
            out(0, j) += av(i, j);
        }
    }
    return t.record(std::move(out), {a}, [a](Tape& t, const Matrix&, const Matrix& g) {
        const Matrix& av = a.value();
        Matrix ga(av.rows(), av.cols());
        for (std::size_t i = 0; i < av.rows(); ++i) {
            for (std::size_t j = 0; j < av.cols(); ++j) {
                ga(i, j) = g(0, j);
            }
        }
        t.accumulate(a, ga);
    });
}

Var smoothed_membership(Var preds, const Matrix& thresholds, double lambda) {
    Tape& t = tape_of(preds);
    Matrix out;
    kernels::smoothed_membership_parallel(preds.value(), thresholds, lambda, out);
    const Matrix* th = &thresholds;
    return t.record(std::move(out), {preds},
                    [preds, th, lambda](Tape& t, const Matrix&, const Matrix& g) {
                        Matrix gp;
                        kernels::smoothed_membership_vjp_parallel(preds.value(), *th, lambda, g,
                                                                  gp);
                        t.accumulate(preds, gp);
                    });
}

}  // namespace msol::ad
