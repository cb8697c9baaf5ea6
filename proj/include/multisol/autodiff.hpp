#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "multisol/matrix.hpp"

namespace msol::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
public:
    Var() = default;

    bool valid() const noexcept { return tape_ != nullptr; }
    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }

    const Matrix& value() const;
    /// Gradient after Tape::backward; zero-shaped matrix if none flowed here.
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Linear record of dense matrix operations, replayed in reverse by backward().
class Tape {
public:
    /// Receives the node's output value and gradient and pushes contributions
    /// to its parents through accumulate().
    using Backprop =
        std::function<void(Tape&, const Matrix& out_value, const Matrix& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf whose gradient is wanted.
    Var variable(Matrix value);
    /// Leaf treated as a constant.
    Var constant(Matrix value);

    /// Records an op result. Needs gradient iff some parent does.
    Var record(Matrix value, std::initializer_list<Var> parents, Backprop backprop);

    /// Seeds d(output)/d(output) = 1 and propagates to every recorded node.
    /// output must be a 1 x 1 node of this tape.
    void backward(Var output);

    void accumulate(Var target, const Matrix& contribution);
    bool requires_grad(Var v) const;

    const Matrix& value(Var v) const;
    const Matrix& grad(Var v) const;
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Backprop backprop;
    };

    void check(Var v) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

// Matrix ops. Shapes follow the usual conventions; mismatches throw.
Var matmul(Var a, Var b);
/// a (n x c) plus row vector b (1 x c) broadcast over rows.
Var add_row(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var relu(Var a);
Var sigmoid(Var a);
Var square(Var a);
/// log(max(a, floor)); gradient is zero where the floor is active.
Var log_clamped(Var a, double floor);
Var softmax_rows(Var a);
/// 1 x 1 total.
Var sum(Var a);
Var mean(Var a);
/// 1 x c column totals.
Var column_sum(Var a);
/// Row-wise region-membership estimate (see kernels::smoothed_membership_*).
/// The thresholds are constants; the matrix must outlive backward().
Var smoothed_membership(Var preds, const Matrix& thresholds, double lambda);

}  // namespace msol::ad
