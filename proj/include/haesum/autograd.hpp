#pragma once

// Minimal reverse-mode differentiation over dense row-major matrices.
//
// A Tape owns every intermediate value of one forward pass. Ops append a node
// holding the result and a closure that pushes the output gradient back to its
// inputs. Parameters enter the tape by reference (no copy) and are tagged with
// a slot index so their gradients can be collected after backward().

#include "haesum/tensor.hpp"

#include <deque>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace haesum::ag {

class Tape;

class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    Tape& tape() const { return *tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    // `value` must outlive the tape. `slot` identifies the parameter when
    // gradients are collected; pass trainable=false for frozen tables.
    Var parameter(const Matrix& value, int slot, bool trainable = true);

    Var record(Matrix value, std::span<const Var> parents, Backward backward);

    const Matrix& value(int id) const;
    bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }
    void accumulate(const Var& v, const Matrix& contribution);
    // Gradient buffer for in-place sparse accumulation; allocated on demand.
    Matrix& grad_buffer(const Var& v);

    // Seeds d(loss)/d(loss) = 1 and runs all closures in reverse order.
    void backward(const Var& loss);

    // Null when no gradient reached the node.
    const Matrix* grad(const Var& v) const;

    template <typename Fn>
    void for_each_parameter_grad(Fn&& fn) const {
        for (const auto& n : nodes_) {
            if (n.slot >= 0 && n.needs_grad && n.grad.size() > 0) fn(n.slot, n.grad);
        }
    }

    bool training = false;
    double dropout = 0.0;
    std::mt19937_64 rng{0};

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        const Matrix* external = nullptr;
        Matrix grad;
        Backward backward;
        int slot = -1;
        bool needs_grad = false;
    };
    std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// Arithmetic
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_row(const Var& a, const Var& row);
Var mul_row(const Var& a, const Var& row);

// Activations
Var leaky_relu(const Var& a, double slope);
Var relu(const Var& a);
Var elu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);

// Shape
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& a, Index start, Index count);

// Sparse row traffic. Index -1 in gather_rows yields a zero row.
Var gather_rows(const Var& a, std::span<const int> index);
Var scatter_add_rows(const Var& a, std::span<const int> index, Index out_rows);
// Softmax of each column over the rows that share a group id.
Var segment_softmax(const Var& a, std::span<const int> group, Index groups);
// Column-wise max over rows that share a group id; every group must be non-empty.
Var segment_max(const Var& a, std::span<const int> group, Index groups);

// Multi-head helpers: columns are laid out as `blocks` contiguous blocks.
Var block_sum(const Var& a, Index blocks);
Var block_expand(const Var& a, Index width);

// Constant scaling
Var mul_rows(const Var& a, std::span<const double> weights);
Var mul_const(const Var& a, const Matrix& mask);
Var dropout(const Var& a);

Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);
// Mean binary cross-entropy with the sigmoid folded in; logits is N x 1.
Var bce_with_logits(const Var& logits, std::span<const double> labels);
Var sum_all(const Var& a);

}  // namespace haesum::ag
