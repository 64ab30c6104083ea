#pragma once
// Define-by-run reverse-mode differentiation over rank-2 tensors.
//
// A Tape records every primitive applied to its Vars together with a closure
// that pushes the output gradient back to the inputs. Nodes are appended in
// evaluation order, so reverse iteration is a valid topological order. A tape
// built with recording=false computes the same values (bit for bit) but keeps
// no closures and cannot be differentiated.

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "demn/params.hpp"
#include "demn/tensor.hpp"

namespace demn::ad {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    explicit Tape(bool recording = true) : recording_(recording) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    std::size_t size() const { return nodes_.size(); }

    /// Value that never receives a gradient.
    Var constant(Tensor value);
    /// Differentiable input owned by the tape; read its gradient with grad().
    Var leaf(Tensor value);
    /// Leaf bound to a parameter. Gradients accumulate into p.grad. Repeated
    /// calls with the same parameter return the same node.
    Var param(Parameter& p);

    const Tensor& value(std::size_t id) const;
    /// Gradient accumulated at a node (zeros when nothing reached it).
    Tensor grad(std::size_t id) const;
    Parameter* parameter(std::size_t id) const { return nodes_[id].param; }

    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    /// Mutable gradient buffer of a node, allocated on first access.
    Tensor& grad_ref(std::size_t id);

    /// Reverse accumulation from a 1×1 node, seeding d(loss)/d(loss) = seed.
    void backward(Var loss, double seed = 1.0);

    Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
    Var record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn fn);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Parameter* param = nullptr;
        BackwardFn backward;
        bool needs_grad = false;
        bool has_grad = false;
    };

    bool recording_;
    std::deque<Node> nodes_;  // deque: values stay put while the tape grows
    std::vector<std::pair<const Parameter*, std::size_t>> param_nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

// Primitives. Shapes are rows×cols; "row" means a 1×n tensor.

Var matmul(Var a, Var b);               // (m×k)·(k×n)
Var matmul_nt(Var a, Var b);            // (m×k)·(n×k)ᵀ
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                  // elementwise
Var add_row(Var a, Var row);            // broadcast a 1×n row over every row of a
Var scale(Var a, double factor);
Var one_minus(Var a);                   // 1 − a
Var mask_mul(Var a, const Tensor& mask);  // a ⊙ constant mask
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var relu(Var a);                        // derivative 0 at 0
Var tanh(Var a);
Var sigmoid(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var max_pool_rows(Var a);               // columnwise max → 1×n; ties route to the first row
Var mean_pool_rows(Var a);              // columnwise mean → 1×n
Var sum(Var a);                         // → 1×1
Var pick(Var a, std::size_t r, std::size_t c);  // → 1×1
/// Rows of a parameter table. Frozen rows pass no gradient.
Var gather_rows(Tape& tape, Parameter& table, std::span<const std::size_t> indices);

}  // namespace demn::ad
