#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "planet/tensor.hpp"

// Reverse-mode differentiation over a closed set of operations.
//
// A Tape records every operation in execution order. Tensors recorded as
// constants never receive gradients and operations whose inputs are all
// constant are recorded without a backward rule, so fixed inputs (pixel
// patches, mined signatures) cost nothing in the backward sweep.
//
// A tape belongs to one thread; concurrent forward passes each own a tape.
namespace planet::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf that receives a gradient (a trainable parameter).
    Var variable(Tensor value);

    /// Propagates d(loss)/d(node) to every node that requires a gradient.
    /// Throws ContractError unless `loss` holds exactly one element.
    void backward(const Var& loss);

    /// Gradient of the last backward() w.r.t. `v`; exact zeros when `v` was
    /// not reached from the loss.
    Tensor grad(const Var& v) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t backward_visits() const noexcept { return visits_; }

    // Operation-authoring interface.
    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
    /// Accumulation buffer for node `id`; only call when requires_grad(id).
    Tensor& grad_buffer(std::size_t id);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::size_t visits_ = 0;
};

using Offsets = std::vector<std::size_t>;

// Elementwise
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
/// a * s where s holds a single element.
Var mul_scalar(const Var& a, const Var& s);
/// Adds the length-n vector `b` to every row of `a` [m x n].
Var add_row(const Var& a, const Var& b);
Var exp(const Var& a);
/// Throws NumericError on a non-positive entry.
Var log(const Var& a);
Var tanh(const Var& a);

// Reductions
Var sum(const Var& a);
Var mean(const Var& a);

// Linear algebra
Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);

// Sequence / indexing
Var gather_rows(const Var& table, std::span<const std::size_t> ids);
/// Mean of each contiguous row segment [offsets[s], offsets[s+1]).
Var segment_mean(const Var& x, const Offsets& offsets);
/// Softmax of a flat vector computed independently inside each segment.
Var segment_softmax(const Var& x, const Offsets& offsets);
/// out[s] = sum_{i in segment s} w[i] * x[i, :]
Var segment_weighted_sum(const Var& w, const Var& x, const Offsets& offsets);

// Normalisation and similarity (row-wise; rank-1 inputs are one row)
Var softmax(const Var& x);
Var layernorm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var l2_normalize(const Var& x);
Var cosine_sim(const Var& a, const Var& b);

/// mean_i [ logsumexp_j logits(i,j) - logits(i,i) ] for a square matrix:
/// softmax cross-entropy where row i's target is column i.
Var cross_entropy_diag(const Var& logits);

}  // namespace planet::ad
