#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dmvcr/tensor.hpp"

// Differentiable tensor operations. Every op checks shapes eagerly, refuses
// to produce non-finite output, and records a backward rule when any input
// requires gradients. There is no implicit broadcasting.
namespace dmvcr {

enum class ElementwiseOp { kAdd, kSub, kMul };
enum class Activation { kSigmoid, kTanh };
enum class ReduceOp { kSum, kMean };

/// [m x n] * [n x p] -> [m x p].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);
inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::kAdd, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::kSub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::kMul, a, b); }

/// Multiplies every element by a constant.
Tensor scale(const Tensor& x, double factor);

Tensor activate(Activation kind, const Tensor& x);
inline Tensor sigmoid(const Tensor& x) { return activate(Activation::kSigmoid, x); }
inline Tensor tanh(const Tensor& x) { return activate(Activation::kTanh, x); }

/// Max-subtracted softmax along `axis`. Each slice is normalized with an
/// order-independent sum, so permuting a slice permutes the output exactly.
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
inline Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

/// Reduces `axis` away (the result has rank - 1).
Tensor reduce(ReduceOp op, const Tensor& x, std::size_t axis);
/// Sum of all elements as a scalar.
Tensor sum(const Tensor& x);

/// -log softmax(logits)[gold] via log-sum-exp. `logits` must be a vector.
Tensor cross_entropy_logits(const Tensor& logits, std::size_t gold);

Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

/// Row lookup: out[i] = table[ids[i]] for a [V x d] table.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);

}  // namespace dmvcr
