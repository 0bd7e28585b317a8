#pragma once

#include <vector>

#include "dpw/tensor.hpp"

namespace dpw::ops {

/// Matrix product [m x k] * [k x n] -> [m x n].
/// Backward: a.grad += g * b^T, b.grad += a^T * g.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul_scalar(Tape& tape, const Tensor& a, double c);
/// Multiply by a single-element learnable tensor (gate).
Tensor mul_scalar_tensor(Tape& tape, const Tensor& a, const Tensor& s);

/// Broadcast adds/multiplies for bias and per-channel weight vectors.
/// rowvec v[m] broadcasts across rows of a[n x m]; colvec v[n] across columns.
Tensor add_rowvec(Tape& tape, const Tensor& a, const Tensor& v);
Tensor add_colvec(Tape& tape, const Tensor& a, const Tensor& v);
Tensor mul_rowvec(Tape& tape, const Tensor& a, const Tensor& v);

Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);

Tensor transpose(Tape& tape, const Tensor& a);
Tensor reshape(Tape& tape, const Tensor& a, std::vector<int> shape);
/// Rows [begin, end) of a rank-1/2 tensor.
Tensor slice_rows(Tape& tape, const Tensor& a, int begin, int end);
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);

/// Extends axis 0 to target_rows by replicating the final row; gradients of
/// padded positions route back onto that source row.
Tensor pad_replicate_tail(Tape& tape, const Tensor& a, int target_rows);

/// Per-row (last axis) zero-mean unit-variance normalization with affine.
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps);

/// tanh-approximation GELU, elementwise.
Tensor gelu(Tape& tape, const Tensor& x);

/// Numerically stabilized softmax along `axis` (0 or 1; rank-1 uses axis 0).
Tensor softmax(Tape& tape, const Tensor& x, int axis);

} // namespace dpw::ops
