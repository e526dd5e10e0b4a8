#pragma once

#include <vector>

#include "ratebench/kernel/rng.hpp"
#include "ratebench/kernel/tensor.hpp"

namespace ratebench::kernel {

// Every op in this header ships a hand-derived backward. There is no autodiff
// graph; callers wire forward caches to backward calls explicitly, and the
// finite-difference suite in tests/ checks every gradient path.

/// y[n,d_out] = x[n,d_in] * w[d_in,d_out] + b[d_out]
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

/// Accumulates into the gradient buffers. Pass grad_x = nullptr at the
/// input boundary where no upstream gradient is needed.
void dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y,
                    Tensor* grad_x, Tensor& grad_w, Tensor& grad_b);

Tensor relu_forward(const Tensor& x);
void relu_backward(const Tensor& x, const Tensor& grad_y, Tensor& grad_x);

struct LayerNormCache {
  Tensor normed;             // (x - mean) * rstd, per row
  std::vector<double> rstd;  // one per row
};

/// Row-wise layer norm with learned gain/bias over the last dimension.
Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                          LayerNormCache& cache, double eps = 1e-5);
void layer_norm_backward(const LayerNormCache& cache, const Tensor& gain,
                         const Tensor& grad_y, Tensor& grad_x, Tensor& grad_gain,
                         Tensor& grad_bias);

/// Numerically stable softmax over each row of a 2-d tensor (or the whole
/// of a 1-d tensor).
void softmax_rows_inplace(Tensor& t);

/// loss = -log softmax(logits)[target]; grad_logits = softmax - one_hot.
/// grad_logits is overwritten, not accumulated.
double cross_entropy_5way(const Tensor& logits, int target_class, Tensor& grad_logits);
double cross_entropy_5way(const Tensor& logits, int target_class);

/// (1/n) sum (pred - label)^2; grad_pred = 2 (pred - label) / n, overwritten.
double mse(const Tensor& predictions, const Tensor& labels, Tensor& grad_predictions);
double mse(const Tensor& predictions, const Tensor& labels);

/// Inverted dropout. Fills mask with 0 or 1/(1-p) and multiplies x by it.
/// p = 0 leaves x untouched and sets the mask to ones.
void dropout_forward_inplace(Tensor& x, double p, Rng& rng, Tensor& mask);
void dropout_backward_inplace(const Tensor& mask, Tensor& grad);

}  // namespace ratebench::kernel
