#include "ratebench/kernel/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "ratebench/kernel/ops.hpp"

namespace ratebench::kernel {

namespace {

constexpr double kMaskedLogit = -1e30;

void check_inputs(const Tensor& x, const std::vector<std::uint8_t>& valid,
                  std::size_t heads) {
  if (x.rank() != 2) throw std::invalid_argument("self_attention: input must be [L,d]");
  const std::size_t length = x.dim(0), d = x.dim(1);
  if (valid.size() != length) {
    throw std::invalid_argument("self_attention: mask length does not match sequence");
  }
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("self_attention: model dim not divisible by head count");
  }
  bool any_valid = false;
  for (std::uint8_t v : valid) any_valid |= (v != 0);
  if (!any_valid) throw std::invalid_argument("self_attention: all positions padded");
}

}  // namespace

Tensor attention_forward(const Tensor& x, const std::vector<std::uint8_t>& valid,
                         const AttentionWeights& w, std::size_t heads,
                         AttentionCache& cache) {
  check_inputs(x, valid, heads);
  const std::size_t length = x.dim(0), d = x.dim(1);
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.x = x;
  cache.valid = valid;
  cache.heads = heads;
  cache.q = dense_forward(x, *w.wq, *w.bq);
  cache.k = dense_forward(x, *w.wk, *w.bk);
  cache.v = dense_forward(x, *w.wv, *w.bv);
  cache.attn = Tensor({heads * length, length});
  cache.concat = Tensor({length, d});

  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t col0 = h * dh;
    for (std::size_t i = 0; i < length; ++i) {
      if (!valid[i]) continue;
      double* arow = cache.attn.data() + (h * length + i) * length;
      double mx = kMaskedLogit;
      for (std::size_t j = 0; j < length; ++j) {
        if (!valid[j]) {
          arow[j] = kMaskedLogit;
          continue;
        }
        double dot = 0.0;
        const double* qi = cache.q.data() + i * d + col0;
        const double* kj = cache.k.data() + j * d + col0;
        for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
        arow[j] = dot * scale;
        mx = std::max(mx, arow[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < length; ++j) {
        arow[j] = valid[j] ? std::exp(arow[j] - mx) : 0.0;
        sum += arow[j];
      }
      const double inv = 1.0 / sum;
      double* out = cache.concat.data() + i * d + col0;
      for (std::size_t j = 0; j < length; ++j) {
        arow[j] *= inv;
        if (arow[j] == 0.0) continue;
        const double* vj = cache.v.data() + j * d + col0;
        for (std::size_t c = 0; c < dh; ++c) out[c] += arow[j] * vj[c];
      }
    }
  }

  Tensor y = dense_forward(cache.concat, *w.wo, *w.bo);
  for (std::size_t i = 0; i < length; ++i) {
    if (valid[i]) continue;
    double* yi = y.data() + i * d;
    for (std::size_t c = 0; c < d; ++c) yi[c] = 0.0;
  }
  return y;
}

void attention_backward(const AttentionCache& cache, const AttentionWeights& w,
                        const Tensor& grad_y, const AttentionGrads& grads,
                        Tensor& grad_x) {
  const std::size_t length = cache.x.dim(0), d = cache.x.dim(1);
  const std::size_t heads = cache.heads, dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Padded query rows were zeroed in the forward, so their incoming
  // gradient must not reach the projections.
  Tensor gy = grad_y;
  for (std::size_t i = 0; i < length; ++i) {
    if (cache.valid[i]) continue;
    double* gi = gy.data() + i * d;
    for (std::size_t c = 0; c < d; ++c) gi[c] = 0.0;
  }

  Tensor grad_concat({length, d});
  dense_backward(cache.concat, *w.wo, gy, &grad_concat, *grads.wo, *grads.bo);

  Tensor grad_q({length, d}), grad_k({length, d}), grad_v({length, d});
  std::vector<double> grad_arow(length);

  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t col0 = h * dh;
    for (std::size_t i = 0; i < length; ++i) {
      if (!cache.valid[i]) continue;
      const double* arow = cache.attn.data() + (h * length + i) * length;
      const double* gctx = grad_concat.data() + i * d + col0;

      double dot_sum = 0.0;
      for (std::size_t j = 0; j < length; ++j) {
        if (arow[j] == 0.0) {
          grad_arow[j] = 0.0;
          continue;
        }
        const double* vj = cache.v.data() + j * d + col0;
        double g = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          g += gctx[c] * vj[c];
        }
        grad_arow[j] = g;
        dot_sum += arow[j] * g;
        double* gvj = grad_v.data() + j * d + col0;
        for (std::size_t c = 0; c < dh; ++c) gvj[c] += arow[j] * gctx[c];
      }

      // Softmax backward, then the scaled dot products.
      const double* qi = cache.q.data() + i * d + col0;
      double* gqi = grad_q.data() + i * d + col0;
      for (std::size_t j = 0; j < length; ++j) {
        if (arow[j] == 0.0) continue;
        const double gs = arow[j] * (grad_arow[j] - dot_sum) * scale;
        const double* kj = cache.k.data() + j * d + col0;
        double* gkj = grad_k.data() + j * d + col0;
        for (std::size_t c = 0; c < dh; ++c) {
          gqi[c] += gs * kj[c];
          gkj[c] += gs * qi[c];
        }
      }
    }
  }

  dense_backward(cache.x, *w.wq, grad_q, &grad_x, *grads.wq, *grads.bq);
  dense_backward(cache.x, *w.wk, grad_k, &grad_x, *grads.wk, *grads.bk);
  dense_backward(cache.x, *w.wv, grad_v, &grad_x, *grads.wv, *grads.bv);
}

}  // namespace ratebench::kernel
