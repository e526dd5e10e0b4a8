#pragma once

#include <cstdint>
#include <vector>

#include "ratebench/kernel/tensor.hpp"

namespace ratebench::kernel {

/// Non-owning view of the projection parameters for one bidirectional
/// self-attention layer. All weights are [d,d], biases [d]. The tensors
/// usually live inside a ParameterStore; the caller keeps them alive for
/// the duration of the call.
struct AttentionWeights {
  const Tensor* wq = nullptr;
  const Tensor* bq = nullptr;
  const Tensor* wk = nullptr;
  const Tensor* bk = nullptr;
  const Tensor* wv = nullptr;
  const Tensor* bv = nullptr;
  const Tensor* wo = nullptr;
  const Tensor* bo = nullptr;
};

/// Gradient buffers matching AttentionWeights; backward accumulates into them.
struct AttentionGrads {
  Tensor* wq = nullptr;
  Tensor* bq = nullptr;
  Tensor* wk = nullptr;
  Tensor* bk = nullptr;
  Tensor* wv = nullptr;
  Tensor* bv = nullptr;
  Tensor* wo = nullptr;
  Tensor* bo = nullptr;
};

struct AttentionCache {
  Tensor x;       // input [L,d]
  Tensor q, k, v; // projected [L,d]
  Tensor attn;    // attention weights, [heads*L, L]
  Tensor concat;  // head outputs before the output projection, [L,d]
  std::vector<std::uint8_t> valid;
  std::size_t heads = 0;
};

/// Full bidirectional multi-head attention over a sequence of length L <= 10.
/// valid[i] == 0 marks a padded slot: padded keys get -inf logits before the
/// softmax and padded query rows produce zero output. No causal mask.
/// Throws std::invalid_argument if every slot is padded, or if d is not
/// divisible by heads.
Tensor attention_forward(const Tensor& x, const std::vector<std::uint8_t>& valid,
                         const AttentionWeights& w, std::size_t heads,
                         AttentionCache& cache);

/// Accumulates into grads and grad_x.
void attention_backward(const AttentionCache& cache, const AttentionWeights& w,
                        const Tensor& grad_y, const AttentionGrads& grads,
                        Tensor& grad_x);

}  // namespace ratebench::kernel
