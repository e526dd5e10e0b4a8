#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <thread>

#include "ratebench/kernel/ops.hpp"
#include "ratebench/models/supervised.hpp"

namespace ratebench::models {

namespace {

using feat::EncodedCatalog;
using feat::EncodedExample;
using kernel::Rng;
using kernel::Tensor;

// ---------------------------------------------------------------------------
// Embedding-table helpers. Tables are [rows, d]; all ids were produced by the
// vocabularies that sized the tables, so raw indexing is safe.

void add_mean_rows(const Tensor& table, std::span<const std::int32_t> ids, double* out) {
  if (ids.empty()) return;
  const std::size_t d = table.dim(1);
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (const std::int32_t id : ids) {
    const double* row = table.data() + static_cast<std::size_t>(id) * d;
    for (std::size_t c = 0; c < d; ++c) out[c] += row[c] * inv;
  }
}

void add_mean_rows_grad(Tensor& grad_table, std::span<const std::int32_t> ids,
                        const double* grad) {
  if (ids.empty()) return;
  const std::size_t d = grad_table.dim(1);
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (const std::int32_t id : ids) {
    double* row = grad_table.data() + static_cast<std::size_t>(id) * d;
    for (std::size_t c = 0; c < d; ++c) row[c] += grad[c] * inv;
  }
}

std::span<const std::int32_t> one_id(const std::int32_t& id) { return {&id, 1}; }

// ---------------------------------------------------------------------------
// Per-example caches.

struct HeadCache {
  std::vector<Tensor> inputs;     // input of each dense layer
  std::vector<Tensor> pre;        // hidden pre-activations
  std::vector<Tensor> drop_mask;  // per hidden layer, only when dropout is on
};

struct BlockCache {
  kernel::LayerNormCache ln1, ln2;
  kernel::AttentionCache attn;  // attn.x is the ln1 output
  Tensor ln2_out;
  Tensor ffn_pre;
  Tensor ffn_relu;
  Tensor attn_mask, ffn_mask;
};

struct TfCache {
  bool empty_history = false;
  Tensor x0;  // embedded sequence [L, d_model]
  std::vector<BlockCache> blocks;
  kernel::LayerNormCache ln_f;
  Tensor summary;  // [1, d_model]
};

struct ForwardCache {
  TfCache tf;
  HeadCache head;
};

// ---------------------------------------------------------------------------
// Head MLP.

Tensor head_forward(const SupervisedModel& m, Tensor z, HeadCache& hc, double dropout,
                    Rng* rng) {
  const std::size_t n_hidden = m.head_mlp.size() - 1;
  for (std::size_t i = 0; i < n_hidden; ++i) {
    hc.inputs.push_back(std::move(z));
    const DenseParam& layer = m.head_mlp[i];
    Tensor a = dense_forward(hc.inputs.back(), layer.w->value, layer.b->value);
    Tensor r = relu_forward(a);
    hc.pre.push_back(std::move(a));
    if (dropout > 0.0 && rng) {
      Tensor mask;
      kernel::dropout_forward_inplace(r, dropout, *rng, mask);
      hc.drop_mask.push_back(std::move(mask));
    }
    z = std::move(r);
  }
  hc.inputs.push_back(std::move(z));
  const DenseParam& out = m.head_mlp.back();
  return dense_forward(hc.inputs.back(), out.w->value, out.b->value);
}

Tensor head_backward(SupervisedModel& m, const HeadCache& hc, const Tensor& grad_raw) {
  const DenseParam& out = m.head_mlp.back();
  Tensor grad_in({1, hc.inputs.back().dim(1)});
  dense_backward(hc.inputs.back(), out.w->value, grad_raw, &grad_in, out.w->grad,
                 out.b->grad);
  for (std::size_t i = m.head_mlp.size() - 1; i-- > 0;) {
    if (!hc.drop_mask.empty()) {
      kernel::dropout_backward_inplace(hc.drop_mask[i], grad_in);
    }
    Tensor grad_pre(hc.pre[i].shape());
    kernel::relu_backward(hc.pre[i], grad_in, grad_pre);
    const DenseParam& layer = m.head_mlp[i];
    Tensor grad_x({1, hc.inputs[i].dim(1)});
    dense_backward(hc.inputs[i], layer.w->value, grad_pre, &grad_x, layer.w->grad,
                   layer.b->grad);
    grad_in = std::move(grad_x);
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// MF.

double mf_score(const SupervisedModel& m, std::size_t u, std::size_t i) {
  const std::size_t d = m.config.embedding_dim;
  const double* pu = m.user_emb->value.data() + u * d;
  const double* qi = m.item_emb->value.data() + i * d;
  double dot = 0.0;
  for (std::size_t c = 0; c < d; ++c) dot += pu[c] * qi[c];
  return m.mu->value[0] + m.user_bias->value[u] + m.item_bias->value[i] + dot;
}

void mf_backward(SupervisedModel& m, std::size_t u, std::size_t i, double g) {
  const std::size_t d = m.config.embedding_dim;
  m.mu->grad[0] += g;
  m.user_bias->grad[u] += g;
  m.item_bias->grad[i] += g;
  const double* pu = m.user_emb->value.data() + u * d;
  const double* qi = m.item_emb->value.data() + i * d;
  double* gpu = m.user_emb->grad.data() + u * d;
  double* gqi = m.item_emb->grad.data() + i * d;
  for (std::size_t c = 0; c < d; ++c) {
    gpu[c] += g * qi[c];
    gqi[c] += g * pu[c];
  }
}

// ---------------------------------------------------------------------------
// Transformer-MLP.

// Embeds the history, runs the blocks, and returns the head input
// [1, d_model + 3d]: user summary, candidate item/title/attribute embeddings.
Tensor tmlp_encode(const SupervisedModel& m, const EncodedCatalog& cat,
                   const EncodedExample& ex, TfCache& c, double dropout, Rng* rng) {
  const std::size_t d = m.config.embedding_dim;
  const std::size_t dm = m.config.d_model();
  const bool add = m.config.aggregation == Aggregation::Add;
  if (ex.history_len < 0 || static_cast<std::size_t>(ex.history_len) > feat::kMaxHistory) {
    throw std::invalid_argument("history length outside [0," +
                                std::to_string(feat::kMaxHistory) + "]");
  }
  const std::size_t length = static_cast<std::size_t>(ex.history_len);

  if (length == 0) {
    c.empty_history = true;
    c.summary = Tensor({1, dm});
    std::copy_n(m.no_history->value.data(), dm, c.summary.data());
  } else {
    c.x0 = Tensor({length, dm});
    for (std::size_t j = 0; j < length; ++j) {
      const feat::EncodedHistoryStep step = ex.history[j];
      const auto pos = static_cast<std::size_t>(step.catalog_pos);
      double* row = c.x0.data() + j * dm;
      const std::int32_t item_id = cat.item_index(pos);
      add_mean_rows(m.item_emb->value, one_id(item_id), row);
      add_mean_rows(m.title_emb->value, cat.title_ids(pos), row + (add ? 0 : d));
      add_mean_rows(m.attr_emb->value, cat.attribute_ids(pos), row + (add ? 0 : 2 * d));
      add_mean_rows(m.rating_emb->value, one_id(step.rating_bucket),
                    row + (add ? 0 : 3 * d));
      // Recency-anchored positions: the most recent step reads row 0.
      const double* pe = m.pos_emb->value.data() + (length - 1 - j) * dm;
      for (std::size_t col = 0; col < dm; ++col) row[col] += pe[col];
    }

    Tensor h = c.x0;
    const std::vector<std::uint8_t> valid(length, 1);
    c.blocks.resize(m.blocks.size());
    for (std::size_t l = 0; l < m.blocks.size(); ++l) {
      const BlockParams& blk = m.blocks[l];
      BlockCache& bc = c.blocks[l];
      Tensor ln1_out =
          layer_norm_forward(h, blk.ln1_g->value, blk.ln1_b->value, bc.ln1);
      Tensor attn_out = attention_forward(ln1_out, valid, blk.attention_weights(),
                                          m.config.heads, bc.attn);
      if (dropout > 0.0 && rng) {
        kernel::dropout_forward_inplace(attn_out, dropout, *rng, bc.attn_mask);
      }
      for (std::size_t k = 0; k < h.size(); ++k) h[k] += attn_out[k];
      bc.ln2_out = layer_norm_forward(h, blk.ln2_g->value, blk.ln2_b->value, bc.ln2);
      bc.ffn_pre = dense_forward(bc.ln2_out, blk.ffn1.w->value, blk.ffn1.b->value);
      bc.ffn_relu = relu_forward(bc.ffn_pre);
      Tensor ffn_out = dense_forward(bc.ffn_relu, blk.ffn2.w->value, blk.ffn2.b->value);
      if (dropout > 0.0 && rng) {
        kernel::dropout_forward_inplace(ffn_out, dropout, *rng, bc.ffn_mask);
      }
      for (std::size_t k = 0; k < h.size(); ++k) h[k] += ffn_out[k];
    }

    // User summary: the most recent position, through the final norm.
    Tensor last({1, dm});
    std::copy_n(h.data() + (length - 1) * dm, dm, last.data());
    c.summary = layer_norm_forward(last, m.ln_f_g->value, m.ln_f_b->value, c.ln_f);
  }

  Tensor z({1, dm + 3 * d});
  std::copy_n(c.summary.data(), dm, z.data());
  const auto cand = static_cast<std::size_t>(ex.candidate_pos);
  const std::int32_t cand_item = cat.item_index(cand);
  add_mean_rows(m.item_emb->value, one_id(cand_item), z.data() + dm);
  add_mean_rows(m.title_emb->value, cat.title_ids(cand), z.data() + dm + d);
  add_mean_rows(m.attr_emb->value, cat.attribute_ids(cand), z.data() + dm + 2 * d);
  return z;
}

void tmlp_backward(SupervisedModel& m, const EncodedCatalog& cat,
                   const EncodedExample& ex, TfCache& c, const Tensor& grad_z) {
  const std::size_t d = m.config.embedding_dim;
  const std::size_t dm = m.config.d_model();
  const bool add = m.config.aggregation == Aggregation::Add;

  const auto cand = static_cast<std::size_t>(ex.candidate_pos);
  const std::int32_t cand_item = cat.item_index(cand);
  add_mean_rows_grad(m.item_emb->grad, one_id(cand_item), grad_z.data() + dm);
  add_mean_rows_grad(m.title_emb->grad, cat.title_ids(cand), grad_z.data() + dm + d);
  add_mean_rows_grad(m.attr_emb->grad, cat.attribute_ids(cand),
                     grad_z.data() + dm + 2 * d);

  Tensor grad_summary({1, dm});
  std::copy_n(grad_z.data(), dm, grad_summary.data());

  if (c.empty_history) {
    for (std::size_t col = 0; col < dm; ++col) {
      m.no_history->grad[col] += grad_summary[col];
    }
    return;
  }

  const std::size_t length = c.x0.dim(0);
  Tensor grad_last({1, dm});
  layer_norm_backward(c.ln_f, m.ln_f_g->value, grad_summary, grad_last, m.ln_f_g->grad,
                      m.ln_f_b->grad);
  Tensor grad_h({length, dm});
  std::copy_n(grad_last.data(), dm, grad_h.data() + (length - 1) * dm);

  for (std::size_t l = m.blocks.size(); l-- > 0;) {
    const BlockParams& blk = m.blocks[l];
    BlockCache& bc = c.blocks[l];

    Tensor grad_ffn_out = grad_h;
    if (!bc.ffn_mask.empty()) {
      kernel::dropout_backward_inplace(bc.ffn_mask, grad_ffn_out);
    }
    Tensor grad_relu({length, dm});
    dense_backward(bc.ffn_relu, blk.ffn2.w->value, grad_ffn_out, &grad_relu,
                   blk.ffn2.w->grad, blk.ffn2.b->grad);
    Tensor grad_pre({length, dm});
    kernel::relu_backward(bc.ffn_pre, grad_relu, grad_pre);
    Tensor grad_ln2_out({length, dm});
    dense_backward(bc.ln2_out, blk.ffn1.w->value, grad_pre, &grad_ln2_out,
                   blk.ffn1.w->grad, blk.ffn1.b->grad);
    // The residual gradient is already in grad_h; the norm branch accumulates.
    layer_norm_backward(bc.ln2, blk.ln2_g->value, grad_ln2_out, grad_h, blk.ln2_g->grad,
                        blk.ln2_b->grad);

    Tensor grad_attn_out = grad_h;
    if (!bc.attn_mask.empty()) {
      kernel::dropout_backward_inplace(bc.attn_mask, grad_attn_out);
    }
    Tensor grad_ln1_out({length, dm});
    attention_backward(bc.attn, blk.attention_weights(), grad_attn_out,
                       blk.attention_grads(), grad_ln1_out);
    layer_norm_backward(bc.ln1, blk.ln1_g->value, grad_ln1_out, grad_h, blk.ln1_g->grad,
                        blk.ln1_b->grad);
  }

  for (std::size_t j = 0; j < length; ++j) {
    const feat::EncodedHistoryStep step = ex.history[j];
    const auto pos = static_cast<std::size_t>(step.catalog_pos);
    const double* grow = grad_h.data() + j * dm;
    const std::int32_t item_id = cat.item_index(pos);
    add_mean_rows_grad(m.item_emb->grad, one_id(item_id), grow);
    add_mean_rows_grad(m.title_emb->grad, cat.title_ids(pos), grow + (add ? 0 : d));
    add_mean_rows_grad(m.attr_emb->grad, cat.attribute_ids(pos), grow + (add ? 0 : 2 * d));
    add_mean_rows_grad(m.rating_emb->grad, one_id(step.rating_bucket),
                       grow + (add ? 0 : 3 * d));
    double* gpe = m.pos_emb->grad.data() + (length - 1 - j) * dm;
    for (std::size_t col = 0; col < dm; ++col) gpe[col] += grow[col];
  }
}

// ---------------------------------------------------------------------------
// Dispatch.

Tensor forward_cached(const SupervisedModel& m, const EncodedCatalog& cat,
                      const EncodedExample& ex, ForwardCache& fc, double dropout,
                      Rng* rng) {
  switch (m.config.kind) {
    case ModelKind::MF: {
      Tensor raw({1});
      raw[0] = mf_score(m, static_cast<std::size_t>(ex.user_index),
                        static_cast<std::size_t>(cat.item_index(
                            static_cast<std::size_t>(ex.candidate_pos))));
      return raw;
    }
    case ModelKind::MLP: {
      const std::size_t d = m.config.embedding_dim;
      Tensor z({1, 2 * d});
      add_mean_rows(m.user_emb->value, one_id(ex.user_index), z.data());
      const std::int32_t item =
          cat.item_index(static_cast<std::size_t>(ex.candidate_pos));
      add_mean_rows(m.item_emb->value, one_id(item), z.data() + d);
      return head_forward(m, std::move(z), fc.head, dropout, rng);
    }
    case ModelKind::TransformerMLP: {
      Tensor z = tmlp_encode(m, cat, ex, fc.tf, dropout, rng);
      return head_forward(m, std::move(z), fc.head, dropout, rng);
    }
  }
  throw std::logic_error("unreachable model kind");
}

void backward_cached(SupervisedModel& m, const EncodedCatalog& cat,
                     const EncodedExample& ex, ForwardCache& fc, const Tensor& grad_raw) {
  switch (m.config.kind) {
    case ModelKind::MF:
      mf_backward(m, static_cast<std::size_t>(ex.user_index),
                  static_cast<std::size_t>(
                      cat.item_index(static_cast<std::size_t>(ex.candidate_pos))),
                  grad_raw[0]);
      return;
    case ModelKind::MLP: {
      const std::size_t d = m.config.embedding_dim;
      Tensor grad_z = head_backward(m, fc.head, grad_raw);
      add_mean_rows_grad(m.user_emb->grad, one_id(ex.user_index), grad_z.data());
      const std::int32_t item =
          cat.item_index(static_cast<std::size_t>(ex.candidate_pos));
      add_mean_rows_grad(m.item_emb->grad, one_id(item), grad_z.data() + d);
      return;
    }
    case ModelKind::TransformerMLP: {
      Tensor grad_z = head_backward(m, fc.head, grad_raw);
      tmlp_backward(m, cat, ex, fc.tf, grad_z);
      return;
    }
  }
  throw std::logic_error("unreachable model kind");
}

}  // namespace

Tensor forward(const SupervisedModel& model, const EncodedCatalog& catalog,
               const EncodedExample& example) {
  ForwardCache fc;
  return forward_cached(model, catalog, example, fc, 0.0, nullptr);
}

double head_decode(HeadKind head, const Tensor& raw) {
  if (head == HeadKind::Regression) {
    if (raw.size() != 1) {
      throw std::invalid_argument("regression head expects one output, got " +
                                  raw.shape_str());
    }
    return std::clamp(raw[0], 1.0, 5.0);
  }
  if (raw.size() != 5) {
    throw std::invalid_argument("classification head expects 5 logits, got " +
                                raw.shape_str());
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < 5; ++j) {
    if (raw[j] > raw[best]) best = j;
  }
  return static_cast<double>(best + 1);
}

double predict(const SupervisedModel& model, const EncodedCatalog& catalog,
               const EncodedExample& example) {
  return head_decode(model.config.head, forward(model, catalog, example));
}

double accumulate_example(SupervisedModel& model, const EncodedCatalog& catalog,
                          const EncodedExample& example, double grad_scale,
                          Rng* dropout_rng) {
  ForwardCache fc;
  Tensor raw =
      forward_cached(model, catalog, example, fc, model.config.dropout, dropout_rng);
  double loss = 0.0;
  Tensor grad_raw;
  if (model.config.head == HeadKind::Regression) {
    const double diff = raw[0] - static_cast<double>(example.label);
    loss = diff * diff;
    grad_raw = Tensor(raw.shape());
    grad_raw[0] = 2.0 * diff * grad_scale;
  } else {
    const int target = feat::rating_bucket(static_cast<double>(example.label));
    loss = kernel::cross_entropy_5way(raw, target, grad_raw);
    for (double& g : grad_raw.values()) g *= grad_scale;
  }
  backward_cached(model, catalog, example, fc, grad_raw);
  return loss;
}

metrics::MetricsReport evaluate(const SupervisedModel& model,
                                const EncodedCatalog& catalog,
                                const std::vector<EncodedExample>& examples,
                                std::size_t n_threads) {
  const std::size_t n = examples.size();
  n_threads = std::clamp<std::size_t>(n_threads, 1, std::max<std::size_t>(n, 1));

  std::vector<metrics::MetricsAccumulator> shards(n_threads);
  auto run_shard = [&](std::size_t t) {
    const std::size_t lo = n * t / n_threads;
    const std::size_t hi = n * (t + 1) / n_threads;
    for (std::size_t i = lo; i < hi; ++i) {
      shards[t].add(predict(model, catalog, examples[i]),
                    static_cast<double>(examples[i].label));
    }
  };
  if (n_threads == 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(run_shard, t);
    for (std::thread& th : pool) th.join();
  }

  metrics::MetricsAccumulator merged = std::move(shards[0]);
  for (std::size_t t = 1; t < n_threads; ++t) merged.merge(shards[t]);
  return merged.finalize();
}

}  // namespace ratebench::models
