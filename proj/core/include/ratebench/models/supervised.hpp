#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ratebench/features.hpp"
#include "ratebench/kernel/adam.hpp"
#include "ratebench/kernel/attention.hpp"
#include "ratebench/kernel/rng.hpp"
#include "ratebench/metrics.hpp"

namespace ratebench::models {

enum class ModelKind { MF, MLP, TransformerMLP };
enum class HeadKind { Regression, Classification };
enum class Aggregation { Add, Concat };

std::string to_string(ModelKind kind);
std::string to_string(HeadKind head);
std::string to_string(Aggregation agg);
ModelKind model_kind_from_string(const std::string& name);
HeadKind head_kind_from_string(const std::string& name);
Aggregation aggregation_from_string(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::MF;
  HeadKind head = HeadKind::Regression;
  std::size_t embedding_dim = 64;
  std::vector<std::size_t> hidden = {128, 64};  // head MLP hidden widths
  std::size_t layers = 2;                       // transformer blocks
  std::size_t heads = 2;                        // attention heads
  Aggregation aggregation = Aggregation::Add;
  double dropout = 0.0;
  double l2 = 0.0;        // coupled L2 weight penalty
  double init_mean = 3.0; // initial offset for regression outputs

  // Embedding table sizes; row 0 of each table is the unknown id.
  std::size_t n_users = 1;
  std::size_t n_items = 1;
  std::size_t n_title_tokens = 1;
  std::size_t n_attributes = 1;

  /// Per-step sequence width: embedding_dim for Add, 4x for Concat.
  std::size_t d_model() const;
  std::size_t head_width() const { return head == HeadKind::Regression ? 1 : 5; }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// One trainable projection, a view into the parameter store.
struct DenseParam {
  kernel::Parameter* w = nullptr;
  kernel::Parameter* b = nullptr;
};

/// One pre-norm transformer block: h += attn(ln1(h)); h += ffn(ln2(h)).
struct BlockParams {
  kernel::Parameter* ln1_g = nullptr;
  kernel::Parameter* ln1_b = nullptr;
  kernel::Parameter* wq = nullptr;
  kernel::Parameter* bq = nullptr;
  kernel::Parameter* wk = nullptr;
  kernel::Parameter* bk = nullptr;
  kernel::Parameter* wv = nullptr;
  kernel::Parameter* bv = nullptr;
  kernel::Parameter* wo = nullptr;
  kernel::Parameter* bo = nullptr;
  kernel::Parameter* ln2_g = nullptr;
  kernel::Parameter* ln2_b = nullptr;
  DenseParam ffn1, ffn2;

  kernel::AttentionWeights attention_weights() const;
  kernel::AttentionGrads attention_grads() const;
};

/// A differentiable rating predictor: biased MF, embedding MLP, or the
/// Transformer-MLP over the user's rating history, each under a regression
/// (width 1) or 5-way classification head. Parameters live in `params`; the
/// named pointers below are stable views for the forward/backward passes.
struct SupervisedModel {
  /// Initializes all parameters deterministically from init_seed.
  /// MF accepts only the regression head (throws std::invalid_argument).
  explicit SupervisedModel(ModelConfig model_config, std::uint64_t init_seed = 1);

  SupervisedModel(const SupervisedModel&) = delete;
  SupervisedModel& operator=(const SupervisedModel&) = delete;
  // Moves keep the parameter views valid: the store owns its parameters on
  // the heap, so their addresses survive the move.
  SupervisedModel(SupervisedModel&&) = default;
  SupervisedModel& operator=(SupervisedModel&&) = default;

  ModelConfig config;
  kernel::ParameterStore params;

  // MF
  kernel::Parameter* mu = nullptr;
  kernel::Parameter* user_bias = nullptr;
  kernel::Parameter* item_bias = nullptr;

  // Shared embedding tables (MF factors reuse user_emb/item_emb).
  kernel::Parameter* user_emb = nullptr;
  kernel::Parameter* item_emb = nullptr;
  kernel::Parameter* title_emb = nullptr;
  kernel::Parameter* attr_emb = nullptr;
  kernel::Parameter* rating_emb = nullptr;
  kernel::Parameter* pos_emb = nullptr;    // recency-indexed: row 0 = most recent
  kernel::Parameter* no_history = nullptr; // user summary for an empty history

  std::vector<BlockParams> blocks;
  kernel::Parameter* ln_f_g = nullptr; // final norm on the user summary
  kernel::Parameter* ln_f_b = nullptr;

  std::vector<DenseParam> head_mlp; // hidden layers then the output projection
};

/// Raw head input: width-1 score (unclamped) or 5 logits.
kernel::Tensor forward(const SupervisedModel& model, const feat::EncodedCatalog& catalog,
                       const feat::EncodedExample& example);

/// Regression: scalar clamped to [1,5]. Classification: argmax class + 1.
/// Throws std::invalid_argument if the raw width does not match the head.
double head_decode(HeadKind head, const kernel::Tensor& raw);

/// Decoded prediction, always in [1,5].
double predict(const SupervisedModel& model, const feat::EncodedCatalog& catalog,
               const feat::EncodedExample& example);

/// Forward + loss + backward for one example. Parameter gradients are
/// accumulated, scaled by grad_scale (1/batch for a mean batch loss); the
/// returned value is the example's unscaled loss (squared error or cross
/// entropy). dropout_rng enables dropout; pass nullptr for eval-mode math.
double accumulate_example(SupervisedModel& model, const feat::EncodedCatalog& catalog,
                          const feat::EncodedExample& example, double grad_scale,
                          kernel::Rng* dropout_rng);

/// RMSE/MAE/AUC of decoded predictions over `examples`, optionally sharded
/// across threads (results are independent of n_threads).
metrics::MetricsReport evaluate(const SupervisedModel& model,
                                const feat::EncodedCatalog& catalog,
                                const std::vector<feat::EncodedExample>& examples,
                                std::size_t n_threads = 1);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t steps = 3000;
  std::uint64_t seed = 1;
  std::size_t eval_every = 0;  // 0: record only the final point
  double data_fraction = 1.0;  // seeded subsample of the training examples
  std::size_t eval_threads = 1;
};

struct TrainPoint {
  std::size_t step = 0;      // 1-based optimizer step
  double train_loss = 0.0;   // mean batch loss since the previous point
  double eval_rmse = 0.0;    // NaN when no eval set was supplied
  double eval_auc = 0.0;     // NaN when no eval set or AUC undefined
};

struct TrainCurve {
  std::vector<TrainPoint> points;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_rows() const;
};

/// Training hit a non-finite loss or gradient. Carries the curve recorded up
/// to the failing step so error reports can show the last finite point.
class TrainDivergence : public kernel::TrainingError {
 public:
  TrainDivergence(const std::string& message, TrainCurve partial)
      : kernel::TrainingError(message), partial_(std::move(partial)) {}

  const TrainCurve& partial_curve() const { return partial_; }

 private:
  TrainCurve partial_;
};

/// Deterministic minibatch Adam on MSE (regression) or 5-way cross entropy
/// (classification). Identical model/config/data give a bitwise-identical
/// curve. Throws TrainDivergence on a non-finite loss or gradient.
TrainCurve train(SupervisedModel& model, const feat::EncodedCatalog& catalog,
                 const std::vector<feat::EncodedExample>& train_examples,
                 const TrainConfig& config,
                 const std::vector<feat::EncodedExample>* eval_examples = nullptr);

/// Writes `<prefix>.ckpt` (kernel checkpoint) and `<prefix>.json` (config
/// sidecar); load reconstructs the model from the pair.
void save_model(const SupervisedModel& model, const std::filesystem::path& prefix);
SupervisedModel load_model(const std::filesystem::path& prefix);

}  // namespace ratebench::models
