#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>
#include <string_view>
#include <thread>

#include "ratebench/models/supervised.hpp"

namespace ratebench::models {

namespace {

using kernel::Rng;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Weight matrices, embedding tables, and the MF bias vectors carry the L2
// penalty; norms, dense biases, and scalar offsets do not.
bool wants_decay(const std::string& name) {
  const auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with("w") || ends_with("_emb") || ends_with("_bias");
}

std::vector<metrics::EvalPair> collect_pairs(
    const SupervisedModel& model, const feat::EncodedCatalog& catalog,
    const std::vector<feat::EncodedExample>& examples, std::size_t n_threads) {
  const std::size_t n = examples.size();
  std::vector<metrics::EvalPair> pairs(n);
  n_threads = std::clamp<std::size_t>(n_threads, 1, std::max<std::size_t>(n, 1));
  auto run_shard = [&](std::size_t t) {
    const std::size_t lo = n * t / n_threads;
    const std::size_t hi = n * (t + 1) / n_threads;
    for (std::size_t i = lo; i < hi; ++i) {
      pairs[i] = {predict(model, catalog, examples[i]),
                  static_cast<double>(examples[i].label)};
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
  return pairs;
}

}  // namespace

std::string TrainCurve::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const TrainPoint& p : points) {
    pts.push_back({{"step", p.step},
                   {"train_loss", p.train_loss},
                   {"eval_rmse", p.eval_rmse},
                   {"eval_auc", p.eval_auc}});
  }
  return nlohmann::json{{"points", std::move(pts)}}.dump(2);
}

std::string TrainCurve::csv_header() { return "step,train_loss,eval_rmse,eval_auc"; }

std::string TrainCurve::csv_rows() const {
  std::ostringstream out;
  out.precision(10);
  for (const TrainPoint& p : points) {
    out << p.step << ',' << p.train_loss << ',' << p.eval_rmse << ',' << p.eval_auc
        << '\n';
  }
  return out.str();
}

TrainCurve train(SupervisedModel& model, const feat::EncodedCatalog& catalog,
                 const std::vector<feat::EncodedExample>& train_examples,
                 const TrainConfig& config,
                 const std::vector<feat::EncodedExample>* eval_examples) {
  if (train_examples.empty()) {
    throw std::invalid_argument("train: empty training set");
  }
  if (config.batch_size == 0 || config.steps == 0) {
    throw std::invalid_argument("train: batch_size and steps must be positive");
  }
  if (config.data_fraction <= 0.0 || config.data_fraction > 1.0) {
    throw std::invalid_argument("train: data_fraction outside (0,1]");
  }
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("train: learning_rate must be positive");
  }

  std::vector<std::uint32_t> perm(train_examples.size());
  std::iota(perm.begin(), perm.end(), 0u);
  if (config.data_fraction < 1.0) {
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(config.data_fraction *
                                    static_cast<double>(perm.size())));
    Rng subsample_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    subsample_rng.shuffle(perm);
    perm.resize(keep);
    std::sort(perm.begin(), perm.end());
  }

  Rng order_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  Rng* dropout = model.config.dropout > 0.0 ? &dropout_rng : nullptr;
  const kernel::AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8, model.config.l2};

  TrainCurve curve;
  std::size_t cursor = perm.size();  // forces a shuffle before the first batch
  double loss_sum = 0.0;
  std::size_t loss_batches = 0;
  const double scale = 1.0 / static_cast<double>(config.batch_size);

  for (std::size_t step = 1; step <= config.steps; ++step) {
    model.params.zero_grads();
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == perm.size()) {
        order_rng.shuffle(perm);
        cursor = 0;
      }
      batch_loss += accumulate_example(model, catalog, train_examples[perm[cursor++]],
                                       scale, dropout);
    }
    batch_loss *= scale;
    if (!std::isfinite(batch_loss)) {
      throw TrainDivergence("training diverged: loss " + std::to_string(batch_loss) +
                                " at step " + std::to_string(step),
                            std::move(curve));
    }
    try {
      for (kernel::Parameter* p : model.params.all()) {
        kernel::adam_step(*p, adam, wants_decay(p->name));
      }
    } catch (const kernel::TrainingError& e) {
      throw TrainDivergence(std::string(e.what()) + " at step " + std::to_string(step),
                            std::move(curve));
    }
    loss_sum += batch_loss;
    ++loss_batches;

    const bool record =
        (config.eval_every > 0 && step % config.eval_every == 0) || step == config.steps;
    if (!record) continue;
    TrainPoint point;
    point.step = step;
    point.train_loss = loss_sum / static_cast<double>(loss_batches);
    point.eval_rmse = kNaN;
    point.eval_auc = kNaN;
    if (eval_examples && !eval_examples->empty()) {
      const auto pairs =
          collect_pairs(model, catalog, *eval_examples, config.eval_threads);
      point.eval_rmse = metrics::rmse(pairs);
      try {
        point.eval_auc = metrics::auc_roc(pairs);
      } catch (const metrics::UndefinedMetricError&) {
        // Single-class eval slice; the curve records the RMSE alone.
      }
    }
    curve.points.push_back(point);
    loss_sum = 0.0;
    loss_batches = 0;
  }
  return curve;
}

}  // namespace ratebench::models
