#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "ratebench/harness/config.hpp"
#include "ratebench/harness/prepared.hpp"
#include "ratebench/kernel/rng.hpp"
#include "ratebench/metrics.hpp"
#include "ratebench/models/supervised.hpp"

namespace ratebench::harness {

/// Hyperparameter ranges for uniform random search. Choice lists must be
/// non-empty; scalar ranges are inclusive, learning rate and L2 are sampled
/// log-uniformly. Fields irrelevant to a model kind are ignored when
/// sampling, so one space can serve MF, MLP and the Transformer-MLP.
struct SearchSpace {
  std::vector<std::size_t> embedding_dim{16, 32, 64};
  std::vector<std::vector<std::size_t>> hidden{{64}, {128, 64}, {256, 128}};
  std::vector<std::size_t> layers{1, 2};
  std::vector<std::size_t> heads{1, 2, 4};
  std::vector<models::Aggregation> aggregation{models::Aggregation::Add,
                                               models::Aggregation::Concat};
  double learning_rate_lo = 3e-4;
  double learning_rate_hi = 1e-2;
  double dropout_lo = 0.0;
  double dropout_hi = 0.3;
  double l2_lo = 1e-8;
  double l2_hi = 1e-4;
  double l2_zero_prob = 0.25;  // chance of sampling exactly no weight decay
  std::vector<std::size_t> batch_size{64, 128};

  /// Narrower, CPU-friendly defaults per model kind.
  static SearchSpace defaults(models::ModelKind kind);

  nlohmann::json to_json() const;
  /// Reads present keys onto `base` (generic defaults for the one-argument
  /// form), so a config file can override any subset of, for example, the
  /// per-kind defaults.
  static SearchSpace from_json(const nlohmann::json& space, SearchSpace base);
  static SearchSpace from_json(const nlohmann::json& space);

  /// One uniformly sampled, always-valid configuration on top of `base`:
  /// model hyperparameters plus learning rate and batch size. Attention
  /// heads are drawn from the choices dividing the sampled width.
  ExperimentConfig sample(const ExperimentConfig& base, kernel::Rng& rng) const;
};

struct SearchOptions {
  std::size_t n_trials = 30;
  std::uint64_t seed = 7;
  std::size_t budget_steps = 2000;  // per-trial training budget
  std::size_t workers = 1;          // parallel trial slots
};

struct TrialRecord {
  std::size_t index = 0;
  nlohmann::json config;  // the sampled experiment config
  bool ok = false;
  std::string error;
  double val_rmse = 0.0;
  double val_auc = 0.0;
  double train_loss = 0.0;
};

struct SearchOutcome {
  std::vector<TrialRecord> trials;
  std::size_t best_index = 0;
  /// Base config with the winning hyperparameters and the base step budget
  /// restored — ready to pass to cmd_run.
  ExperimentConfig best_config;
  nlohmann::json report;
};

/// Seeded uniform random search. Trials train on the first 95% of the train
/// split and are ranked by RMSE on the last 5% (by time); the final test
/// split is never touched. Writes `search_report.json`, `trials.csv` and
/// `best_config.json`. Deterministic per seed, whatever `workers` is.
SearchOutcome cmd_search(const ExperimentConfig& base, const SearchSpace& space,
                         const SearchOptions& options,
                         const std::filesystem::path& out_dir, std::ostream& log);

struct CurvePoint {
  double fraction = 0.0;
  std::size_t n_train = 0;
  bool ok = false;
  std::string error;
  metrics::MetricsReport metrics;
};

/// Data-efficiency curve: one model per fraction, each trained on the
/// chronologically earliest `fraction` of the train examples and scored on
/// the same sampled test set. Fractions must be in (0, 1] and ascending.
/// Works for supervised models and heuristics (fit on the same prefix).
/// Writes `curve_report.json` and `curve.csv`.
std::vector<CurvePoint> cmd_curve(const ExperimentConfig& config,
                                  const std::vector<double>& fractions,
                                  std::size_t workers,
                                  const std::filesystem::path& out_dir,
                                  std::ostream& log);

}  // namespace ratebench::harness
