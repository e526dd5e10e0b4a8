#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ratebench::metrics {

struct EvalPair {
  double prediction;
  double label;
};

/// Raised when a metric is not defined for its input, e.g. AUC on a
/// single-class slice. Callers report the condition instead of emitting NaN.
class UndefinedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  double auc = 0.0;
  std::size_t n = 0;
  std::size_t n_parse_failures = 0;
  std::size_t n_fallbacks = 0;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

double rmse(std::span<const EvalPair> pairs);
double mae(std::span<const EvalPair> pairs);

/// Rank-based (Mann-Whitney) ROC-AUC with average ranks for tied
/// predictions. Labels >= positive_threshold count as positives.
/// Throws UndefinedMetricError unless both classes are present.
double auc_roc(std::span<const EvalPair> pairs, double positive_threshold = 4.0);

/// Collects prediction/label pairs; accumulators merge for sharded
/// evaluation and finalize into a full report.
class MetricsAccumulator {
 public:
  void add(double prediction, double label);
  void add_parse_failure() { ++n_parse_failures_; }
  void add_fallback() { ++n_fallbacks_; }
  void merge(const MetricsAccumulator& other);

  std::size_t size() const { return pairs_.size(); }
  const std::vector<EvalPair>& pairs() const { return pairs_; }
  MetricsReport finalize(double positive_threshold = 4.0) const;

 private:
  std::vector<EvalPair> pairs_;
  std::size_t n_parse_failures_ = 0;
  std::size_t n_fallbacks_ = 0;
};

}  // namespace ratebench::metrics
