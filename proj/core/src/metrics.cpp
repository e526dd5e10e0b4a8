#include "ratebench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

namespace ratebench::metrics {

namespace {

void require_nonempty(std::span<const EvalPair> pairs, const char* what) {
  if (pairs.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty input");
  }
}

}  // namespace

double rmse(std::span<const EvalPair> pairs) {
  require_nonempty(pairs, "rmse");
  double sum_sq = 0.0;
  for (const EvalPair& p : pairs) {
    const double d = p.prediction - p.label;
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / static_cast<double>(pairs.size()));
}

double mae(std::span<const EvalPair> pairs) {
  require_nonempty(pairs, "mae");
  double sum_abs = 0.0;
  for (const EvalPair& p : pairs) {
    sum_abs += std::abs(p.prediction - p.label);
  }
  return sum_abs / static_cast<double>(pairs.size());
}

double auc_roc(std::span<const EvalPair> pairs, double positive_threshold) {
  require_nonempty(pairs, "auc_roc");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].prediction < pairs[b].prediction;
  });

  std::size_t n_pos = 0;
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           pairs[order[j]].prediction == pairs[order[i]].prediction) {
      ++j;
    }
    // 1-based ranks, ties share the group's average rank.
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pairs[order[k]].label >= positive_threshold) {
        ++n_pos;
        pos_rank_sum += avg_rank;
      }
    }
    i = j;
  }

  const std::size_t n_neg = pairs.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError(
        n_pos == 0 ? "auc_roc: no positives after thresholding"
                   : "auc_roc: no negatives after thresholding");
  }
  const double p = static_cast<double>(n_pos);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

void MetricsAccumulator::add(double prediction, double label) {
  pairs_.push_back({prediction, label});
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  pairs_.insert(pairs_.end(), other.pairs_.begin(), other.pairs_.end());
  n_parse_failures_ += other.n_parse_failures_;
  n_fallbacks_ += other.n_fallbacks_;
}

MetricsReport MetricsAccumulator::finalize(double positive_threshold) const {
  MetricsReport report;
  report.rmse = rmse(pairs_);
  report.mae = mae(pairs_);
  report.auc = auc_roc(pairs_, positive_threshold);
  report.n = pairs_.size();
  report.n_parse_failures = n_parse_failures_;
  report.n_fallbacks = n_fallbacks_;
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j{{"rmse", rmse},
                   {"mae", mae},
                   {"auc", auc},
                   {"n", n},
                   {"n_parse_failures", n_parse_failures},
                   {"n_fallbacks", n_fallbacks}};
  return j.dump();
}

std::string MetricsReport::csv_header() {
  return "rmse,mae,auc,n,n_parse_failures,n_fallbacks";
}

std::string MetricsReport::csv_row() const {
  nlohmann::json fields{rmse, mae, auc};
  std::string out;
  for (const auto& f : fields) {
    out += f.dump();
    out += ',';
  }
  out += std::to_string(n) + ',' + std::to_string(n_parse_failures) + ',' +
         std::to_string(n_fallbacks);
  return out;
}

}  // namespace ratebench::metrics
