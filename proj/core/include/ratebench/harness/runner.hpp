#pragma once

#include <filesystem>
#include <json.hpp>
#include <ostream>
#include <string>

#include "ratebench/harness/config.hpp"
#include "ratebench/harness/prepared.hpp"
#include "ratebench/llm/client.hpp"
#include "ratebench/metrics.hpp"
#include "ratebench/models/supervised.hpp"

namespace ratebench::harness {

struct RunOptions {
  bool save_model = false;  // write model.ckpt/model.json for supervised runs
  // Test-double injection: when set, LLM runs use this client instead of the
  // one the config describes. Owned by the caller.
  llm::CompletionClient* client_override = nullptr;
};

struct RunResult {
  bool ok = false;
  std::string error;
  metrics::MetricsReport metrics;
  models::TrainCurve curve;  // supervised runs only
  nlohmann::json report;     // exactly what went into report.json
};

/// Runs one experiment against a prepared dataset and writes `report.json`
/// (config embedded), `metrics.csv`, and for supervised models `curve.csv`.
/// Training divergence and LLM endpoint failure produce an error report
/// (status "error", last finite curve point included when there is one) and
/// ok = false instead of a throw; config and argument mistakes still throw.
RunResult cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  std::ostream& log, const RunOptions& options = {});

/// cmd_run against an already-loaded dataset (used by the acceptance suite
/// to avoid re-reading the canonical files for every run).
RunResult cmd_run_on(const PreparedDataset& prepared, const ExperimentConfig& config,
                     const std::filesystem::path& out_dir, std::ostream& log,
                     const RunOptions& options = {});

}  // namespace ratebench::harness
