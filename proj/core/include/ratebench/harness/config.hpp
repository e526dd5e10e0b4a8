#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "ratebench/features.hpp"
#include "ratebench/llm/client.hpp"
#include "ratebench/llm/evaluate.hpp"
#include "ratebench/models/supervised.hpp"

namespace ratebench::harness {

/// Reads a config file into a JSON tree. `.json` files are parsed as JSON;
/// everything else is treated as YAML (of which JSON is a subset anyway).
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Applies one `dotted.path=value` override. The value is parsed as JSON
/// when possible (numbers, booleans, arrays), otherwise kept as a string.
/// Intermediate objects are created as needed.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Where the prepared dataset lives and how test examples are drawn from it.
struct DatasetConfig {
  std::string prepared_dir;
  std::size_t max_history = feat::kMaxHistory;
  std::size_t test_sample = 2000;  // 0 scores the whole test split
  std::uint64_t test_seed = 17;
};

/// LLM evaluation settings. `client` selects the transport: "mock" answers
/// every prompt with `mock_response`; "http" talks to an OpenAI-style
/// endpoint described by `http` (auth token read from an env var).
struct LlmConfig {
  std::string client = "mock";
  std::string mock_response = "3";
  llm::ClientConfig http;
  std::size_t shots = 0;
  llm::FallbackPolicy fallback = llm::FallbackPolicy::GlobalMean;
  double global_mean = 0.0;  // <= 0: use the train split's global mean
  std::size_t concurrency = 4;
  bool transcript = true;  // write transcript.jsonl next to the report
};

/// One experiment, fully resolved: what data, what predictor, how to train.
/// Serializable both ways; every emitted report embeds the serialized form,
/// so any report can be re-run to identical metrics.
struct ExperimentConfig {
  DatasetConfig dataset;
  // "global" | "item" | "user" | "mf" | "mlp" | "transformer_mlp" | "llm"
  std::string model = "global";
  models::ModelConfig model_config;  // vocab sizes are filled in at run time
  models::TrainConfig train;
  LlmConfig llm;

  bool is_heuristic() const {
    return model == "global" || model == "item" || model == "user";
  }
  bool is_supervised() const {
    return model == "mf" || model == "mlp" || model == "transformer_mlp";
  }
  bool is_llm() const { return model == "llm"; }

  nlohmann::json to_json() const;
  /// Validates; unknown model names or broken field values throw
  /// std::invalid_argument before any work happens.
  static ExperimentConfig from_json(const nlohmann::json& config);
};

}  // namespace ratebench::harness
