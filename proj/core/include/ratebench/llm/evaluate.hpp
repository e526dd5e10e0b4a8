#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratebench/dataset.hpp"
#include "ratebench/llm/client.hpp"
#include "ratebench/llm/prompt.hpp"
#include "ratebench/metrics.hpp"

namespace ratebench::llm {

/// What to score when a response yields no usable rating: drop the example,
/// or substitute the train-set global mean (default, so reports stay
/// size-comparable across models with different compliance rates).
enum class FallbackPolicy { Skip, GlobalMean };

std::string to_string(FallbackPolicy policy);
FallbackPolicy fallback_from_string(const std::string& name);

/// Maps a target example to its few-shot solved examples, oldest first.
using ShotProvider =
    std::function<std::vector<data::RatingExample>(const data::RatingExample&)>;

/// Shots are the target user's most recent train examples (at most `shots`);
/// users absent from train fall back to the globally most recent ones.
/// `train_examples` must be in chronological order.
ShotProvider make_recent_shot_provider(
    const std::vector<data::RatingExample>& train_examples, std::size_t shots);

struct LlmRunOptions {
  FallbackPolicy fallback = FallbackPolicy::GlobalMean;
  double global_mean = 3.0;          // substituted prediction under GlobalMean
  std::size_t concurrency = 4;       // bounded in-flight requests
  std::filesystem::path transcript_path;  // JSONL audit log; empty disables it
};

/// The endpoint kept failing after per-request retries. The transcript (when
/// configured) has already been written, including every completed response.
class LlmRunError : public std::runtime_error {
 public:
  LlmRunError(const std::string& message, std::size_t completed, std::size_t failed)
      : std::runtime_error(message), n_completed_(completed), n_failed_(failed) {}

  std::size_t n_completed() const { return n_completed_; }
  std::size_t n_failed() const { return n_failed_; }

 private:
  std::size_t n_completed_;
  std::size_t n_failed_;
};

/// One prompt per example; responses are parsed, failures counted and
/// resolved per the fallback policy, and metrics computed over the scored
/// pairs. Deterministic given a deterministic client: results are keyed by
/// example index, so concurrency never reorders them.
metrics::MetricsReport evaluate_llm(CompletionClient& client,
                                    const std::vector<data::RatingExample>& examples,
                                    const data::Catalog& catalog,
                                    const PromptTemplate& tmpl,
                                    const LlmRunOptions& options = {},
                                    const ShotProvider& shot_provider = {});

}  // namespace ratebench::llm
