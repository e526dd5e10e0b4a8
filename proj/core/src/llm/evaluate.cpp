#include "ratebench/llm/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <thread>
#include <unordered_map>

#include "ratebench/llm/parse.hpp"

namespace ratebench::llm {

namespace {

using json = nlohmann::json;

struct RequestSlot {
  std::string response;
  std::string error;  // non-empty when the client gave up
  bool failed = false;
};

}  // namespace

std::string to_string(FallbackPolicy policy) {
  return policy == FallbackPolicy::Skip ? "skip" : "global_mean";
}

FallbackPolicy fallback_from_string(const std::string& name) {
  if (name == "skip") return FallbackPolicy::Skip;
  if (name == "global_mean") return FallbackPolicy::GlobalMean;
  throw std::invalid_argument("unknown fallback policy: " + name);
}

ShotProvider make_recent_shot_provider(
    const std::vector<data::RatingExample>& train_examples, std::size_t shots) {
  auto by_user = std::make_shared<
      std::unordered_map<std::string, std::vector<data::RatingExample>>>();
  auto global = std::make_shared<std::vector<data::RatingExample>>();
  if (shots > 0) {
    for (const data::RatingExample& ex : train_examples) {
      auto& recent = (*by_user)[ex.user_id];
      recent.push_back(ex);
      if (recent.size() > shots) recent.erase(recent.begin());
    }
    const std::size_t start =
        train_examples.size() > shots ? train_examples.size() - shots : 0;
    global->assign(train_examples.begin() + static_cast<std::ptrdiff_t>(start),
                   train_examples.end());
  }
  return [by_user, global](const data::RatingExample& target) {
    const auto it = by_user->find(target.user_id);
    if (it != by_user->end() && !it->second.empty()) return it->second;
    return *global;
  };
}

metrics::MetricsReport evaluate_llm(CompletionClient& client,
                                    const std::vector<data::RatingExample>& examples,
                                    const data::Catalog& catalog,
                                    const PromptTemplate& tmpl,
                                    const LlmRunOptions& options,
                                    const ShotProvider& shot_provider) {
  if (examples.empty()) {
    throw std::invalid_argument("evaluate_llm: no examples");
  }
  const std::size_t n = examples.size();

  std::vector<std::string> prompts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<data::RatingExample> shots =
        shot_provider ? shot_provider(examples[i]) : std::vector<data::RatingExample>{};
    prompts[i] = build_prompt(examples[i], shots, catalog, tmpl);
  }

  std::vector<RequestSlot> slots(n);
  {
    const std::size_t workers =
        std::clamp<std::size_t>(options.concurrency, 1, n);
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          slots[i].response = client.complete(prompts[i]);
        } catch (const ClientError& err) {
          slots[i].failed = true;
          slots[i].error = err.what();
        }
      }
    };
    if (workers == 1) {
      drain();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
      for (std::thread& th : pool) th.join();
    }
  }

  metrics::MetricsAccumulator acc;
  std::size_t n_failed_requests = 0;
  std::ofstream transcript;
  if (!options.transcript_path.empty()) {
    transcript.open(options.transcript_path);
    if (!transcript) {
      throw std::runtime_error("cannot write transcript: " +
                               options.transcript_path.string());
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const data::RatingExample& ex = examples[i];
    const RequestSlot& slot = slots[i];
    json line{{"index", i},
              {"user_id", ex.user_id},
              {"item_id", ex.item_id},
              {"label", ex.label},
              {"prompt", prompts[i]}};
    if (slot.failed) {
      ++n_failed_requests;
      line["error"] = slot.error;
    } else {
      const ParsedRating parsed = parse_rating(slot.response);
      line["response"] = slot.response;
      line["failure"] = to_string(parsed.failure);
      if (parsed.ok()) {
        acc.add(parsed.value, ex.label);
        line["prediction"] = parsed.value;
      } else {
        acc.add_parse_failure();
        if (options.fallback == FallbackPolicy::GlobalMean) {
          acc.add(options.global_mean, ex.label);
          acc.add_fallback();
          line["prediction"] = options.global_mean;
        } else {
          line["prediction"] = nullptr;
        }
      }
    }
    if (transcript.is_open()) transcript << line.dump() << '\n';
  }
  if (transcript.is_open()) transcript.flush();

  if (n_failed_requests > 0) {
    throw LlmRunError("completion endpoint failed for " +
                          std::to_string(n_failed_requests) + " of " +
                          std::to_string(n) + " examples",
                      n - n_failed_requests, n_failed_requests);
  }
  if (acc.size() == 0) {
    throw metrics::UndefinedMetricError(
        "every response failed to parse and fallback=skip dropped them all");
  }
  return acc.finalize();
}

}  // namespace ratebench::llm
