#pragma once

#include <atomic>
#include <functional>
#include <stdexcept>
#include <string>

namespace ratebench::llm {

/// Endpoint settings for an OpenAI-compatible chat-completions service. The
/// auth token is read from the named environment variable at request time and
/// never appears in logs or error messages.
struct ClientConfig {
  std::string base_url;  // e.g. "https://api.example.com" or "http://127.0.0.1:8080"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string auth_env = "RATEBENCH_API_KEY";
  double temperature = 0.1;
  int max_tokens = 8;
  int timeout_seconds = 30;
  int max_retries = 3;  // retries after the first attempt
  int backoff_initial_ms = 250;
  double backoff_factor = 2.0;
};

/// A request failed for good: transport failure after all retries, a
/// non-retryable HTTP status, or an unparseable response body.
class ClientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;

  /// Returns the raw completion text for one prompt. Must be safe to call
  /// from several threads at once; evaluate_llm issues bounded concurrent
  /// requests. Throws ClientError when the request ultimately fails.
  virtual std::string complete(const std::string& prompt) = 0;
};

/// POSTs {model, messages, temperature, max_tokens} and returns
/// choices[0].message.content (or choices[0].text for legacy endpoints).
/// Retries 429/5xx/transport errors with exponential backoff.
class HttpCompletionClient final : public CompletionClient {
 public:
  explicit HttpCompletionClient(ClientConfig config);

  std::string complete(const std::string& prompt) override;
  const ClientConfig& config() const { return config_; }

 private:
  ClientConfig config_;
};

/// Returns one fixed response for every prompt; counts calls.
class MockCompletionClient final : public CompletionClient {
 public:
  explicit MockCompletionClient(std::string response) : response_(std::move(response)) {}

  std::string complete(const std::string&) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return response_;
  }
  int calls() const { return calls_.load(std::memory_order_relaxed); }

 private:
  std::string response_;
  std::atomic<int> calls_{0};
};

/// Delegates to a user callback, e.g. to echo labels back in tests. The
/// callback must itself be thread-safe when used with concurrency > 1.
class CallbackCompletionClient final : public CompletionClient {
 public:
  using Callback = std::function<std::string(const std::string& prompt)>;
  explicit CallbackCompletionClient(Callback callback) : callback_(std::move(callback)) {}

  std::string complete(const std::string& prompt) override { return callback_(prompt); }

 private:
  Callback callback_;
};

}  // namespace ratebench::llm
