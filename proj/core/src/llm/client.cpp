#include "ratebench/llm/client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <thread>

#include <httplib.h>

namespace ratebench::llm {

namespace {

using json = nlohmann::json;

std::string extract_completion_text(const std::string& body) {
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::parse_error&) {
    throw ClientError("completion endpoint returned a non-JSON body");
  }
  const auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) {
    throw ClientError("completion response has no choices");
  }
  const json& first = choices->front();
  if (first.contains("message") && first["message"].contains("content")) {
    return first["message"]["content"].get<std::string>();
  }
  if (first.contains("text")) {
    return first["text"].get<std::string>();
  }
  throw ClientError("completion choice has neither message.content nor text");
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpCompletionClient::HttpCompletionClient(ClientConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw std::invalid_argument("completion client needs a base URL");
  }
  if (config_.temperature < 0.0) {
    throw std::invalid_argument("temperature must be non-negative");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (config_.base_url.rfind("https://", 0) == 0) {
    throw std::invalid_argument(
        "this build has no TLS support; use an http:// endpoint or rebuild "
        "with OpenSSL available");
  }
#endif
}

std::string HttpCompletionClient::complete(const std::string& prompt) {
  const json body{
      {"model", config_.model},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_tokens},
  };
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* token = std::getenv(config_.auth_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double ms = static_cast<double>(config_.backoff_initial_ms) *
                        std::pow(config_.backoff_factor, attempt - 1);
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<std::int64_t>(ms)));
    }
    // One client per call: httplib clients are not safe for concurrent
    // requests, and complete() must be.
    httplib::Client http(config_.base_url);
    http.set_connection_timeout(config_.timeout_seconds, 0);
    http.set_read_timeout(config_.timeout_seconds, 0);
    http.set_write_timeout(config_.timeout_seconds, 0);

    auto res = http.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (retryable_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ClientError("completion endpoint answered HTTP " +
                        std::to_string(res->status));
    }
    return extract_completion_text(res->body);
  }
  throw ClientError("completion request failed after " +
                    std::to_string(config_.max_retries + 1) +
                    " attempts; last error: " + last_error);
}

}  // namespace ratebench::llm
