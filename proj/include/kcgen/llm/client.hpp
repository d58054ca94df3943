// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "kcgen/llm/prompt.hpp"
#include "kcgen/llm/provider.hpp"
#include "kcgen/util/error.hpp"

namespace kcgen::llm {

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
};

struct ClientConfig {
  std::string model_id = "gpt-4o";
  Sampling sampling;
  std::optional<std::int64_t> seed;
  std::optional<std::filesystem::path> cache_dir;
  RetryPolicy retry;
  /// Requests per second allowed to reach the provider; 0 disables limiting.
  double rate_limit_per_second = 0;
  int rate_limit_burst = 1;
};

/// Token bucket; acquire() blocks until a token is available.
class RateLimiter {
 public:
  RateLimiter(double per_second, int burst);
  void acquire();

 private:
  std::mutex mu_;
  double per_second_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct CachedExchange {
  std::string cache_key;
  std::string template_id;
  std::string provider_model_id;
  std::string response;
  std::string created_at;
};

/// Digest of template id, both messages, model id, sampling and seed.
std::string cache_key(const ChatRequest& request);

inline constexpr const char* kJsonReminder = "Follow the JSON template exactly.";

/// Provider front end: fills model/sampling defaults, serves repeats from a
/// content-addressed cache, retries transient failures with exponential
/// backoff, and rate-limits provider calls. Safe for concurrent callers.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<Provider> provider, ClientConfig config);

  std::string complete(ChatRequest request);

  /// Completes and parses; on StructuredOutputError re-prompts once with a
  /// reminder appended to the user message, then rethrows.
  template <class Parser>
  auto complete_structured(ChatRequest request, Parser&& parse) -> decltype(parse(std::string())) {
    const std::string first = complete(request);
    try {
      return parse(first);
    } catch (const StructuredOutputError&) {
      note_reprompt();
      request.user_message += "\n\n";
      request.user_message += kJsonReminder;
      return parse(complete(std::move(request)));
    }
  }

  std::size_t provider_calls() const;
  std::size_t cache_hits() const;
  std::size_t reprompts() const;
  const ClientConfig& config() const { return config_; }
  Provider& provider() { return *provider_; }

  std::optional<CachedExchange> lookup(const std::string& key) const;

 private:
  void note_reprompt();
  void store(const CachedExchange& e);

  std::shared_ptr<Provider> provider_;
  ClientConfig config_;
  RateLimiter limiter_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> memory_;
  std::size_t provider_calls_ = 0;
  std::size_t cache_hits_ = 0;
  std::size_t reprompts_ = 0;
};

}  // namespace kcgen::llm
