// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include "kcgen/llm/prompt.hpp"

namespace kcgen::llm {

class Provider {
 public:
  virtual ~Provider() = default;
  /// Returns the assistant message text. Throws TransportError on failure.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct MockConfig {
  std::uint64_t seed = 7;
  /// Probability of returning a schema-violating body (exercises re-prompting).
  double malformed_rate = 0.0;
  /// Probability of swapping a KC name for one of its paraphrases.
  double paraphrase_rate = 0.6;
  std::size_t max_kcs = 8;
};

/// Offline provider. Recognizes a few fixed fixtures and otherwise answers
/// from construct-matching rules over the code in the prompt. Responses are a
/// pure function of (seed, request text).
class MockProvider final : public Provider {
 public:
  explicit MockProvider(MockConfig config = {});
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }
  std::size_t calls() const { return calls_.load(); }

 private:
  MockConfig config_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
};

/// OpenAI-compatible /chat/completions client.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  HttpProviderConfig config_;
  std::string api_key_;
};

/// Error signalling a retryable condition (rate limit, 5xx, timeout).
bool is_retryable(const std::exception& e);

}  // namespace kcgen::llm
