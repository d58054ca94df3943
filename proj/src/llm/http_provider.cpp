// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <nlohmann/json.hpp>

#include "kcgen/llm/provider.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/http.hpp"

namespace kcgen::llm {

namespace {

class RetryableTransportError : public TransportError {
 public:
  using TransportError::TransportError;
};

}  // namespace

bool is_retryable(const std::exception& e) {
  if (dynamic_cast<const RetryableTransportError*>(&e)) return true;
  // Connection failures and timeouts carry no HTTP status.
  const auto* t = dynamic_cast<const TransportError*>(&e);
  return t != nullptr && std::string(t->what()).rfind("no response", 0) == 0;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw PrerequisiteError("environment variable " + config_.api_key_env + " is not set");
  }
  api_key_ = key;
}

std::string HttpProvider::complete(const ChatRequest& request) {
  nlohmann::json body = {
      {"model", request.provider_model_id},
      {"messages",
       {{{"role", "system"}, {"content", request.system_message}}, {{"role", "user"}, {"content", request.user_message}}}},
      {"temperature", request.sampling.temperature},
      {"top_p", request.sampling.top_p},
      {"max_tokens", request.sampling.max_tokens},
  };
  if (request.seed) body["seed"] = *request.seed;
  std::string url = config_.base_url;
  if (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";

  const auto resp = net::post_json(url, {{"Authorization", "Bearer " + api_key_}}, body.dump(), config_.timeout_seconds);
  if (resp.status == 429 || resp.status >= 500) {
    throw RetryableTransportError("provider returned HTTP " + std::to_string(resp.status));
  }
  if (resp.status != 200) {
    throw TransportError("provider returned HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 300));
  }
  auto j = nlohmann::json::parse(resp.body, nullptr, false);
  if (j.is_discarded()) throw TransportError("provider returned a malformed body");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("provider response has no choices[0].message.content");
  }
}

}  // namespace kcgen::llm
