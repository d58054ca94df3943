// SPDX-License-Identifier: Apache-2.0
#include "kcgen/llm/client.hpp"

#include <ctime>
#include <nlohmann/json.hpp>
#include <thread>

#include "kcgen/util/digest.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"

namespace kcgen::llm {

RateLimiter::RateLimiter(double per_second, int burst)
    : per_second_(per_second),
      capacity_(std::max(1, burst)),
      tokens_(std::max(1, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (per_second_ <= 0) return;
  std::unique_lock lock(mu_);
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * per_second_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait = (1.0 - tokens_) / per_second_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    lock.lock();
  }
}

std::string cache_key(const ChatRequest& r) {
  nlohmann::json j = {
      {"template_id", r.template_id},
      {"system", r.system_message},
      {"user", r.user_message},
      {"model", r.provider_model_id},
      {"temperature", r.sampling.temperature},
      {"top_p", r.sampling.top_p},
      {"max_tokens", r.sampling.max_tokens},
      {"seed", r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr)},
  };
  return sha256_hex(j.dump());
}

LlmClient::LlmClient(std::shared_ptr<Provider> provider, ClientConfig config)
    : provider_(std::move(provider)),
      config_(std::move(config)),
      limiter_(config_.rate_limit_per_second, config_.rate_limit_burst) {
  if (!provider_) throw PrerequisiteError("LLM client requires a provider");
  if (config_.retry.max_attempts < 1) throw DomainError("retry policy needs at least one attempt");
  if (config_.cache_dir) std::filesystem::create_directories(*config_.cache_dir);
}

namespace {

std::filesystem::path entry_path(const std::filesystem::path& dir, const std::string& key) {
  return dir / key.substr(0, 2) / (key + ".json");
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<CachedExchange> LlmClient::lookup(const std::string& key) const {
  if (!config_.cache_dir) return std::nullopt;
  const auto path = entry_path(*config_.cache_dir, key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.contains("response") || j.value("cache_key", "") != key) {
    log().warn("ignoring corrupt cache entry {}", path.string());
    return std::nullopt;
  }
  return CachedExchange{key, j.value("template_id", ""), j.value("provider_model_id", ""),
                        j.at("response").get<std::string>(), j.value("created_at", "")};
}

void LlmClient::store(const CachedExchange& e) {
  if (!config_.cache_dir) return;
  nlohmann::json j = {{"cache_key", e.cache_key},
                      {"template_id", e.template_id},
                      {"provider_model_id", e.provider_model_id},
                      {"response", e.response},
                      {"created_at", e.created_at}};
  atomic_write(entry_path(*config_.cache_dir, e.cache_key), j.dump(2) + "\n");
}

std::string LlmClient::complete(ChatRequest request) {
  if (request.provider_model_id.empty()) request.provider_model_id = config_.model_id;
  if (!request.seed) request.seed = config_.seed;
  request.validate();
  const std::string key = cache_key(request);
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      ++cache_hits_;
      return it->second;
    }
  }
  if (auto hit = lookup(key)) {
    std::lock_guard lock(mu_);
    ++cache_hits_;
    memory_.emplace(key, hit->response);
    return hit->response;
  }

  auto backoff = config_.retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    limiter_.acquire();
    try {
      {
        std::lock_guard lock(mu_);
        ++provider_calls_;
      }
      std::string response = provider_->complete(request);
      store({key, request.template_id, request.provider_model_id, response, utc_now()});
      std::lock_guard lock(mu_);
      memory_.emplace(key, response);
      return response;
    } catch (const TransportError& e) {
      if (attempt >= config_.retry.max_attempts || !is_retryable(e)) throw;
      log().warn("provider call failed ({}), retrying in {} ms", e.what(), backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, config_.retry.max_backoff);
    }
  }
}

void LlmClient::note_reprompt() {
  std::lock_guard lock(mu_);
  ++reprompts_;
}

std::size_t LlmClient::provider_calls() const {
  std::lock_guard lock(mu_);
  return provider_calls_;
}
std::size_t LlmClient::cache_hits() const {
  std::lock_guard lock(mu_);
  return cache_hits_;
}
std::size_t LlmClient::reprompts() const {
  std::lock_guard lock(mu_);
  return reprompts_;
}

}  // namespace kcgen::llm
