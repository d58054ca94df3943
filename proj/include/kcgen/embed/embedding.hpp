// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kcgen::embed {

struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_tag;

  std::size_t dimension() const { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Cosine similarity in [-1, 1]. Throws DomainError on dimension mismatch or
/// an all-zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

/// Text and code embedding provider. Implementations must be deterministic for
/// a fixed input and safe to call concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed_text(std::string_view s) = 0;
  virtual EmbeddingVector embed_code(std::string_view code) = 0;
  virtual std::string tag() const = 0;
};

/// Offline embedder: L2-normalized hashed character-trigram counts for text and
/// hashed token-bigram counts for code (whitespace dropped by the lexer).
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}

  EmbeddingVector embed_text(std::string_view s) override;
  EmbeddingVector embed_code(std::string_view code) override;
  std::string tag() const override;

  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
};

/// Lexes source text into identifier, number, string/char literal and
/// operator tokens; whitespace and comments are dropped.
std::vector<std::string> lex_code(std::string_view code);

/// Memoizes another embedder by (provider tag, kind, content digest); entries
/// are optionally persisted as one file per key under `directory`.
class CachingEmbedder final : public Embedder {
 public:
  explicit CachingEmbedder(std::shared_ptr<Embedder> inner,
                           std::optional<std::filesystem::path> directory = std::nullopt);

  EmbeddingVector embed_text(std::string_view s) override;
  EmbeddingVector embed_code(std::string_view code) override;
  std::string tag() const override { return inner_->tag(); }

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  EmbeddingVector lookup(char kind, std::string_view content);

  std::shared_ptr<Embedder> inner_;
  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingVector> memory_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// OpenAI-compatible /embeddings endpoint.
struct HttpEmbedderConfig {
  std::string base_url;
  std::string text_model;
  std::string code_model;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 60;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config);
  EmbeddingVector embed_text(std::string_view s) override;
  EmbeddingVector embed_code(std::string_view code) override;
  std::string tag() const override;

 private:
  EmbeddingVector request(const std::string& model, std::string_view input);
  HttpEmbedderConfig config_;
};

}  // namespace kcgen::embed
