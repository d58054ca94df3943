// SPDX-License-Identifier: Apache-2.0
#include "kcgen/embed/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kcgen/util/digest.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/http.hpp"

namespace kcgen::embed {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DomainError("cosine_similarity: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                      std::to_string(v.size()) + ")");
  }
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine_similarity: zero vector");
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  return cosine_similarity(std::span<const double>(u.values), std::span<const double>(v.values));
}

namespace {

void l2_normalize(std::vector<double>& v) {
  double n = 0;
  for (double x : v) n += x * x;
  if (n == 0) return;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

}  // namespace

std::vector<std::string> lex_code(std::string_view s) {
  static const char* kOps[] = {">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&",
                               "||",   "==",  "!=",  "<=",  ">=",  "+=", "-=", "*=", "/=", "%=",
                               "&=",   "|=",  "^=",  "<<",  ">>",  "**"};
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      auto end = s.find("*/", i + 2);
      i = end == std::string_view::npos ? s.size() : end + 2;
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.emplace_back(s.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.' || s[j] == '_')) ++j;
      out.emplace_back(s.substr(i, j - i));
      i = j;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != c && s[j] != '\n') {
        if (s[j] == '\\') ++j;
        ++j;
      }
      j = std::min(j + 1, s.size());
      out.emplace_back(s.substr(i, j - i));
      i = j;
    } else {
      std::size_t len = 1;
      for (const char* op : kOps) {
        std::string_view o(op);
        if (s.substr(i, o.size()) == o) {
          len = o.size();
          break;
        }
      }
      out.emplace_back(s.substr(i, len));
      i += len;
    }
  }
  return out;
}

EmbeddingVector HashingEmbedder::embed_text(std::string_view s) {
  if (s.empty()) throw DomainError("embed_text: empty input");
  std::string padded = " ";
  for (char c : s) padded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  padded.push_back(' ');
  std::vector<double> v(dimension_, 0.0);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    v[fnv1a64(std::string_view(padded).substr(i, 3)) % dimension_] += 1.0;
  }
  l2_normalize(v);
  return {std::move(v), tag()};
}

EmbeddingVector HashingEmbedder::embed_code(std::string_view code) {
  if (code.empty()) throw DomainError("embed_code: empty input");
  auto tokens = lex_code(code);
  tokens.insert(tokens.begin(), "<s>");
  tokens.emplace_back("</s>");
  std::vector<double> v(dimension_, 0.0);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    std::string key = tokens[i] + '\x1f' + tokens[i + 1];
    v[fnv1a64(key) % dimension_] += 1.0;
  }
  l2_normalize(v);
  return {std::move(v), tag()};
}

std::string HashingEmbedder::tag() const { return "hashing-ngram-" + std::to_string(dimension_); }

CachingEmbedder::CachingEmbedder(std::shared_ptr<Embedder> inner,
                                 std::optional<std::filesystem::path> directory)
    : inner_(std::move(inner)), directory_(std::move(directory)) {
  if (directory_) std::filesystem::create_directories(*directory_);
}

EmbeddingVector CachingEmbedder::embed_text(std::string_view s) { return lookup('t', s); }
EmbeddingVector CachingEmbedder::embed_code(std::string_view code) { return lookup('c', code); }

std::size_t CachingEmbedder::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}
std::size_t CachingEmbedder::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

EmbeddingVector CachingEmbedder::lookup(char kind, std::string_view content) {
  const std::string key = sha256_hex(inner_->tag() + '\0' + kind + '\0' + std::string(content));
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      ++hits_;
      return it->second;
    }
  }
  std::optional<EmbeddingVector> found;
  if (directory_) {
    auto path = *directory_ / (key + ".vec");
    std::ifstream in(path);
    if (in) {
      EmbeddingVector v;
      std::getline(in, v.provider_tag);
      double x;
      while (in >> x) v.values.push_back(x);
      if (!v.values.empty()) found = std::move(v);
    }
  }
  bool from_disk = found.has_value();
  if (!found) {
    found = kind == 't' ? inner_->embed_text(content) : inner_->embed_code(content);
    if (directory_) {
      std::ostringstream os;
      os.precision(17);
      os << found->provider_tag << '\n';
      for (double x : found->values) os << x << '\n';
      atomic_write(*directory_ / (key + ".vec"), os.str());
    }
  }
  std::lock_guard lock(mu_);
  if (from_disk) {
    ++hits_;
  } else {
    ++misses_;
  }
  memory_.emplace(key, *found);
  return *found;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {}

std::string HttpEmbedder::tag() const { return "http:" + config_.text_model + "|" + config_.code_model; }

EmbeddingVector HttpEmbedder::embed_text(std::string_view s) { return request(config_.text_model, s); }
EmbeddingVector HttpEmbedder::embed_code(std::string_view code) { return request(config_.code_model, code); }

EmbeddingVector HttpEmbedder::request(const std::string& model, std::string_view input) {
  if (input.empty()) throw DomainError("embedding input is empty");
  std::map<std::string, std::string> headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str())) {
    headers["Authorization"] = std::string("Bearer ") + key;
  }
  nlohmann::json body = {{"model", model}, {"input", std::string(input)}};
  auto res = net::post_json(config_.base_url + "/embeddings", headers, body.dump(), config_.timeout_seconds);
  if (res.status != 200) {
    throw TransportError("embedding endpoint returned HTTP " + std::to_string(res.status));
  }
  try {
    auto j = nlohmann::json::parse(res.body);
    EmbeddingVector v;
    v.provider_tag = "http:" + model;
    for (const auto& x : j.at("data").at(0).at("embedding")) v.values.push_back(x.get<double>());
    if (v.values.empty()) throw TransportError("empty embedding");
    for (double x : v.values) {
      if (!std::isfinite(x)) throw TransportError("non-finite embedding value");
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed embedding response: ") + e.what());
  }
}

}  // namespace kcgen::embed
