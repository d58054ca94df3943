// SPDX-License-Identifier: Apache-2.0
#include "kcgen/llm/parsers.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <set>

#include "kcgen/util/error.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::llm {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& what, std::string_view raw) {
  throw StructuredOutputError(what, std::string(raw));
}

json parse_object(std::string_view response) {
  const std::string body = extract_json_object(response);
  json j = json::parse(body, nullptr, /*allow_exceptions=*/false, /*ignore_comments=*/true);
  if (j.is_discarded()) {
    // Models sometimes leave a trailing comma before the closing brace.
    std::string repaired;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == ',') {
        std::size_t k = i + 1;
        while (k < body.size() && std::isspace(static_cast<unsigned char>(body[k]))) ++k;
        if (k < body.size() && (body[k] == '}' || body[k] == ']')) continue;
      }
      repaired.push_back(body[i]);
    }
    j = json::parse(repaired, nullptr, false, true);
  }
  if (j.is_discarded() || !j.is_object()) violation("response is not a JSON object", response);
  return j;
}

std::string required_string(const json& obj, const char* key, std::string_view raw, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) violation(where + ": missing string field \"" + key + "\"", raw);
  std::string v = text::trim(it->get<std::string>());
  if (v.empty()) violation(where + ": empty field \"" + key + "\"", raw);
  return v;
}

std::optional<std::string> nullable_string(const json& obj, const char* key, std::string_view raw) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) violation(std::string("field \"") + key + "\" must be a string or null", raw);
  std::string v = text::trim(it->get<std::string>());
  const std::string lower = text::normalize_name(v);
  if (v.empty() || lower == "null" || lower == "none" || lower == "n/a") return std::nullopt;
  return v;
}

}  // namespace

std::string extract_json_object(std::string_view response) {
  std::string_view s = response;
  const auto fence = s.find("```");
  if (fence != std::string_view::npos) {
    auto start = s.find('\n', fence);
    const auto close = start == std::string_view::npos ? std::string_view::npos : s.find("```", start);
    if (close != std::string_view::npos) s = s.substr(start + 1, close - start - 1);
  }
  const auto open = s.find('{');
  const auto end = s.rfind('}');
  if (open == std::string_view::npos || end == std::string_view::npos || end < open) {
    violation("response contains no JSON object", response);
  }
  return std::string(s.substr(open, end - open + 1));
}

std::vector<GeneratedKc> parse_kc_json(std::string_view response) {
  const json j = parse_object(response);
  std::vector<std::pair<long, GeneratedKc>> entries;
  std::set<long> seen;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = text::trim(it.key());
    std::size_t p = 0;
    while (p < key.size() && !std::isdigit(static_cast<unsigned char>(key[p]))) ++p;
    const std::string prefix = text::normalize_name(key.substr(0, p));
    if (prefix != "kc" || p == key.size() || key.find_first_not_of("0123456789", p) != std::string::npos) {
      violation("unexpected key \"" + it.key() + "\" (expected \"KC <n>\")", response);
    }
    const long n = std::stol(key.substr(p));
    if (!seen.insert(n).second) violation("duplicate key for KC " + std::to_string(n), response);
    if (!it->is_object()) violation(it.key() + " is not an object", response);
    entries.push_back({n, {required_string(*it, "reasoning", response, it.key()),
                           required_string(*it, "name", response, it.key())}});
  }
  if (entries.empty()) violation("response lists no KCs", response);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<GeneratedKc> out;
  for (auto& e : entries) out.push_back(std::move(e.second));
  return out;
}

ClusterLabel parse_cluster_label_json(std::string_view response) {
  const json j = parse_object(response);
  ClusterLabel l;
  auto r = j.find("reasoning");
  if (r != j.end() && r->is_string()) l.reasoning = text::trim(r->get<std::string>());
  l.representative_kc = nullable_string(j, "representative kc", response);
  l.summary_name = nullable_string(j, "summary name", response);
  if (l.representative_kc.has_value() == l.summary_name.has_value()) {
    violation("exactly one of \"representative kc\" and \"summary name\" must be set", response);
  }
  return l;
}

KcErrorLabels parse_kc_error_json(std::string_view response, const std::vector<std::string>& expected_kcs) {
  if (expected_kcs.empty()) throw DomainError("parse_kc_error_json: expected KC list is empty");
  const json j = parse_object(response);
  KcErrorLabels out;
  if (auto r = j.find("error reasoning"); r != j.end() && r->is_array()) {
    for (const auto& e : *r) {
      if (e.is_string()) out.error_reasoning.push_back(e.get<std::string>());
    }
  }
  auto m = j.find("KC error");
  if (m == j.end() || !m->is_object()) violation("missing \"KC error\" object", response);

  std::map<std::string, std::string> by_norm;
  for (const auto& k : expected_kcs) by_norm.emplace(text::normalize_name(k), k);
  for (auto it = m->begin(); it != m->end(); ++it) {
    const std::string norm = text::normalize_name(it.key());
    auto e = by_norm.find(norm);
    if (e == by_norm.end()) violation("unexpected KC key \"" + it.key() + "\"", response);
    if (out.labels.count(e->second)) violation("duplicate KC key \"" + it.key() + "\"", response);
    int v;
    if (it->is_number_integer()) {
      v = it->get<int>();
    } else if (it->is_boolean()) {
      v = it->get<bool>() ? 1 : 0;
    } else if (it->is_string() && (it->get<std::string>() == "0" || it->get<std::string>() == "1")) {
      v = it->get<std::string>() == "1";
    } else {
      violation("label for \"" + it.key() + "\" is not 0/1", response);
    }
    if (v != 0 && v != 1) violation("label for \"" + it.key() + "\" must be 0 or 1", response);
    out.labels[e->second] = v;
  }
  for (const auto& k : expected_kcs) {
    if (!out.labels.count(k)) violation("missing KC key \"" + k + "\"", response);
  }
  return out;
}

std::map<std::string, std::string> parse_tag_conversion_json(std::string_view response,
                                                             const std::vector<std::string>& expected_tags) {
  const json j = parse_object(response);
  std::map<std::string, std::string> by_norm;
  for (const auto& t : expected_tags) by_norm.emplace(text::normalize_name(t), t);
  std::map<std::string, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto e = by_norm.find(text::normalize_name(it.key()));
    if (e == by_norm.end()) violation("unexpected tag \"" + it.key() + "\"", response);
    if (!it->is_string() || text::trim(it->get<std::string>()).empty()) {
      violation("tag \"" + it.key() + "\" has no name", response);
    }
    out[e->second] = text::trim(it->get<std::string>());
  }
  for (const auto& t : expected_tags) {
    if (!out.count(t)) violation("missing tag \"" + t + "\"", response);
  }
  return out;
}

}  // namespace kcgen::llm
