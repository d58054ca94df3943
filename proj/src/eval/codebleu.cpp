// SPDX-License-Identifier: Apache-2.0
#include "kcgen/eval/codebleu.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <unordered_set>

#include "kcgen/util/assets.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::eval {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int> count_ngrams(std::span<const std::string> toks, int n) {
  std::map<Ngram, int> counts;
  const auto size = static_cast<int>(toks.size());
  for (int i = 0; i + n <= size; ++i) {
    counts[Ngram(toks.begin() + i, toks.begin() + i + n)]++;
  }
  return counts;
}

double brevity_penalty(std::size_t c, std::size_t r) {
  if (c == 0) return 0.0;
  if (c > r) return 1.0;
  return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

const std::unordered_set<std::string>& keyword_set(Language lang) {
  static std::once_flag once;
  static std::unordered_set<std::string> java, python;
  std::call_once(once, [] {
    for (const auto& k : keywords(Language::java)) java.insert(k);
    for (const auto& k : keywords(Language::python)) python.insert(k);
  });
  return lang == Language::java ? java : python;
}

}  // namespace

const std::vector<std::string>& keywords(Language lang) {
  static const auto load = [](const char* path) {
    std::vector<std::string> out;
    for (auto& line : text::split(assets::get(path), '\n')) {
      auto w = text::trim(line);
      if (!w.empty() && w[0] != '#') out.emplace_back(w);
    }
    return out;
  };
  static const std::vector<std::string> java = load("keywords/java.txt");
  static const std::vector<std::string> python = load("keywords/python.txt");
  return lang == Language::java ? java : python;
}

double bleu(std::span<const std::string> candidate, std::span<const std::string> reference, int max_order,
            double epsilon) {
  if (reference.empty()) throw UndefinedMetricError("bleu: empty reference");
  const int orders = std::min<int>(max_order, static_cast<int>(reference.size()));
  double log_sum = 0;
  for (int n = 1; n <= orders; ++n) {
    const auto cand = count_ngrams(candidate, n);
    const auto ref = count_ngrams(reference, n);
    int total = 0, matched = 0;
    for (const auto& [g, c] : cand) {
      total += c;
      auto it = ref.find(g);
      if (it != ref.end()) matched += std::min(c, it->second);
    }
    const double p = matched > 0 ? static_cast<double>(matched) / total : epsilon / std::max(total, 1);
    log_sum += std::log(p) / orders;
  }
  return brevity_penalty(candidate.size(), reference.size()) * std::exp(log_sum);
}

double weighted_ngram_match(std::span<const std::string> candidate, std::span<const std::string> reference,
                            Language lang, const CodeBleuConfig& cfg) {
  if (reference.empty()) throw UndefinedMetricError("weighted_ngram_match: empty reference");
  const auto& kw = keyword_set(lang);
  const int orders = std::min<int>(cfg.max_order, static_cast<int>(reference.size()));
  double log_sum = 0;
  for (int n = 1; n <= orders; ++n) {
    const auto cand = count_ngrams(candidate, n);
    const auto ref = count_ngrams(reference, n);
    double num = 0, den = 0;
    for (const auto& [g, c] : ref) {
      const double w = n == 1 ? (kw.count(g[0]) ? cfg.keyword_weight : cfg.other_weight) : 1.0;
      den += w * c;
      auto it = cand.find(g);
      if (it != cand.end()) num += w * std::min(c, it->second);
    }
    const double p = num > 0 ? num / den : cfg.smoothing_epsilon / std::max(den, 1.0);
    log_sum += std::log(p) / orders;
  }
  return brevity_penalty(candidate.size(), reference.size()) * std::exp(log_sum);
}

double syntax_match(const SyntaxNode& candidate, const SyntaxNode& reference) {
  const auto ref = subtree_sexps(reference);
  std::map<std::string, int> cand;
  for (auto& s : subtree_sexps(candidate)) cand[s]++;
  std::size_t matched = 0;
  for (const auto& s : ref) {
    auto it = cand.find(s);
    if (it != cand.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(ref.size());
}

double dataflow_match(const SyntaxNode& candidate, const SyntaxNode& reference) {
  const auto ref = extract_dataflow(reference);
  if (ref.empty()) throw UndefinedMetricError("dataflow_match: reference has no dataflow edges");
  std::map<DataflowEdge, int> cand;
  for (auto& e : extract_dataflow(candidate)) cand[e]++;
  std::size_t matched = 0;
  for (const auto& e : ref) {
    auto it = cand.find(e);
    if (it != cand.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(ref.size());
}

CodeBleuResult codebleu_detail(std::string_view candidate, std::string_view reference, Language lang,
                               const CodeBleuConfig& cfg) {
  double wsum = 0;
  for (double w : cfg.weights) {
    if (w < 0) throw DomainError("codebleu: weights must be non-negative");
    wsum += w;
  }
  if (std::fabs(wsum - 1.0) > 1e-9) throw DomainError("codebleu: weights must sum to 1");

  std::vector<std::string> ref_toks, cand_toks;
  try {
    ref_toks = code_tokens(reference, lang);
  } catch (const ParseError&) {
    ref_toks = text::split_whitespace(reference);
  }
  if (ref_toks.empty()) throw UndefinedMetricError("codebleu: empty reference");
  try {
    cand_toks = code_tokens(candidate, lang);
  } catch (const ParseError&) {
    cand_toks = text::split_whitespace(candidate);
  }

  CodeBleuResult r;
  r.ngram = bleu(cand_toks, ref_toks, cfg.max_order, cfg.smoothing_epsilon);
  r.weighted_ngram = weighted_ngram_match(cand_toks, ref_toks, lang, cfg);

  std::optional<SyntaxNode> ref_tree, cand_tree;
  try {
    ref_tree = parse(reference, lang);
  } catch (const ParseError&) {
  }
  try {
    cand_tree = parse(candidate, lang);
  } catch (const ParseError&) {
    r.candidate_parsed = false;
  }
  if (ref_tree) {
    r.syntax = cand_tree ? syntax_match(*cand_tree, *ref_tree) : 0.0;
    if (!extract_dataflow(*ref_tree).empty()) r.dataflow = cand_tree ? dataflow_match(*cand_tree, *ref_tree) : 0.0;
  }

  double total = cfg.weights[0] * r.ngram + cfg.weights[1] * r.weighted_ngram;
  double used = cfg.weights[0] + cfg.weights[1];
  if (r.syntax) {
    total += cfg.weights[2] * *r.syntax;
    used += cfg.weights[2];
  }
  if (r.dataflow) {
    total += cfg.weights[3] * *r.dataflow;
    used += cfg.weights[3];
  }
  r.score = used > 0 ? std::clamp(total / used, 0.0, 1.0) : 0.0;
  return r;
}

double codebleu(std::string_view candidate, std::string_view reference, Language lang, const CodeBleuConfig& cfg) {
  return codebleu_detail(candidate, reference, lang, cfg).score;
}

}  // namespace kcgen::eval
