// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcgen/eval/syntax.hpp"

namespace kcgen::eval {

struct CodeBleuConfig {
  // n-gram, weighted n-gram, syntax, dataflow
  std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
  int max_order = 4;
  double smoothing_epsilon = 0.1;
  double keyword_weight = 1.0;
  double other_weight = 0.2;
};

struct CodeBleuResult {
  double score = 0;
  double ngram = 0;
  double weighted_ngram = 0;
  // Empty when the reference yields nothing to match (no parse, no def-use
  // edges); the remaining weights are renormalized.
  std::optional<double> syntax;
  std::optional<double> dataflow;
  bool candidate_parsed = true;
};

/// Sentence-level BLEU with add-epsilon smoothing of zero-match orders and
/// the standard brevity penalty. Orders longer than the reference are skipped.
double bleu(std::span<const std::string> candidate, std::span<const std::string> reference, int max_order = 4,
            double epsilon = 0.1);

/// BLEU variant whose unigram matches are weighted by keyword membership and
/// whose denominators are reference counts.
double weighted_ngram_match(std::span<const std::string> candidate, std::span<const std::string> reference,
                            Language lang, const CodeBleuConfig& cfg = {});

double syntax_match(const SyntaxNode& candidate, const SyntaxNode& reference);

/// Throws UndefinedMetricError when the reference has no dataflow edges.
double dataflow_match(const SyntaxNode& candidate, const SyntaxNode& reference);

CodeBleuResult codebleu_detail(std::string_view candidate, std::string_view reference, Language lang,
                               const CodeBleuConfig& cfg = {});

double codebleu(std::string_view candidate, std::string_view reference, Language lang,
                const CodeBleuConfig& cfg = {});

/// Keyword list shipped as a data asset.
const std::vector<std::string>& keywords(Language lang);

}  // namespace kcgen::eval
