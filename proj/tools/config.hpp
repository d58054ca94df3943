// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "kcgen/core/dataset.hpp"
#include "kcgen/curves/curves.hpp"
#include "kcgen/eval/codebleu.hpp"
#include "kcgen/kc/pipeline.hpp"
#include "kcgen/kt/train.hpp"
#include "kcgen/llm/client.hpp"

namespace kcgen::cli {

struct LlmSettings {
  std::string provider;
  llm::ClientConfig client;
  llm::HttpProviderConfig http;
  llm::MockConfig mock;
  int concurrency = 1;
  bool cache = true;
};

struct EmbedSettings {
  std::string kind;
  std::size_t dimension = 256;
  std::string base_url, text_model, code_model, api_key_env;
  bool cache = true;
};

struct EvalSettings {
  double threshold = 0.5;
  eval::Language language = eval::Language::java;
  eval::CodeBleuConfig codebleu;
  bool generate_code = true;
  std::vector<kt::BaselineKind> baselines;
  bool random_uniform_draws = true;
};

struct CurveSettings {
  curves::PfaConfig pfa;
  double trend_alpha = 0.05;
  std::string scope = "all";
};

struct Settings {
  nlohmann::ordered_json resolved;
  std::string digest;

  std::filesystem::path run_dir;
  std::uint64_t seed = 1;

  std::filesystem::path problems, submissions;
  bool first_submissions_only = true;
  int n_splits = 1;
  data::SplitRatios ratios;
  /// -1 selects every split.
  int split_index = 0;

  LlmSettings llm;
  EmbedSettings embed;
  kc::PipelineConfig kc;
  kt::ModelConfig model;
  kt::TrainingConfig train;
  EvalSettings eval;
  CurveSettings curves;
  int plot_kcs = 3;
  std::string heatmap_student;

  std::vector<int> split_indices() const;
};

/// Defaults from the bundled config, overlaid with the user file (if any) and
/// then with `key.path=value` overrides. Unknown keys and type mismatches are
/// ValidationErrors naming the field path. Relative paths in the user file
/// resolve against its directory; all others against the working directory.
Settings load_settings(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                       const std::optional<std::filesystem::path>& run_dir_override);

}  // namespace kcgen::cli
