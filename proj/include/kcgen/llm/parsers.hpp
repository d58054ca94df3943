// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kcgen::llm {

/// Extracts the JSON object from a model response: strips markdown code
/// fences and any prose around the outermost braces. Throws
/// StructuredOutputError when no object is present.
std::string extract_json_object(std::string_view response);

struct GeneratedKc {
  std::string reasoning;
  std::string name;
};

/// {"KC 1": {"reasoning": ..., "name": ...}, ...} in KC-number order.
std::vector<GeneratedKc> parse_kc_json(std::string_view response);

struct ClusterLabel {
  std::string reasoning;
  std::optional<std::string> representative_kc;
  std::optional<std::string> summary_name;

  const std::string& label() const { return representative_kc ? *representative_kc : *summary_name; }
};

/// Exactly one of "representative kc" / "summary name" must be non-null.
ClusterLabel parse_cluster_label_json(std::string_view response);

struct KcErrorLabels {
  std::vector<std::string> error_reasoning;
  /// Keyed by the expected KC names as given by the caller.
  std::map<std::string, int> labels;
};

/// Keys must match expected_kcs exactly after normalization (trim, collapse
/// whitespace, case-fold); values must be 0 or 1.
KcErrorLabels parse_kc_error_json(std::string_view response, const std::vector<std::string>& expected_kcs);

/// Mapping from each expected tag to a non-empty natural language name.
std::map<std::string, std::string> parse_tag_conversion_json(std::string_view response,
                                                             const std::vector<std::string>& expected_tags);

}  // namespace kcgen::llm
