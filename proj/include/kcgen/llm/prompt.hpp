// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kcgen::llm {

enum class TemplateId { kc_generation, cluster_label, kc_error_label, tag_conversion };

std::string to_string(TemplateId id);
TemplateId template_from_string(std::string_view s);

struct Sampling {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 1024;
};

struct ChatRequest {
  std::string template_id;
  std::string system_message;
  std::string user_message;
  Sampling sampling;
  std::string provider_model_id;
  std::optional<std::int64_t> seed;

  /// Throws ValidationError on empty messages or negative temperature.
  void validate() const;
};

using Slots = std::map<std::string, std::string, std::less<>>;

/// Replaces {name} with slots[name]; "{{" and "}}" produce literal braces.
/// Throws TemplateError naming the first unfilled slot.
std::string render_template(std::string_view text, const Slots& slots);

/// Slot names referenced by a template text, in order of first use.
std::vector<std::string> template_slots(std::string_view text);

/// Renders both messages of a built-in template. Model id and seed are left
/// for the client to fill.
ChatRequest render_prompt(TemplateId id, const Slots& slots);

// Slot formatting helpers shared by the pipeline and the mock provider.

/// "a, b, c" for use inside the [..] list of a template.
std::string format_list(const std::vector<std::string>& items);

/// "First sample solution is:" ... blocks for the kc-generation template.
std::string format_solutions(const std::vector<std::string>& codes);

struct InContextExample {
  std::string problem;
  std::vector<std::string> kcs;
};

std::string format_examples(const std::vector<InContextExample>& examples);

/// Bundled default in-context example set.
std::vector<InContextExample> default_examples();

/// Ordinal word for 1..20 ("First", "Second", ...), then "Solution 21" style.
std::string ordinal(std::size_t one_based);

}  // namespace kcgen::llm
