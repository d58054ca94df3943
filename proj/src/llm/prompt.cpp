// SPDX-License-Identifier: Apache-2.0
#include "kcgen/llm/prompt.hpp"

#include <array>
#include <nlohmann/json.hpp>

#include "kcgen/util/assets.hpp"
#include "kcgen/util/error.hpp"

namespace kcgen::llm {

namespace {

struct TemplateFiles {
  TemplateId id;
  const char* name;
  const char* system;
  const char* user;
};

constexpr std::array<TemplateFiles, 4> kTemplates = {{
    {TemplateId::kc_generation, "kc-generation", "prompts/kc_generation.system.txt", "prompts/kc_generation.user.txt"},
    {TemplateId::cluster_label, "cluster-label", "prompts/cluster_label.system.txt", "prompts/cluster_label.user.txt"},
    {TemplateId::kc_error_label, "kc-error-label", "prompts/kc_error_label.system.txt",
     "prompts/kc_error_label.user.txt"},
    {TemplateId::tag_conversion, "tag-conversion", "prompts/tag_conversion.system.txt",
     "prompts/tag_conversion.user.txt"},
}};

const TemplateFiles& files(TemplateId id) {
  for (const auto& t : kTemplates) {
    if (t.id == id) return t;
  }
  throw TemplateError("unknown template id");
}

// Strips the single trailing newline that text files end with.
std::string_view body(const std::string& s) {
  std::string_view v(s);
  if (!v.empty() && v.back() == '\n') v.remove_suffix(1);
  return v;
}

}  // namespace

std::string to_string(TemplateId id) { return files(id).name; }

TemplateId template_from_string(std::string_view s) {
  for (const auto& t : kTemplates) {
    if (s == t.name) return t.id;
  }
  throw TemplateError("unknown template id '" + std::string(s) + "'");
}

void ChatRequest::validate() const {
  if (system_message.empty()) throw ValidationError("chat request: empty system message");
  if (user_message.empty()) throw ValidationError("chat request: empty user message");
  if (!(sampling.temperature >= 0.0)) throw ValidationError("chat request: temperature must be >= 0");
  if (!(sampling.top_p > 0.0 && sampling.top_p <= 1.0)) throw ValidationError("chat request: top_p must be in (0, 1]");
  if (sampling.max_tokens <= 0) throw ValidationError("chat request: max_tokens must be positive");
}

namespace {

template <class OnSlot>
std::string walk(std::string_view text, OnSlot&& on_slot) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      out.push_back('{');
      ++i;
    } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out.push_back('}');
      ++i;
    } else if (c == '{') {
      const auto close = text.find('}', i + 1);
      if (close == std::string_view::npos) throw TemplateError("template: unterminated '{'");
      const auto name = text.substr(i + 1, close - i - 1);
      if (name.empty() || name.find_first_of("{ \n\"") != std::string_view::npos) {
        throw TemplateError("template: malformed slot '{" + std::string(name) + "}'");
      }
      out += on_slot(name);
      i = close;
    } else if (c == '}') {
      throw TemplateError("template: unmatched '}'");
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_template(std::string_view text, const Slots& slots) {
  return walk(text, [&](std::string_view name) -> std::string {
    auto it = slots.find(name);
    if (it == slots.end()) throw TemplateError("template slot '" + std::string(name) + "' was not provided");
    return it->second;
  });
}

std::vector<std::string> template_slots(std::string_view text) {
  std::vector<std::string> names;
  walk(text, [&](std::string_view name) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
    return std::string();
  });
  return names;
}

ChatRequest render_prompt(TemplateId id, const Slots& slots) {
  const auto& f = files(id);
  ChatRequest r;
  r.template_id = f.name;
  r.system_message = render_template(body(assets::get(f.system)), slots);
  r.user_message = render_template(body(assets::get(f.user)), slots);
  return r;
}

std::string format_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

std::string ordinal(std::size_t n) {
  static const char* words[] = {"First",    "Second",    "Third",      "Fourth",     "Fifth",
                                "Sixth",    "Seventh",   "Eighth",     "Ninth",      "Tenth",
                                "Eleventh", "Twelfth",   "Thirteenth", "Fourteenth", "Fifteenth",
                                "Sixteenth", "Seventeenth", "Eighteenth", "Nineteenth", "Twentieth"};
  if (n >= 1 && n <= 20) return words[n - 1];
  return "Solution " + std::to_string(n);
}

std::string format_solutions(const std::vector<std::string>& codes) {
  std::string out;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out += ordinal(i + 1) + " sample solution is:\n```\n" + codes[i];
    if (!codes[i].empty() && codes[i].back() != '\n') out += "\n";
    out += "```\n\n";
  }
  return out;
}

std::string format_examples(const std::vector<InContextExample>& examples) {
  std::string out;
  for (std::size_t e = 0; e < examples.size(); ++e) {
    out += "Example " + std::to_string(e + 1) + ":\nProblem: " + examples[e].problem + "\nExpected Output:\n";
    for (std::size_t k = 0; k < examples[e].kcs.size(); ++k) {
      out += "KC " + std::to_string(k + 1) + ": " + examples[e].kcs[k] + "\n";
    }
    out += "\n";
  }
  return out;
}

std::vector<InContextExample> default_examples() {
  auto j = nlohmann::json::parse(assets::get("prompts/kc_generation.example.json"));
  std::vector<InContextExample> out;
  for (const auto& e : j) out.push_back({e.at("problem").get<std::string>(), e.at("kcs").get<std::vector<std::string>>()});
  return out;
}

}  // namespace kcgen::llm
