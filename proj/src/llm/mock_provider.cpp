// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <map>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>

#include "kcgen/llm/provider.hpp"
#include "kcgen/util/digest.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/rng.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::llm {

namespace {

using ordered_json = nlohmann::ordered_json;

struct ConstructRule {
  const char* pattern;
  const char* name;
  std::vector<const char*> paraphrases;
  const char* reasoning;
  bool generic;  // only used when few specific constructs are present
};

const std::vector<ConstructRule>& construct_rules() {
  static const std::vector<ConstructRule> rules = {
      {R"(else\s+if\s*\()", "If and else if statement", {"Else-if conditional chains", "Multi-branch conditionals", "Chained conditional branches", "Else-if selection"},
       "The solution selects among several cases with an if and else if chain.", false},
      {R"(\}\s*else\s*(\{|[^i\s]))", "If and else statement", {"If-else conditionals", "Two-way conditional branching", "Binary selection with if-else", "Alternative branches with else"},
       "The solution chooses between two alternatives with an if and else statement.", false},
      {R"(\bif\s*\([^{};]*\)\s*\{[^{}]*\bif\s*\()", "Nested if statements", {"Nested conditionals", "Conditionals within conditionals", "Nested decision making"},
       "The solution places one conditional inside another to combine conditions.", false},
      {R"(\bwhile\s*\()", "While loop", {"While loop iteration", "Condition-controlled loops", "Indefinite iteration with while", "Looping until a condition fails"},
       "The solution repeats work with a while loop until a condition fails.", false},
      {R"(\bfor\s*\([^:;)]*;)", "For loop iteration", {"Counter-controlled for loops", "For loop", "Index-based loop traversal", "Iterating with a loop counter"},
       "The solution iterates with a counter-controlled for loop.", false},
      {R"(\bfor\s*\([^;)]*:)", "Enhanced for loop", {"For-each iteration over arrays", "For-each loop", "Iterating over collection elements"},
       "The solution visits each element with an enhanced for loop.", false},
      {R"(\bfor\s*\([^{}]*\)\s*\{[^{}]*\bfor\s*\()", "Nested loops", {"Nested for loops", "Loop within a loop", "Pairwise iteration with nested loops"},
       "The solution uses a loop inside another loop to examine pairs.", false},
      {R"(%)", "Modulus operation", {"Remainder computation with modulo", "Modulo arithmetic", "Divisibility checks with modulus"},
       "The solution uses the modulus operator to obtain a remainder.", false},
      {R"(&&|\|\|)", "Logical operators", {"Combining conditions with logical operators", "Boolean operators AND and OR", "Compound boolean conditions"},
       "The solution combines conditions with logical operators.", false},
      {R"(!\(|!\w)", "Logical negation", {"Negating boolean expressions", "Using the NOT operator", "Inverting conditions"},
       "The solution negates a boolean expression.", false},
      {R"(([<>]=?|[=!]=)\s*-?\d|\b\w+\s*[<>]=?\s*\w)", "Numerical comparisons",
       {"Comparison operators", "Relational comparisons of numbers", "Integer comparison", "Comparing numeric values"},
       "The solution compares numeric values with relational operators.", false},
      {R"(\bboolean\s+\w+\s*=)", "Boolean variables", {"Boolean logic", "Storing conditions in boolean flags", "Boolean flag variables"},
       "The solution stores a condition in a boolean variable.", false},
      {R"(\?[^:;]*:)", "Ternary conditional operator", {"Conditional expressions", "Inline conditional expressions"},
       "The solution selects a value with the ternary operator.", false},
      {R"(String\.format\s*\()", "String formatting", {"Formatted string construction", "Formatting output strings"},
       "The solution builds a string with a format specification.", false},
      {R"(\w\s*\+\s*"|"\s*\+|\.concat\s*\(|\w+\s*\+=\s*\w+\.charAt|\w+\s*\+\s*\w+\s*;\s*\n[^\n]*\.length\(\))",
       "String concatenation", {"Joining strings", "Combining strings with plus", "Appending to strings"},
       "The solution joins strings together.", false},
      {R"(\.substring\s*\()", "Substring extraction", {"String slicing with substring", "Extracting substrings", "Taking parts of a string"},
       "The solution extracts part of a string with substring.", false},
      {R"(\.length\s*\(\s*\))", "String length", {"Determining string length", "String length computation", "Measuring string size"},
       "The solution needs the length of a string.", false},
      {R"(\.equals\s*\()", "String equality comparison", {"Comparing strings with equals", "Comparing string contents", "Checking strings for equality"},
       "The solution compares strings for equality with equals.", false},
      {R"(\.equalsIgnoreCase\s*\(|\.toLowerCase\s*\(|\.toUpperCase\s*\()", "Case-insensitive string comparison",
       {"String case conversion", "Ignoring case in string comparison"}, "The solution compares strings without regard to letter case.", false},
      {R"(\.charAt\s*\()", "String indexing", {"Character access by index", "Accessing characters in a string", "Character retrieval with charAt"},
       "The solution reads individual characters of a string by index.", false},
      {R"([=!]=\s*'|'\s*[=!]=)", "Character comparison", {"Character equality comparison", "Comparing individual characters"},
       "The solution compares characters for equality.", false},
      {R"(\.(indexOf|lastIndexOf)\s*\()", "Searching within strings", {"Finding substring positions", "Locating text inside a string", "Using indexOf on strings"},
       "The solution locates a substring within a string.", false},
      {R"(\.contains\s*\()", "Substring containment check", {"Checking if a string contains a substring", "Testing for substring presence"},
       "The solution checks whether a string contains another string.", false},
      {R"(\.(startsWith|endsWith)\s*\()", "String prefix and suffix checks", {"Checking string boundaries", "Matching string prefixes", "Checking how a string ends"},
       "The solution tests how a string begins or ends.", false},
      {R"(StringBuilder)", "StringBuilder usage", {"Building strings efficiently", "Incremental string building"},
       "The solution accumulates text with a StringBuilder.", false},
      {R"(\.reverse\s*\()", "Reversing a sequence", {"String reversal", "Reversing element order"},
       "The solution reverses the order of characters.", false},
      {R"(\w\s*\[[^\]]+\])", "Array indexing", {"Array indexing and assignment", "Accessing array elements", "Array element access", "Reading array values by position"},
       "The solution reads array elements by index.", false},
      {R"(\.length\b(?!\s*\())", "Array length", {"Using the array length property", "Array size property", "Determining the number of array elements"},
       "The solution uses the length of an array.", false},
      {R"(new\s+\w+\s*\[)", "Array creation", {"Allocating new arrays", "Array initialization", "Declaring and sizing arrays"},
       "The solution allocates a new array.", false},
      {R"(\bArrays\.\w+)", "Arrays utility methods", {"Using the Arrays class", "Sorting arrays with library methods"},
       "The solution relies on a utility method from the Arrays class.", false},
      {R"(Math\.abs\s*\()", "Absolute value computation", {"Using Math.abs", "Absolute difference calculation"},
       "The solution computes an absolute value.", false},
      {R"(Math\.(max|min)\s*\()", "Finding maximum or minimum", {"Using Math.max and Math.min", "Selecting the larger value", "Tracking extreme values"},
       "The solution takes the larger or smaller of two values.", false},
      {R"(Math\.round\s*\(|\d+\.\d+)", "Rounding numbers", {"Numeric rounding", "Rounding to the nearest integer"},
       "The solution rounds a numeric value.", false},
      {R"(\bfor\s*\([^)]*\)\s*\{[^{}]*\{[^{}]*\breturn\b)", "Early return from loop", {"Exiting a loop early", "Short-circuit return inside loops"},
       "The solution stops iterating as soon as the answer is known.", false},
      {R"(\)\s*/\s*2\b|\bsum\s*/\s*\d)", "Computing averages", {"Average calculation", "Mean computation"},
       "The solution divides a sum to compute an average.", false},
      {R"(-\s*'[a-zA-Z0-9]')", "Character arithmetic", {"Character code arithmetic", "Converting characters to digits"},
       "The solution treats characters as numeric codes.", false},
      {R"(\.isEmpty\s*\()", "Empty string check", {"Checking for empty strings", "Handling empty input strings"},
       "The solution guards against an empty string.", false},
      {R"(\bswitch\s*\()", "Switch statement", {"Multi-way branching with switch", "Switch case selection"},
       "The solution dispatches on a value with a switch statement.", false},
      {R"(\w+\+\+|\+\+\w+)", "Counting occurrences", {"Counter accumulation", "Counting with an accumulator", "Tallying matches"},
       "The solution keeps a running count.", false},
      {R"(\w\s*[*/]\s*[\w(]|\w\s*[+\-]\s*\w)", "Basic arithmetic operations", {"Arithmetic expressions", "Integer arithmetic", "Arithmetic computation"},
       "The solution computes values with arithmetic operators.", true},
      {R"(\bif\s*\()", "Conditional statements", {"If statement", "Basic if statement", "Conditional checks"},
       "The solution guards an action with a condition.", true},
      {R"([+\-*/]=)", "Compound assignment operators", {"Accumulating values", "Augmented assignment"},
       "The solution updates a variable in place with a compound assignment.", true},
      {R"(\b(int|double|long|String|char)\s+\w+\s*=)", "Variable declaration and initialization", {"Local variables", "Declaring variables"},
       "The solution declares and initializes local variables.", true},
      {R"(\breturn\b)", "Return statements", {"Returning values from methods", "Returning results"},
       "The solution returns the computed value.", true},
      {R"(\b(public|private|static)?\s*\w+\s+\w+\s*\([^)]*\)\s*\{)", "Method definition", {"Function definition", "Writing methods with parameters"},
       "The solution is written as a method with parameters and a return type.", true},
  };
  return rules;
}

const std::vector<std::regex>& compiled_rules() {
  static const std::vector<std::regex> compiled = [] {
    std::vector<std::regex> out;
    for (const auto& r : construct_rules()) out.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::optimize);
    return out;
  }();
  return compiled;
}

struct BugSignature {
  const char* pattern;
  std::vector<const char*> kc_words;
  const char* description;
};

const std::vector<BugSignature>& bug_signatures() {
  static const std::vector<BugSignature> sigs = {
      {R"(([\w.]+(?:\s*[+\-]\s*[\w.]+)?)\s*<=?\s*-?\d+\s*&&\s*\1\s*>=?\s*-?\d+)",
       {"comparison", "logical", "relational", "range"},
       "The range check joins two mutually exclusive comparisons, so it can never be true."},
      {R"(<=\s*\w+\.length)", {"loop", "iteration", "array", "index", "bound", "length"},
       "The loop bound runs one position past the end of the sequence."},
      {R"(\[\s*\w+\.length\s*\])", {"array", "index"}, "The code indexes one element past the end of the array."},
      {R"(\[\s*\w+\s*\+\s*2\s*\])", {"array", "index"}, "The code can index beyond the end of the array."},
      {R"(==\s*"|"\s*==)", {"string", "equal"}, "Strings are compared with == instead of equals."},
      {R"(%\s*2\s*==\s*1)", {"modul", "remainder", "even", "parity"}, "The parity test checks for the wrong remainder."},
      {R"((\w+)\s*==\s*(\d+)\s*&&\s*(\w+)\s*==\s*\2)", {"logical", "boolean", "operator"},
       "The two equality tests are joined with AND where OR is required."},
      {R"(Math\.min\s*\()", {"maximum", "minimum", "max"}, "The code takes the minimum where the maximum is needed."},
      {R"(substring\s*\(\s*1\s*,\s*\w+\.length\s*\(\s*\)\s*\))", {"substring", "slic", "index"},
       "The substring keeps the final character that should be removed."},
      {R"(indexOf\s*\([^)]*\)\s*>\s*0)", {"search", "position", "contain", "index"},
       "A match at position zero is treated as absent."},
  };
  return sigs;
}

std::string between(const std::string& s, const std::string& open, const std::string& close, std::size_t from = 0) {
  const auto a = s.find(open, from);
  if (a == std::string::npos) return {};
  const auto start = a + open.size();
  const auto b = s.find(close, start);
  return s.substr(start, b == std::string::npos ? std::string::npos : b - start);
}

std::vector<std::string> code_blocks(const std::string& s, std::size_t from) {
  std::vector<std::string> out;
  std::size_t pos = from;
  while (true) {
    auto a = s.find("```", pos);
    if (a == std::string::npos) break;
    auto nl = s.find('\n', a);
    if (nl == std::string::npos) break;
    auto b = s.find("```", nl + 1);
    if (b == std::string::npos) break;
    out.push_back(s.substr(nl + 1, b - nl - 1));
    pos = b + 3;
  }
  return out;
}

std::vector<std::string> bracket_list(const std::string& s, const std::string& marker) {
  const auto a = s.find(marker);
  if (a == std::string::npos) return {};
  const auto start = a + marker.size();
  const auto b = s.find("]\n", start);
  std::string inner = s.substr(start, b == std::string::npos ? s.rfind(']') - start : b - start);
  std::vector<std::string> out;
  for (auto& part : text::split(inner, ',')) {
    auto t = text::trim(part);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string maybe_fence(const std::string& body, Rng& rng) {
  return rng.bernoulli(0.3) ? "```json\n" + body + "\n```" : body;
}

std::string kc_response(const std::vector<std::pair<std::string, std::string>>& kcs) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < kcs.size(); ++i) {
    j["KC " + std::to_string(i + 1)] = {{"reasoning", kcs[i].second}, {"name", kcs[i].first}};
  }
  return j.dump(4);
}

std::string generate_kcs(const std::string& user, const MockConfig& cfg, Rng& rng) {
  const auto target = user.find("Now analyze the following problem");
  const std::string problem = text::trim(between(user, "Problem: ", "\n", target == std::string::npos ? 0 : target));
  const auto codes = code_blocks(user, target == std::string::npos ? 0 : target);
  std::string all_code;
  for (const auto& c : codes) all_code += c + "\n";

  if (text::contains(problem, "The number 6 is a truly great number") || text::contains(all_code, "love6(")) {
    return maybe_fence(kc_response({
                           {"If and else if statement", "The solution checks several cases in an if and else if chain."},
                           {"Basic arithmetic operations", "The solution adds and subtracts the two inputs."},
                           {"Logical operators", "The solution combines equality tests with the OR operator."},
                           {"Numerical comparisons", "The solution compares integer values with 6."},
                           {"Absolute value computation", "The solution takes the absolute value of a difference."},
                       }),
                       rng);
  }
  if (text::contains(all_code, "has77(")) {
    return maybe_fence(kc_response({
                           {"For loop iteration", "The solution scans the array with a counter-controlled loop."},
                           {"Array indexing and assignment", "The solution reads neighbouring array elements by index."},
                           {"Boolean logic", "The solution returns a boolean result."},
                           {"Logical operators", "The solution joins two equality tests with AND."},
                           {"Numerical comparisons", "The solution compares array entries with 7."},
                           {"If and else if statement", "The solution tests two patterns in an if and else if chain."},
                       }),
                       rng);
  }

  const auto& rules = construct_rules();
  const auto& re = compiled_rules();
  std::vector<std::size_t> specific, generic;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!std::regex_search(all_code, re[i])) continue;
    (rules[i].generic ? generic : specific).push_back(i);
  }
  std::vector<std::size_t> chosen = specific;
  for (std::size_t g : generic) {
    if (chosen.size() >= 3) break;
    chosen.push_back(g);
  }
  if (chosen.size() > cfg.max_kcs) chosen.resize(cfg.max_kcs);
  if (chosen.empty()) chosen.push_back(rules.size() - 1);

  // Paraphrase choice depends on the problem and rule only, so repeated runs
  // and different solution subsets agree.
  std::vector<std::pair<std::string, std::string>> kcs;
  for (std::size_t i : chosen) {
    const auto& r = rules[i];
    Rng pr(cfg.seed, fnv1a64(problem) ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
    std::string name = r.name;
    if (!r.paraphrases.empty() && pr.bernoulli(cfg.paraphrase_rate)) {
      name = r.paraphrases[pr.below(r.paraphrases.size())];
    }
    kcs.push_back({name, r.reasoning});
  }
  return maybe_fence(kc_response(kcs), rng);
}

const std::set<std::string>& stop_words() {
  static const std::set<std::string> s = {"and", "or", "the", "of", "a", "an", "with", "in", "to",
                                          "by", "on", "using", "from", "into", "as", "is", "its"};
  return s;
}

std::vector<std::string> content_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stop_words().count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string label_cluster(const std::vector<std::string>& kcs, Rng& rng) {
  if (kcs.empty()) throw TransportError("mock: cluster-label prompt lists no KCs");
  ordered_json j;
  if (kcs.size() == 3 && text::normalize_name(kcs[0]) == "for loop iteration" &&
      text::normalize_name(kcs[1]) == "while loop" && text::normalize_name(kcs[2]) == "array iteration") {
    j["reasoning"] = "The KCs describe different ways of repeating work over data, which share the theme of iteration.";
    j["representative kc"] = nullptr;
    j["summary name"] = "Loop iteration";
    return maybe_fence(j.dump(2), rng);
  }
  std::vector<std::vector<std::string>> words;
  std::map<std::string, int> freq;
  std::vector<std::string> order;
  for (const auto& k : kcs) {
    auto w = content_words(k);
    std::set<std::string> uniq(w.begin(), w.end());
    for (const auto& u : w) {
      if (!freq.count(u)) order.push_back(u);
    }
    for (const auto& u : uniq) freq[u]++;
    words.push_back(std::move(w));
  }
  bool shared = false;
  for (const auto& [w, n] : freq) {
    if (n == static_cast<int>(kcs.size())) shared = true;
  }
  if (shared) {
    std::string best = kcs[0];
    for (const auto& k : kcs) {
      if (k.size() < best.size() || (k.size() == best.size() && k < best)) best = k;
    }
    j["reasoning"] = "The KCs all refer to the same underlying skill, and the chosen one states it most clearly.";
    j["representative kc"] = best;
    j["summary name"] = nullptr;
  } else {
    std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) { return freq[a] > freq[b]; });
    std::string summary = order.size() >= 2 ? capitalize(order[0]) + " " + order[1] : capitalize(order[0]) + " concepts";
    j["reasoning"] = "The KCs are related but distinct, so a broader theme is named.";
    j["representative kc"] = nullptr;
    j["summary name"] = summary;
  }
  return maybe_fence(j.dump(2), rng);
}

std::string label_errors(const std::string& user, Rng& rng) {
  const std::string code = between(user, "Incorrect submission:\n```\n", "\n```");
  const auto kcs = bracket_list(user, "The knowledge components are: [");
  if (kcs.empty()) throw TransportError("mock: kc-error-label prompt lists no KCs");
  ordered_json j;
  j["error reasoning"] = ordered_json::array();
  ordered_json labels = ordered_json::object();
  std::map<std::string, int> out;
  for (const auto& k : kcs) out[k] = 0;

  const std::string compact = code;
  if (text::contains(compact, "sortaSum(") && text::contains(compact, "<= 10 && a + b >= 20")) {
    out["Numerical comparisons"] = 1;
    out["Logical operators"] = 1;
    j["error reasoning"].push_back("The condition requires the sum to be both at most 10 and at least 20, which is impossible.");
  } else {
    for (const auto& sig : bug_signatures()) {
      if (!std::regex_search(code, std::regex(sig.pattern))) continue;
      bool hit = false;
      for (const auto& k : kcs) {
        const std::string norm = text::normalize_name(k);
        for (const char* w : sig.kc_words) {
          if (text::contains(norm, w)) {
            out[k] = 1;
            hit = true;
          }
        }
      }
      if (hit) j["error reasoning"].push_back(sig.description);
    }
    bool any = std::any_of(out.begin(), out.end(), [](const auto& p) { return p.second == 1; });
    if (!any) {
      const std::size_t pick = fnv1a64(code) % kcs.size();
      out[kcs[pick]] = 1;
      j["error reasoning"].push_back("The submission mishandles a case related to " + kcs[pick] + ".");
    }
  }
  for (const auto& k : kcs) labels[k] = out[k];
  j["KC error"] = labels;
  return maybe_fence(j.dump(4), rng);
}

const std::map<std::string, std::string>& known_tags() {
  static const std::map<std::string, std::string> m = {
      {"If/Else", "If and else statement"},
      {"NestedIf", "Nested if statements"},
      {"While", "While loop"},
      {"For", "For loop"},
      {"NestedFor", "Nested for loops"},
      {"Math+-*/", "Basic arithmetic operations"},
      {"Math (+-*/)", "Basic arithmetic operations"},
      {"Math%", "Modulus operation"},
      {"LogicAndNotOr", "Logical operators"},
      {"LogicCompareNum", "Numerical comparisons"},
      {"LogicCompare", "Numerical comparisons"},
      {"LogicBoolean", "Boolean logic"},
      {"StringFormat", "String formatting"},
      {"StringConcat", "String concatenation"},
      {"StringIndex", "String indexing"},
      {"StringLen", "String length"},
      {"StringEqual", "String equality comparison"},
      {"CharEqual", "Character equality comparison"},
      {"ArrayIndex", "Array indexing"},
      {"DefFunction", "Function definition"},
  };
  return m;
}

std::string split_camel(const std::string& tag) {
  std::string out;
  for (std::size_t i = 0; i < tag.size(); ++i) {
    const char c = tag[i];
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
      continue;
    }
    if (i > 0 && std::isupper(static_cast<unsigned char>(c)) && std::islower(static_cast<unsigned char>(tag[i - 1])) &&
        !out.empty() && out.back() != ' ') {
      out.push_back(' ');
    }
    out.push_back(out.empty() ? c : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  out = text::trim(out);
  return out.empty() ? tag : capitalize(out);
}

std::string convert_tags(const std::string& user, Rng& rng) {
  const auto tags = bracket_list(user, "The KC list is: [");
  if (tags.empty()) throw TransportError("mock: tag-conversion prompt lists no tags");
  ordered_json j = ordered_json::object();
  for (const auto& t : tags) {
    auto it = known_tags().find(t);
    j[t] = it != known_tags().end() ? it->second : split_camel(t);
  }
  return maybe_fence(j.dump(2), rng);
}

}  // namespace

MockProvider::MockProvider(MockConfig config) : config_(config) {
  if (config_.malformed_rate < 0 || config_.malformed_rate > 1) throw DomainError("mock: malformed_rate must be in [0,1]");
}

std::string MockProvider::complete(const ChatRequest& request) {
  request.validate();
  calls_.fetch_add(1);
  Rng rng(config_.seed, fnv1a64(request.template_id + '\x1f' + request.system_message + '\x1f' + request.user_message));
  if (rng.bernoulli(config_.malformed_rate)) {
    return "Here is my analysis. The solution mainly uses loops and conditionals {\"KC 1\": ";
  }
  const TemplateId id = template_from_string(request.template_id);
  switch (id) {
    case TemplateId::kc_generation:
      return generate_kcs(request.user_message, config_, rng);
    case TemplateId::cluster_label:
      return label_cluster(bracket_list(request.user_message, "The knowledge components list is: ["), rng);
    case TemplateId::kc_error_label:
      return label_errors(request.user_message, rng);
    case TemplateId::tag_conversion:
      return convert_tags(request.user_message, rng);
  }
  throw TransportError("mock: unsupported template");
}

}  // namespace kcgen::llm
