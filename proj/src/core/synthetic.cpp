// SPDX-License-Identifier: Apache-2.0
#include "kcgen/core/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "kcgen/util/digest.hpp"
#include "kcgen/util/rng.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::data::synth {

namespace {

struct Skill {
  const char* name;
  std::vector<const char*> tags;
  const char* phrase;
  std::vector<const char*> correct;
  const char* buggy;
};

// Snippets operate on the method parameters (a, b, str, nums) and accumulate
// into `result`. Variable names are unique per skill so snippets compose.
const std::vector<Skill>& catalogue() {
  static const std::vector<Skill> skills = {
      {"if_else", {"If/Else"}, "add the larger of a and b using a comparison",
       {"if (a > b) {\n  result += a;\n} else {\n  result += b;\n}",
        "result += (a > b) ? a : b;"},
       "if (a < b) {\n  result += a;\n} else {\n  result += b;\n}"},
      {"else_if", {"If/Else", "NestedIf"}, "subtract 1 if a is negative, add 1 if a is positive",
       {"if (a < 0) {\n  result -= 1;\n} else if (a == 0) {\n  result += 0;\n} else {\n  result += 1;\n}"},
       "if (a <= 0) {\n  result -= 1;\n} else if (a == 0) {\n  result += 0;\n} else {\n  result += 1;\n}"},
      {"nested_if", {"NestedIf", "Math%"}, "add 2 when a is positive and b is even",
       {"if (a > 0) {\n  if (b % 2 == 0) {\n    result += 2;\n  }\n}",
        "if (a > 0 && b % 2 == 0) {\n  result += 2;\n}"},
       "if (a > 0) {\n  if (b % 2 == 1) {\n    result += 2;\n  }\n}"},
      {"while_halving", {"While"}, "add how many times b can be halved before reaching 1",
       {"int n = b;\nwhile (n > 1) {\n  n = n / 2;\n  result++;\n}",
        "for (int n = b; n > 1; n /= 2) {\n  result++;\n}"},
       "int n = b;\nwhile (n > 1) {\n  n = n / 2;\n}"},
      {"for_sum", {"For"}, "add the numbers from 1 to a",
       {"for (int i = 1; i <= a; i++) {\n  result += i;\n}",
        "int i = 1;\nwhile (i <= a) {\n  result += i;\n  i++;\n}"},
       "for (int i = 1; i < a; i++) {\n  result += i;\n}"},
      {"nested_for", {"NestedFor", "ArrayIndex"}, "add the number of pairs of equal elements in nums",
       {"for (int p = 0; p < nums.length; p++) {\n  for (int q = p + 1; q < nums.length; q++) {\n    if (nums[p] == nums[q]) {\n      result++;\n    }\n  }\n}"},
       "for (int p = 0; p < nums.length; p++) {\n  for (int q = p; q < nums.length; q++) {\n    if (nums[p] == nums[q]) {\n      result++;\n    }\n  }\n}"},
      {"arithmetic", {"Math+-*/"}, "add a times b minus a",
       {"result += a * b - a;", "int product = a * b;\nresult += product - a;"},
       "result += a * (b - a);"},
      {"modulus", {"Math%"}, "add the last digit of a",
       {"result += a % 10;", "int lastDigit = a % 10;\nresult += lastDigit;"},
       "result += a / 10;"},
      {"logic_or", {"LogicAndNotOr", "LogicCompareNum"}, "add 6 if either a or b is 6",
       {"if (a == 6 || b == 6) {\n  result += 6;\n}",
        "if (!(a != 6 && b != 6)) {\n  result += 6;\n}"},
       "if (a == 6 && b == 6) {\n  result += 6;\n}"},
      {"range_check", {"LogicCompareNum", "LogicAndNotOr"}, "add 1 if a is in the range 10..20 inclusive",
       {"if (a >= 10 && a <= 20) {\n  result += 1;\n}",
        "if (!(a < 10 || a > 20)) {\n  result += 1;\n}"},
       "if (a <= 10 && a >= 20) {\n  result += 1;\n}"},
      {"boolean_flag", {"LogicBoolean"}, "add 1 if a equals b, tracked with a boolean",
       {"boolean same = (a == b);\nif (same) {\n  result += 1;\n}",
        "boolean same = a == b;\nif (same == true) {\n  result += 1;\n}"},
       "boolean same = (a != b);\nif (same) {\n  result += 1;\n}"},
      {"string_format", {"StringFormat"}, "add the length of a label formatted from str and a",
       {"String label = String.format(\"%s-%d\", str, a);\nresult += label.length();"},
       "String label = String.format(\"%s%d\", str, a);\nresult += label.length();"},
      {"string_concat", {"StringConcat"}, "add the length of str joined with itself",
       {"String doubled = str + str;\nresult += doubled.length();",
        "String doubled = str.concat(str);\nresult += doubled.length();"},
       "String doubled = str + \"\";\nresult += doubled.length();"},
      {"substring", {"StringIndex", "StringLen"}, "add the length of str without its first and last characters",
       {"String middle = str.substring(1, str.length() - 1);\nresult += middle.length();"},
       "String middle = str.substring(1, str.length());\nresult += middle.length();"},
      {"string_length", {"StringLen"}, "add the length of str",
       {"result += str.length();", "int len = str.length();\nresult += len;"},
       "result += str.length() - 1;"},
      {"string_equals", {"StringEqual"}, "add 5 if str is \"hello\"",
       {"if (str.equals(\"hello\")) {\n  result += 5;\n}",
        "if (\"hello\".equals(str)) {\n  result += 5;\n}"},
       "if (str == \"hello\") {\n  result += 5;\n}"},
      {"first_char", {"CharEqual", "StringIndex"}, "add 1 if str starts with the letter x",
       {"if (str.length() > 0 && str.charAt(0) == 'x') {\n  result += 1;\n}",
        "if (str.startsWith(\"x\")) {\n  result += 1;\n}"},
       "if (str.charAt(0) == 'x') {\n  result += 1;\n}"},
      {"array_ends", {"ArrayIndex"}, "add the first and last elements of nums",
       {"result += nums[0] + nums[nums.length - 1];",
        "int first = nums[0];\nint last = nums[nums.length - 1];\nresult += first + last;"},
       "result += nums[0] + nums[nums.length];"},
      {"abs_diff", {"Math+-*/"}, "add the absolute difference of a and b",
       {"result += Math.abs(a - b);", "int diff = a - b;\nif (diff < 0) {\n  diff = -diff;\n}\nresult += diff;"},
       "result += a - b;"},
      {"max_value", {"Math+-*/"}, "add the larger of b and 7",
       {"result += Math.max(b, 7);", "result += (b > 7) ? b : 7;"},
       "result += Math.min(b, 7);"},
      {"array_sum", {"For", "ArrayIndex"}, "add the sum of the elements of nums",
       {"for (int x : nums) {\n  result += x;\n}",
        "for (int k = 0; k < nums.length; k++) {\n  result += nums[k];\n}"},
       "for (int k = 1; k < nums.length; k++) {\n  result += nums[k];\n}"},
      {"count_char", {"For", "CharEqual", "StringLen"}, "add the number of times the letter a occurs in str",
       {"for (int c = 0; c < str.length(); c++) {\n  if (str.charAt(c) == 'a') {\n    result++;\n  }\n}"},
       "for (int c = 0; c <= str.length(); c++) {\n  if (str.charAt(c) == 'a') {\n    result++;\n  }\n}"},
      {"reverse", {"For", "StringConcat", "StringIndex"}, "add the length of str reversed",
       {"String reversed = \"\";\nfor (int r = str.length() - 1; r >= 0; r--) {\n  reversed += str.charAt(r);\n}\nresult += reversed.length();",
        "String reversed = new StringBuilder(str).reverse().toString();\nresult += reversed.length();"},
       "String reversed = \"\";\nfor (int r = str.length() - 1; r > 0; r--) {\n  reversed += str.charAt(r);\n}\nresult += reversed.length();"},
      {"index_of", {"StringIndex"}, "add the position of \"bread\" in str",
       {"result += str.indexOf(\"bread\");",
        "int pos = str.indexOf(\"bread\");\nif (pos >= 0) {\n  result += pos;\n}"},
       "result += str.lastIndexOf(\"bread\");"},
      {"ignore_case", {"StringEqual"}, "add 3 if str equals \"hi\" ignoring case",
       {"if (str.toLowerCase().equals(\"hi\")) {\n  result += 3;\n}",
        "if (str.equalsIgnoreCase(\"hi\")) {\n  result += 3;\n}"},
       "if (str.equals(\"hi\")) {\n  result += 3;\n}"},
      {"even_check", {"Math%", "If/Else"}, "add 1 when a is even",
       {"if (a % 2 == 0) {\n  result += 1;\n}"},
       "if (a % 2 == 1) {\n  result += 1;\n}"},
      {"array_copy", {"ArrayIndex", "For"}, "add the length of a copy of nums",
       {"int[] copy = new int[nums.length];\nfor (int t = 0; t < nums.length; t++) {\n  copy[t] = nums[t];\n}\nresult += copy.length;",
        "int[] copy = Arrays.copyOf(nums, nums.length);\nresult += copy.length;"},
       "int[] copy = new int[nums.length - 1];\nfor (int t = 0; t < nums.length; t++) {\n  copy[t] = nums[t];\n}\nresult += copy.length;"},
      {"contains", {"StringIndex"}, "add 4 if str contains \"cat\"",
       {"if (str.contains(\"cat\")) {\n  result += 4;\n}",
        "if (str.indexOf(\"cat\") >= 0) {\n  result += 4;\n}"},
       "if (str.indexOf(\"cat\") > 0) {\n  result += 4;\n}"},
      {"average", {"Math+-*/"}, "add the integer average of a and b",
       {"result += (a + b) / 2;", "int sum = a + b;\nresult += sum / 2;"},
       "result += a + b / 2;"},
      {"rounding", {"Math+-*/"}, "add a rounded to the nearest ten",
       {"result += Math.round(a / 10.0) * 10;"},
       "result += (a / 10) * 10;"},
      {"early_exit", {"For", "If/Else"}, "add elements of nums until a negative one is found",
       {"for (int v : nums) {\n  if (v < 0) {\n    return result;\n  }\n  result += v;\n}"},
       "for (int v : nums) {\n  if (v <= 0) {\n    return result;\n  }\n  result += v;\n}"},
      {"repeat", {"For", "StringConcat"}, "add the length of str repeated a times",
       {"StringBuilder sb = new StringBuilder();\nfor (int w = 0; w < a; w++) {\n  sb.append(str);\n}\nresult += sb.length();"},
       "StringBuilder sb = new StringBuilder();\nfor (int w = 0; w <= a; w++) {\n  sb.append(str);\n}\nresult += sb.length();"},
      {"char_offset", {"CharEqual", "Math+-*/"}, "add the alphabet position of the first letter of str",
       {"if (!str.isEmpty()) {\n  result += str.charAt(0) - 'a';\n}"},
       "if (!str.isEmpty()) {\n  result += str.charAt(0);\n}"},
      {"ends_with", {"StringEqual", "StringIndex"}, "add 2 if str ends with \"ly\"",
       {"if (str.endsWith(\"ly\")) {\n  result += 2;\n}",
        "if (str.length() >= 2 && str.substring(str.length() - 2).equals(\"ly\")) {\n  result += 2;\n}"},
       "if (str.startsWith(\"ly\")) {\n  result += 2;\n}"},
  };
  return skills;
}

std::string indent(const std::string& code, int spaces) {
  std::string pad(static_cast<std::size_t>(spaces), ' ');
  std::string out;
  for (const auto& line : text::split(code, '\n')) {
    out += pad + line + "\n";
  }
  return out;
}

std::string render_method(int problem_number, const std::vector<std::string>& snippets) {
  std::ostringstream os;
  os << "public int solve" << (problem_number < 10 ? "0" : "") << problem_number
     << "(int a, int b, String str, int[] nums) {\n";
  os << "    int result = 0;\n";
  for (const auto& s : snippets) os << indent(s, 4);
  os << "    return result;\n}\n";
  return os.str();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::size_t skill_catalogue_size() { return catalogue().size(); }

Dataset generate_course(const CourseConfig& cfg, CourseTruth* truth) {
  const auto& skills = catalogue();
  Rng rng(cfg.seed);
  Dataset ds;

  // Assign skills to problems, covering the catalogue before repeating.
  std::vector<std::vector<std::size_t>> problem_skills(static_cast<std::size_t>(cfg.n_problems));
  std::vector<std::size_t> pool;
  for (int p = 0; p < cfg.n_problems; ++p) {
    int k = cfg.min_skills_per_problem +
            static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_skills_per_problem -
                                                                  cfg.min_skills_per_problem + 1)));
    auto& chosen = problem_skills[static_cast<std::size_t>(p)];
    while (static_cast<int>(chosen.size()) < k) {
      if (pool.empty()) {
        for (std::size_t j = 0; j < skills.size(); ++j) pool.push_back(j);
        rng.shuffle(pool);
      }
      std::size_t s = pool.back();
      pool.pop_back();
      if (std::find(chosen.begin(), chosen.end(), s) == chosen.end()) chosen.push_back(s);
      if (chosen.size() >= skills.size()) break;
    }
  }

  std::vector<double> difficulty(skills.size());
  for (auto& d : difficulty) d = rng.uniform(-1.0, 1.0);

  for (int p = 0; p < cfg.n_problems; ++p) {
    Problem pr;
    char id[16];
    std::snprintf(id, sizeof id, "p%02d", p + 1);
    pr.problem_id = id;
    std::vector<std::string> phrases;
    std::set<std::string> tags;
    for (auto s : problem_skills[static_cast<std::size_t>(p)]) {
      phrases.emplace_back(skills[s].phrase);
      for (const char* t : skills[s].tags) tags.insert(t);
    }
    tags.insert("DefFunction");
    pr.statement =
        "Write a function in Java that implements the following logic: Given two ints a and b, a "
        "string str and an int array nums, start with a result of 0, then " +
        text::join(phrases, ", then ") + ". Return the result.";
    pr.human_kc_tags.assign(tags.begin(), tags.end());
    ds.problems.push_back(std::move(pr));
    if (truth) {
      std::vector<std::string> names;
      for (auto s : problem_skills[static_cast<std::size_t>(p)]) names.emplace_back(skills[s].name);
      truth->problem_skills.push_back(std::move(names));
    }
  }

  for (int st = 0; st < cfg.n_students; ++st) {
    char sid[16];
    std::snprintf(sid, sizeof sid, "s%03d", st + 1);
    const double ability = rng.normal();
    std::vector<int> practice(skills.size(), 0);

    std::vector<int> order;
    for (int p = 0; p < cfg.n_problems; ++p) {
      if (!rng.bernoulli(cfg.skip_probability)) order.push_back(p);
    }
    if (order.empty()) order.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_problems))));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      if (rng.bernoulli(cfg.swap_probability)) std::swap(order[i], order[i + 1]);
    }

    StudentSequence seq;
    seq.student_id = sid;
    std::int64_t next_index = 0;
    for (int p : order) {
      const auto& ps = problem_skills[static_cast<std::size_t>(p)];
      bool fixed_all = false;
      std::vector<bool> erred(ps.size(), false);
      for (std::size_t j = 0; j < ps.size(); ++j) {
        const std::size_t s = ps[j];
        const int t = ++practice[s];
        const double p0 = sigmoid(difficulty[s] - ability + cfg.error_offset);
        const double perr = p0 * std::pow(static_cast<double>(t), -cfg.practice_exponent);
        erred[j] = rng.bernoulli(perr);
      }
      // first submission, then possibly one fixing resubmission
      for (int attempt = 0; attempt < 2 && !fixed_all; ++attempt) {
        std::vector<std::string> snippets;
        std::vector<std::string> erred_names;
        bool correct = true;
        for (std::size_t j = 0; j < ps.size(); ++j) {
          const auto& skill = skills[ps[j]];
          if (erred[j]) {
            snippets.emplace_back(skill.buggy);
            erred_names.emplace_back(skill.name);
            correct = false;
          } else {
            auto style = Rng::mix(fnv1a64(sid), ps[j]) % skill.correct.size();
            snippets.emplace_back(skill.correct[style]);
          }
        }
        Submission sub;
        sub.student_id = sid;
        sub.problem_id = ds.problems[static_cast<std::size_t>(p)].problem_id;
        sub.order_index = next_index++;
        sub.code = render_method(p + 1, snippets);
        sub.correct = correct;
        seq.responses.push_back(std::move(sub));
        if (truth) truth->erred_skills.push_back(std::move(erred_names));
        if (correct || !rng.bernoulli(cfg.resubmit_probability)) {
          fixed_all = true;
        } else {
          std::fill(erred.begin(), erred.end(), false);
        }
      }
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

ToyDataset generate_toy(int n_students, int n_problems) {
  struct ToySkill {
    const char* kc;
    const char* good;
    const char* bad;
  };
  static const std::vector<ToySkill> skills = {
      {"Loop iteration", "for (int i = 0; i < n; i++) { s += i; }",
       "for (int i = 0; i <= n; i++) { s += i; }"},
      {"String comparison", "if (w.equals(t)) { s += 1; }", "if (w == t) { s += 1; }"},
      {"Array indexing", "s += v[v.length - 1];", "s += v[v.length];"},
      {"Numerical comparisons", "if (n >= 10) { s += 2; }", "if (n > 10) { s += 2; }"},
  };
  // Skill profiles: which of the four skills a student has mastered.
  static const std::vector<std::vector<bool>> profiles = {
      {true, true, true, true},
      {true, true, false, false},
      {false, true, true, false},
      {true, false, true, true},
      {false, false, false, true},
  };
  static const std::vector<const char*> warmup_styles = {
      "int s = 0; return s;",
      "int s = 0; s = s + 0; return s;",
      "int s = 0; s += 0; return s;",
      "int s = 0; s = s * 1; return s;",
      "int s = 0; s -= 0; return s;",
  };

  ToyDataset toy;
  toy.kc_names = {"Variable assignment"};
  for (const auto& s : skills) toy.kc_names.emplace_back(s.kc);

  // problem 0: warm-up (KC 0); later problems cycle through skill pairs
  std::vector<std::vector<int>> problem_skill_idx;
  problem_skill_idx.push_back({});
  static const std::vector<std::vector<int>> combos = {{0}, {1}, {2}, {3}, {0, 1},
                                                       {2, 3}, {0, 2}, {1, 3}, {0, 3}};
  for (int p = 1; p < n_problems; ++p) {
    problem_skill_idx.push_back(combos[static_cast<std::size_t>(p - 1) % combos.size()]);
  }
  for (int p = 0; p < n_problems; ++p) {
    Problem pr;
    pr.problem_id = "t" + std::to_string(p);
    pr.statement = p == 0 ? "Return zero" : "Compute task " + std::to_string(p);
    std::vector<int> kcs;
    if (p == 0) {
      kcs.push_back(0);
    } else {
      for (int s : problem_skill_idx[static_cast<std::size_t>(p)]) kcs.push_back(s + 1);
    }
    for (int k : kcs) pr.human_kc_tags.push_back(toy.kc_names[static_cast<std::size_t>(k)]);
    toy.problem_kcs.push_back(kcs);
    toy.dataset.problems.push_back(std::move(pr));
  }

  for (int st = 0; st < n_students; ++st) {
    const std::size_t prof = static_cast<std::size_t>(st) % profiles.size();
    StudentSequence seq;
    seq.student_id = "u" + std::to_string(st);
    for (int p = 0; p < n_problems; ++p) {
      Submission sub;
      sub.student_id = seq.student_id;
      sub.problem_id = toy.dataset.problems[static_cast<std::size_t>(p)].problem_id;
      sub.order_index = p;
      if (p == 0) {
        sub.code = warmup_styles[prof % warmup_styles.size()];
        sub.correct = true;
      } else {
        bool ok = true;
        std::vector<std::string> parts;
        for (int s : problem_skill_idx[static_cast<std::size_t>(p)]) {
          bool mastered = profiles[prof][static_cast<std::size_t>(s)];
          ok = ok && mastered;
          parts.emplace_back(mastered ? skills[static_cast<std::size_t>(s)].good
                                      : skills[static_cast<std::size_t>(s)].bad);
        }
        sub.code = text::join(parts, " ");
        sub.correct = ok;
      }
      seq.responses.push_back(std::move(sub));
    }
    toy.dataset.sequences.push_back(std::move(seq));
  }
  return toy;
}

}  // namespace kcgen::data::synth
