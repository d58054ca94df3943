// SPDX-License-Identifier: Apache-2.0
#include "kcgen/eval/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <set>
#include <unordered_map>

#include "syntax_internal.hpp"

namespace kcgen::eval {

Language parse_language(std::string_view name) {
  if (name == "java") return Language::java;
  if (name == "python") return Language::python;
  throw DomainError("unsupported language '" + std::string(name) + "'");
}

std::string to_string(Language lang) { return lang == Language::java ? "java" : "python"; }

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

const std::vector<std::string>& operators(Language lang) {
  static const std::vector<std::string> java = {">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--",
                                                "&&",   "||",  "==",  "!=",  "<=",  ">=", "+=", "-=", "*=",
                                                "/=",   "%=",  "&=",  "|=",  "^=",  "<<", ">>"};
  static const std::vector<std::string> python = {"**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//",
                                                  "==",  "!=",  "<=",  ">=",  "+=",  "-=", "*=", "/=", "%=",
                                                  "&=",  "|=",  "^=",  "@=",  "<<",  ">>"};
  return lang == Language::java ? java : python;
}

std::size_t scan_number(std::string_view s, std::size_t i) {
  std::size_t j = i;
  if (s[j] == '0' && j + 1 < s.size() && (s[j + 1] == 'x' || s[j + 1] == 'X' || s[j + 1] == 'b' || s[j + 1] == 'B')) {
    j += 2;
    while (j < s.size() && (std::isxdigit(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
  } else {
    while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
    if (j < s.size() && s[j] == '.' && !(j + 1 < s.size() && s[j + 1] == '.')) {
      ++j;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
    }
    if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
      if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
        j = k;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
    }
  }
  while (j < s.size() && std::strchr("lLfFdDjJ", s[j]) != nullptr && s[j] != '\0') ++j;
  return j;
}

// Returns the end offset of a string literal starting at i (after any prefix).
std::size_t scan_string(std::string_view s, std::size_t i, int& line) {
  const char q = s[i];
  const bool triple = i + 2 < s.size() && s[i + 1] == q && s[i + 2] == q;
  std::size_t j = i + (triple ? 3 : 1);
  while (j < s.size()) {
    if (s[j] == '\\') {
      if (j + 1 < s.size() && s[j + 1] == '\n') ++line;
      j += 2;
      continue;
    }
    if (triple) {
      if (s.substr(j, 3) == std::string(3, q)) return j + 3;
    } else if (s[j] == q) {
      return j + 1;
    } else if (s[j] == '\n') {
      throw ParseError("line " + std::to_string(line) + ": unterminated string literal");
    }
    if (s[j] == '\n') ++line;
    ++j;
  }
  throw ParseError("line " + std::to_string(line) + ": unterminated string literal");
}

}  // namespace

std::vector<SourceToken> lex(std::string_view s, Language lang) {
  std::vector<SourceToken> out;
  const auto& ops = operators(lang);
  const bool py = lang == Language::python;
  int line = 1;
  int depth = 0;  // bracket nesting; Python layout is suspended inside brackets
  std::vector<int> indents{0};
  bool at_line_start = true;
  auto push = [&](SourceToken::Kind k, std::string text) { out.push_back({k, std::move(text), line}); };

  std::size_t i = 0;
  while (i < s.size()) {
    if (py && at_line_start && depth == 0) {
      int col = 0;
      std::size_t j = i;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\f')) {
        col = s[j] == '\t' ? (col / 8 + 1) * 8 : col + 1;
        ++j;
      }
      if (j >= s.size()) {
        i = j;
        break;
      }
      if (s[j] == '\n' || s[j] == '\r' || s[j] == '#') {
        // Blank or comment-only line.
        while (j < s.size() && s[j] != '\n') ++j;
        if (j < s.size()) {
          ++j;
          ++line;
        }
        i = j;
        continue;
      }
      if (col > indents.back()) {
        indents.push_back(col);
        push(SourceToken::indent, "");
      } else {
        while (col < indents.back()) {
          indents.pop_back();
          push(SourceToken::dedent, "");
        }
        if (col != indents.back()) throw ParseError("line " + std::to_string(line) + ": inconsistent dedent");
      }
      at_line_start = false;
      i = j;
      continue;
    }
    const char c = s[i];
    if (c == '\n') {
      if (py && depth == 0 && !out.empty() && out.back().kind != SourceToken::newline) push(SourceToken::newline, "");
      ++line;
      ++i;
      at_line_start = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (py && c == '\\' && i + 1 < s.size() && (s[i + 1] == '\n' || s[i + 1] == '\r')) {
      i += s[i + 1] == '\r' && i + 2 < s.size() && s[i + 2] == '\n' ? 3 : 2;
      ++line;
      continue;
    }
    if (py && c == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    if (!py && c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    if (!py && c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      const auto end = s.find("*/", i + 2);
      if (end == std::string_view::npos) throw ParseError("line " + std::to_string(line) + ": unterminated comment");
      line += static_cast<int>(std::count(s.begin() + static_cast<std::ptrdiff_t>(i),
                                          s.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
      i = end + 2;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      // Python string prefixes such as f"..." or rb'...'.
      if (py && j < s.size() && (s[j] == '"' || s[j] == '\'') && j - i <= 2) {
        std::string prefix(s.substr(i, j - i));
        std::transform(prefix.begin(), prefix.end(), prefix.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (prefix.find_first_not_of("rbfu") == std::string::npos) {
          const int start_line = line;
          const std::size_t end = scan_string(s, j, line);
          out.push_back({SourceToken::string, std::string(s.substr(i, end - i)), start_line});
          i = end;
          continue;
        }
      }
      push(SourceToken::identifier, std::string(s.substr(i, j - i)));
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      const std::size_t j = scan_number(s, i);
      push(SourceToken::number, std::string(s.substr(i, j - i)));
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      const int start_line = line;
      const std::size_t end = scan_string(s, i, line);
      out.push_back({SourceToken::string, std::string(s.substr(i, end - i)), start_line});
      i = end;
      continue;
    }
    std::size_t len = 1;
    for (const auto& op : ops) {
      if (s.substr(i, op.size()) == op) {
        len = op.size();
        break;
      }
    }
    std::string op(s.substr(i, len));
    if (op == "(" || op == "[" || op == "{") ++depth;
    if ((op == ")" || op == "]" || op == "}") && depth > 0) --depth;
    push(SourceToken::op, std::move(op));
    i += len;
  }
  if (py) {
    if (!out.empty() && out.back().kind != SourceToken::newline && out.back().kind != SourceToken::dedent) {
      push(SourceToken::newline, "");
    }
    while (indents.size() > 1) {
      indents.pop_back();
      push(SourceToken::dedent, "");
    }
  }
  push(SourceToken::end, "");
  return out;
}

std::vector<std::string> code_tokens(std::string_view code, Language lang) {
  std::vector<std::string> out;
  for (auto& t : lex(code, lang)) {
    if (t.kind == SourceToken::identifier || t.kind == SourceToken::number || t.kind == SourceToken::string ||
        t.kind == SourceToken::op) {
      out.push_back(std::move(t.text));
    }
  }
  return out;
}

SyntaxNode parse(std::string_view code, Language lang) {
  auto toks = lex(code, lang);
  return lang == Language::java ? detail::parse_java(std::move(toks)) : detail::parse_python(std::move(toks));
}

namespace {

std::string sexp_into(const SyntaxNode& n, std::vector<std::string>& out) {
  std::string s = "(" + n.type;
  for (const auto& c : n.children) s += " " + sexp_into(c, out);
  s += ")";
  out.push_back(s);
  return s;
}

}  // namespace

std::vector<std::string> subtree_sexps(const SyntaxNode& root) {
  std::vector<std::string> post;
  sexp_into(root, post);
  return post;
}

namespace {

struct FlowBuilder {
  std::set<std::string> defined;
  std::vector<DataflowEdge> edges;

  static void collect_reads(const SyntaxNode& n, std::vector<std::string>& out) {
    if (n.type == "identifier") {
      if (std::find(out.begin(), out.end(), n.text) == out.end()) out.push_back(n.text);
      return;
    }
    if (n.type == "lambda_expression" || n.type == "lambda") return;
    for (const auto& c : n.children) collect_reads(c, out);
  }

  void define(const std::string& name, std::vector<std::string> parents) {
    std::sort(parents.begin(), parents.end());
    edges.push_back({name, "computedFrom", std::move(parents)});
    defined.insert(name);
  }

  // Binds every plain name in a (possibly destructuring) target.
  void bind_target(const SyntaxNode& target, const std::vector<std::string>& parents) {
    if (target.type == "identifier") {
      define(target.text, parents);
      return;
    }
    if (target.type == "pattern_list" || target.type == "expression_list" || target.type == "tuple" ||
        target.type == "list" || target.type == "list_splat" || target.type == "parenthesized_expression") {
      for (const auto& c : target.children) bind_target(c, parents);
      return;
    }
    // a[i] = v, obj.f = v: the base and index are reads.
    visit(target);
  }

  static bool is_param(const std::string& t) {
    return t == "formal_parameter" || t == "catch_formal_parameter" || t == "parameter" || t == "default_parameter";
  }

  void visit(const SyntaxNode& n) {
    const std::string& t = n.type;
    if (t == "identifier") {
      if (defined.count(n.text)) edges.push_back({n.text, "comesFrom", {n.text}});
      return;
    }
    if (t == "assignment_expression" || t == "assignment" || t == "augmented_assignment") {
      if (n.children.size() < 2) return;
      visit(n.children[1]);
      std::vector<std::string> parents;
      collect_reads(n.children[1], parents);
      const bool augmented = t == "augmented_assignment" || n.text != "=";
      if (augmented) {
        visit(n.children[0]);
        collect_reads(n.children[0], parents);
      }
      bind_target(n.children[0], parents);
      return;
    }
    if (t == "variable_declarator") {
      std::vector<std::string> parents;
      if (n.children.size() > 1) {
        visit(n.children[1]);
        collect_reads(n.children[1], parents);
      }
      define(n.children[0].text, parents);
      return;
    }
    if (t == "update_expression") {
      std::vector<std::string> parents;
      collect_reads(n.children[0], parents);
      visit(n.children[0]);
      if (n.children[0].type == "identifier") define(n.children[0].text, parents);
      return;
    }
    if (is_param(t)) {
      for (const auto& c : n.children) {
        if (c.type == "identifier") {
          define(c.text, {});
        } else if (c.type == "list_splat_pattern" || c.type == "dictionary_splat_pattern") {
          define(c.children[0].text, {});
        } else if (t == "default_parameter" && c.type != "type") {
          visit(c);
        }
      }
      return;
    }
    if (t == "enhanced_for_statement") {
      visit(n.children[2]);
      std::vector<std::string> parents;
      collect_reads(n.children[2], parents);
      define(n.children[1].text, parents);
      visit(n.children[3]);
      return;
    }
    if (t == "for_in_statement") {
      visit(n.children[1]);
      std::vector<std::string> parents;
      collect_reads(n.children[1], parents);
      bind_target(n.children[0], parents);
      for (std::size_t i = 2; i < n.children.size(); ++i) visit(n.children[i]);
      return;
    }
    if (t == "for_in_clause") {
      visit(n.children[1]);
      std::vector<std::string> parents;
      collect_reads(n.children[1], parents);
      bind_target(n.children[0], parents);
      return;
    }
    if (t == "list_comprehension" || t == "set_comprehension" || t == "generator_expression" ||
        t == "dictionary_comprehension") {
      // Clauses bind names used by the element expression.
      for (std::size_t i = 1; i < n.children.size(); ++i) visit(n.children[i]);
      visit(n.children[0]);
      return;
    }
    if (t == "with_item" && n.children.size() == 2) {
      visit(n.children[0]);
      std::vector<std::string> parents;
      collect_reads(n.children[0], parents);
      bind_target(n.children[1], parents);
      return;
    }
    if (t == "as_pattern") {
      define(n.children[0].text, {});
      return;
    }
    for (const auto& c : n.children) visit(c);
  }
};

}  // namespace

std::vector<DataflowEdge> extract_dataflow(const SyntaxNode& root) {
  FlowBuilder b;
  b.visit(root);
  std::unordered_map<std::string, std::string> rename;
  auto canon = [&](const std::string& v) {
    auto it = rename.find(v);
    if (it != rename.end()) return it->second;
    std::string r = "var_" + std::to_string(rename.size());
    rename.emplace(v, r);
    return r;
  };
  for (auto& e : b.edges) {
    e.variable = canon(e.variable);
    for (auto& p : e.parents) p = canon(p);
    std::sort(e.parents.begin(), e.parents.end());
  }
  return b.edges;
}

}  // namespace kcgen::eval
