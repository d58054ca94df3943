// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kcgen::eval {

enum class Language { java, python };

Language parse_language(std::string_view name);
std::string to_string(Language lang);

/// Concrete syntax tree with named nodes only. `text` is set on leaves
/// (identifiers, literals, operator-bearing expressions keep their operator).
struct SyntaxNode {
  std::string type;
  std::string text;
  std::vector<SyntaxNode> children;
};

struct SourceToken {
  enum Kind { identifier, number, string, op, newline, indent, dedent, end };
  Kind kind = end;
  std::string text;
  int line = 0;
};

/// Language-aware lexer. For Python the result includes layout tokens.
std::vector<SourceToken> lex(std::string_view code, Language lang);

/// Token texts without layout tokens, as used for n-gram matching.
std::vector<std::string> code_tokens(std::string_view code, Language lang);

/// Parses a compilation unit. Java also accepts a bare method or a bare
/// statement list, which is how student submissions usually arrive.
/// Throws ParseError on malformed input.
SyntaxNode parse(std::string_view code, Language lang);

/// S-expression (node types only) of every subtree, in pre-order.
std::vector<std::string> subtree_sexps(const SyntaxNode& root);

struct DataflowEdge {
  std::string variable;
  std::string relation;  // "comesFrom" or "computedFrom"
  std::vector<std::string> parents;
  bool operator==(const DataflowEdge&) const = default;
  auto operator<=>(const DataflowEdge&) const = default;
};

/// Def-use edges with variables renamed var_0, var_1, ... by first appearance.
std::vector<DataflowEdge> extract_dataflow(const SyntaxNode& root);

}  // namespace kcgen::eval
