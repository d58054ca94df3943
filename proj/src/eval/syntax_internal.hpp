// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "kcgen/eval/syntax.hpp"
#include "kcgen/util/error.hpp"

namespace kcgen::eval::detail {

class TokenCursor {
 public:
  explicit TokenCursor(std::vector<SourceToken> tokens) : toks_(std::move(tokens)) {}

  const SourceToken& peek(std::size_t k = 0) const {
    const std::size_t i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  bool at(std::string_view text, std::size_t k = 0) const {
    const auto& t = peek(k);
    return (t.kind == SourceToken::op || t.kind == SourceToken::identifier) && t.text == text;
  }
  bool at_kind(SourceToken::Kind kind, std::size_t k = 0) const { return peek(k).kind == kind; }
  bool done() const { return peek().kind == SourceToken::end; }
  const SourceToken& next() {
    const auto& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool accept(std::string_view text) {
    if (!at(text)) return false;
    next();
    return true;
  }
  void expect(std::string_view text) {
    if (!accept(text)) fail("expected '" + std::string(text) + "'");
  }
  [[noreturn]] void fail(const std::string& what) const {
    const auto& t = peek();
    throw ParseError("line " + std::to_string(t.line) + ": " + what + " near '" + t.text + "'");
  }
  std::size_t mark() const { return pos_; }
  void reset(std::size_t m) { pos_ = m; }
  // Splits a compound '>>' or '>>>' so generic argument lists can close one level.
  void split_angle() {
    auto& t = toks_[pos_];
    if (t.kind == SourceToken::op && t.text.size() > 1 && t.text[0] == '>' &&
        t.text.find_first_not_of('>') == std::string::npos) {
      SourceToken rest = t;
      rest.text = t.text.substr(1);
      t.text = ">";
      toks_.insert(toks_.begin() + static_cast<std::ptrdiff_t>(pos_) + 1, rest);
    }
  }

 private:
  std::vector<SourceToken> toks_;
  std::size_t pos_ = 0;
};

inline SyntaxNode node(std::string type, std::vector<SyntaxNode> children = {}, std::string text = {}) {
  return SyntaxNode{std::move(type), std::move(text), std::move(children)};
}

SyntaxNode parse_java(std::vector<SourceToken> tokens);
SyntaxNode parse_python(std::vector<SourceToken> tokens);

}  // namespace kcgen::eval::detail
