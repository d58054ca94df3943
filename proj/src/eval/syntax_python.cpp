// SPDX-License-Identifier: Apache-2.0
// Recursive-descent parser for a practical subset of Python 3.
#include <algorithm>
#include <unordered_set>

#include "syntax_internal.hpp"

namespace kcgen::eval::detail {
namespace {

const std::unordered_set<std::string> kKeywords = {
    "False", "None",   "True",    "and",      "as",     "assert", "async", "await",  "break",
    "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",    "while",  "with",  "yield"};
const std::unordered_set<std::string> kAugOps = {"+=", "-=", "*=",  "/=",  "//=", "%=", "**=",
                                                 "&=", "|=", "^=", "<<=", ">>=", "@="};

class PythonParser {
 public:
  explicit PythonParser(std::vector<SourceToken> toks) : c_(std::move(toks)) {}

  SyntaxNode module() {
    SyntaxNode root = node("module");
    while (!c_.done()) {
      if (c_.at_kind(SourceToken::newline)) {
        c_.next();
        continue;
      }
      statement(root.children);
    }
    return root;
  }

 private:
  TokenCursor c_;

  bool is_name(std::size_t k = 0) const {
    const auto& t = c_.peek(k);
    return t.kind == SourceToken::identifier && !kKeywords.count(t.text);
  }
  std::string ident() {
    if (!is_name()) c_.fail("expected identifier");
    return c_.next().text;
  }
  SyntaxNode variable() { return node("identifier", {}, ident()); }
  SyntaxNode name() { return node("name", {}, ident()); }

  void end_of_line() {
    if (c_.at_kind(SourceToken::newline)) {
      c_.next();
    } else if (!c_.done()) {
      c_.fail("expected end of line");
    }
  }

  void statement(std::vector<SyntaxNode>& out) {
    const auto& t = c_.peek();
    if (t.kind == SourceToken::indent) c_.fail("unexpected indent");
    if (c_.at("@")) {
      SyntaxNode d = node("decorated_definition");
      while (c_.accept("@")) {
        d.children.push_back(node("decorator", {expression()}));
        end_of_line();
      }
      if (c_.at("def")) d.children.push_back(function_def());
      else if (c_.at("class")) d.children.push_back(class_def());
      else c_.fail("expected definition after decorator");
      out.push_back(std::move(d));
      return;
    }
    if (c_.at("def")) return out.push_back(function_def());
    if (c_.at("class")) return out.push_back(class_def());
    if (c_.at("if")) return out.push_back(if_statement());
    if (c_.at("while")) {
      c_.next();
      SyntaxNode n = node("while_statement", {expression()});
      n.children.push_back(suite());
      if (c_.at("else")) n.children.push_back(else_clause());
      return out.push_back(std::move(n));
    }
    if (c_.at("for")) return out.push_back(for_statement());
    if (c_.at("try")) return out.push_back(try_statement());
    if (c_.at("with")) {
      c_.next();
      SyntaxNode n = node("with_statement");
      do {
        SyntaxNode item = node("with_item", {expression()});
        if (c_.accept("as")) item.children.push_back(target_list());
        n.children.push_back(std::move(item));
      } while (c_.accept(","));
      n.children.push_back(suite());
      return out.push_back(std::move(n));
    }
    simple_statements(out);
  }

  SyntaxNode suite() {
    c_.expect(":");
    SyntaxNode b = node("block");
    if (!c_.at_kind(SourceToken::newline)) {
      simple_statements(b.children);
      return b;
    }
    c_.next();
    if (!c_.at_kind(SourceToken::indent)) c_.fail("expected an indented block");
    c_.next();
    while (!c_.at_kind(SourceToken::dedent)) {
      if (c_.done()) c_.fail("unterminated block");
      if (c_.at_kind(SourceToken::newline)) {
        c_.next();
        continue;
      }
      statement(b.children);
    }
    c_.next();
    return b;
  }

  SyntaxNode function_def() {
    c_.expect("def");
    SyntaxNode n = node("function_definition", {name()});
    n.children.push_back(parameters());
    if (c_.accept("->")) n.children.push_back(node("type", {expression()}));
    n.children.push_back(suite());
    return n;
  }

  SyntaxNode parameters() {
    SyntaxNode ps = node("parameters");
    c_.expect("(");
    while (!c_.accept(")")) {
      if (c_.accept("/")) {
      } else if (c_.at("*") || c_.at("**")) {
        const std::string star = c_.next().text;
        if (is_name()) {
          SyntaxNode p = node(star == "*" ? "list_splat_pattern" : "dictionary_splat_pattern", {variable()});
          if (c_.accept(":")) p.children.push_back(node("type", {expression()}));
          ps.children.push_back(node("parameter", {std::move(p)}));
        }
      } else {
        SyntaxNode p = node("parameter", {variable()});
        if (c_.accept(":")) p.children.push_back(node("type", {expression()}));
        if (c_.accept("=")) {
          p.children.push_back(expression());
          p.type = "default_parameter";
        }
        ps.children.push_back(std::move(p));
      }
      if (!c_.accept(",")) {
        c_.expect(")");
        break;
      }
    }
    return ps;
  }

  SyntaxNode class_def() {
    c_.expect("class");
    SyntaxNode n = node("class_definition", {name()});
    if (c_.at("(")) n.children.push_back(call_arguments());
    n.children.push_back(suite());
    return n;
  }

  SyntaxNode else_clause() {
    c_.expect("else");
    return node("else_clause", {suite()});
  }

  SyntaxNode if_statement() {
    c_.expect("if");
    SyntaxNode n = node("if_statement", {expression()});
    n.children.push_back(suite());
    while (c_.at("elif")) {
      c_.next();
      SyntaxNode e = node("elif_clause", {expression()});
      e.children.push_back(suite());
      n.children.push_back(std::move(e));
    }
    if (c_.at("else")) n.children.push_back(else_clause());
    return n;
  }

  SyntaxNode for_statement() {
    c_.expect("for");
    SyntaxNode target = target_list();
    c_.expect("in");
    SyntaxNode n = node("for_in_statement", {std::move(target), expression_list()});
    n.children.push_back(suite());
    if (c_.at("else")) n.children.push_back(else_clause());
    return n;
  }

  SyntaxNode try_statement() {
    c_.expect("try");
    SyntaxNode n = node("try_statement", {suite()});
    while (c_.at("except")) {
      c_.next();
      SyntaxNode e = node("except_clause");
      c_.accept("*");
      if (!c_.at(":")) {
        e.children.push_back(expression());
        if (c_.accept("as")) e.children.push_back(node("as_pattern", {variable()}));
        else if (c_.accept(",")) e.children.push_back(node("as_pattern", {variable()}));
      }
      e.children.push_back(suite());
      n.children.push_back(std::move(e));
    }
    if (c_.at("else")) n.children.push_back(else_clause());
    if (c_.at("finally")) {
      c_.next();
      n.children.push_back(node("finally_clause", {suite()}));
    }
    if (n.children.size() < 2) c_.fail("try without except or finally");
    return n;
  }

  void simple_statements(std::vector<SyntaxNode>& out) {
    do {
      if (c_.at_kind(SourceToken::newline) || c_.done()) break;
      out.push_back(simple_statement());
    } while (c_.accept(";"));
    end_of_line();
  }

  SyntaxNode simple_statement() {
    if (c_.accept("pass")) return node("pass_statement");
    if (c_.accept("break")) return node("break_statement");
    if (c_.accept("continue")) return node("continue_statement");
    if (c_.accept("return")) {
      SyntaxNode n = node("return_statement");
      if (!c_.at_kind(SourceToken::newline) && !c_.at(";") && !c_.done()) n.children.push_back(expression_list());
      return n;
    }
    if (c_.accept("raise")) {
      SyntaxNode n = node("raise_statement");
      if (!c_.at_kind(SourceToken::newline) && !c_.at(";") && !c_.done()) {
        n.children.push_back(expression());
        if (c_.accept("from")) n.children.push_back(expression());
      }
      return n;
    }
    if (c_.accept("assert")) {
      SyntaxNode n = node("assert_statement", {expression()});
      if (c_.accept(",")) n.children.push_back(expression());
      return n;
    }
    if (c_.accept("del")) return node("delete_statement", {expression_list()});
    if (c_.at("global") || c_.at("nonlocal")) {
      SyntaxNode n = node(c_.next().text + "_statement");
      do {
        n.children.push_back(variable());
      } while (c_.accept(","));
      return n;
    }
    if (c_.at("import")) {
      c_.next();
      SyntaxNode n = node("import_statement");
      do {
        n.children.push_back(dotted_name());
        if (c_.accept("as")) n.children.push_back(name());
      } while (c_.accept(","));
      return n;
    }
    if (c_.at("from")) {
      c_.next();
      SyntaxNode n = node("import_from_statement");
      while (c_.accept(".") || c_.accept("...")) {
      }
      if (!c_.at("import")) n.children.push_back(dotted_name());
      c_.expect("import");
      const bool paren = c_.accept("(");
      if (c_.accept("*")) {
        n.children.push_back(node("wildcard_import"));
      } else {
        do {
          if (paren && c_.at(")")) break;
          n.children.push_back(dotted_name());
          if (c_.accept("as")) n.children.push_back(name());
        } while (c_.accept(","));
      }
      if (paren) c_.expect(")");
      return n;
    }
    SyntaxNode lhs = expression_list(true);
    if (c_.at("=")) {
      std::vector<SyntaxNode> chain{std::move(lhs)};
      while (c_.accept("=")) chain.push_back(c_.at("yield") ? yield_expr() : expression_list(true));
      SyntaxNode value = std::move(chain.back());
      chain.pop_back();
      while (!chain.empty()) {
        value = node("assignment", {std::move(chain.back()), std::move(value)}, "=");
        chain.pop_back();
      }
      return node("expression_statement", {std::move(value)});
    }
    if (c_.at_kind(SourceToken::op) && kAugOps.count(c_.peek().text)) {
      const std::string op = c_.next().text;
      return node("expression_statement", {node("augmented_assignment", {std::move(lhs), expression_list()}, op)});
    }
    if (c_.accept(":")) {
      SyntaxNode ann = node("type", {expression()});
      if (c_.accept("=")) {
        return node("expression_statement", {node("assignment", {std::move(lhs), expression_list(), std::move(ann)}, "=")});
      }
      return node("expression_statement", {node("annotation", {std::move(lhs), std::move(ann)})});
    }
    return node("expression_statement", {std::move(lhs)});
  }

  SyntaxNode yield_expr() {
    c_.expect("yield");
    SyntaxNode n = node("yield");
    if (c_.accept("from")) {
      n.children.push_back(expression());
    } else if (!c_.at_kind(SourceToken::newline) && !c_.at(")") && !c_.done()) {
      n.children.push_back(expression_list());
    }
    return n;
  }

  SyntaxNode dotted_name() {
    SyntaxNode n = node("dotted_name", {name()});
    while (c_.accept(".")) n.children.push_back(name());
    return n;
  }

  SyntaxNode target_list() {
    SyntaxNode first = star_or(/*allow_cond=*/false);
    if (!c_.at(",")) return first;
    SyntaxNode t = node("pattern_list", {std::move(first)});
    while (c_.accept(",")) {
      if (c_.at("in") || c_.at("=") || c_.at(":")) break;
      t.children.push_back(star_or(false));
    }
    return t;
  }

  SyntaxNode star_or(bool allow_cond) {
    if (c_.accept("*")) return node("list_splat", {bitwise_or()});
    return allow_cond ? expression() : bitwise_or();
  }

  // Comma-separated expressions; a trailing comma or several items yield a tuple.
  SyntaxNode expression_list(bool allow_star = false) {
    SyntaxNode first = allow_star && c_.at("*") ? star_or(true) : expression();
    if (!c_.at(",")) return first;
    SyntaxNode t = node("expression_list", {std::move(first)});
    while (c_.accept(",")) {
      if (c_.at_kind(SourceToken::newline) || c_.at("=") || c_.at(")") || c_.at(";") || c_.at(":") || c_.done() ||
          (c_.at_kind(SourceToken::op) && kAugOps.count(c_.peek().text))) {
        break;
      }
      t.children.push_back(allow_star && c_.at("*") ? star_or(true) : expression());
    }
    return t;
  }

  SyntaxNode expression() {
    if (c_.at("lambda")) return lambda();
    if (c_.at("yield")) return yield_expr();
    SyntaxNode e = disjunction();
    if (c_.at("if")) {
      // Only a conditional expression if an else follows; comprehension ifs
      // are handled by the caller.
      const std::size_t m = c_.mark();
      c_.next();
      SyntaxNode cond = disjunction();
      if (!c_.accept("else")) {
        c_.reset(m);
        return e;
      }
      return node("conditional_expression", {std::move(e), std::move(cond), expression()});
    }
    if (c_.at(":=")) {
      c_.next();
      return node("named_expression", {std::move(e), expression()});
    }
    return e;
  }

  SyntaxNode lambda() {
    c_.expect("lambda");
    SyntaxNode ps = node("lambda_parameters");
    while (!c_.at(":")) {
      c_.accept("*");
      c_.accept("**");
      SyntaxNode p = node("parameter", {variable()});
      if (c_.accept("=")) {
        p.children.push_back(expression());
        p.type = "default_parameter";
      }
      ps.children.push_back(std::move(p));
      if (!c_.accept(",")) break;
    }
    c_.expect(":");
    return node("lambda", {std::move(ps), expression()});
  }

  SyntaxNode disjunction() {
    SyntaxNode l = conjunction();
    while (c_.accept("or")) l = node("boolean_operator", {std::move(l), conjunction()}, "or");
    return l;
  }
  SyntaxNode conjunction() {
    SyntaxNode l = inversion();
    while (c_.accept("and")) l = node("boolean_operator", {std::move(l), inversion()}, "and");
    return l;
  }
  SyntaxNode inversion() {
    if (c_.accept("not")) return node("not_operator", {inversion()});
    return comparison();
  }

  bool at_comparison() const {
    static const std::unordered_set<std::string> ops = {"<", ">", "==", ">=", "<=", "!=", "in", "is"};
    if (c_.at("not") && c_.at("in", 1)) return true;
    const auto& t = c_.peek();
    return (t.kind == SourceToken::op || t.kind == SourceToken::identifier) && ops.count(t.text);
  }

  SyntaxNode comparison() {
    SyntaxNode first = bitwise_or();
    if (!at_comparison()) return first;
    SyntaxNode n = node("comparison_operator", {std::move(first)});
    while (at_comparison()) {
      std::string op = c_.next().text;
      if (op == "not") {
        c_.expect("in");
        op = "not in";
      } else if (op == "is" && c_.accept("not")) {
        op = "is not";
      }
      n.text += (n.text.empty() ? "" : " ") + op;
      n.children.push_back(bitwise_or());
    }
    return n;
  }

  SyntaxNode binary_level(int level) {
    static const std::vector<std::vector<std::string>> levels = {
        {"|"}, {"^"}, {"&"}, {"<<", ">>"}, {"+", "-"}, {"*", "/", "//", "%", "@"}};
    if (level >= static_cast<int>(levels.size())) return factor();
    SyntaxNode l = binary_level(level + 1);
    while (true) {
      const auto& t = c_.peek();
      if (t.kind != SourceToken::op) break;
      const auto& ops = levels[static_cast<std::size_t>(level)];
      if (std::find(ops.begin(), ops.end(), t.text) == ops.end()) break;
      const std::string op = c_.next().text;
      l = node("binary_operator", {std::move(l), binary_level(level + 1)}, op);
    }
    return l;
  }
  SyntaxNode bitwise_or() { return binary_level(0); }

  SyntaxNode factor() {
    const auto& t = c_.peek();
    if (t.kind == SourceToken::op && (t.text == "+" || t.text == "-" || t.text == "~")) {
      const std::string op = c_.next().text;
      return node("unary_operator", {factor()}, op);
    }
    return power();
  }

  SyntaxNode power() {
    c_.accept("await");
    SyntaxNode base = trailers(atom());
    if (c_.accept("**")) return node("binary_operator", {std::move(base), factor()}, "**");
    return base;
  }

  SyntaxNode call_arguments() {
    SyntaxNode a = node("argument_list");
    c_.expect("(");
    while (!c_.accept(")")) {
      if (c_.accept("*")) {
        a.children.push_back(node("list_splat", {expression()}));
      } else if (c_.accept("**")) {
        a.children.push_back(node("dictionary_splat", {expression()}));
      } else if (is_name() && c_.at("=", 1)) {
        SyntaxNode k = name();
        c_.next();
        a.children.push_back(node("keyword_argument", {std::move(k), expression()}));
      } else {
        SyntaxNode e = expression();
        if (c_.at("for") || (c_.at("async") && c_.at("for", 1))) {
          SyntaxNode g = node("generator_expression", {std::move(e)});
          comprehension_clauses(g);
          e = std::move(g);
        }
        a.children.push_back(std::move(e));
      }
      if (!c_.accept(",")) {
        c_.expect(")");
        break;
      }
    }
    return a;
  }

  SyntaxNode subscript_item() {
    SyntaxNode lo;
    SyntaxNode s = node("slice");
    if (!c_.at(":")) {
      lo = expression();
      if (!c_.at(":")) return lo;
    }
    if (!lo.type.empty()) s.children.push_back(std::move(lo));
    c_.expect(":");
    if (!c_.at(":") && !c_.at("]") && !c_.at(",")) s.children.push_back(expression());
    if (c_.accept(":")) {
      if (!c_.at("]") && !c_.at(",")) s.children.push_back(expression());
    }
    return s;
  }

  SyntaxNode trailers(SyntaxNode e) {
    while (true) {
      if (c_.at("(")) {
        e = node("call", {std::move(e), call_arguments()});
      } else if (c_.at("[")) {
        c_.next();
        SyntaxNode sub = node("subscript", {std::move(e), subscript_item()});
        while (c_.accept(",")) {
          if (c_.at("]")) break;
          sub.children.push_back(subscript_item());
        }
        c_.expect("]");
        e = std::move(sub);
      } else if (c_.at(".")) {
        c_.next();
        e = node("attribute", {std::move(e), name()});
      } else {
        return e;
      }
    }
  }

  void comprehension_clauses(SyntaxNode& comp) {
    while (true) {
      if (c_.accept("async")) continue;
      if (c_.accept("for")) {
        SyntaxNode target = target_list();
        c_.expect("in");
        comp.children.push_back(node("for_in_clause", {std::move(target), disjunction()}));
      } else if (c_.accept("if")) {
        comp.children.push_back(node("if_clause", {disjunction()}));
      } else {
        return;
      }
    }
  }

  SyntaxNode atom() {
    const auto& t = c_.peek();
    switch (t.kind) {
      case SourceToken::number: {
        const std::string s = c_.next().text;
        const bool is_float = s.find_first_of(".eEjJ") != std::string::npos && s.rfind("0x", 0) != 0;
        return node(is_float ? "float" : "integer", {}, s);
      }
      case SourceToken::string: {
        std::string s = c_.next().text;
        SyntaxNode n = node("string", {}, s);
        if (c_.at_kind(SourceToken::string)) {
          n = node("concatenated_string", {std::move(n)});
          while (c_.at_kind(SourceToken::string)) n.children.push_back(node("string", {}, c_.next().text));
        }
        return n;
      }
      case SourceToken::identifier:
        if (t.text == "True" || t.text == "False") {
          c_.next();
          return node(t.text == "True" ? "true" : "false");
        }
        if (t.text == "None") {
          c_.next();
          return node("none");
        }
        if (is_name()) return variable();
        c_.fail("unexpected keyword");
      case SourceToken::op:
        if (t.text == "...") {
          c_.next();
          return node("ellipsis");
        }
        if (t.text == "(") return paren_atom();
        if (t.text == "[") return list_atom();
        if (t.text == "{") return brace_atom();
        c_.fail("unexpected token");
      default:
        c_.fail("unexpected end of input");
    }
  }

  SyntaxNode paren_atom() {
    c_.expect("(");
    if (c_.accept(")")) return node("tuple");
    SyntaxNode first = c_.at("*") ? star_or(true) : expression();
    if (c_.at("for") || (c_.at("async") && c_.at("for", 1))) {
      SyntaxNode g = node("generator_expression", {std::move(first)});
      comprehension_clauses(g);
      c_.expect(")");
      return g;
    }
    if (c_.accept(")")) return node("parenthesized_expression", {std::move(first)});
    SyntaxNode t = node("tuple", {std::move(first)});
    while (c_.accept(",")) {
      if (c_.at(")")) break;
      t.children.push_back(c_.at("*") ? star_or(true) : expression());
    }
    c_.expect(")");
    return t;
  }

  SyntaxNode list_atom() {
    c_.expect("[");
    SyntaxNode l = node("list");
    if (c_.accept("]")) return l;
    SyntaxNode first = c_.at("*") ? star_or(true) : expression();
    if (c_.at("for") || (c_.at("async") && c_.at("for", 1))) {
      SyntaxNode comp = node("list_comprehension", {std::move(first)});
      comprehension_clauses(comp);
      c_.expect("]");
      return comp;
    }
    l.children.push_back(std::move(first));
    while (c_.accept(",")) {
      if (c_.at("]")) break;
      l.children.push_back(c_.at("*") ? star_or(true) : expression());
    }
    c_.expect("]");
    return l;
  }

  SyntaxNode dict_entry() {
    if (c_.accept("**")) return node("dictionary_splat", {bitwise_or()});
    SyntaxNode k = expression();
    c_.expect(":");
    return node("pair", {std::move(k), expression()});
  }

  SyntaxNode brace_atom() {
    c_.expect("{");
    if (c_.accept("}")) return node("dictionary");
    const bool is_dict = [&] {
      if (c_.at("**")) return true;
      const std::size_t m = c_.mark();
      bool dict = false;
      try {
        expression();
        dict = c_.at(":");
      } catch (const ParseError&) {
        dict = false;
      }
      c_.reset(m);
      return dict;
    }();
    if (is_dict) {
      SyntaxNode first = dict_entry();
      if (c_.at("for")) {
        SyntaxNode comp = node("dictionary_comprehension", {std::move(first)});
        comprehension_clauses(comp);
        c_.expect("}");
        return comp;
      }
      SyntaxNode d = node("dictionary", {std::move(first)});
      while (c_.accept(",")) {
        if (c_.at("}")) break;
        d.children.push_back(dict_entry());
      }
      c_.expect("}");
      return d;
    }
    SyntaxNode first = c_.at("*") ? star_or(true) : expression();
    if (c_.at("for")) {
      SyntaxNode comp = node("set_comprehension", {std::move(first)});
      comprehension_clauses(comp);
      c_.expect("}");
      return comp;
    }
    SyntaxNode s = node("set", {std::move(first)});
    while (c_.accept(",")) {
      if (c_.at("}")) break;
      s.children.push_back(c_.at("*") ? star_or(true) : expression());
    }
    c_.expect("}");
    return s;
  }
};

}  // namespace

SyntaxNode parse_python(std::vector<SourceToken> tokens) { return PythonParser(std::move(tokens)).module(); }

}  // namespace kcgen::eval::detail
