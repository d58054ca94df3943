// SPDX-License-Identifier: Apache-2.0
// Recursive-descent parser for the subset of Java found in introductory
// programming submissions.
#include <optional>
#include <unordered_set>

#include "syntax_internal.hpp"

namespace kcgen::eval::detail {
namespace {

const std::unordered_set<std::string> kKeywords = {
    "abstract", "assert",     "boolean",   "break",     "byte",      "case",   "catch",    "char",
    "class",    "const",      "continue",  "default",   "do",        "double", "else",     "enum",
    "extends",  "final",      "finally",   "float",     "for",       "goto",   "if",       "implements",
    "import",   "instanceof", "int",       "interface", "long",      "native", "new",      "package",
    "private",  "protected",  "public",    "return",    "short",     "static", "strictfp", "super",
    "switch",   "synchronized", "this",    "throw",     "throws",    "transient", "try",   "void",
    "volatile", "while",      "true",      "false",     "null"};
const std::unordered_set<std::string> kPrimitive = {"boolean", "byte", "char",  "short", "int",
                                                    "long",    "float", "double", "void"};
const std::unordered_set<std::string> kModifiers = {"public",   "private",  "protected",    "static",
                                                    "final",    "abstract", "synchronized", "native",
                                                    "transient", "volatile", "strictfp",    "default"};
const std::unordered_set<std::string> kAssignOps = {"=",  "+=", "-=", "*=",  "/=",  "%=",
                                                    "&=", "|=", "^=", "<<=", ">>=", ">>>="};

class JavaParser {
 public:
  explicit JavaParser(std::vector<SourceToken> toks) : c_(std::move(toks)) {}

  SyntaxNode program() {
    SyntaxNode root = node("program");
    while (!c_.done()) {
      if (c_.at("package") || c_.at("import")) {
        root.children.push_back(import_decl());
      } else if (starts_type_decl()) {
        root.children.push_back(class_decl());
      } else if (auto m = try_method()) {
        root.children.push_back(std::move(*m));
      } else {
        root.children.push_back(statement());
      }
    }
    return root;
  }

 private:
  TokenCursor c_;

  bool is_ident(std::size_t k = 0) const {
    const auto& t = c_.peek(k);
    return t.kind == SourceToken::identifier && !kKeywords.count(t.text);
  }
  std::string ident() {
    if (!is_ident()) c_.fail("expected identifier");
    return c_.next().text;
  }
  SyntaxNode variable() { return node("identifier", {}, ident()); }
  SyntaxNode name() { return node("name", {}, ident()); }

  void skip_modifiers() {
    while (true) {
      if (c_.at_kind(SourceToken::identifier) && kModifiers.count(c_.peek().text) &&
          !(c_.peek().text == "default" && (c_.at(":", 1) || c_.at("->", 1)))) {
        c_.next();
      } else if (c_.at("@") && !c_.at("interface", 1)) {
        c_.next();
        qualified_name();
        if (c_.at("(")) balanced("(", ")");
      } else {
        return;
      }
    }
  }

  void balanced(std::string_view open, std::string_view close) {
    c_.expect(open);
    int depth = 1;
    while (depth > 0) {
      if (c_.done()) c_.fail("unbalanced '" + std::string(open) + "'");
      if (c_.at(open)) ++depth;
      else if (c_.at(close)) --depth;
      c_.next();
    }
  }

  std::string qualified_name() {
    std::string s = ident();
    while (c_.at(".") && is_ident(1)) {
      c_.next();
      s += "." + ident();
    }
    return s;
  }

  SyntaxNode import_decl() {
    const bool pkg = c_.at("package");
    c_.next();
    c_.accept("static");
    std::string s = qualified_name();
    if (c_.accept(".")) {
      c_.expect("*");
      s += ".*";
    }
    c_.expect(";");
    return node(pkg ? "package_declaration" : "import_declaration", {}, s);
  }

  bool starts_type_decl() {
    std::size_t k = 0;
    while (true) {
      const auto& t = c_.peek(k);
      if (t.kind == SourceToken::identifier && kModifiers.count(t.text)) {
        ++k;
      } else {
        break;
      }
    }
    return c_.at("class", k) || c_.at("interface", k) || c_.at("enum", k) || (c_.at("@", k) && c_.at("interface", k + 1));
  }

  SyntaxNode class_decl() {
    skip_modifiers();
    std::string kind = c_.next().text;
    if (kind == "@") kind = c_.next().text;
    SyntaxNode n = node(kind == "class" ? "class_declaration" : kind == "enum" ? "enum_declaration" : "interface_declaration");
    n.children.push_back(name());
    if (c_.at("<")) type_arguments();
    if (c_.accept("extends")) {
      n.children.push_back(type());
      while (c_.accept(",")) n.children.push_back(type());
    }
    if (c_.accept("implements")) {
      n.children.push_back(type());
      while (c_.accept(",")) n.children.push_back(type());
    }
    n.children.push_back(class_body(kind == "enum"));
    return n;
  }

  SyntaxNode class_body(bool is_enum) {
    SyntaxNode body = node("class_body");
    c_.expect("{");
    if (is_enum) {
      while (is_ident()) {
        SyntaxNode e = node("enum_constant", {name()});
        if (c_.at("(")) e.children.push_back(arguments());
        if (c_.at("{")) e.children.push_back(class_body(false));
        body.children.push_back(std::move(e));
        if (!c_.accept(",")) break;
      }
      c_.accept(";");
    }
    while (!c_.accept("}")) {
      if (c_.done()) c_.fail("unterminated class body");
      if (c_.accept(";")) continue;
      if (starts_type_decl()) {
        body.children.push_back(class_decl());
        continue;
      }
      if (c_.at("{") || (c_.at("static") && c_.at("{", 1))) {
        c_.accept("static");
        body.children.push_back(node("static_initializer", {block()}));
        continue;
      }
      if (auto m = try_method()) {
        body.children.push_back(std::move(*m));
        continue;
      }
      // Constructor
      const std::size_t m = c_.mark();
      skip_modifiers();
      if (is_ident() && c_.at("(", 1)) {
        SyntaxNode ctor = node("constructor_declaration", {name()});
        ctor.children.push_back(parameters());
        throws_clause();
        ctor.children.push_back(block());
        body.children.push_back(std::move(ctor));
        continue;
      }
      c_.reset(m);
      skip_modifiers();
      SyntaxNode f = node("field_declaration", {type()});
      declarators(f);
      c_.expect(";");
      body.children.push_back(std::move(f));
    }
    return body;
  }

  void throws_clause() {
    if (c_.accept("throws")) {
      type();
      while (c_.accept(",")) type();
    }
  }

  std::optional<SyntaxNode> try_method() {
    const std::size_t m = c_.mark();
    try {
      skip_modifiers();
      if (c_.at("<")) type_arguments();
      SyntaxNode t = type();
      if (!is_ident() || !c_.at("(", 1)) {
        c_.reset(m);
        return std::nullopt;
      }
      SyntaxNode n = node("method_declaration", {std::move(t), name()});
      n.children.push_back(parameters());
      while (c_.at("[")) {
        c_.next();
        c_.expect("]");
      }
      throws_clause();
      if (c_.accept(";")) return n;
      n.children.push_back(block());
      return n;
    } catch (const ParseError&) {
      c_.reset(m);
      return std::nullopt;
    }
  }

  SyntaxNode parameters() {
    SyntaxNode ps = node("formal_parameters");
    c_.expect("(");
    if (!c_.accept(")")) {
      do {
        skip_modifiers();
        SyntaxNode p = node("formal_parameter", {type()});
        c_.accept("...");
        p.children.push_back(variable());
        while (c_.at("[")) {
          c_.next();
          c_.expect("]");
        }
        ps.children.push_back(std::move(p));
      } while (c_.accept(","));
      c_.expect(")");
    }
    return ps;
  }

  void type_arguments() {
    c_.expect("<");
    if (c_.at(">")) {
      c_.next();
      return;
    }
    do {
      if (c_.accept("?")) {
        if (c_.accept("extends") || c_.accept("super")) type();
      } else {
        type();
      }
    } while (c_.accept(","));
    c_.split_angle();
    c_.expect(">");
  }

  SyntaxNode type() {
    std::string text;
    if (c_.at_kind(SourceToken::identifier) && kPrimitive.count(c_.peek().text)) {
      text = c_.next().text;
    } else {
      text = qualified_name();
      if (c_.at("<")) type_arguments();
      while (c_.at(".") && is_ident(1)) {
        c_.next();
        text += "." + ident();
        if (c_.at("<")) type_arguments();
      }
    }
    SyntaxNode t = node(kPrimitive.count(text) ? "primitive_type" : "type_identifier", {}, text);
    while (c_.at("[") && c_.at("]", 1)) {
      c_.next();
      c_.next();
      t = node("array_type", {std::move(t)});
    }
    return t;
  }

  // Speculatively recognizes "Type name" at the cursor.
  bool looks_like_declaration() {
    const std::size_t m = c_.mark();
    bool ok = false;
    try {
      skip_modifiers();
      if (c_.at_kind(SourceToken::identifier) &&
          (kPrimitive.count(c_.peek().text) || !kKeywords.count(c_.peek().text))) {
        type();
        ok = is_ident() && (c_.at("=", 1) || c_.at(";", 1) || c_.at(",", 1) || c_.at("[", 1) || c_.at(":", 1));
      }
    } catch (const ParseError&) {
      ok = false;
    }
    c_.reset(m);
    return ok;
  }

  void declarators(SyntaxNode& decl) {
    do {
      SyntaxNode d = node("variable_declarator", {variable()});
      while (c_.at("[")) {
        c_.next();
        c_.expect("]");
      }
      if (c_.accept("=")) d.children.push_back(c_.at("{") ? array_initializer() : expression());
      decl.children.push_back(std::move(d));
    } while (c_.accept(","));
  }

  SyntaxNode array_initializer() {
    SyntaxNode n = node("array_initializer");
    c_.expect("{");
    while (!c_.accept("}")) {
      n.children.push_back(c_.at("{") ? array_initializer() : expression());
      if (!c_.accept(",")) {
        c_.expect("}");
        break;
      }
    }
    return n;
  }

  SyntaxNode block() {
    SyntaxNode b = node("block");
    c_.expect("{");
    while (!c_.accept("}")) {
      if (c_.done()) c_.fail("unterminated block");
      b.children.push_back(statement());
    }
    return b;
  }

  SyntaxNode local_declaration() {
    skip_modifiers();
    SyntaxNode d = node("local_variable_declaration", {type()});
    declarators(d);
    return d;
  }

  SyntaxNode paren_expression() {
    c_.expect("(");
    SyntaxNode e = expression();
    c_.expect(")");
    return node("parenthesized_expression", {std::move(e)});
  }

  SyntaxNode statement() {
    if (c_.at("{")) return block();
    if (c_.accept(";")) return node("empty_statement");
    if (c_.at("if")) {
      c_.next();
      SyntaxNode n = node("if_statement", {paren_expression(), statement()});
      if (c_.accept("else")) n.children.push_back(statement());
      return n;
    }
    if (c_.accept("while")) return node("while_statement", {paren_expression(), statement()});
    if (c_.accept("do")) {
      SyntaxNode body = statement();
      c_.expect("while");
      SyntaxNode n = node("do_statement", {std::move(body), paren_expression()});
      c_.expect(";");
      return n;
    }
    if (c_.at("for")) return for_statement();
    if (c_.accept("return")) {
      SyntaxNode n = node("return_statement");
      if (!c_.at(";")) n.children.push_back(expression());
      c_.expect(";");
      return n;
    }
    if (c_.at("break") || c_.at("continue")) {
      const std::string kw = c_.next().text;
      if (is_ident()) c_.next();
      c_.expect(";");
      return node(kw + "_statement");
    }
    if (c_.accept("throw")) {
      SyntaxNode n = node("throw_statement", {expression()});
      c_.expect(";");
      return n;
    }
    if (c_.accept("assert")) {
      SyntaxNode n = node("assert_statement", {expression()});
      if (c_.accept(":")) n.children.push_back(expression());
      c_.expect(";");
      return n;
    }
    if (c_.at("switch")) return switch_statement();
    if (c_.at("try")) return try_statement();
    if (c_.at("synchronized") && c_.at("(", 1)) {
      c_.next();
      return node("synchronized_statement", {paren_expression(), block()});
    }
    if (starts_type_decl()) return class_decl();
    if (is_ident() && c_.at(":", 1)) {
      c_.next();
      c_.next();
      return node("labeled_statement", {statement()});
    }
    if (looks_like_declaration()) {
      SyntaxNode d = local_declaration();
      c_.expect(";");
      return d;
    }
    SyntaxNode e = node("expression_statement", {expression()});
    c_.expect(";");
    return e;
  }

  SyntaxNode for_statement() {
    c_.expect("for");
    c_.expect("(");
    // Enhanced for: (Type name : expr)
    {
      const std::size_t m = c_.mark();
      bool enhanced = false;
      try {
        skip_modifiers();
        SyntaxNode t = type();
        if (is_ident() && c_.at(":", 1)) {
          SyntaxNode v = variable();
          c_.expect(":");
          SyntaxNode it = expression();
          c_.expect(")");
          enhanced = true;
          return node("enhanced_for_statement", {std::move(t), std::move(v), std::move(it), statement()});
        }
      } catch (const ParseError&) {
        if (enhanced) throw;
      }
      c_.reset(m);
    }
    SyntaxNode n = node("for_statement");
    if (!c_.at(";")) {
      if (looks_like_declaration()) {
        n.children.push_back(local_declaration());
      } else {
        SyntaxNode init = node("for_init", {expression()});
        while (c_.accept(",")) init.children.push_back(expression());
        n.children.push_back(std::move(init));
      }
    }
    c_.expect(";");
    if (!c_.at(";")) n.children.push_back(node("for_condition", {expression()}));
    c_.expect(";");
    if (!c_.at(")")) {
      SyntaxNode upd = node("for_update", {expression()});
      while (c_.accept(",")) upd.children.push_back(expression());
      n.children.push_back(std::move(upd));
    }
    c_.expect(")");
    n.children.push_back(statement());
    return n;
  }

  SyntaxNode switch_statement() {
    c_.expect("switch");
    SyntaxNode n = node("switch_statement", {paren_expression()});
    SyntaxNode body = node("switch_block");
    c_.expect("{");
    while (!c_.accept("}")) {
      if (c_.done()) c_.fail("unterminated switch");
      if (c_.at("case") || c_.at("default")) {
        SyntaxNode label = node("switch_label");
        if (c_.accept("case")) {
          label.children.push_back(ternary());
          while (c_.accept(",")) label.children.push_back(ternary());
        } else {
          c_.next();
        }
        if (c_.accept("->")) {
          SyntaxNode rule = node("switch_rule", {std::move(label)});
          if (c_.at("{")) {
            rule.children.push_back(block());
          } else if (c_.at("throw")) {
            rule.children.push_back(statement());
          } else {
            rule.children.push_back(node("expression_statement", {expression()}));
            c_.expect(";");
          }
          body.children.push_back(std::move(rule));
          continue;
        }
        c_.expect(":");
        body.children.push_back(std::move(label));
        continue;
      }
      body.children.push_back(statement());
    }
    n.children.push_back(std::move(body));
    return n;
  }

  SyntaxNode try_statement() {
    c_.expect("try");
    SyntaxNode n = node("try_statement");
    if (c_.at("(")) {
      c_.next();
      SyntaxNode res = node("resource_specification");
      while (!c_.accept(")")) {
        res.children.push_back(local_declaration());
        c_.accept(";");
      }
      n.children.push_back(std::move(res));
    }
    n.children.push_back(block());
    while (c_.accept("catch")) {
      c_.expect("(");
      skip_modifiers();
      SyntaxNode p = node("catch_formal_parameter", {type()});
      while (c_.accept("|")) p.children.push_back(type());
      p.children.push_back(variable());
      c_.expect(")");
      n.children.push_back(node("catch_clause", {std::move(p), block()}));
    }
    if (c_.accept("finally")) n.children.push_back(node("finally_clause", {block()}));
    if (n.children.size() < 2) c_.fail("try without catch or finally");
    return n;
  }

  // ---- expressions ----

  SyntaxNode expression() {
    if (auto l = try_lambda()) return std::move(*l);
    SyntaxNode lhs = ternary();
    if (c_.at_kind(SourceToken::op) && kAssignOps.count(c_.peek().text)) {
      const std::string op = c_.next().text;
      SyntaxNode rhs = c_.at("{") ? array_initializer() : expression();
      return node("assignment_expression", {std::move(lhs), std::move(rhs)}, op);
    }
    return lhs;
  }

  std::optional<SyntaxNode> try_lambda() {
    if (is_ident() && c_.at("->", 1)) {
      SyntaxNode ps = node("lambda_parameters", {variable()});
      c_.next();
      return node("lambda_expression", {std::move(ps), lambda_body()});
    }
    if (!c_.at("(")) return std::nullopt;
    const std::size_t m = c_.mark();
    try {
      c_.next();
      SyntaxNode ps = node("lambda_parameters");
      if (!c_.at(")")) {
        do {
          if (is_ident() && (c_.at(",", 1) || c_.at(")", 1))) {
            ps.children.push_back(variable());
          } else {
            SyntaxNode p = node("formal_parameter", {type()});
            p.children.push_back(variable());
            ps.children.push_back(std::move(p));
          }
        } while (c_.accept(","));
      }
      c_.expect(")");
      if (!c_.accept("->")) {
        c_.reset(m);
        return std::nullopt;
      }
      return node("lambda_expression", {std::move(ps), lambda_body()});
    } catch (const ParseError&) {
      c_.reset(m);
      return std::nullopt;
    }
  }

  SyntaxNode lambda_body() { return c_.at("{") ? block() : expression(); }

  SyntaxNode ternary() {
    SyntaxNode cond = binary(0);
    if (c_.accept("?")) {
      SyntaxNode a = ternary();
      c_.expect(":");
      SyntaxNode b = ternary();
      return node("ternary_expression", {std::move(cond), std::move(a), std::move(b)});
    }
    return cond;
  }

  static int precedence(const std::string& op) {
    static const std::vector<std::vector<std::string>> levels = {
        {"||"}, {"&&"}, {"|"}, {"^"}, {"&"}, {"==", "!="}, {"<", ">", "<=", ">=", "instanceof"},
        {"<<", ">>", ">>>"}, {"+", "-"}, {"*", "/", "%"}};
    for (std::size_t i = 0; i < levels.size(); ++i) {
      for (const auto& o : levels[i]) {
        if (o == op) return static_cast<int>(i);
      }
    }
    return -1;
  }

  SyntaxNode binary(int level) {
    if (level > 9) return unary();
    SyntaxNode lhs = binary(level + 1);
    while (true) {
      const auto& t = c_.peek();
      if (t.kind != SourceToken::op && t.text != "instanceof") break;
      if (precedence(t.text) != level) break;
      const std::string op = c_.next().text;
      if (op == "instanceof") {
        c_.accept("final");
        SyntaxNode ty = type();
        SyntaxNode n = node("instanceof_expression", {std::move(lhs), std::move(ty)});
        if (is_ident()) n.children.push_back(variable());
        lhs = std::move(n);
        continue;
      }
      SyntaxNode rhs = binary(level + 1);
      lhs = node("binary_expression", {std::move(lhs), std::move(rhs)}, op);
    }
    return lhs;
  }

  bool cast_follows() {
    // '(' Type ')' followed by something that can start an operand.
    const std::size_t m = c_.mark();
    bool ok = false;
    try {
      c_.expect("(");
      const bool prim = c_.at_kind(SourceToken::identifier) && kPrimitive.count(c_.peek().text);
      type();
      if (c_.accept(")")) {
        const auto& t = c_.peek();
        if (prim) {
          ok = true;
        } else {
          ok = (t.kind == SourceToken::identifier && (!kKeywords.count(t.text) || t.text == "new" || t.text == "this" ||
                                                     t.text == "true" || t.text == "false" || t.text == "null" ||
                                                     t.text == "super")) ||
               t.kind == SourceToken::number || t.kind == SourceToken::string || t.text == "(" || t.text == "!" ||
               t.text == "~";
        }
      }
    } catch (const ParseError&) {
      ok = false;
    }
    c_.reset(m);
    return ok;
  }

  SyntaxNode unary() {
    const auto& t = c_.peek();
    if (t.kind == SourceToken::op && (t.text == "++" || t.text == "--")) {
      const std::string op = c_.next().text;
      return node("update_expression", {unary()}, op);
    }
    if (t.kind == SourceToken::op && (t.text == "+" || t.text == "-" || t.text == "!" || t.text == "~")) {
      const std::string op = c_.next().text;
      return node("unary_expression", {unary()}, op);
    }
    if (c_.at("(") && cast_follows()) {
      c_.next();
      SyntaxNode ty = type();
      c_.expect(")");
      return node("cast_expression", {std::move(ty), unary()});
    }
    SyntaxNode e = postfix(primary());
    while (c_.at("++") || c_.at("--")) {
      const std::string op = c_.next().text;
      e = node("update_expression", {std::move(e)}, op);
    }
    return e;
  }

  SyntaxNode arguments() {
    SyntaxNode a = node("argument_list");
    c_.expect("(");
    if (!c_.accept(")")) {
      do {
        a.children.push_back(expression());
      } while (c_.accept(","));
      c_.expect(")");
    }
    return a;
  }

  SyntaxNode postfix(SyntaxNode e) {
    while (true) {
      if (c_.at(".")) {
        c_.next();
        if (c_.at("<")) type_arguments();
        if (c_.at("new")) {
          e = node("object_creation_expression", {std::move(e), creation()});
          continue;
        }
        if (c_.accept("class")) {
          e = node("class_literal", {std::move(e)});
          continue;
        }
        if (c_.at("this")) {
          c_.next();
          e = node("field_access", {std::move(e), node("this")});
          continue;
        }
        SyntaxNode n = name();
        if (c_.at("(")) {
          e = node("method_invocation", {std::move(e), std::move(n), arguments()});
        } else {
          e = node("field_access", {std::move(e), std::move(n)});
        }
      } else if (c_.at("[")) {
        c_.next();
        SyntaxNode idx = expression();
        c_.expect("]");
        e = node("array_access", {std::move(e), std::move(idx)});
      } else if (c_.at("::")) {
        c_.next();
        std::string target = c_.accept("new") ? "new" : ident();
        e = node("method_reference", {std::move(e), node("name", {}, target)});
      } else {
        return e;
      }
    }
  }

  SyntaxNode creation() {
    c_.expect("new");
    SyntaxNode ty;
    if (c_.at_kind(SourceToken::identifier) && kPrimitive.count(c_.peek().text)) {
      ty = node("primitive_type", {}, c_.next().text);
    } else {
      std::string text = qualified_name();
      if (c_.at("<")) type_arguments();
      ty = node("type_identifier", {}, text);
    }
    if (c_.at("[")) {
      SyntaxNode n = node("array_creation_expression", {std::move(ty)});
      while (c_.at("[")) {
        c_.next();
        if (c_.accept("]")) {
          n.children.push_back(node("dimensions"));
          continue;
        }
        n.children.push_back(node("dimensions_expr", {expression()}));
        c_.expect("]");
      }
      if (c_.at("{")) n.children.push_back(array_initializer());
      return n;
    }
    SyntaxNode n = node("object_creation_expression", {std::move(ty), arguments()});
    if (c_.at("{")) n.children.push_back(class_body(false));
    return n;
  }

  SyntaxNode primary() {
    const auto& t = c_.peek();
    switch (t.kind) {
      case SourceToken::number: {
        const std::string s = c_.next().text;
        const bool is_float = s.find_first_of(".eEfFdD") != std::string::npos && s.rfind("0x", 0) != 0 && s.rfind("0X", 0) != 0;
        return node(is_float ? "floating_point_literal" : "integer_literal", {}, s);
      }
      case SourceToken::string: {
        const std::string s = c_.next().text;
        return node(s[0] == '\'' ? "character_literal" : "string_literal", {}, s);
      }
      case SourceToken::identifier: {
        if (t.text == "true" || t.text == "false") return node(c_.next().text);
        if (t.text == "null") {
          c_.next();
          return node("null_literal");
        }
        if (t.text == "this") {
          c_.next();
          if (c_.at("(")) return node("explicit_constructor_invocation", {arguments()});
          return node("this");
        }
        if (t.text == "super") {
          c_.next();
          if (c_.at("(")) return node("explicit_constructor_invocation", {arguments()});
          return node("super");
        }
        if (t.text == "new") return creation();
        if (kPrimitive.count(t.text)) {
          // int.class, int[].class
          SyntaxNode ty = type();
          c_.expect(".");
          c_.expect("class");
          return node("class_literal", {std::move(ty)});
        }
        if (is_ident()) {
          if (c_.at("(", 1)) {
            SyntaxNode n = name();
            return node("method_invocation", {std::move(n), arguments()});
          }
          return variable();
        }
        c_.fail("unexpected keyword");
      }
      case SourceToken::op:
        if (t.text == "(") return paren_expression();
        c_.fail("unexpected token");
      default:
        c_.fail("unexpected end of input");
    }
  }
};

}  // namespace

SyntaxNode parse_java(std::vector<SourceToken> tokens) { return JavaParser(std::move(tokens)).program(); }

}  // namespace kcgen::eval::detail
