#pragma once

// Text front end: the .corec declaration language and the observation
// expressions accepted on the command line (`nth(3, filter(from(0)))`).

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corec/ast.hpp"
#include "corec/diagnostics.hpp"

namespace corec {

namespace detail {

struct Token {
  enum class Kind { Ident, Number, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  Nat value = 0;
  SourcePos pos;
};

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

inline std::vector<Token> tokenize(std::string_view src) {
  static const char* const kSymbols[] = {"=>", "==", "!=", "<=", ">=", "&&", "||", "(", ")", ",", "|",
                                         "=",  ":",  "#",  "+",  "-",  "*",  "/",  "<", ">", "!", "[", "]"};
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token tok;
    tok.pos = {line, col};
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      tok.kind = Token::Kind::Ident;
      tok.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      Nat v = 0;
      bool overflow = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
        Nat digit = static_cast<Nat>(src[j] - '0');
        if (v > (~Nat{0} - digit) / 10) overflow = true;
        v = v * 10 + digit;
        ++j;
      }
      if (overflow)
        throw ParseError({{ErrorKind::Syntax, tok.pos, "numeric literal out of range"}});
      tok.kind = Token::Kind::Number;
      tok.text = std::string(src.substr(i, j - i));
      tok.value = v;
      advance(j - i);
    } else {
      bool found = false;
      for (const char* sym : kSymbols) {
        std::string_view s(sym);
        if (src.substr(i, s.size()) == s) {
          tok.kind = Token::Kind::Symbol;
          tok.text = std::string(s);
          advance(s.size());
          found = true;
          break;
        }
      }
      if (!found)
        throw ParseError({{ErrorKind::Syntax, tok.pos, std::string("unexpected character '") + c + "'"}});
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.kind = Token::Kind::End;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

inline const std::set<std::string, std::less<>>& keywords() {
  static const std::set<std::string, std::less<>> kw = {
      "codata", "def", "rec", "cofun", "fun", "when", "if", "then", "else", "mod",
      "true",   "false", "nat", "bool", "S", "not", "_"};
  return kw;
}

class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = pos_ + ahead;
    return k < toks_.size() ? toks_[k] : toks_.back();
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_symbol(std::string_view s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Token::Kind::Symbol && t.text == s;
  }
  bool at_word(std::string_view s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Token::Kind::Ident && t.text == s;
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool accept_symbol(std::string_view s) {
    if (!at_symbol(s)) return false;
    next();
    return true;
  }
  bool accept_word(std::string_view s) {
    if (!at_word(s)) return false;
    next();
    return true;
  }

  [[noreturn]] void fail(ErrorKind kind, SourcePos pos, std::string msg) const {
    throw ParseError({{kind, pos, std::move(msg)}});
  }
  [[noreturn]] void expected(std::string_view what) const {
    const Token& t = peek();
    std::string found = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
    fail(ErrorKind::Syntax, t.pos, "expected " + std::string(what) + ", found " + found);
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) expected("'" + std::string(s) + "'");
  }
  void expect_word(std::string_view s) {
    if (!accept_word(s)) expected("'" + std::string(s) + "'");
  }
  const Token& expect_name(std::string_view what) {
    const Token& t = peek();
    if (t.kind != Token::Kind::Ident || keywords().count(t.text)) expected(what);
    return next();
  }
  Nat expect_number() {
    const Token& t = peek();
    if (t.kind != Token::Kind::Number) expected("a number");
    return next().value;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

inline bool is_decl_start(const TokenStream& ts) {
  return ts.at_word("codata") || ts.at_word("def") || ts.at_word("rec") || ts.at_word("cofun") ||
         ts.at_word("fun");
}

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view src) : ts_(tokenize(src)) {}

  Program run() {
    while (!ts_.at_end()) {
      if (ts_.at_word("codata")) {
        parse_codata();
      } else if (ts_.at_word("def")) {
        parse_def();
      } else if (ts_.at_word("rec")) {
        parse_rec();
      } else if (ts_.at_word("cofun") || ts_.at_word("fun")) {
        parse_fun();
      } else {
        ts_.expected("a declaration (codata, def, rec, cofun, fun)");
      }
    }
    return std::move(prog_);
  }

 private:
  struct Binding {
    std::string name;
    Type type;
  };

  // Signature of the definition whose body is being parsed; RecCall targets it.
  struct Self {
    std::string name;
    std::vector<Param> params;
    Type result;
  };

  [[noreturn]] void fail(ErrorKind k, SourcePos p, std::string m) const { ts_.fail(k, p, std::move(m)); }

  const Token& declare_name(std::string_view what) {
    const Token& t = ts_.expect_name(what);
    if (prog_.lookup(t.text) || prog_.is_ctor(t.text))
      fail(ErrorKind::Name, t.pos, "duplicate declaration of '" + t.text + "'");
    return t;
  }

  void parse_codata() {
    ts_.expect_word("codata");
    CodataTypeDef def;
    const Token& name = declare_name("a codata type name");
    def.name = name.text;
    def.pos = name.pos;
    ts_.expect_symbol("=");
    std::set<std::string> seen;
    do {
      const Token& cn = ts_.expect_name("a constructor name");
      if (seen.count(cn.text) || prog_.lookup(cn.text) || prog_.is_ctor(cn.text) || cn.text == def.name)
        fail(ErrorKind::Name, cn.pos, "duplicate constructor '" + cn.text + "'");
      seen.insert(cn.text);
      CtorDef ctor;
      ctor.name = cn.text;
      ts_.expect_symbol("(");
      if (!ts_.at_symbol(")")) {
        do {
          if (ts_.accept_symbol("#")) {
            ctor.fields.push_back(FieldKind::Slot);
          } else if (ts_.accept_word("nat")) {
            ctor.fields.push_back(FieldKind::Nat);
          } else if (ts_.accept_word("bool")) {
            ctor.fields.push_back(FieldKind::Bool);
          } else {
            ts_.expected("a field type (nat, bool or #)");
          }
        } while (ts_.accept_symbol(","));
      }
      ts_.expect_symbol(")");
      def.ctors.push_back(std::move(ctor));
    } while (ts_.accept_symbol("|"));
    bool has_slot = false;
    for (const auto& c : def.ctors) has_slot |= c.slot_count() > 0;
    if (!has_slot)
      fail(ErrorKind::Type, def.pos, "codata type '" + def.name + "' has no corecursive slot '#'");
    prog_.add(std::move(def));
  }

  Type parse_type(bool allow_codata) {
    if (ts_.accept_word("nat")) return Type::nat();
    if (ts_.accept_word("bool")) return Type::boolean();
    const Token& t = ts_.peek();
    if (allow_codata && t.kind == Token::Kind::Ident && prog_.find_codata(t.text)) {
      ts_.next();
      return Type::of_codata(t.text);
    }
    if (t.kind == Token::Kind::Ident && !keywords().count(t.text))
      fail(ErrorKind::Name, t.pos, "unknown type '" + t.text + "'");
    ts_.expected(allow_codata ? "a type" : "nat or bool");
  }

  std::vector<Param> parse_params(bool allow_codata, bool default_nat) {
    std::vector<Param> params;
    ts_.expect_symbol("(");
    std::set<std::string> seen;
    if (!ts_.at_symbol(")")) {
      do {
        const Token& n = ts_.expect_name("a parameter name");
        if (seen.count(n.text)) fail(ErrorKind::Name, n.pos, "duplicate parameter '" + n.text + "'");
        if (prog_.is_ctor(n.text))
          fail(ErrorKind::Name, n.pos, "parameter '" + n.text + "' shadows a constructor");
        seen.insert(n.text);
        Param p{n.text, Type::nat()};
        if (ts_.accept_symbol(":")) {
          p.type = parse_type(allow_codata);
        } else if (!default_nat) {
          ts_.expected("':' and a parameter type");
        }
        params.push_back(std::move(p));
      } while (ts_.accept_symbol(","));
    }
    ts_.expect_symbol(")");
    return params;
  }

  void parse_def() {
    ts_.expect_word("def");
    HelperDef def;
    const Token& name = declare_name("a helper name");
    def.name = name.text;
    def.pos = name.pos;
    def.params = parse_params(false, true);
    ts_.expect_symbol("=");
    scope_.clear();
    for (const auto& p : def.params) scope_.push_back({p.name, p.type});
    self_.reset();
    def.body = parse_base();
    def.result = def.body.type;
    prog_.add(std::move(def));
  }

  void parse_rec() {
    ts_.expect_word("rec");
    RecFunDef rec;
    const Token& name = declare_name("a function name");
    rec.name = name.text;
    rec.pos = name.pos;
    rec.params = parse_params(false, true);
    for (const auto& p : rec.params)
      if (!p.type.is_nat()) fail(ErrorKind::Type, rec.pos, "rec parameters must be nat");
    ts_.expect_symbol(":");
    ts_.expect_word("nat");
    self_ = Self{rec.name, rec.params, Type::nat()};
    if (!ts_.at_symbol("|")) ts_.expected("'|' starting a clause");
    while (ts_.at_symbol("|")) {
      Clause c;
      c.pos = ts_.next().pos;
      scope_.clear();
      for (const auto& p : rec.params) scope_.push_back({p.name, p.type});
      std::set<std::string> binders;
      for (std::size_t i = 0; i < rec.params.size(); ++i) {
        if (i > 0) ts_.expect_symbol(",");
        c.patterns.push_back(parse_pattern(rec.params[i].type, binders));
      }
      ts_.expect_symbol("=>");
      c.body = parse_base();
      expect_type(c.body, Type::nat(), "clause body");
      rec.clauses.push_back(std::move(c));
    }
    self_.reset();
    prog_.add(std::move(rec));
  }

  void parse_fun() {
    FunDef fun;
    fun.kind = ts_.at_word("cofun") ? FunKind::Cofun : FunKind::Fun;
    ts_.next();
    const Token& name = declare_name("a function name");
    fun.name = name.text;
    fun.pos = name.pos;
    fun.params = parse_params(true, false);
    ts_.expect_symbol(":");
    const Token& rt = ts_.expect_name("a codata result type");
    if (!prog_.find_codata(rt.text))
      fail(ErrorKind::Name, rt.pos, "unknown codata type '" + rt.text + "'");
    fun.result = rt.text;
    self_ = Self{fun.name, fun.params, Type::of_codata(fun.result)};
    if (ts_.at_symbol("=")) {
      Clause c;
      c.pos = ts_.next().pos;
      fun.equation_form = true;
      scope_.clear();
      for (const auto& p : fun.params) {
        scope_.push_back({p.name, p.type});
        Pattern pat;
        pat.kind = Pattern::Kind::Var;
        pat.name = p.name;
        pat.type = p.type;
        pat.pos = c.pos;
        c.patterns.push_back(std::move(pat));
      }
      c.body = parse_co(fun.result);
      fun.clauses.push_back(std::move(c));
    } else {
      if (!ts_.at_symbol("|")) ts_.expected("'=' or '|' starting a clause");
      while (ts_.at_symbol("|")) {
        Clause c;
        c.pos = ts_.next().pos;
        scope_.clear();
        for (const auto& p : fun.params) scope_.push_back({p.name, p.type});
        std::set<std::string> binders;
        for (std::size_t i = 0; i < fun.params.size(); ++i) {
          if (i > 0) ts_.expect_symbol(",");
          c.patterns.push_back(parse_pattern(fun.params[i].type, binders));
        }
        if (ts_.accept_word("when")) {
          c.guard = parse_base();
          expect_type(*c.guard, Type::boolean(), "guard");
        }
        ts_.expect_symbol("=>");
        c.body = parse_co(fun.result);
        fun.clauses.push_back(std::move(c));
      }
    }
    self_.reset();
    prog_.add(std::move(fun));
  }

  Pattern parse_pattern(const Type& expected, std::set<std::string>& binders) {
    Pattern p;
    p.type = expected;
    const Token& t = ts_.peek();
    p.pos = t.pos;
    if (t.kind == Token::Kind::Number) {
      if (!expected.is_nat()) fail(ErrorKind::Type, t.pos, "nat pattern where " + to_string(expected) + " expected");
      p.kind = Pattern::Kind::NatLit;
      p.nat = ts_.next().value;
      return p;
    }
    if (t.kind != Token::Kind::Ident) ts_.expected("a pattern");
    if (t.text == "_") {
      ts_.next();
      p.kind = Pattern::Kind::Wildcard;
      return p;
    }
    if (t.text == "true" || t.text == "false") {
      if (!expected.is_bool()) fail(ErrorKind::Type, t.pos, "bool pattern where " + to_string(expected) + " expected");
      p.kind = Pattern::Kind::BoolLit;
      p.boolean = ts_.next().text == "true";
      return p;
    }
    if (t.text == "S") {
      if (!expected.is_nat()) fail(ErrorKind::Type, t.pos, "S pattern where " + to_string(expected) + " expected");
      ts_.next();
      p.kind = Pattern::Kind::Succ;
      ts_.expect_symbol("(");
      p.subs.push_back(parse_pattern(Type::nat(), binders));
      ts_.expect_symbol(")");
      return p;
    }
    if (prog_.is_ctor(t.text)) {
      auto ref = *prog_.find_ctor(t.text);
      if (!expected.is_codata() || ref.type->name != expected.codata)
        fail(ErrorKind::Type, t.pos,
             "constructor '" + t.text + "' of type " + ref.type->name + " where " + to_string(expected) + " expected");
      ts_.next();
      p.kind = Pattern::Kind::Ctor;
      p.name = ref.def().name;
      ts_.expect_symbol("(");
      const auto& fields = ref.def().fields;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) ts_.expect_symbol(",");
        p.subs.push_back(parse_pattern(field_type(fields[i], expected.codata), binders));
      }
      if (!ts_.at_symbol(")"))
        fail(ErrorKind::Type, ts_.peek().pos,
             "constructor '" + p.name + "' expects " + std::to_string(fields.size()) + " fields");
      ts_.next();
      return p;
    }
    const Token& n = ts_.expect_name("a pattern");
    if (binders.count(n.text)) fail(ErrorKind::Name, n.pos, "binder '" + n.text + "' occurs twice in one clause");
    binders.insert(n.text);
    p.kind = Pattern::Kind::Var;
    p.name = n.text;
    scope_.push_back({n.text, expected});
    return p;
  }

  static Type field_type(FieldKind k, const std::string& codata) {
    switch (k) {
      case FieldKind::Nat: return Type::nat();
      case FieldKind::Bool: return Type::boolean();
      case FieldKind::Slot: return Type::of_codata(codata);
    }
    return Type::nat();
  }

  const Binding* find_binding(std::string_view name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->name == name) return &*it;
    return nullptr;
  }

  void expect_type(const Expr& e, const Type& t, std::string_view what) const {
    if (e.type != t)
      fail(ErrorKind::Type, e.pos,
           std::string(what) + " has type " + to_string(e.type) + ", expected " + to_string(t));
  }

  // ---- base expressions ----

  Expr parse_base() { return parse_or(); }

  Expr make_binary(BinOp op, Expr lhs, Expr rhs, SourcePos pos) {
    if (op == BinOp::And || op == BinOp::Or) {
      expect_type(lhs, Type::boolean(), std::string("operand of '") + symbol(op) + "'");
      expect_type(rhs, Type::boolean(), std::string("operand of '") + symbol(op) + "'");
    } else if (op == BinOp::Eq || op == BinOp::Ne) {
      if (lhs.type != rhs.type)
        fail(ErrorKind::Type, pos, "operands of '" + std::string(symbol(op)) + "' have different types");
    } else {
      expect_type(lhs, Type::nat(), std::string("operand of '") + symbol(op) + "'");
      expect_type(rhs, Type::nat(), std::string("operand of '") + symbol(op) + "'");
    }
    Expr e = build::binary(op, std::move(lhs), std::move(rhs));
    e.pos = pos;
    return e;
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (ts_.at_symbol("||")) {
      SourcePos pos = ts_.next().pos;
      lhs = make_binary(BinOp::Or, std::move(lhs), parse_and(), pos);
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_cmp();
    while (ts_.at_symbol("&&")) {
      SourcePos pos = ts_.next().pos;
      lhs = make_binary(BinOp::And, std::move(lhs), parse_cmp(), pos);
    }
    return lhs;
  }

  std::optional<BinOp> peek_cmp() const {
    static const std::pair<const char*, BinOp> ops[] = {{"==", BinOp::Eq}, {"!=", BinOp::Ne}, {"<=", BinOp::Le},
                                                        {">=", BinOp::Ge}, {"<", BinOp::Lt},  {">", BinOp::Gt}};
    for (const auto& [s, op] : ops)
      if (ts_.at_symbol(s)) return op;
    return std::nullopt;
  }

  Expr parse_cmp() {
    Expr lhs = parse_add();
    if (auto op = peek_cmp()) {
      SourcePos pos = ts_.next().pos;
      lhs = make_binary(*op, std::move(lhs), parse_add(), pos);
      if (peek_cmp()) fail(ErrorKind::Syntax, ts_.peek().pos, "comparisons do not chain; add parentheses");
    }
    return lhs;
  }

  Expr parse_add() {
    Expr lhs = parse_mul();
    while (ts_.at_symbol("+") || ts_.at_symbol("-")) {
      const Token& t = ts_.next();
      BinOp op = t.text == "+" ? BinOp::Add : BinOp::Monus;
      lhs = make_binary(op, std::move(lhs), parse_mul(), t.pos);
    }
    return lhs;
  }

  Expr parse_mul() {
    Expr lhs = parse_unary();
    while (ts_.at_symbol("*") || ts_.at_symbol("/") || ts_.at_word("mod")) {
      const Token& t = ts_.next();
      BinOp op = t.text == "*" ? BinOp::Mul : t.text == "/" ? BinOp::Div : BinOp::Mod;
      lhs = make_binary(op, std::move(lhs), parse_unary(), t.pos);
    }
    return lhs;
  }

  Expr parse_unary() {
    if (ts_.at_symbol("!") || ts_.at_word("not")) {
      SourcePos pos = ts_.next().pos;
      Expr inner = parse_unary();
      expect_type(inner, Type::boolean(), "operand of '!'");
      Expr e = build::node(ExprKind::Not, {}, Type::boolean(), {});
      e.args.push_back(std::move(inner));
      e.pos = pos;
      return e;
    }
    return parse_primary();
  }

  std::vector<Expr> parse_call_args(const std::vector<Param>& params, const std::string& callee, SourcePos pos) {
    std::vector<Expr> args;
    ts_.expect_symbol("(");
    if (!ts_.at_symbol(")")) {
      do {
        if (args.size() >= params.size())
          fail(ErrorKind::Type, pos, "'" + callee + "' expects " + std::to_string(params.size()) + " arguments");
        const Type& pt = params[args.size()].type;
        if (pt.is_codata()) {
          args.push_back(parse_co(pt.codata));
        } else {
          Expr a = parse_base();
          expect_type(a, pt, "argument " + std::to_string(args.size() + 1) + " of '" + callee + "'");
          args.push_back(std::move(a));
        }
      } while (ts_.accept_symbol(","));
    }
    ts_.expect_symbol(")");
    if (args.size() != params.size())
      fail(ErrorKind::Type, pos, "'" + callee + "' expects " + std::to_string(params.size()) + " arguments");
    return args;
  }

  Expr parse_primary() {
    const Token& t = ts_.peek();
    SourcePos pos = t.pos;
    if (t.kind == Token::Kind::Number) {
      Expr e = build::nat(ts_.next().value);
      e.pos = pos;
      return e;
    }
    if (ts_.accept_symbol("(")) {
      Expr e = parse_base();
      ts_.expect_symbol(")");
      return e;
    }
    if (t.kind != Token::Kind::Ident) ts_.expected("an expression");
    if (t.text == "true" || t.text == "false") {
      Expr e = build::boolean(ts_.next().text == "true");
      e.pos = pos;
      return e;
    }
    if (t.text == "if") {
      ts_.next();
      Expr c = parse_base();
      expect_type(c, Type::boolean(), "condition");
      ts_.expect_word("then");
      Expr a = parse_base();
      ts_.expect_word("else");
      Expr b = parse_base();
      if (a.type != b.type) fail(ErrorKind::Type, pos, "branches of 'if' have different types");
      Expr e = build::node(ExprKind::If, {}, a.type, {});
      e.args.push_back(std::move(c));
      e.args.push_back(std::move(a));
      e.args.push_back(std::move(b));
      e.pos = pos;
      return e;
    }
    if (t.text == "S") {
      ts_.next();
      ts_.expect_symbol("(");
      Expr inner = parse_base();
      expect_type(inner, Type::nat(), "argument of S");
      ts_.expect_symbol(")");
      Expr e = build::node(ExprKind::Succ, {}, Type::nat(), {});
      e.args.push_back(std::move(inner));
      e.pos = pos;
      return e;
    }
    const Token& n = ts_.expect_name("an expression");
    if (ts_.at_symbol("(")) {
      if (self_ && n.text == self_->name) {
        if (!self_->result.is_base())
          fail(ErrorKind::Type, pos, "codata-valued call of '" + n.text + "' in a base position");
        Expr e = build::node(ExprKind::RecCall, n.text, self_->result, parse_call_args(self_->params, n.text, pos));
        e.pos = pos;
        return e;
      }
      if (const auto* d = prog_.find_def(n.text)) {
        Expr e = build::node(ExprKind::Apply, n.text, d->result, parse_call_args(d->params, n.text, pos));
        e.pos = pos;
        return e;
      }
      if (const auto* r = prog_.find_rec(n.text)) {
        Expr e = build::node(ExprKind::Apply, n.text, Type::nat(), parse_call_args(r->params, n.text, pos));
        e.pos = pos;
        return e;
      }
      if (prog_.find_fun(n.text) || prog_.is_ctor(n.text))
        fail(ErrorKind::Type, pos, "codata-valued '" + n.text + "' used in a base position");
      fail(ErrorKind::Name, pos, "unknown function '" + n.text + "'");
    }
    const Binding* b = find_binding(n.text);
    if (!b) fail(ErrorKind::Name, pos, "unbound variable '" + n.text + "'");
    if (!b->type.is_base())
      fail(ErrorKind::Type, pos, "codata variable '" + n.text + "' used in a base position");
    Expr e = build::var(n.text, b->type);
    e.pos = pos;
    return e;
  }

  // ---- codata expressions ----

  Expr parse_co(const std::string& expected) {
    if (ts_.accept_symbol("(")) {
      Expr e = parse_co(expected);
      ts_.expect_symbol(")");
      return e;
    }
    const Token& n = ts_.expect_name("a codata expression");
    SourcePos pos = n.pos;
    Type want = Type::of_codata(expected);
    if (!ts_.at_symbol("(")) {
      const Binding* b = find_binding(n.text);
      if (!b) fail(ErrorKind::Name, pos, "unbound variable '" + n.text + "'");
      if (b->type != want)
        fail(ErrorKind::Type, pos, "variable '" + n.text + "' has type " + to_string(b->type) + ", expected " + expected);
      Expr e = build::var(n.text, want);
      e.pos = pos;
      return e;
    }
    if (auto ref = prog_.find_ctor(n.text)) {
      if (ref->type->name != expected)
        fail(ErrorKind::Type, pos,
             "constructor '" + n.text + "' builds " + ref->type->name + ", expected " + expected);
      const auto& fields = ref->def().fields;
      std::vector<Expr> args;
      ts_.expect_symbol("(");
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0 && !ts_.accept_symbol(","))
          fail(ErrorKind::Type, ts_.peek().pos,
               "constructor '" + n.text + "' expects " + std::to_string(fields.size()) + " fields");
        if (fields[i] == FieldKind::Slot) {
          args.push_back(parse_co(expected));
        } else {
          Expr a = parse_base();
          expect_type(a, field_type(fields[i], expected), "field " + std::to_string(i + 1) + " of '" + n.text + "'");
          args.push_back(std::move(a));
        }
      }
      if (!ts_.at_symbol(")"))
        fail(ErrorKind::Type, ts_.peek().pos,
             "constructor '" + n.text + "' expects " + std::to_string(fields.size()) + " fields");
      ts_.next();
      Expr e = build::node(ExprKind::Ctor, n.text, want, std::move(args));
      e.pos = pos;
      return e;
    }
    if (self_ && n.text == self_->name) {
      if (self_->result != want)
        fail(ErrorKind::Type, pos, "'" + n.text + "' returns " + to_string(self_->result) + ", expected " + expected);
      Expr e = build::node(ExprKind::RecCall, n.text, want, parse_call_args(self_->params, n.text, pos));
      e.pos = pos;
      return e;
    }
    if (const auto* f = prog_.find_fun(n.text)) {
      if (f->result != expected)
        fail(ErrorKind::Type, pos, "'" + n.text + "' returns " + f->result + ", expected " + expected);
      Expr e = build::node(ExprKind::HelperCall, n.text, want, parse_call_args(f->params, n.text, pos));
      e.pos = pos;
      return e;
    }
    if (prog_.find_def(n.text) || prog_.find_rec(n.text))
      fail(ErrorKind::Type, pos, "base-valued '" + n.text + "' used where " + expected + " expected");
    fail(ErrorKind::Name, pos, "unknown function or constructor '" + n.text + "'");
  }

  TokenStream ts_;
  Program prog_;
  std::vector<Binding> scope_;
  std::optional<Self> self_;
};

}  // namespace detail

/// Parses a whole .corec source. Throws ParseError on the first syntax,
/// name or type error.
inline Program parse_program(std::string_view text) { return detail::ProgramParser(text).run(); }

// ---------------------------------------------------------------------------
// Observation expressions

/// A closed application term: literals and calls of declared functions and
/// constructors.
struct Term {
  enum class Kind { Nat, Bool, Call };
  Kind kind = Kind::Nat;
  Nat nat = 0;
  bool boolean = false;
  std::string name;
  std::vector<Term> args;
  Type type;
  SourcePos pos;

  friend bool operator==(const Term& a, const Term& b) {
    return a.kind == b.kind && a.nat == b.nat && a.boolean == b.boolean && a.name == b.name &&
           a.args == b.args;
  }
};

inline std::string to_string(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Nat: return std::to_string(t.nat);
    case Term::Kind::Bool: return t.boolean ? "true" : "false";
    case Term::Kind::Call: break;
  }
  std::string s = t.name + "(";
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    if (i) s += ", ";
    s += to_string(t.args[i]);
  }
  return s + ")";
}

enum class Direction { L, R };

struct Observation {
  enum class Kind { Value, Nth, Take, Fetch };
  Kind kind = Kind::Value;
  Nat count = 0;  // index for nth, length for take
  std::vector<Direction> path;
  Term term;
};

namespace detail {

class TermParser {
 public:
  TermParser(std::string_view src, const Program& prog) : ts_(tokenize(src)), prog_(prog) {}

  Term term() {
    const Token& t = ts_.peek();
    Term out;
    out.pos = t.pos;
    if (t.kind == Token::Kind::Number) {
      out.kind = Term::Kind::Nat;
      out.nat = ts_.next().value;
      out.type = Type::nat();
      return out;
    }
    if (ts_.accept_word("true") || ts_.accept_word("false")) {
      out.kind = Term::Kind::Bool;
      out.boolean = t.text == "true";
      out.type = Type::boolean();
      return out;
    }
    const Token& n = ts_.expect_name("a term");
    out.kind = Term::Kind::Call;
    out.name = n.text;
    std::vector<Type> param_types;
    if (auto ref = prog_.find_ctor(n.text)) {
      for (auto f : ref->def().fields)
        param_types.push_back(f == FieldKind::Nat    ? Type::nat()
                              : f == FieldKind::Bool ? Type::boolean()
                                                     : Type::of_codata(ref->type->name));
      out.type = Type::of_codata(ref->type->name);
    } else if (const auto* f = prog_.find_fun(n.text)) {
      for (const auto& p : f->params) param_types.push_back(p.type);
      out.type = Type::of_codata(f->result);
    } else if (const auto* d = prog_.find_def(n.text)) {
      for (const auto& p : d->params) param_types.push_back(p.type);
      out.type = d->result;
    } else if (const auto* r = prog_.find_rec(n.text)) {
      for (const auto& p : r->params) param_types.push_back(p.type);
      out.type = Type::nat();
    } else {
      ts_.fail(ErrorKind::Name, n.pos, "unknown function or constructor '" + n.text + "'");
    }
    ts_.expect_symbol("(");
    if (!ts_.at_symbol(")")) {
      do out.args.push_back(term());
      while (ts_.accept_symbol(","));
    }
    ts_.expect_symbol(")");
    if (out.args.size() != param_types.size())
      ts_.fail(ErrorKind::Type, n.pos,
               "'" + n.text + "' expects " + std::to_string(param_types.size()) + " arguments");
    for (std::size_t i = 0; i < out.args.size(); ++i)
      if (out.args[i].type != param_types[i])
        ts_.fail(ErrorKind::Type, out.args[i].pos,
                 "argument " + std::to_string(i + 1) + " of '" + n.text + "' has type " +
                     to_string(out.args[i].type) + ", expected " + to_string(param_types[i]));
    return out;
  }

  std::vector<Term> term_list() {
    std::vector<Term> out;
    if (ts_.at_end()) return out;
    do out.push_back(term());
    while (ts_.accept_symbol(","));
    finish();
    return out;
  }

  Observation observation() {
    Observation obs;
    if ((ts_.at_word("nth") || ts_.at_word("take")) && ts_.at_symbol("(", 1) && !prog_.lookup(ts_.peek().text)) {
      obs.kind = ts_.next().text == "nth" ? Observation::Kind::Nth : Observation::Kind::Take;
      ts_.expect_symbol("(");
      obs.count = ts_.expect_number();
      ts_.expect_symbol(",");
      obs.term = term();
      ts_.expect_symbol(")");
    } else if (ts_.at_word("fetch") && ts_.at_symbol("(", 1) && !prog_.lookup("fetch")) {
      ts_.next();
      obs.kind = Observation::Kind::Fetch;
      ts_.expect_symbol("(");
      ts_.expect_symbol("[");
      if (!ts_.at_symbol("]")) {
        do {
          if (ts_.accept_word("L")) {
            obs.path.push_back(Direction::L);
          } else if (ts_.accept_word("R")) {
            obs.path.push_back(Direction::R);
          } else {
            ts_.expected("L or R");
          }
        } while (ts_.accept_symbol(","));
      }
      ts_.expect_symbol("]");
      ts_.expect_symbol(",");
      obs.term = term();
      ts_.expect_symbol(")");
    } else {
      obs.term = term();
    }
    finish();
    if (obs.kind != Observation::Kind::Value && !obs.term.type.is_codata())
      ts_.fail(ErrorKind::Type, obs.term.pos, "observed term must be codata");
    return obs;
  }

  void finish() {
    if (!ts_.at_end()) ts_.expected("end of expression");
  }

 private:
  TokenStream ts_;
  const Program& prog_;
};

}  // namespace detail

inline Term parse_term(std::string_view text, const Program& prog) {
  detail::TermParser p(text, prog);
  Term t = p.term();
  p.finish();
  return t;
}

/// Comma-separated argument list, e.g. `3, from(0)`.
inline std::vector<Term> parse_term_list(std::string_view text, const Program& prog) {
  return detail::TermParser(text, prog).term_list();
}

/// `nth(N, T)`, `take(N, T)`, `fetch([L,R,...], T)` or a bare term.
inline Observation parse_observation(std::string_view text, const Program& prog) {
  return detail::TermParser(text, prog).observation();
}

}  // namespace corec
