#pragma once

// Canonical rendering of programs. parse_program(pretty(p)) == p.

#include <sstream>
#include <string>

#include "corec/ast.hpp"

namespace corec {

inline std::string pretty(const Pattern& p) {
  switch (p.kind) {
    case Pattern::Kind::Var: return p.name;
    case Pattern::Kind::Wildcard: return "_";
    case Pattern::Kind::NatLit: return std::to_string(p.nat);
    case Pattern::Kind::BoolLit: return p.boolean ? "true" : "false";
    case Pattern::Kind::Succ: return "S(" + pretty(p.subs[0]) + ")";
    case Pattern::Kind::Ctor: break;
  }
  std::string s = p.name + "(";
  for (std::size_t i = 0; i < p.subs.size(); ++i) {
    if (i) s += ", ";
    s += pretty(p.subs[i]);
  }
  return s + ")";
}

namespace detail {

// `ctx` is the precedence an operand must exceed to print without parens.
inline std::string pretty_expr(const Expr& e, int ctx) {
  auto call = [&](const std::string& head) {
    std::string s = head + "(";
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      if (i) s += ", ";
      s += pretty_expr(e.args[i], 0);
    }
    return s + ")";
  };
  switch (e.kind) {
    case ExprKind::NatLit: return std::to_string(e.nat);
    case ExprKind::BoolLit: return e.boolean ? "true" : "false";
    case ExprKind::Var: return e.name;
    case ExprKind::Not: return "!" + pretty_expr(e.args[0], 6);
    case ExprKind::Succ: return "S(" + pretty_expr(e.args[0], 0) + ")";
    case ExprKind::Apply:
    case ExprKind::RecCall:
    case ExprKind::Ctor:
    case ExprKind::HelperCall: return call(e.name);
    case ExprKind::If: {
      std::string s = "if " + pretty_expr(e.args[0], 0) + " then " + pretty_expr(e.args[1], 0) + " else " +
                      pretty_expr(e.args[2], 0);
      return ctx > 0 ? "(" + s + ")" : s;
    }
    case ExprKind::Binary: {
      int p = precedence(e.op);
      // Left-associative operators; comparisons do not associate at all.
      int left = is_comparison(e.op) ? p : p - 1;
      auto operand = [](const Expr& a, int c) {
        return a.kind == ExprKind::If ? "(" + pretty_expr(a, 0) + ")" : pretty_expr(a, c);
      };
      std::string s = operand(e.args[0], left) + " " + symbol(e.op) + " " + operand(e.args[1], p);
      return p <= ctx ? "(" + s + ")" : s;
    }
  }
  return "?";
}

inline std::string pretty_params(const std::vector<Param>& params) {
  std::string s = "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) s += ", ";
    s += params[i].name + ": " + to_string(params[i].type);
  }
  return s + ")";
}

inline std::string field_name(FieldKind k) {
  switch (k) {
    case FieldKind::Nat: return "nat";
    case FieldKind::Bool: return "bool";
    case FieldKind::Slot: return "#";
  }
  return "?";
}

}  // namespace detail

inline std::string pretty(const Expr& e) { return detail::pretty_expr(e, 0); }

inline std::string pretty(const CodataTypeDef& t) {
  std::string s = "codata " + t.name + " =";
  for (std::size_t i = 0; i < t.ctors.size(); ++i) {
    s += i ? " | " : " ";
    s += t.ctors[i].name + "(";
    for (std::size_t j = 0; j < t.ctors[i].fields.size(); ++j) {
      if (j) s += ", ";
      s += detail::field_name(t.ctors[i].fields[j]);
    }
    s += ")";
  }
  return s;
}

inline std::string pretty(const HelperDef& d) {
  return "def " + d.name + detail::pretty_params(d.params) + " = " + pretty(d.body);
}

inline std::string pretty_clause(const Clause& c) {
  std::string s = "  | ";
  for (std::size_t i = 0; i < c.patterns.size(); ++i) {
    if (i) s += ", ";
    s += pretty(c.patterns[i]);
  }
  if (c.guard) s += " when " + pretty(*c.guard);
  return s + " => " + pretty(c.body);
}

inline std::string pretty(const RecFunDef& r) {
  std::string s = "rec " + r.name + detail::pretty_params(r.params) + ": nat";
  for (const auto& c : r.clauses) s += "\n" + pretty_clause(c);
  return s;
}

inline std::string pretty(const FunDef& f) {
  std::string s = (f.kind == FunKind::Cofun ? "cofun " : "fun ") + f.name + detail::pretty_params(f.params) +
                  ": " + f.result;
  if (f.equation_form) return s + " = " + pretty(f.clauses.front().body);
  for (const auto& c : f.clauses) s += "\n" + pretty_clause(c);
  return s;
}

/// Declarations in source order separated by blank lines; "" for an empty
/// program.
inline std::string pretty(const Program& p) {
  std::ostringstream out;
  bool first = true;
  for (const auto& ref : p.order) {
    if (!first) out << "\n";
    first = false;
    switch (ref.kind) {
      case DeclKind::Codata: out << pretty(p.codata[ref.index]); break;
      case DeclKind::Def: out << pretty(p.defs[ref.index]); break;
      case DeclKind::Rec: out << pretty(p.recs[ref.index]); break;
      case DeclKind::Fun: out << pretty(p.funs[ref.index]); break;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace corec
