#pragma once

// Abstract syntax of the .corec language: codata declarations, base helpers,
// structural recursive functions and (co)recursive functions defined by
// ordered pattern/guard/body clauses.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corec/diagnostics.hpp"

namespace corec {

using Nat = std::uint64_t;

struct Type {
  enum class Tag { Nat, Bool, Codata };

  Tag tag = Tag::Nat;
  std::string codata;  // set when tag == Codata

  static Type nat() { return {Tag::Nat, {}}; }
  static Type boolean() { return {Tag::Bool, {}}; }
  static Type of_codata(std::string name) { return {Tag::Codata, std::move(name)}; }

  bool is_nat() const { return tag == Tag::Nat; }
  bool is_bool() const { return tag == Tag::Bool; }
  bool is_codata() const { return tag == Tag::Codata; }
  bool is_base() const { return tag != Tag::Codata; }

  friend bool operator==(const Type&, const Type&) = default;
};

inline std::string to_string(const Type& t) {
  switch (t.tag) {
    case Type::Tag::Nat: return "nat";
    case Type::Tag::Bool: return "bool";
    case Type::Tag::Codata: return t.codata;
  }
  return "?";
}

enum class FieldKind { Nat, Bool, Slot };

struct CtorDef {
  std::string name;
  std::vector<FieldKind> fields;

  std::size_t slot_count() const {
    std::size_t n = 0;
    for (auto f : fields) n += f == FieldKind::Slot;
    return n;
  }
  std::size_t payload_count() const { return fields.size() - slot_count(); }

  friend bool operator==(const CtorDef&, const CtorDef&) = default;
};

struct CodataTypeDef {
  std::string name;
  std::vector<CtorDef> ctors;
  SourcePos pos;

  std::optional<std::size_t> ctor_index(std::string_view ctor) const {
    for (std::size_t i = 0; i < ctors.size(); ++i)
      if (ctors[i].name == ctor) return i;
    return std::nullopt;
  }

  friend bool operator==(const CodataTypeDef& a, const CodataTypeDef& b) {
    return a.name == b.name && a.ctors == b.ctors;
  }
};

enum class BinOp { Add, Monus, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

inline const char* symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Monus: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "mod";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
  }
  return "?";
}

/// Binding strength used by both the parser and the printer.
inline int precedence(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq: case BinOp::Ne: case BinOp::Lt:
    case BinOp::Le: case BinOp::Gt: case BinOp::Ge: return 3;
    case BinOp::Add: case BinOp::Monus: return 4;
    case BinOp::Mul: case BinOp::Div: case BinOp::Mod: return 5;
  }
  return 0;
}

inline bool is_comparison(BinOp op) { return precedence(op) == 3; }

enum class ExprKind {
  NatLit,
  BoolLit,
  Var,         // base variable or codata variable (see `type`)
  Not,
  Binary,
  If,          // args: cond, then, else
  Succ,        // S(e), nat successor
  Apply,       // call of a def or rec helper, base-valued
  RecCall,     // call of the enclosing definition
  Ctor,        // codata constructor application, args in field order
  HelperCall,  // call of another cofun/fun, codata-valued
};

/// One expression tree serves base and codata positions; `type` records
/// which sort a node inhabits. Source positions are ignored by equality.
struct Expr {
  ExprKind kind = ExprKind::NatLit;
  Type type;
  std::string name;
  Nat nat = 0;
  bool boolean = false;
  BinOp op = BinOp::Add;
  std::vector<Expr> args;
  SourcePos pos;

  bool is_codata() const { return type.is_codata(); }

  friend bool operator==(const Expr& a, const Expr& b) {
    return a.kind == b.kind && a.type == b.type && a.name == b.name && a.nat == b.nat &&
           a.boolean == b.boolean && a.op == b.op && a.args == b.args;
  }
};

namespace build {

inline Expr nat(Nat n) {
  Expr e;
  e.kind = ExprKind::NatLit;
  e.type = Type::nat();
  e.nat = n;
  return e;
}

inline Expr boolean(bool b) {
  Expr e;
  e.kind = ExprKind::BoolLit;
  e.type = Type::boolean();
  e.boolean = b;
  return e;
}

inline Expr var(std::string name, Type type) {
  Expr e;
  e.kind = ExprKind::Var;
  e.type = std::move(type);
  e.name = std::move(name);
  return e;
}

inline Expr node(ExprKind kind, std::string name, Type type, std::vector<Expr> args) {
  Expr e;
  e.kind = kind;
  e.name = std::move(name);
  e.type = std::move(type);
  e.args = std::move(args);
  return e;
}

inline Expr binary(BinOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.op = op;
  e.type = (is_comparison(op) || op == BinOp::And || op == BinOp::Or) ? Type::boolean() : Type::nat();
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

}  // namespace build

struct Pattern {
  enum class Kind { Var, Wildcard, NatLit, Succ, BoolLit, Ctor };

  Kind kind = Kind::Var;
  std::string name;  // binder for Var, constructor for Ctor
  Nat nat = 0;
  bool boolean = false;
  std::vector<Pattern> subs;
  Type type;
  SourcePos pos;

  /// Matches every value of its type without inspecting it.
  bool irrefutable() const { return kind == Kind::Var || kind == Kind::Wildcard; }

  friend bool operator==(const Pattern& a, const Pattern& b) {
    return a.kind == b.kind && a.name == b.name && a.nat == b.nat && a.boolean == b.boolean &&
           a.subs == b.subs && a.type == b.type;
  }
};

struct Param {
  std::string name;
  Type type;
  friend bool operator==(const Param&, const Param&) = default;
};

struct Clause {
  std::vector<Pattern> patterns;  // one per parameter
  std::optional<Expr> guard;
  Expr body;
  SourcePos pos;

  friend bool operator==(const Clause& a, const Clause& b) {
    return a.patterns == b.patterns && a.guard == b.guard && a.body == b.body;
  }
};

/// `def name(params) = expr`: a non-recursive base helper.
struct HelperDef {
  std::string name;
  std::vector<Param> params;
  Type result;
  Expr body;
  SourcePos pos;

  friend bool operator==(const HelperDef& a, const HelperDef& b) {
    return a.name == b.name && a.params == b.params && a.result == b.result && a.body == b.body;
  }
};

/// `rec name(params): nat | pats => expr ...`: recursion over nat arguments.
struct RecFunDef {
  std::string name;
  std::vector<Param> params;
  std::vector<Clause> clauses;
  SourcePos pos;

  friend bool operator==(const RecFunDef& a, const RecFunDef& b) {
    return a.name == b.name && a.params == b.params && a.clauses == b.clauses;
  }
};

enum class FunKind { Cofun, Fun };

/// A codata-producing definition. `cofun` claims guardedness, `fun` is a
/// candidate that may be unguarded; both are classified the same way.
struct FunDef {
  std::string name;
  FunKind kind = FunKind::Fun;
  std::vector<Param> params;
  std::string result;  // codata type name
  std::vector<Clause> clauses;
  bool equation_form = false;  // written `= body` rather than with clauses
  SourcePos pos;

  friend bool operator==(const FunDef& a, const FunDef& b) {
    return a.name == b.name && a.kind == b.kind && a.params == b.params && a.result == b.result &&
           a.clauses == b.clauses && a.equation_form == b.equation_form;
  }
};

enum class DeclKind { Codata, Def, Rec, Fun };

struct DeclRef {
  DeclKind kind;
  std::size_t index;
  friend bool operator==(const DeclRef&, const DeclRef&) = default;
};

struct CtorRef {
  const CodataTypeDef* type = nullptr;
  std::size_t index = 0;
  const CtorDef& def() const { return type->ctors[index]; }
};

/// Declarations in source order plus a name table. Immutable once parsed.
class Program {
 public:
  std::vector<CodataTypeDef> codata;
  std::vector<HelperDef> defs;
  std::vector<RecFunDef> recs;
  std::vector<FunDef> funs;
  std::vector<DeclRef> order;

  void add(CodataTypeDef t) {
    names_[t.name] = {DeclKind::Codata, codata.size()};
    for (std::size_t i = 0; i < t.ctors.size(); ++i) ctors_[t.ctors[i].name] = {codata.size(), i};
    order.push_back({DeclKind::Codata, codata.size()});
    codata.push_back(std::move(t));
  }
  void add(HelperDef d) {
    names_[d.name] = {DeclKind::Def, defs.size()};
    order.push_back({DeclKind::Def, defs.size()});
    defs.push_back(std::move(d));
  }
  void add(RecFunDef r) {
    names_[r.name] = {DeclKind::Rec, recs.size()};
    order.push_back({DeclKind::Rec, recs.size()});
    recs.push_back(std::move(r));
  }
  void add(FunDef f) {
    names_[f.name] = {DeclKind::Fun, funs.size()};
    order.push_back({DeclKind::Fun, funs.size()});
    funs.push_back(std::move(f));
  }

  std::optional<DeclKind> lookup(std::string_view name) const {
    auto it = names_.find(std::string(name));
    if (it == names_.end()) return std::nullopt;
    return it->second.kind;
  }
  bool is_ctor(std::string_view name) const { return ctors_.count(std::string(name)) != 0; }

  const CodataTypeDef* find_codata(std::string_view name) const { return find<DeclKind::Codata>(codata, name); }
  const HelperDef* find_def(std::string_view name) const { return find<DeclKind::Def>(defs, name); }
  const RecFunDef* find_rec(std::string_view name) const { return find<DeclKind::Rec>(recs, name); }
  const FunDef* find_fun(std::string_view name) const { return find<DeclKind::Fun>(funs, name); }

  std::optional<CtorRef> find_ctor(std::string_view name) const {
    auto it = ctors_.find(std::string(name));
    if (it == ctors_.end()) return std::nullopt;
    return CtorRef{&codata[it->second.first], it->second.second};
  }

  bool empty() const { return order.empty(); }

  friend bool operator==(const Program& a, const Program& b) {
    return a.codata == b.codata && a.defs == b.defs && a.recs == b.recs && a.funs == b.funs &&
           a.order == b.order;
  }

 private:
  template <DeclKind K, typename T>
  const T* find(const std::vector<T>& items, std::string_view name) const {
    auto it = names_.find(std::string(name));
    if (it == names_.end() || it->second.kind != K) return nullptr;
    return &items[it->second.index];
  }

  std::map<std::string, DeclRef, std::less<>> names_;
  std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> ctors_;
};

/// Pattern binders in left-to-right order.
inline void collect_binders(const Pattern& p, std::vector<const Pattern*>& out) {
  if (p.kind == Pattern::Kind::Var) out.push_back(&p);
  for (const auto& s : p.subs) collect_binders(s, out);
}

inline std::vector<const Pattern*> clause_binders(const Clause& c) {
  std::vector<const Pattern*> out;
  for (const auto& p : c.patterns) collect_binders(p, out);
  return out;
}

/// Calls `fn(expr, path)` for every node in preorder. The path lists child
/// indices from the root.
template <typename Fn>
void walk(const Expr& e, Fn&& fn, std::vector<std::size_t>& path) {
  fn(e, path);
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    path.push_back(i);
    walk(e.args[i], fn, path);
    path.pop_back();
  }
}

template <typename Fn>
void walk(const Expr& e, Fn&& fn) {
  std::vector<std::size_t> path;
  walk(e, fn, path);
}

}  // namespace corec
