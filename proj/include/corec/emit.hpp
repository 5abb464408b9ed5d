#pragma once

// Vernacular output. Codata types become CoInductive types with a
// bisimilarity, base helpers Definitions and Fixpoints, guarded functions
// CoFixpoints. A transformable unguarded function becomes its eventually
// predicate, inversion lemmas, inductive component, infinite predicate,
// guarded CoFixpoint and the statements relating them; proofs are admitted.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "corec/ast.hpp"
#include "corec/guardedness.hpp"
#include "corec/transform.hpp"

namespace corec {
namespace coq {

using Lines = std::vector<std::string>;
using Names = std::map<std::string, std::string>;

inline const std::set<std::string, std::less<>>& reserved() {
  static const std::set<std::string, std::less<>> words{
      "as",    "at",   "cofix", "else",    "end",        "exists", "exists2", "fix",   "for",   "forall",
      "fun",   "if",   "IF",    "in",      "let",        "match",  "mod",     "return", "then", "using",
      "where", "with", "struct", "Prop",   "Set",        "SProp",  "Type",    "S",     "O",     "nat",
      "bool",  "true", "false", "unit",    "tt",         "fst",    "snd",     "negb",  "andb",  "orb",
      "tmod",  "eq_refl", "False_rect", "True", "False", "proj1",  "proj2",   "Nat",   "Bool",  "Definition",
      "Fixpoint", "CoFixpoint", "Inductive", "CoInductive", "Lemma", "Theorem", "Proof", "Qed", "Admitted"};
  return words;
}

inline std::string ident(const std::string& n) { return reserved().count(n) ? n + "_" : n; }

inline std::string type(const Type& t) {
  if (t.is_codata()) return ident(t.codata);
  return t.is_nat() ? "nat" : "bool";
}

/// True when `s` needs no parentheses as an argument.
inline bool atomic(const std::string& s) {
  int depth = 0;
  for (char c : s) {
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if (c == ' ' && depth == 0) return false;
  }
  return true;
}

inline std::string arg(const std::string& s) { return atomic(s) ? s : "(" + s + ")"; }

inline std::string app(const std::string& head, const std::vector<std::string>& args) {
  std::string s = head;
  for (const auto& a : args) s += " " + arg(a);
  return s;
}

inline std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? sep : "") + xs[i];
  return s;
}

inline std::string tuple(const std::vector<std::string>& xs) {
  if (xs.empty()) return "tt";
  if (xs.size() == 1) return xs.front();
  return "(" + join(xs, ", ") + ")";
}

inline std::string tuple_type(const std::vector<std::string>& ts) {
  if (ts.empty()) return "unit";
  std::vector<std::string> wrapped;
  for (const auto& t : ts) wrapped.push_back(arg(t));
  return join(wrapped, " * ");
}

/// Component `k` of a left-nested tuple of `n` components.
inline std::string proj(const std::string& e, std::size_t k, std::size_t n) {
  if (n <= 1) return e;
  if (k == n - 1) return "snd " + arg(e);
  return proj("fst " + arg(e), k, n - 1);
}

/// Conjunct `k` of a right-nested conjunction of `m` conjuncts.
inline std::string conj_proj(const std::string& e, std::size_t k, std::size_t m) {
  if (m <= 1) return e;
  if (k == 0) return "proj1 " + arg(e);
  return conj_proj("proj2 " + arg(e), k - 1, m - 1);
}

inline std::string conj(const std::vector<std::string>& props) {
  return props.empty() ? "True" : join(props, " /\\ ");
}

struct Binder {
  std::string name;
  std::string type;
};

/// `x : nat` for one binder, `(x y : nat) (tl : Stream)` otherwise.
inline std::string binders(const std::vector<Binder>& bs) {
  if (bs.size() == 1) return bs.front().name + " : " + bs.front().type;
  std::string s;
  for (std::size_t i = 0; i < bs.size();) {
    std::size_t j = i;
    std::string names;
    for (; j < bs.size() && bs[j].type == bs[i].type; ++j) names += (j > i ? " " : "") + bs[j].name;
    s += (i ? " (" : "(") + names + " : " + bs[i].type + ")";
    i = j;
  }
  return s;
}

inline std::string forall(const std::vector<Binder>& bs, const std::string& body) {
  return bs.empty() ? body : "forall " + binders(bs) + ", " + body;
}

inline std::string arrows(const std::vector<std::string>& premises, const std::string& conclusion) {
  std::string s;
  for (const auto& p : premises) s += p + " -> ";
  return s + conclusion;
}

inline std::string base(const Expr& e, const Names& names) {
  auto sub = [&](std::size_t i) { return arg(base(e.args[i], names)); };
  switch (e.kind) {
    case ExprKind::NatLit: return std::to_string(e.nat);
    case ExprKind::BoolLit: return e.boolean ? "true" : "false";
    case ExprKind::Var: {
      auto it = names.find(e.name);
      return it == names.end() ? ident(e.name) : it->second;
    }
    case ExprKind::Not: return "negb " + sub(0);
    case ExprKind::Succ: return "S " + sub(0);
    case ExprKind::If:
      return "if " + base(e.args[0], names) + " then " + base(e.args[1], names) + " else " + base(e.args[2], names);
    case ExprKind::Binary: {
      const std::string eqb = e.args[0].type.is_bool() ? "Bool.eqb" : "Nat.eqb";
      switch (e.op) {
        case BinOp::Add: return sub(0) + " + " + sub(1);
        case BinOp::Monus: return sub(0) + " - " + sub(1);
        case BinOp::Mul: return sub(0) + " * " + sub(1);
        case BinOp::Div: return "Nat.div " + sub(0) + " " + sub(1);
        case BinOp::Mod: return "tmod " + sub(0) + " " + sub(1);
        case BinOp::Eq: return eqb + " " + sub(0) + " " + sub(1);
        case BinOp::Ne: return "negb (" + eqb + " " + sub(0) + " " + sub(1) + ")";
        case BinOp::Lt: return "Nat.ltb " + sub(0) + " " + sub(1);
        case BinOp::Le: return "Nat.leb " + sub(0) + " " + sub(1);
        case BinOp::Gt: return "Nat.ltb " + sub(1) + " " + sub(0);
        case BinOp::Ge: return "Nat.leb " + sub(1) + " " + sub(0);
        case BinOp::And: return "andb " + sub(0) + " " + sub(1);
        case BinOp::Or: return "orb " + sub(0) + " " + sub(1);
      }
      return "?";
    }
    default: {
      std::vector<std::string> args;
      for (const auto& a : e.args) args.push_back(base(a, names));
      return app(ident(e.name), args);
    }
  }
}

using RecRender = std::function<std::string(const Expr&)>;

/// Codata-valued expression; `rec` renders calls of the enclosing function.
inline std::string term(const Expr& e, const Names& names, const RecRender& rec) {
  switch (e.kind) {
    case ExprKind::RecCall: return rec(e);
    case ExprKind::Ctor:
    case ExprKind::HelperCall: {
      std::vector<std::string> args;
      for (const auto& a : e.args) args.push_back(a.is_codata() ? term(a, names, rec) : base(a, names));
      return app(ident(e.name), args);
    }
    default: return base(e, names);
  }
}

/// Arguments of a call, codata or base by type.
inline std::vector<std::string> call_args(const std::vector<Expr>& args, const Names& names, const RecRender& rec) {
  std::vector<std::string> out;
  for (const auto& a : args) out.push_back(a.is_codata() ? term(a, names, rec) : base(a, names));
  return out;
}

/// Pattern text with its irrefutable leaves named from `leaves`.
inline std::string pattern(const Pattern& p, const std::vector<std::string>& leaves, std::size_t& k) {
  switch (p.kind) {
    case Pattern::Kind::Var:
    case Pattern::Kind::Wildcard: return leaves[k++];
    case Pattern::Kind::NatLit: return std::to_string(p.nat);
    case Pattern::Kind::BoolLit: return p.boolean ? "true" : "false";
    case Pattern::Kind::Succ: return "S " + arg(pattern(p.subs.front(), leaves, k));
    case Pattern::Kind::Ctor: {
      std::vector<std::string> subs;
      for (const auto& s : p.subs) subs.push_back(pattern(s, leaves, k));
      return app(ident(p.name), subs);
    }
  }
  return "_";
}

inline void leaves_of(const Pattern& p, std::vector<const Pattern*>& out) {
  if (p.irrefutable()) {
    out.push_back(&p);
    return;
  }
  for (const auto& s : p.subs) leaves_of(s, out);
}

inline void add(Lines& out, const Lines& more) { out.insert(out.end(), more.begin(), more.end()); }

inline Lines branch(const std::string& head, const Lines& body) {
  if (body.size() == 1) return {head + " " + body.front()};
  Lines out{head};
  for (const auto& l : body) out.push_back("  " + l);
  return out;
}

inline std::string text(const Lines& lines, const std::string& pad) {
  std::string s;
  for (std::size_t i = 0; i < lines.size(); ++i) s += (i ? "\n" : "") + pad + lines[i];
  return s;
}

/// Whether the pattern rows cover every value of the column types.
inline bool exhaustive(const Program& prog, const std::vector<std::vector<const Pattern*>>& rows,
                       const std::vector<Type>& types) {
  if (rows.empty()) return false;
  if (types.empty()) return true;
  static const Pattern wild = [] {
    Pattern p;
    p.kind = Pattern::Kind::Wildcard;
    return p;
  }();
  struct Alt {
    std::string ctor;
    std::vector<Type> fields;
  };
  bool all_irrefutable = true;
  for (const auto& row : rows) all_irrefutable = all_irrefutable && row.front()->irrefutable();
  if (all_irrefutable) {
    std::vector<std::vector<const Pattern*>> rest;
    for (const auto& row : rows) rest.emplace_back(row.begin() + 1, row.end());
    return exhaustive(prog, rest, std::vector<Type>(types.begin() + 1, types.end()));
  }
  const Type& t = types.front();
  std::vector<Alt> alts;
  if (t.is_nat()) {
    alts = {{"0", {}}, {"S", {Type::nat()}}};
  } else if (t.is_bool()) {
    alts = {{"true", {}}, {"false", {}}};
  } else {
    const CodataTypeDef* def = prog.find_codata(t.codata);
    if (!def) return false;
    for (const auto& c : def->ctors) {
      Alt a{c.name, {}};
      for (auto f : c.fields)
        a.fields.push_back(f == FieldKind::Nat ? Type::nat() : f == FieldKind::Bool ? Type::boolean() : t);
      alts.push_back(std::move(a));
    }
  }
  std::deque<Pattern> arena;
  for (const auto& alt : alts) {
    std::vector<std::vector<const Pattern*>> next;
    for (const auto& row : rows) {
      const Pattern& p = *row.front();
      std::vector<const Pattern*> head;
      bool keep = false;
      if (p.irrefutable()) {
        head.assign(alt.fields.size(), &wild);
        keep = true;
      } else if (p.kind == Pattern::Kind::NatLit) {
        if (alt.ctor == "0" && p.nat == 0) keep = true;
        if (alt.ctor == "S" && p.nat > 0) {
          Pattern q = p;
          q.nat = p.nat - 1;
          arena.push_back(q);
          head.push_back(&arena.back());
          keep = true;
        }
      } else if (p.kind == Pattern::Kind::Succ) {
        if (alt.ctor == "S") {
          head.push_back(&p.subs.front());
          keep = true;
        }
      } else if (p.kind == Pattern::Kind::BoolLit) {
        keep = alt.ctor == (p.boolean ? "true" : "false");
      } else if (p.kind == Pattern::Kind::Ctor && p.name == alt.ctor) {
        for (const auto& s : p.subs) head.push_back(&s);
        keep = true;
      }
      if (!keep) continue;
      head.insert(head.end(), row.begin() + 1, row.end());
      next.push_back(std::move(head));
    }
    std::vector<Type> next_types = alt.fields;
    next_types.insert(next_types.end(), types.begin() + 1, types.end());
    if (!exhaustive(prog, next, next_types)) return false;
  }
  return true;
}

class NameSupply {
 public:
  void take(const std::string& n) { taken_.insert(n); }
  bool taken(const std::string& n) const { return taken_.count(n) != 0; }

  std::string fresh(const std::string& base) {
    std::string c = base;
    for (int k = 0; taken(c); ++k) c = base + std::to_string(k);
    take(c);
    return c;
  }

  /// A prefix `p` such that no taken name is `p` followed by digits.
  std::string prefix(const std::string& base) {
    std::string p = base;
    auto clashes = [&] {
      for (const auto& t : taken_) {
        if (t.size() <= p.size() || t.compare(0, p.size(), p) != 0) continue;
        if (t.find_first_not_of("0123456789", p.size()) == std::string::npos) return true;
      }
      return false;
    };
    while (clashes() || taken(p)) p += "_";
    take(p);
    return p;
  }

 private:
  std::set<std::string> taken_;
};

/// How one clause's pattern variables are named in the output.
struct ClauseView {
  std::size_t clause = 0;
  std::size_t group = 0;
  std::size_t position = 0;         // 1-based, inside the group
  Names names;                      // source variable -> term
  std::vector<std::string> values;  // per parameter: pattern term, or the value it aliases
  std::vector<Binder> leaves;       // binders of refuted patterns, in order
};

/// Consecutive clauses with alpha-equivalent patterns, dispatched together.
struct ClauseGroup {
  std::vector<std::size_t> clauses;
  std::vector<bool> refuted;                     // per parameter
  std::vector<std::vector<std::string>> leaves;  // canonical leaf names per parameter
};

class Layout {
 public:
  Layout(const std::vector<Param>& params, const std::vector<Clause>& clauses, NameSupply& supply,
         const std::set<std::string>& globals)
      : clauses_(clauses) {
    for (const auto& p : params) {
      this->params.push_back(ident(p.name));
      param_types.push_back(p.type);
    }
    std::string wild = supply.prefix("w");
    std::size_t wild_count = 0;
    for (std::size_t ci = 0; ci < clauses.size(); ++ci) {
      if (groups.empty() || !patterns::alpha_equivalent(clauses[groups.back().clauses.front()].patterns,
                                                          clauses[ci].patterns)) {
        ClauseGroup g;
        std::set<std::string> used;
        for (std::size_t k = 0; k < params.size(); ++k) {
          const Pattern& p = clauses[ci].patterns[k];
          g.refuted.push_back(!p.irrefutable());
          std::vector<std::string> names;
          if (!p.irrefutable()) {
            std::vector<const Pattern*> ls;
            leaves_of(p, ls);
            for (const Pattern* l : ls) {
              std::string n;
              if (l->kind == Pattern::Kind::Wildcard) {
                n = wild + std::to_string(++wild_count);
              } else {
                n = ident(l->name);
                bool clash = used.count(n) || globals.count(n) ||
                             std::find(this->params.begin(), this->params.end(), n) != this->params.end();
                if (clash) n = supply.fresh(n);
              }
              used.insert(n);
              names.push_back(n);
            }
          }
          g.leaves.push_back(std::move(names));
        }
        groups.push_back(std::move(g));
      }
      groups.back().clauses.push_back(ci);
      group_of_.push_back(groups.size() - 1);
    }
    for (std::size_t ci = 0; ci < clauses.size(); ++ci) views.push_back(view(ci, "", this->params));
  }

  std::vector<std::string> params;
  std::vector<Type> param_types;
  std::vector<ClauseGroup> groups;
  std::vector<ClauseView> views;

  std::size_t group_of(std::size_t ci) const { return group_of_[ci]; }

  std::vector<Binder> param_binders(const std::string& suffix = "") const {
    std::vector<Binder> out;
    for (std::size_t k = 0; k < params.size(); ++k) out.push_back({params[k] + suffix, type(param_types[k])});
    return out;
  }

  /// Clause `ci` with leaves suffixed and top-level variables aliased to `values`.
  ClauseView view(std::size_t ci, const std::string& suffix, const std::vector<std::string>& values) const {
    ClauseView v;
    v.clause = ci;
    v.group = group_of_[ci];
    const ClauseGroup& g = groups[v.group];
    v.position = std::find(g.clauses.begin(), g.clauses.end(), ci) - g.clauses.begin() + 1;
    const Clause& c = clauses_[ci];
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Pattern& p = c.patterns[k];
      if (!g.refuted[k]) {
        if (p.kind == Pattern::Kind::Var) v.names[p.name] = values[k];
        v.values.push_back(values[k]);
        continue;
      }
      std::vector<std::string> names;
      for (const auto& n : g.leaves[k]) names.push_back(n + suffix);
      std::vector<const Pattern*> ls;
      leaves_of(p, ls);
      for (std::size_t j = 0; j < ls.size(); ++j) {
        if (ls[j]->kind == Pattern::Kind::Var) v.names[ls[j]->name] = names[j];
        v.leaves.push_back({names[j], type(ls[j]->type)});
      }
      std::size_t idx = 0;
      v.values.push_back(pattern(p, names, idx));
    }
    return v;
  }

  /// Binders of the clause when parameters are replaced by their patterns.
  std::vector<Binder> index_binders(std::size_t ci) const {
    const ClauseView& v = views[ci];
    const ClauseGroup& g = groups[v.group];
    std::vector<Binder> out;
    std::size_t li = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (!g.refuted[k]) {
        out.push_back({params[k], type(param_types[k])});
        continue;
      }
      for (std::size_t j = 0; j < g.leaves[k].size(); ++j) out.push_back(v.leaves[li++]);
    }
    return out;
  }

  /// `param = pattern` for every refuted parameter.
  std::vector<std::string> equations(std::size_t ci) const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < params.size(); ++k)
      if (groups[group_of_[ci]].refuted[k]) out.push_back(params[k] + " = " + views[ci].values[k]);
    return out;
  }

  const std::vector<Clause>& clauses() const { return clauses_; }

 private:
  const std::vector<Clause>& clauses_;
  std::vector<std::size_t> group_of_;
};

inline std::vector<ClauseCondition> conditions_of(const std::vector<Clause>& clauses) {
  FunDef tmp;
  tmp.clauses = clauses;
  std::vector<ClauseCondition> out;
  for (std::size_t ci = 0; ci < clauses.size(); ++ci) out.push_back(clause_condition(tmp, ci));
  return out;
}

/// Hypotheses under which first-match selects clause `ci`: its own guard,
/// then one fact per earlier overlapping clause. `values` are the terms
/// standing for the parameters.
inline std::vector<std::string> selection(const Layout& layout, const std::vector<ClauseCondition>& conds,
                                          std::size_t ci, const std::vector<std::string>& values) {
  const auto& clauses = layout.clauses();
  ClauseView v = layout.view(ci, "", values);
  std::vector<std::string> out;
  if (clauses[ci].guard) out.push_back(base(*clauses[ci].guard, v.names) + " = true");
  for (const auto& ex : conds[ci].exclusions) {
    const Clause& other = clauses[ex.clause];
    if (layout.group_of(ex.clause) == v.group) {
      ClauseView w = layout.view(ex.clause, "", values);
      out.push_back(other.guard ? base(*other.guard, w.names) + " = false" : "False");
      continue;
    }
    if (ex.kind == Exclusion::Kind::Subsumed && !ex.guarded) {
      out.push_back("False");
      continue;
    }
    ClauseView w = layout.view(ex.clause, "'", values);
    std::vector<std::string> eqs;
    for (std::size_t k = 0; k < values.size(); ++k)
      if (layout.groups[w.group].refuted[k]) eqs.push_back(values[k] + " = " + w.values[k]);
    std::string concl = other.guard ? base(*other.guard, w.names) + " = false" : "False";
    out.push_back("(" + forall(w.leaves, arrows(eqs, concl)) + ")");
  }
  return out;
}

inline const char* kExclusionTactic = "ltac:(intros; subst; first [discriminate | congruence])";

struct DispatchStyle {
  bool dependent = false;
  std::string out;  // return type of dependent matches
  std::string as;   // binder of the matched value in return clauses
  std::string heq;  // prefix of pattern equations
  std::string hg;   // prefix of guard equations
  std::function<std::string(const ClauseView&, const std::vector<std::string>&)> leaf;
  std::function<std::string()> unreachable;
};

/// First-match dispatch over the clauses as nested matches. Dependent
/// matches keep the equations `param = pattern` and `guard = b` as evidence
/// for the leaves.
class Dispatcher {
 public:
  Dispatcher(const Program& prog, const Layout& layout, DispatchStyle style)
      : prog_(prog), layout_(layout), style_(std::move(style)), conds_(conditions_of(layout.clauses())) {}

  Lines render() { return dispatch(0); }
  bool total() const { return total_; }

 private:
  std::vector<std::size_t> reachable(std::size_t gi) const {
    std::vector<std::size_t> out;
    for (std::size_t c : layout_.groups[gi].clauses)
      if (conds_[c].reachable) out.push_back(c);
    return out;
  }

  std::vector<std::size_t> refuted(std::size_t gi) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < layout_.params.size(); ++k)
      if (layout_.groups[gi].refuted[k]) out.push_back(k);
    return out;
  }

  std::string heq_name(std::size_t r, std::size_t n) const {
    return n == 1 ? style_.heq : style_.heq + std::to_string(r + 1);
  }

  std::vector<std::string> evidence(std::size_t ci) const {
    const ClauseView& v = layout_.views[ci];
    std::vector<std::string> out;
    auto ref = refuted(v.group);
    for (std::size_t r = 0; r < ref.size(); ++r) out.push_back(heq_name(r, ref.size()));
    if (layout_.clauses()[ci].guard) out.push_back(style_.hg + std::to_string(v.position));
    for (const auto& ex : conds_[ci].exclusions) {
      if (layout_.group_of(ex.clause) == v.group)
        out.push_back(style_.hg + std::to_string(layout_.views[ex.clause].position));
      else
        out.push_back(kExclusionTactic);
    }
    return out;
  }

  Lines fallback() {
    if (style_.dependent && style_.unreachable) return {style_.unreachable()};
    total_ = false;
    return {"_"};
  }

  Lines match(const std::string& scrutinee, const std::vector<std::pair<std::string, Lines>>& branches,
              const std::string& evidence_name) {
    Lines out;
    if (style_.dependent) {
      out.push_back("match " + scrutinee + " as " + style_.as + " return " + scrutinee + " = " + style_.as + " -> " +
                    style_.out + " with");
      for (const auto& [pat, body] : branches) add(out, branch("| " + pat + " => fun " + evidence_name + " =>", body));
      out.push_back("end (eq_refl " + arg(scrutinee) + ")");
    } else {
      out.push_back("match " + scrutinee + " with");
      for (const auto& [pat, body] : branches) add(out, branch("| " + pat + " =>", body));
      out.push_back("end");
    }
    return out;
  }

  Lines chain(const std::vector<std::size_t>& cs, std::size_t idx, std::size_t cont) {
    if (idx == cs.size()) return dispatch(cont);
    std::size_t ci = cs[idx];
    const ClauseView& v = layout_.views[ci];
    const Clause& c = layout_.clauses()[ci];
    std::string leaf = style_.leaf(v, evidence(ci));
    if (!c.guard) return {leaf};
    std::string g = base(*c.guard, v.names);
    Lines rest = chain(cs, idx + 1, cont);
    if (style_.dependent) {
      std::string hg = style_.hg + std::to_string(v.position);
      return match(g, {{"true", {leaf}}, {"false", rest}}, hg);
    }
    if (rest.size() == 1 && g.size() + leaf.size() + rest.front().size() < 90)
      return {"if " + g + " then " + leaf + " else " + rest.front()};
    Lines out{"if " + g, "then " + leaf};
    if (rest.size() == 1) {
      out.push_back("else " + rest.front());
    } else {
      out.push_back("else");
      for (const auto& l : rest) out.push_back("  " + l);
    }
    return out;
  }

  Lines nested(std::size_t gi, const std::vector<std::size_t>& ref, std::size_t r) {
    const ClauseGroup& g = layout_.groups[gi];
    if (r == ref.size()) return chain(reachable(gi), 0, gi + 1);
    std::size_t k = ref[r];
    const ClauseView& v = layout_.views[g.clauses.front()];
    std::vector<std::pair<std::string, Lines>> branches{{v.values[k], nested(gi, ref, r + 1)}};
    const Pattern& p = layout_.clauses()[g.clauses.front()].patterns[k];
    if (!exhaustive(prog_, {{&p}}, {layout_.param_types[k]})) branches.push_back({"_", dispatch(gi + 1)});
    return match(layout_.params[k], branches, heq_name(r, ref.size()));
  }

  Lines dispatch(std::size_t from) {
    const auto& groups = layout_.groups;
    while (from < groups.size() && reachable(from).empty()) ++from;
    if (from == groups.size()) return fallback();
    auto ref = refuted(from);
    if (ref.empty()) return chain(reachable(from), 0, from + 1);
    if (ref.size() > 1) return nested(from, ref, 0);

    // Neighbouring groups that refute the same parameter with pairwise
    // disjoint patterns share one match.
    std::size_t k = ref.front();
    auto pat = [&](std::size_t gi) -> const Pattern& { return layout_.clauses()[groups[gi].clauses.front()].patterns[k]; };
    std::vector<std::size_t> run{from};
    std::size_t end = from + 1;
    while (end < groups.size()) {
      if (reachable(end).empty()) {
        ++end;
        continue;
      }
      if (refuted(end) != ref) break;
      bool disjoint = true;
      for (std::size_t gi : run) disjoint = disjoint && patterns::disjoint(pat(gi), pat(end));
      if (!disjoint) break;
      run.push_back(end++);
    }
    std::vector<std::pair<std::string, Lines>> branches;
    std::vector<std::vector<const Pattern*>> rows;
    for (std::size_t gi : run) {
      branches.push_back({layout_.views[groups[gi].clauses.front()].values[k], chain(reachable(gi), 0, end)});
      rows.push_back({&pat(gi)});
    }
    if (!exhaustive(prog_, rows, {layout_.param_types[k]})) branches.push_back({"_", dispatch(end)});
    return match(layout_.params[k], branches, heq_name(0, 1));
  }

  const Program& prog_;
  const Layout& layout_;
  DispatchStyle style_;
  std::vector<ClauseCondition> conds_;
  bool total_ = true;
};

/// `| name : forall binders, body`, broken after the binders when long.
inline Lines ctor_line(const std::string& name, const std::vector<Binder>& bs, const std::string& body) {
  std::string line = "| " + name + " : " + forall(bs, body);
  if (line.size() <= 100 || bs.empty()) return {line};
  return {"| " + name + " : forall " + binders(bs) + ",", "    " + body};
}

/// Comment text broken into lines of at most `width` characters.
inline Lines comment(const std::string& msg, std::size_t width = 96) {
  Lines out;
  std::string line = "(*";
  std::size_t start = 0;
  while (start <= msg.size()) {
    std::size_t end = msg.find(' ', start);
    if (end == std::string::npos) end = msg.size();
    std::string word = msg.substr(start, end - start);
    if (line.size() + 1 + word.size() > width && line != "(*" && line != "   ") {
      out.push_back(line);
      line = "   ";
    }
    line += (line == "   " ? "" : " ") + word;
    start = end + 1;
  }
  out.push_back(line + " *)");
  return out;
}

inline Lines lemma(const std::string& kind, const std::string& name, const Lines& statement,
                   const std::string& recipe) {
  Lines out{kind + " " + name + " :"};
  for (std::size_t i = 0; i < statement.size(); ++i)
    out.push_back("  " + statement[i] + (i + 1 == statement.size() ? "." : ""));
  out.push_back("Proof.");
  for (const auto& l : comment(recipe, 94)) out.push_back("  " + l);
  out.push_back("Admitted.");
  return out;
}

/// Names defined by the program and by the transformation of `funs`.
inline std::set<std::string> global_names(const Program& prog) {
  std::set<std::string> g{"tmod"};
  for (const auto& t : prog.codata) {
    g.insert(ident(t.name));
    g.insert("bisimilar_" + t.name);
    for (const auto& c : t.ctors) {
      g.insert(ident(c.name));
      g.insert("bisim_" + c.name);
    }
  }
  for (const auto& d : prog.defs) g.insert(ident(d.name));
  for (const auto& r : prog.recs) g.insert(ident(r.name));
  for (const auto& f : prog.funs) {
    g.insert(ident(f.name));
    for (const char* pre : {"eventually_", "pre_", "infinite_", "inf_", "infinite_eventually_", "infinite_always_"})
      g.insert(pre + f.name);
    g.insert(f.name + "_guarded");
    g.insert(f.name + "_layer");
  }
  return g;
}

/// Names a function's clauses may use, so that generated binders avoid them.
inline NameSupply supply_for(const std::set<std::string>& globals, const std::vector<Param>& params,
                             const std::vector<Clause>& clauses) {
  NameSupply s;
  for (const auto& g : globals) s.take(g);
  for (const auto& p : params) s.take(ident(p.name));
  for (const auto& c : clauses)
    for (const auto* b : clause_binders(c)) s.take(ident(b->name));
  return s;
}

/// The full development for one transformable unguarded function.
class TransformedEmitter {
 public:
  TransformedEmitter(const Program& prog, const TransformArtifacts& art)
      : prog_(prog),
        art_(art),
        fun_(*art.source),
        globals_(global_names(prog)),
        supply_(supply_for(globals_, fun_.params, fun_.clauses)),
        layout_(fun_.params, fun_.clauses, supply_, globals_),
        conds_(conditions_of(fun_.clauses)) {
    d_ = supply_.fresh("d");
    i_ = supply_.fresh("i");
    e_ = supply_.fresh("e");
    as_ = supply_.fresh("v");
    o_ = supply_.fresh("o");
    heq_ = supply_.prefix("heq");
    hg_ = supply_.prefix("hg");
    y_ = supply_.prefix("y");
    n_ = supply_.prefix("n");
    h_ = supply_.prefix("h");
    result_ = ident(fun_.result);
    np_ = fun_.params.size();
  }

  std::string render() {
    std::vector<Lines> blocks;
    blocks.push_back({"(* " + fun_.name + ": " + to_string(art_.classification.verdict) +
                      ", split into an inductive and a coinductive component. *)"});
    blocks.push_back(eventually());
    for (const auto& inv : art_.inversions) blocks.push_back(inversion(inv));
    if (!art_.pre.uniform()) blocks.push_back(layer_type());
    blocks.push_back(pre());
    blocks.push_back(infinite());
    blocks.push_back(infinite_eventually());
    for (const auto& a : art_.lemmas.infinite_always) blocks.push_back(infinite_always(a));
    blocks.push_back(guarded());
    blocks.push_back(pre_irrelevant());
    blocks.push_back(fun_irrelevant());
    for (const auto& s : art_.lemmas.steps) blocks.push_back(step(s));
    blocks.push_back(equation());
    std::string out;
    for (std::size_t b = 0; b < blocks.size(); ++b) out += (b ? "\n\n" : "") + text(blocks[b], "");
    return out + "\n";
  }

 private:
  RecRender no_rec() const {
    return [](const Expr& e) { return ident(e.name); };
  }

  std::string param_sig(const std::string& result) const {
    std::vector<std::string> ts;
    for (const auto& p : fun_.params) ts.push_back(type(p.type));
    ts.push_back(result);
    return join(ts, " -> ");
  }

  std::string applied(const std::string& head, const std::vector<std::string>& extra = {}) const {
    std::vector<std::string> args = layout_.params;
    args.insert(args.end(), extra.begin(), extra.end());
    return app(head, args);
  }

  // --- eventually ---------------------------------------------------------

  Lines eventually() {
    const auto& ev = art_.eventually;
    Lines out{"Inductive " + ev.name + " : " + param_sig("Prop") + " :="};
    for (const auto& c : ev.ctors) {
      std::size_t ci = c.reach.clause;
      const ClauseView& v = layout_.views[ci];
      std::vector<std::string> premises = selection(layout_, conds_, ci, v.values);
      if (!c.guarded) premises.push_back(app(ev.name, call_args(c.recursive_args, v.names, no_rec())));
      std::string concl = app(ev.name, v.values);
      add(out, ctor_line(c.name, layout_.index_binders(ci), arrows(premises, concl)));
    }
    out.back() += ".";
    return out;
  }

  /// Statement `forall params, <hyp params> -> forall leaves, eqs -> selection -> concl`.
  Lines clause_statement(std::size_t ci, const std::string& hyp, const std::string& concl) {
    const ClauseView& v = layout_.views[ci];
    std::vector<std::string> premises = layout_.equations(ci);
    auto sel = selection(layout_, conds_, ci, layout_.params);
    premises.insert(premises.end(), sel.begin(), sel.end());
    return {forall(layout_.param_binders(), applied(hyp) + " ->"), forall(v.leaves, arrows(premises, concl))};
  }

  Lines inversion(const InversionLemmaIR& inv) {
    const ClauseView& v = layout_.views[inv.clause];
    std::string concl = app(art_.eventually.name, call_args(inv.conclusion_args, v.names, no_rec()));
    return lemma("Lemma", inv.name, clause_statement(inv.clause, art_.eventually.name, concl),
                 "Invert the evidence: only " + inv.constructor +
                     " is compatible with the hypotheses. Return its recursive premise and close with Defined, "
                     "so that " + art_.pre.name + " stays structural.");
  }

  // --- inductive component ------------------------------------------------

  const ShapeIR& shape(std::size_t s) const { return art_.pre.shapes[s]; }

  std::vector<std::string> payload_types(const ShapeIR& s) const {
    std::vector<std::string> ts;
    HeadParts p = parts(s.skeleton);
    for (const Expr* e : p.payloads) ts.push_back(type(e->type));
    for (std::size_t k = 0; k < p.plain.size(); ++k) ts.push_back(result_);
    return ts;
  }

  std::vector<std::string> next_types(const ShapeIR& s) const {
    std::vector<std::string> ts;
    for (std::size_t h = 0; h < s.rec_holes; ++h)
      for (const auto& p : fun_.params) ts.push_back(type(p.type));
    return ts;
  }

  std::string out_type() const {
    if (!art_.pre.uniform()) return layer_name();
    return tuple_type({tuple_type(payload_types(shape(0))), tuple_type(next_types(shape(0)))});
  }

  std::string layer_name() const { return fun_.name + "_layer"; }
  std::string layer_ctor(std::size_t s) const { return layer_name() + std::to_string(s + 1); }

  Lines layer_type() {
    Lines out{"Inductive " + layer_name() + " : Set :="};
    for (std::size_t s = 0; s < art_.pre.shapes.size(); ++s) {
      std::vector<std::string> fields = payload_types(shape(s));
      auto next = next_types(shape(s));
      fields.insert(fields.end(), next.begin(), next.end());
      fields.push_back(layer_name());
      out.push_back("| " + layer_ctor(s) + " : " + join(fields, " -> "));
    }
    out.back() += ".";
    return out;
  }

  std::vector<std::string> layer_fields(std::size_t s, std::size_t* first_next = nullptr) const {
    std::vector<std::string> f;
    std::size_t np = payload_types(shape(s)).size();
    for (std::size_t k = 0; k < np; ++k) f.push_back(y_ + std::to_string(k + 1));
    if (first_next) *first_next = f.size();
    for (std::size_t k = 0; k < shape(s).rec_holes * np_; ++k) f.push_back(n_ + std::to_string(k + 1));
    return f;
  }

  std::string layer_pattern(std::size_t s) const { return app(layer_ctor(s), layer_fields(s)); }

  std::vector<std::string> layer_hole_args(std::size_t h) const {
    std::vector<std::string> args;
    for (std::size_t j = 0; j < np_; ++j) args.push_back(n_ + std::to_string(h * np_ + j + 1));
    return args;
  }

  /// `match o with | layer => infinite_f next_h | ... end`, True where hole `h` is absent.
  std::string hole_prop(std::size_t h, const std::string& scrutinee) const {
    std::string s = "match " + scrutinee + " with";
    for (std::size_t k = 0; k < art_.pre.shapes.size(); ++k) {
      std::string p = h < shape(k).rec_holes ? app(art_.infinite.name, layer_hole_args(h)) : "True";
      s += " | " + layer_pattern(k) + " => " + p;
    }
    return s + " end";
  }

  std::string leaf_pre(const ClauseView& v, const std::vector<std::string>& evidence) {
    const PreBranchIR* b = nullptr;
    for (const auto& br : art_.pre.branches)
      if (br.clause == v.clause) b = &br;
    if (!b->guarded) {
      std::vector<std::string> inv_args = layout_.params;
      inv_args.push_back(d_);
      for (const auto& l : v.leaves) inv_args.push_back(l.name);
      inv_args.insert(inv_args.end(), evidence.begin(), evidence.end());
      std::vector<std::string> args = call_args(b->self_call_args, v.names, no_rec());
      args.push_back(app(b->inversion, inv_args));
      return app(art_.pre.name, args);
    }
    HeadParts p = parts(*b->head);
    std::vector<std::string> out, next;
    for (const Expr* e : p.payloads) out.push_back(base(*e, v.names));
    for (const HeadSlot* s : p.plain) out.push_back(term(s->value, v.names, no_rec()));
    for (const HeadSlot* s : p.rec) {
      auto a = call_args(s->args, v.names, no_rec());
      next.insert(next.end(), a.begin(), a.end());
    }
    if (!art_.pre.uniform()) {
      out.insert(out.end(), next.begin(), next.end());
      return app(layer_ctor(b->shape), out);
    }
    return tuple({tuple(out), tuple(next)});
  }

  std::string unreachable(const std::string& evidence) const {
    return "False_rect _ ltac:(" + (evidence == d_ ? "" : "pose proof " + arg(evidence) + " as " + d_ + "; ") +
           "inversion " + d_ + "; subst; first [discriminate | congruence])";
  }

  Lines pre() {
    DispatchStyle style;
    style.dependent = true;
    style.out = out_type();
    style.as = as_;
    style.heq = heq_;
    style.hg = hg_;
    style.leaf = [this](const ClauseView& v, const std::vector<std::string>& ev) { return leaf_pre(v, ev); };
    style.unreachable = [this] { return unreachable(d_); };
    Dispatcher dispatcher(prog_, layout_, style);
    Lines body = dispatcher.render();
    std::string head = "Fixpoint " + art_.pre.name + " " + def_binders();
    head += "(" + d_ + " : " + applied(art_.eventually.name) + ") {struct " + d_ + "} : " + out_type() + " :=";
    Lines out{head};
    for (const auto& l : body) out.push_back("  " + l);
    out.back() += ".";
    return out;
  }

  std::string def_binders() const { return def_binders(layout_.param_binders()); }

  static std::string def_binders(const std::vector<Binder>& bs) {
    if (bs.empty()) return "";
    return (bs.size() == 1 ? "(" + binders(bs) + ")" : binders(bs)) + " ";
  }

  // --- coinductive component ----------------------------------------------

  std::string pre_call(const std::string& evidence) const { return applied(art_.pre.name, {evidence}); }

  /// Next argument `j` of hole `h` in a uniform result.
  std::string next_arg(const std::string& pre, std::size_t h, std::size_t j) const {
    std::size_t n = shape(0).rec_holes * np_;
    return proj("snd " + arg(pre), h * np_ + j, n);
  }

  std::vector<std::string> next_args(const std::string& pre, std::size_t h) const {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < np_; ++j) out.push_back(next_arg(pre, h, j));
    return out;
  }

  std::string payload(const std::string& pre, std::size_t k) const {
    return proj("fst " + arg(pre), k, payload_types(shape(0)).size());
  }

  Lines infinite() {
    const auto& inf = art_.infinite;
    std::vector<Binder> bs = layout_.param_binders();
    bs.push_back({d_, applied(art_.eventually.name)});
    Lines out{"CoInductive " + inf.name + " : " + param_sig("Prop") + " :="};
    std::string concl = applied(inf.name);
    if (art_.pre.uniform()) {
      std::vector<std::string> premises;
      for (std::size_t h = 0; h < shape(0).rec_holes; ++h)
        premises.push_back(app(inf.name, next_args(pre_call(d_), h)));
      add(out, ctor_line(inf.ctor, bs, arrows(premises, concl)));
      out.back() += ".";
      return out;
    }
    out.push_back("| " + inf.ctor + " : forall " + binders(bs) + ",");
    out.push_back("    match " + pre_call(d_) + " with");
    for (std::size_t s = 0; s < art_.pre.shapes.size(); ++s) {
      std::vector<std::string> props;
      for (std::size_t h = 0; h < shape(s).rec_holes; ++h) props.push_back(app(inf.name, layer_hole_args(h)));
      out.push_back("    | " + layer_pattern(s) + " => " + conj(props));
    }
    out.push_back("    end -> " + concl + ".");
    return out;
  }

  Lines infinite_eventually() {
    return lemma("Lemma", art_.lemmas.infinite_eventually.name,
                 {forall(layout_.param_binders(),
                         applied(art_.infinite.name) + " -> " + applied(art_.eventually.name))},
                 "Destruct the infinite evidence and return its eventually component.");
  }

  Lines infinite_always(const LemmaIR& l) {
    std::string pre = pre_call(e_);
    std::string concl = art_.pre.uniform() ? app(art_.infinite.name, next_args(pre, l.hole)) : hole_prop(l.hole, pre);
    return lemma("Lemma", l.name,
                 {forall(layout_.param_binders(), applied(art_.infinite.name) + " ->"),
                  "forall " + e_ + " : " + applied(art_.eventually.name) + ", " + concl},
                 "Destruct the infinite evidence; the premise does not depend on which eventually evidence is "
                 "used, by the proof irrelevance of " + art_.pre.name + ".");
  }

  std::string always_call(std::size_t h) const {
    return applied(art_.lemmas.infinite_always[h].name, {i_, e_});
  }

  /// The skeleton with payloads, plain holes and recursive holes supplied.
  std::string skeleton(const HeadSpec& h, std::size_t& pay, std::size_t& rec,
                       const std::function<std::string(std::size_t)>& payload_of,
                       const std::function<std::string(std::size_t)>& rec_of) const {
    std::vector<std::string> args;
    std::size_t pi = 0, sj = 0;
    for (bool is_slot : h.slot_fields) {
      if (!is_slot) {
        ++pi;
        args.push_back(payload_of(pay++));
        continue;
      }
      const HeadSlot& s = h.slots[sj++];
      switch (s.kind) {
        case HeadSlot::Kind::Node: args.push_back(skeleton(s.node.front(), pay, rec, payload_of, rec_of)); break;
        case HeadSlot::Kind::PlainHole: args.push_back(payload_of(pay++)); break;
        case HeadSlot::Kind::RecHole: args.push_back(rec_of(rec++)); break;
      }
    }
    return app(ident(h.ctor), args);
  }

  /// Skeleton traversal visits payloads and plain holes interleaved; the
  /// result stores payloads first. Map traversal order to storage order.
  std::vector<std::size_t> storage_order(const HeadSpec& h) const {
    std::vector<std::size_t> order;
    std::size_t payloads = parts(h).payloads.size();
    std::size_t pay = 0, plain = 0;
    std::function<void(const HeadSpec&)> go = [&](const HeadSpec& x) {
      std::size_t sj = 0;
      for (bool is_slot : x.slot_fields) {
        if (!is_slot) {
          order.push_back(pay++);
          continue;
        }
        const HeadSlot& s = x.slots[sj++];
        if (s.kind == HeadSlot::Kind::Node) go(s.node.front());
        if (s.kind == HeadSlot::Kind::PlainHole) order.push_back(payloads + plain++);
      }
    };
    go(h);
    return order;
  }

  Lines guarded() {
    const std::string& g = art_.guarded.name;
    std::vector<Binder> bs = layout_.param_binders();
    bs.push_back({i_, applied(art_.infinite.name)});
    std::string head = "CoFixpoint " + g + " " + def_binders(bs) + ": " + result_ + " :=";
    std::string let = "  let " + e_ + " := " + applied(art_.lemmas.infinite_eventually.name, {i_}) + " in";
    std::string pre = pre_call(e_);
    if (art_.pre.uniform()) {
      auto order = storage_order(shape(0).skeleton);
      std::size_t pay = 0, rec = 0;
      std::string body = skeleton(
          shape(0).skeleton, pay, rec, [&](std::size_t k) { return payload(pre, order[k]); },
          [&](std::size_t h) {
            auto args = next_args(pre, h);
            args.push_back(always_call(h));
            return app(g, args);
          });
      return {head, let, "  " + body + "."};
    }
    Lines out{head, let};
    std::string ret;
    for (std::size_t h = 0; h < art_.lemmas.infinite_always.size(); ++h) ret += arg(hole_prop(h, o_)) + " -> ";
    out.push_back("  match " + pre + " as " + o_);
    out.push_back("    return " + ret + result_ + " with");
    std::vector<std::string> hyps;
    for (std::size_t h = 0; h < art_.lemmas.infinite_always.size(); ++h) hyps.push_back(h_ + std::to_string(h + 1));
    for (std::size_t s = 0; s < art_.pre.shapes.size(); ++s) {
      auto fields = layer_fields(s);
      auto order = storage_order(shape(s).skeleton);
      std::size_t pay = 0, rec = 0;
      std::string body = skeleton(
          shape(s).skeleton, pay, rec, [&](std::size_t k) { return fields[order[k]]; },
          [&](std::size_t h) {
            auto args = layer_hole_args(h);
            args.push_back(hyps[h]);
            return app(g, args);
          });
      std::string fn = hyps.empty() ? "" : "fun " + join(hyps, " ") + " => ";
      out.push_back("  | " + layer_pattern(s) + " => " + fn + body);
    }
    std::string tail = "  end";
    for (std::size_t h = 0; h < art_.lemmas.infinite_always.size(); ++h) tail += " " + arg(always_call(h));
    out.push_back(tail + ".");
    return out;
  }

  // --- lemma statements ---------------------------------------------------

  Lines pre_irrelevant() {
    std::vector<Binder> bs = layout_.param_binders();
    std::string e1 = supply_.fresh(e_ + "1"), e2 = supply_.fresh(e_ + "2");
    bs.push_back({e1, applied(art_.eventually.name)});
    bs.push_back({e2, applied(art_.eventually.name)});
    return lemma("Lemma", art_.lemmas.pre_irrelevant.name,
                 {forall(bs, pre_call(e1) + " = " + pre_call(e2))},
                 "Induction on " + e1 + ", inverting " + e2 + " at each step.");
  }

  Lines fun_irrelevant() {
    std::vector<Binder> bs;
    std::vector<std::string> primed, eqs;
    for (std::size_t k = 0; k < np_; ++k) {
      std::string p = layout_.params[k];
      bs.push_back({p, type(fun_.params[k].type)});
      bs.push_back({p + "'", type(fun_.params[k].type)});
      primed.push_back(p + "'");
      eqs.push_back(p + " = " + p + "'");
    }
    bs.push_back({i_, applied(art_.infinite.name)});
    bs.push_back({i_ + "'", app(art_.infinite.name, primed)});
    std::vector<std::string> args_p = primed;
    args_p.push_back(i_ + "'");
    std::string concl = app(art_.lemmas.fun_irrelevant.relation,
                              {applied(art_.guarded.name, {i_}), app(art_.guarded.name, args_p)});
    std::string first = forall(bs, arrows(eqs, ""));
    while (!first.empty() && first.back() == ' ') first.pop_back();
    return lemma("Lemma", art_.lemmas.fun_irrelevant.name, {first, concl},
                 "Coinduction on the bisimilarity, using " + art_.lemmas.pre_irrelevant.name + " at each layer.");
  }

  std::vector<const Expr*> rec_calls(const Expr& body) const {
    std::vector<const Expr*> out;
    walk(body, [&](const Expr& e, const Path&) {
      if (e.kind == ExprKind::RecCall) out.push_back(&e);
    });
    return out;
  }

  Lines step(const LemmaIR& s) {
    const ClauseView& v = layout_.views[s.clause];
    std::vector<std::string> props;
    for (const Expr* call : rec_calls(fun_.clauses[s.clause].body))
      props.push_back(app(art_.infinite.name, call_args(call->args, v.names, no_rec())));
    return lemma("Lemma", s.name, clause_statement(s.clause, art_.infinite.name, conj(props)),
                 "Destruct the infinite evidence and follow " + art_.pre.name + " through this clause.");
  }

  std::string leaf_equation(const ClauseView& v, const std::vector<std::string>& evidence) {
    const Expr& body = fun_.clauses[v.clause].body;
    std::vector<std::string> step_args = layout_.params;
    step_args.push_back(i_);
    for (const auto& l : v.leaves) step_args.push_back(l.name);
    step_args.insert(step_args.end(), evidence.begin(), evidence.end());
    std::string step = app(art_.lemmas.steps[v.clause].name, step_args);
    std::size_t holes = rec_calls(body).size();
    std::size_t h = 0;
    RecRender rec = [&](const Expr& call) {
      auto args = call_args(call.args, v.names, no_rec());
      args.push_back(conj_proj(step, h++, holes));
      return app(art_.guarded.name, args);
    };
    return term(body, v.names, rec);
  }

  Lines equation() {
    DispatchStyle style;
    style.dependent = true;
    style.out = result_;
    style.as = as_;
    style.heq = heq_;
    style.hg = hg_;
    style.leaf = [this](const ClauseView& v, const std::vector<std::string>& ev) { return leaf_equation(v, ev); };
    std::string ev = applied(art_.lemmas.infinite_eventually.name, {i_});
    style.unreachable = [this, ev] { return unreachable(ev); };
    Dispatcher dispatcher(prog_, layout_, style);
    Lines body = dispatcher.render();
    std::vector<Binder> bs = layout_.param_binders();
    bs.push_back({i_, applied(art_.infinite.name)});
    Lines st{forall(bs, ""), app(art_.lemmas.equation.relation, {applied(art_.guarded.name, {i_})})};
    st.front().pop_back();  // trailing space after the comma
    if (body.size() == 1) {
      st.back() += " " + arg(body.front());
    } else {
      st.push_back("  (" + body.front());
      for (std::size_t k = 1; k < body.size(); ++k) st.push_back("   " + body[k]);
      st.back() += ")";
    }
    return lemma("Theorem", art_.lemmas.equation.name, st,
                 "Unfold one layer of " + art_.guarded.name + " and compare it with each branch, using the step "
                 "lemmas and " + art_.lemmas.fun_irrelevant.name + ".");
  }

  const Program& prog_;
  const TransformArtifacts& art_;
  const FunDef& fun_;
  std::set<std::string> globals_;
  NameSupply supply_;
  Layout layout_;
  std::vector<ClauseCondition> conds_;
  std::string d_, i_, e_, as_, o_, heq_, hg_, y_, n_, h_, result_;
  std::size_t np_ = 0;
};

}  // namespace coq

struct EmitOptions {
  std::string source_name;  // mentioned in the header comment when set
};

/// The development for one transformable function, without preamble.
inline std::string emit_transformed(const Program& prog, const TransformArtifacts& art) {
  return coq::TransformedEmitter(prog, art).render();
}

namespace coq {

class ProgramEmitter {
 public:
  ProgramEmitter(const Program& prog, const EmitOptions& opts) : prog_(prog), opts_(opts), globals_(global_names(prog)) {}

  std::string render() {
    std::vector<std::string> blocks;
    std::string header = "(* Generated by corec";
    if (!opts_.source_name.empty()) header += " from " + opts_.source_name;
    blocks.push_back(header + ". Proofs are admitted. *)");
    blocks.push_back("Require Import Arith Bool.");
    blocks.push_back("Definition tmod (x y : nat) : nat := match y with 0 => 0 | _ => Nat.modulo x y end.");
    for (const auto& d : prog_.order) {
      switch (d.kind) {
        case DeclKind::Codata: blocks.push_back(codata(prog_.codata[d.index])); break;
        case DeclKind::Def: blocks.push_back(def(prog_.defs[d.index])); break;
        case DeclKind::Rec: blocks.push_back(rec(prog_.recs[d.index])); break;
        case DeclKind::Fun: blocks.push_back(fun(prog_.funs[d.index])); break;
      }
    }
    std::string out;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      std::string block = blocks[b];
      while (!block.empty() && block.back() == '\n') block.pop_back();
      out += (b ? "\n\n" : "") + block;
    }
    return out + "\n";
  }

 private:
  std::string codata(const CodataTypeDef& t) {
    std::string name = ident(t.name);
    Lines out{"CoInductive " + name + " : Set :="};
    for (const auto& c : t.ctors) {
      std::vector<std::string> fields;
      for (auto f : c.fields) fields.push_back(f == FieldKind::Nat ? "nat" : f == FieldKind::Bool ? "bool" : name);
      fields.push_back(name);
      out.push_back("| " + ident(c.name) + " : " + join(fields, " -> "));
    }
    out.back() += ".";
    available_.insert(t.name);

    std::string rel = "bisimilar_" + t.name;
    out.push_back("");
    out.push_back("CoInductive " + rel + " : " + name + " -> " + name + " -> Prop :=");
    for (const auto& c : t.ctors) {
      std::vector<Binder> bs;
      std::vector<std::string> lhs, rhs, premises;
      std::size_t a = 0, s = 0;
      for (auto f : c.fields) {
        if (f != FieldKind::Slot) {
          std::string x = "a" + std::to_string(++a);
          bs.push_back({x, f == FieldKind::Nat ? "nat" : "bool"});
          lhs.push_back(x);
          rhs.push_back(x);
          continue;
        }
        ++s;
        std::string l = "s" + std::to_string(s), r = "t" + std::to_string(s);
        bs.push_back({l, name});
        bs.push_back({r, name});
        lhs.push_back(l);
        rhs.push_back(r);
        premises.push_back(app(rel, {l, r}));
      }
      std::string concl = app(rel, {app(ident(c.name), lhs), app(ident(c.name), rhs)});
      add(out, ctor_line("bisim_" + c.name, bs, arrows(premises, concl)));
    }
    out.back() += ".";
    return text(out, "");
  }

  std::string params(const std::vector<Param>& ps) const {
    std::vector<Binder> bs;
    for (const auto& p : ps) bs.push_back({ident(p.name), type(p.type)});
    if (bs.empty()) return "";
    return (bs.size() == 1 ? "(" + binders(bs) + ")" : binders(bs)) + " ";
  }

  std::optional<std::string> missing(const std::vector<const Expr*>& roots) const {
    std::optional<std::string> out;
    for (const Expr* r : roots)
      walk(*r, [&](const Expr& e, const Path&) {
        if (!out && (e.kind == ExprKind::Apply || e.kind == ExprKind::HelperCall) && !available_.count(e.name))
          out = e.name;
      });
    return out;
  }

  std::vector<const Expr*> roots(const std::vector<Clause>& clauses) const {
    std::vector<const Expr*> out;
    for (const auto& c : clauses) {
      if (c.guard) out.push_back(&*c.guard);
      out.push_back(&c.body);
    }
    return out;
  }

  std::string skipped(const std::string& name, const std::string& why) const {
    return "(* " + name + ": no definition is produced. " + why + " *)";
  }

  std::string def(const HelperDef& d) {
    if (auto m = missing({&d.body})) return skipped(d.name, "It uses " + *m + ", which is not defined before it.");
    available_.insert(d.name);
    return "Definition " + ident(d.name) + " " + params(d.params) + ": " + type(d.result) + " :=\n  " +
           base(d.body, {}) + ".";
  }

  /// Clause dispatch without evidence, for Fixpoints and CoFixpoints.
  std::optional<Lines> plain_dispatch(const std::vector<Param>& ps, const std::vector<Clause>& clauses,
                                      const std::function<std::string(const Clause&, const Names&)>& leaf) {
    NameSupply supply = supply_for(globals_, ps, clauses);
    Layout layout(ps, clauses, supply, globals_);
    DispatchStyle style;
    style.leaf = [&](const ClauseView& v, const std::vector<std::string>&) { return leaf(clauses[v.clause], v.names); };
    Dispatcher dispatcher(prog_, layout, style);
    Lines body = dispatcher.render();
    if (!dispatcher.total()) return std::nullopt;
    return body;
  }

  std::string rec(const RecFunDef& r) {
    StructuralVerdict v = check_structural(r);
    if (!v.accepted) return skipped(r.name, "The structural check rejects it: " + v.reason + ".");
    if (auto m = missing(roots(r.clauses))) return skipped(r.name, "It uses " + *m + ", which is not defined before it.");
    auto body = plain_dispatch(r.params, r.clauses,
                               [](const Clause& c, const Names& names) { return base(c.body, names); });
    if (!body) return skipped(r.name, "Its clauses do not cover every argument.");
    available_.insert(r.name);
    std::string head = "Fixpoint " + ident(r.name) + " " + params(r.params);
    if (r.params.size() > 1) head += "{struct " + ident(r.params[*v.structural_param].name) + "} ";
    Lines out{head + ": nat :="};
    for (const auto& l : *body) out.push_back("  " + l);
    out.back() += ".";
    return text(out, "");
  }

  std::string fun(const FunDef& f) {
    Classification cls = classify_function(f);
    if (cls.verdict == Verdict::RejectedStarStar || cls.verdict == Verdict::RejectedUnsupported) {
      std::string why = to_string(cls.verdict);
      if (!cls.diagnostics.empty()) why += ": " + cls.diagnostics.front();
      return skipped(f.name, "It is classified " + why + ".");
    }
    if (auto m = missing(roots(f.clauses))) return skipped(f.name, "It uses " + *m + ", which has no direct definition before it.");
    if (cls.verdict == Verdict::TransformableUnguarded) {
      try {
        TransformArtifacts art = transform(f);
        return emit_transformed(prog_, art);
      } catch (const NotTransformable& e) {
        return skipped(f.name, e.what());
      }
    }
    auto body = plain_dispatch(f.params, f.clauses, [&](const Clause& c, const Names& names) {
      RecRender rec = [&](const Expr& call) {
        return app(ident(f.name), call_args(call.args, names, [](const Expr& e) { return ident(e.name); }));
      };
      return term(c.body, names, rec);
    });
    if (!body) return skipped(f.name, "Its clauses do not cover every argument.");
    available_.insert(f.name);
    Lines out{"CoFixpoint " + ident(f.name) + " " + params(f.params) + ": " + ident(f.result) + " :="};
    for (const auto& l : *body) out.push_back("  " + l);
    out.back() += ".";
    return text(out, "");
  }

  const Program& prog_;
  EmitOptions opts_;
  std::set<std::string> globals_;
  std::set<std::string> available_;
};

}  // namespace coq

/// Vernacular for a whole program.
inline std::string emit(const Program& prog, const EmitOptions& opts = {}) {
  return coq::ProgramEmitter(prog, opts).render();
}

}  // namespace corec
