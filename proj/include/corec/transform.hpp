#pragma once

// Separation of a productive, unguarded definition into an inductive
// component (all work up to the first guarded call, by recursion on an
// `eventually` predicate) and a guarded coinductive component driven by an
// `infinite` predicate. Everything here is a language-neutral description;
// emit.hpp renders it as vernacular.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "corec/ast.hpp"
#include "corec/guardedness.hpp"
#include "corec/pretty.hpp"

namespace corec {

class NotTransformable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Pattern relations

namespace patterns {

using Subst = std::map<std::string, Pattern>;

inline Pattern nat_lit(Nat n) {
  Pattern p;
  p.kind = Pattern::Kind::NatLit;
  p.nat = n;
  p.type = Type::nat();
  return p;
}

/// True when every value matched by `specific` is matched by `general`;
/// `sigma` receives the instantiation of general's binders.
inline bool subsumes(const Pattern& general, const Pattern& specific, Subst& sigma) {
  using K = Pattern::Kind;
  switch (general.kind) {
    case K::Var: sigma[general.name] = specific; return true;
    case K::Wildcard: return true;
    case K::NatLit:
      if (specific.kind == K::NatLit) return specific.nat == general.nat;
      if (specific.kind == K::Succ) return general.nat > 0 && subsumes(nat_lit(general.nat - 1), specific.subs[0], sigma);
      return false;
    case K::Succ:
      if (specific.kind == K::Succ) return subsumes(general.subs[0], specific.subs[0], sigma);
      if (specific.kind == K::NatLit) return specific.nat > 0 && subsumes(general.subs[0], nat_lit(specific.nat - 1), sigma);
      return false;
    case K::BoolLit: return specific.kind == K::BoolLit && specific.boolean == general.boolean;
    case K::Ctor:
      if (specific.kind != K::Ctor || specific.name != general.name) return false;
      for (std::size_t i = 0; i < general.subs.size(); ++i)
        if (!subsumes(general.subs[i], specific.subs[i], sigma)) return false;
      return true;
  }
  return false;
}

/// True when no value matches both patterns.
inline bool disjoint(const Pattern& a, const Pattern& b) {
  using K = Pattern::Kind;
  if (a.irrefutable() || b.irrefutable()) return false;
  if (a.kind == K::Succ && b.kind == K::NatLit) return disjoint(b, a);
  switch (a.kind) {
    case K::NatLit:
      if (b.kind == K::NatLit) return a.nat != b.nat;
      return a.nat == 0 || disjoint(nat_lit(a.nat - 1), b.subs[0]);
    case K::Succ: return disjoint(a.subs[0], b.subs[0]);
    case K::BoolLit: return a.boolean != b.boolean;
    case K::Ctor:
      if (a.name != b.name) return true;
      for (std::size_t i = 0; i < a.subs.size(); ++i)
        if (disjoint(a.subs[i], b.subs[i])) return true;
      return false;
    default: return false;
  }
}

/// Same shape up to the names of binders (wildcards count as binders).
inline bool alpha_equivalent(const Pattern& a, const Pattern& b) {
  if (a.irrefutable() && b.irrefutable()) return true;
  if (a.kind != b.kind || a.name != b.name || a.nat != b.nat || a.boolean != b.boolean) return false;
  if (a.subs.size() != b.subs.size()) return false;
  for (std::size_t i = 0; i < a.subs.size(); ++i)
    if (!alpha_equivalent(a.subs[i], b.subs[i])) return false;
  return true;
}

inline bool subsumes(const std::vector<Pattern>& g, const std::vector<Pattern>& s, Subst& sigma) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!subsumes(g[i], s[i], sigma)) return false;
  return true;
}

inline bool disjoint(const std::vector<Pattern>& a, const std::vector<Pattern>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (disjoint(a[i], b[i])) return true;
  return false;
}

inline bool alpha_equivalent(const std::vector<Pattern>& a, const std::vector<Pattern>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!alpha_equivalent(a[i], b[i])) return false;
  return true;
}

}  // namespace patterns

// ---------------------------------------------------------------------------
// IR

/// Earlier clause `clause` could also match; the branch is only reached when
/// it does not fire.
struct Exclusion {
  enum class Kind {
    Subsumed,     // the earlier pattern matches whenever this one does: its guard must be false
    Overlapping,  // the patterns overlap partially
  };
  std::size_t clause = 0;
  Kind kind = Kind::Subsumed;
  patterns::Subst sigma;  // Subsumed: earlier binders in terms of this clause's pattern
  bool guarded = false;   // whether the earlier clause has a `when` guard
};

/// Everything that must hold for first-match evaluation to select a clause.
struct ClauseCondition {
  std::size_t clause = 0;
  std::vector<Pattern> patterns;
  std::optional<Expr> guard;
  std::vector<Exclusion> exclusions;
  bool reachable = true;  // false when an unguarded earlier clause subsumes this one
};

struct EventuallyCtorIR {
  std::string name;
  ClauseCondition reach;
  bool guarded = true;
  std::vector<Expr> recursive_args;  // non-guarded clauses: the arguments of the bare call
};

struct EventuallyIR {
  std::string name;
  std::string function;
  std::vector<EventuallyCtorIR> ctors;

  std::size_t recursive_premises() const {
    std::size_t n = 0;
    for (const auto& c : ctors) n += !c.guarded;
    return n;
  }
};

struct InversionLemmaIR {
  std::string name;
  std::size_t clause = 0;
  std::string constructor;  // the eventually constructor whose recursive premise is extracted
  ClauseCondition hypotheses;
  std::vector<Expr> conclusion_args;
  bool structural_descent = true;  // the conclusion is a subproof of the hypothesis
};

struct HeadSpec;

struct HeadSlot {
  enum class Kind { Node, RecHole, PlainHole };
  Kind kind = Kind::PlainHole;
  std::vector<HeadSpec> node;  // one element for Node
  std::vector<Expr> args;      // RecHole: arguments of the next call
  Expr value;                  // PlainHole: an existing codata value
};

/// Constructor context produced by a guarded clause, with holes.
struct HeadSpec {
  std::string ctor;
  std::vector<Expr> payloads;
  std::vector<HeadSlot> slots;
  std::vector<bool> slot_fields;  // constructor fields in order: true for a slot
};

/// Holes and payloads of a head in left-to-right order.
struct HeadParts {
  std::vector<const Expr*> payloads;
  std::vector<const HeadSlot*> plain;
  std::vector<const HeadSlot*> rec;
};

inline void collect_parts(const HeadSpec& h, HeadParts& out) {
  std::size_t pi = 0, sj = 0;
  for (bool is_slot : h.slot_fields) {
    if (!is_slot) {
      out.payloads.push_back(&h.payloads[pi++]);
      continue;
    }
    const HeadSlot& s = h.slots[sj++];
    switch (s.kind) {
      case HeadSlot::Kind::Node: collect_parts(s.node.front(), out); break;
      case HeadSlot::Kind::RecHole: out.rec.push_back(&s); break;
      case HeadSlot::Kind::PlainHole: out.plain.push_back(&s); break;
    }
  }
}

inline HeadParts parts(const HeadSpec& h) {
  HeadParts out;
  collect_parts(h, out);
  return out;
}

/// Constructor skeleton with payloads and holes abstracted, e.g.
/// `SCons(_, #rec)`. Guarded clauses with equal signatures share a shape.
inline std::string signature(const HeadSpec& h) {
  std::string s = h.ctor + "(";
  std::size_t sj = 0;
  for (std::size_t i = 0; i < h.slot_fields.size(); ++i) {
    if (i) s += ", ";
    if (!h.slot_fields[i]) {
      s += "_";
      continue;
    }
    const HeadSlot& slot = h.slots[sj++];
    switch (slot.kind) {
      case HeadSlot::Kind::Node: s += signature(slot.node.front()); break;
      case HeadSlot::Kind::RecHole: s += "#rec"; break;
      case HeadSlot::Kind::PlainHole: s += "#plain"; break;
    }
  }
  return s + ")";
}

struct ShapeIR {
  std::string signature;
  HeadSpec skeleton;  // the first clause's head with this signature
  std::size_t payloads = 0;
  std::size_t plain_holes = 0;
  std::size_t rec_holes = 0;
};

struct PreBranchIR {
  std::size_t clause = 0;
  bool guarded = true;
  std::optional<HeadSpec> head;  // guarded clauses
  std::size_t shape = 0;         // guarded clauses: index into shapes
  std::vector<Expr> self_call_args;  // non-guarded clauses
  std::string inversion;             // non-guarded clauses: lemma justifying the self-call
};

struct InductiveComponentIR {
  std::string name;
  std::string evidence;  // the eventually predicate recursed on
  std::vector<PreBranchIR> branches;
  std::vector<ShapeIR> shapes;

  bool uniform() const { return shapes.size() == 1; }
  std::size_t self_calls() const {
    std::size_t n = 0;
    for (const auto& b : branches) n += !b.guarded;
    return n;
  }
};

struct InfiniteIR {
  std::string name;
  std::string ctor;
  // Infinite premises per shape, one per recursive hole.
  std::vector<std::size_t> premises_per_shape;
};

struct GuardedFunIR {
  std::string name;
  /// The body with evidence arguments erased and the inductive component
  /// left opaque: payloads are `pre_<f>_out<k>(params)`, next arguments are
  /// `pre_<f>_next<k>(params)`.
  FunDef erased;
};

struct LemmaIR {
  enum class Kind { InfiniteEventually, InfiniteAlways, PreIrrelevance, FunIrrelevance, Step, Equation };
  Kind kind = Kind::Step;
  std::string name;
  std::size_t clause = 0;  // Step
  std::size_t hole = 0;    // InfiniteAlways with several holes
  std::string relation;    // "eq" or the bisimilarity predicate
};

struct LemmaStatementIR {
  LemmaIR infinite_eventually;
  std::vector<LemmaIR> infinite_always;  // one per recursive hole of the widest shape
  LemmaIR pre_irrelevant;
  LemmaIR fun_irrelevant;
  std::vector<LemmaIR> steps;  // one per clause
  LemmaIR equation;
};

struct TransformArtifacts {
  const FunDef* source = nullptr;
  Classification classification;
  EventuallyIR eventually;
  std::vector<InversionLemmaIR> inversions;
  InductiveComponentIR pre;
  InfiniteIR infinite;
  GuardedFunIR guarded;
  LemmaStatementIR lemmas;

  std::vector<std::string> names() const {
    std::vector<std::string> out{eventually.name};
    for (const auto& c : eventually.ctors) out.push_back(c.name);
    for (const auto& i : inversions) out.push_back(i.name);
    out.push_back(pre.name);
    out.push_back(infinite.name);
    out.push_back(lemmas.infinite_eventually.name);
    for (const auto& a : lemmas.infinite_always) out.push_back(a.name);
    out.push_back(guarded.name);
    out.push_back(lemmas.pre_irrelevant.name);
    out.push_back(lemmas.fun_irrelevant.name);
    for (const auto& s : lemmas.steps) out.push_back(s.name);
    out.push_back(lemmas.equation.name);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Builders

inline ClauseCondition clause_condition(const FunDef& fun, std::size_t ci) {
  const Clause& c = fun.clauses[ci];
  ClauseCondition cond;
  cond.clause = ci;
  cond.patterns = c.patterns;
  cond.guard = c.guard;
  for (std::size_t j = 0; j < ci; ++j) {
    const Clause& earlier = fun.clauses[j];
    if (patterns::disjoint(earlier.patterns, c.patterns)) continue;
    Exclusion ex;
    ex.clause = j;
    ex.guarded = earlier.guard.has_value();
    if (patterns::subsumes(earlier.patterns, c.patterns, ex.sigma)) {
      ex.kind = Exclusion::Kind::Subsumed;
      if (!ex.guarded) cond.reachable = false;
    } else {
      ex.kind = Exclusion::Kind::Overlapping;
      ex.sigma.clear();
    }
    cond.exclusions.push_back(std::move(ex));
  }
  return cond;
}

inline EventuallyIR build_eventually(const FunDef& fun, const Classification& cls) {
  if (!cls.transformable())
    throw NotTransformable("'" + fun.name + "' is " + to_string(cls.verdict) + " and cannot be transformed");
  EventuallyIR ev;
  ev.name = "eventually_" + fun.name;
  ev.function = fun.name;
  for (std::size_t ci = 0; ci < fun.clauses.size(); ++ci) {
    EventuallyCtorIR c;
    c.name = "ev_" + fun.name + std::to_string(ci + 1);
    c.reach = clause_condition(fun, ci);
    c.guarded = cls.clause_guarded[ci];
    if (!c.guarded) c.recursive_args = fun.clauses[ci].body.args;
    ev.ctors.push_back(std::move(c));
  }
  return ev;
}

inline std::vector<InversionLemmaIR> build_inversions(const FunDef& fun, const EventuallyIR& ev) {
  std::vector<InversionLemmaIR> out;
  for (const auto& c : ev.ctors) {
    if (c.guarded) continue;
    InversionLemmaIR inv;
    inv.name = fun.name + "_inv" + std::to_string(c.reach.clause + 1);
    inv.clause = c.reach.clause;
    inv.constructor = c.name;
    inv.hypotheses = c.reach;
    inv.conclusion_args = c.recursive_args;
    out.push_back(std::move(inv));
  }
  return out;
}

namespace detail {

inline HeadSpec head_of(const Expr& e) {
  HeadSpec h;
  h.ctor = e.name;
  for (const auto& a : e.args) {
    h.slot_fields.push_back(a.is_codata());
    if (!a.is_codata()) {
      h.payloads.push_back(a);
      continue;
    }
    HeadSlot s;
    if (a.kind == ExprKind::Ctor) {
      s.kind = HeadSlot::Kind::Node;
      s.node.push_back(head_of(a));
    } else if (a.kind == ExprKind::RecCall) {
      s.kind = HeadSlot::Kind::RecHole;
      s.args = a.args;
    } else {
      s.kind = HeadSlot::Kind::PlainHole;
      s.value = a;
    }
    h.slots.push_back(std::move(s));
  }
  return h;
}

}  // namespace detail

inline InductiveComponentIR build_inductive_component(const FunDef& fun, const EventuallyIR& ev,
                                                      const std::vector<InversionLemmaIR>& invs) {
  InductiveComponentIR pre;
  pre.name = "pre_" + fun.name;
  pre.evidence = ev.name;
  std::map<std::string, std::size_t> shape_index;
  for (const auto& c : ev.ctors) {
    PreBranchIR b;
    b.clause = c.reach.clause;
    b.guarded = c.guarded;
    const Expr& body = fun.clauses[b.clause].body;
    if (c.guarded) {
      if (body.kind != ExprKind::Ctor)
        throw NotTransformable("clause " + std::to_string(b.clause + 1) + " of '" + fun.name +
                               "' produces no head constructor");
      b.head = detail::head_of(body);
      std::string sig = signature(*b.head);
      auto it = shape_index.find(sig);
      if (it == shape_index.end()) {
        ShapeIR s;
        s.signature = sig;
        s.skeleton = *b.head;
        HeadParts p = parts(*b.head);
        s.payloads = p.payloads.size();
        s.plain_holes = p.plain.size();
        s.rec_holes = p.rec.size();
        it = shape_index.emplace(sig, pre.shapes.size()).first;
        pre.shapes.push_back(std::move(s));
      }
      b.shape = it->second;
    } else {
      b.self_call_args = c.recursive_args;
      for (const auto& inv : invs)
        if (inv.clause == b.clause) b.inversion = inv.name;
    }
    pre.branches.push_back(std::move(b));
  }
  if (pre.shapes.empty()) throw NotTransformable("'" + fun.name + "' has no guarded clause to reach");
  return pre;
}

inline InfiniteIR build_infinite(const FunDef& fun, const InductiveComponentIR& pre) {
  InfiniteIR inf;
  inf.name = "infinite_" + fun.name;
  inf.ctor = "inf_" + fun.name;
  for (const auto& s : pre.shapes) inf.premises_per_shape.push_back(s.rec_holes);
  return inf;
}

inline GuardedFunIR build_guarded(const FunDef& fun, const InductiveComponentIR& pre, const InfiniteIR&) {
  GuardedFunIR g;
  g.name = fun.name + "_guarded";
  FunDef& e = g.erased;
  e.name = g.name;
  e.kind = FunKind::Cofun;
  e.params = fun.params;
  e.result = fun.result;
  Type out = Type::of_codata(fun.result);

  std::vector<Expr> param_vars;
  for (const auto& p : fun.params) param_vars.push_back(build::var(p.name, p.type));

  for (std::size_t si = 0; si < pre.shapes.size(); ++si) {
    const ShapeIR& shape = pre.shapes[si];
    std::size_t payload = 0, plain = 0, rec = 0;
    auto opaque = [&](const std::string& what, std::size_t k, Type t) {
      std::string name = pre.name + "_" + what + std::to_string(k + 1);
      return build::node(t.is_codata() ? ExprKind::HelperCall : ExprKind::Apply, name, t, param_vars);
    };
    // Rebuild the skeleton: payloads and holes become projections of the
    // inductive component's result; recursive holes call the guarded function.
    std::function<Expr(const HeadSpec&)> rebuild = [&](const HeadSpec& h) {
      std::vector<Expr> args;
      std::size_t pi = 0, sj = 0;
      for (bool is_slot : h.slot_fields) {
        if (!is_slot) {
          args.push_back(opaque("out", payload++, h.payloads[pi++].type));
          continue;
        }
        const HeadSlot& s = h.slots[sj++];
        switch (s.kind) {
          case HeadSlot::Kind::Node: args.push_back(rebuild(s.node.front())); break;
          case HeadSlot::Kind::PlainHole: args.push_back(opaque("plain", plain++, out)); break;
          case HeadSlot::Kind::RecHole: {
            std::vector<Expr> call_args;
            std::size_t base = rec * fun.params.size();
            for (std::size_t k = 0; k < fun.params.size(); ++k)
              call_args.push_back(opaque("next", base + k, fun.params[k].type));
            ++rec;
            args.push_back(build::node(ExprKind::RecCall, g.name, out, std::move(call_args)));
            break;
          }
        }
      }
      return build::node(ExprKind::Ctor, h.ctor, out, std::move(args));
    };
    Clause c;
    for (const auto& p : fun.params) {
      Pattern v;
      v.kind = Pattern::Kind::Var;
      v.name = p.name;
      v.type = p.type;
      c.patterns.push_back(v);
    }
    if (!pre.uniform())
      c.guard = build::binary(BinOp::Eq, build::node(ExprKind::Apply, pre.name + "_shape", Type::nat(), param_vars),
                              build::nat(si + 1));
    c.body = rebuild(shape.skeleton);
    e.clauses.push_back(std::move(c));
  }
  e.equation_form = e.clauses.size() == 1;
  return g;
}

inline LemmaStatementIR build_lemma_statements(const FunDef& fun, const EventuallyIR&,
                                               const InductiveComponentIR& pre, const InfiniteIR&) {
  LemmaStatementIR l;
  std::string bisim = "bisimilar_" + fun.result;
  l.infinite_eventually = {LemmaIR::Kind::InfiniteEventually, "infinite_eventually_" + fun.name, 0, 0, {}};
  std::size_t holes = 0;
  for (const auto& s : pre.shapes) holes = std::max(holes, s.rec_holes);
  if (pre.uniform() && holes == 1) {
    l.infinite_always.push_back({LemmaIR::Kind::InfiniteAlways, "infinite_always_" + fun.name, 0, 0, {}});
  } else {
    for (std::size_t k = 0; k < holes; ++k)
      l.infinite_always.push_back(
          {LemmaIR::Kind::InfiniteAlways, "infinite_always_" + fun.name + "_" + std::to_string(k + 1), 0, k, {}});
  }
  l.pre_irrelevant = {LemmaIR::Kind::PreIrrelevance, pre.name + "_prf_irrelevant", 0, 0, "eq"};
  l.fun_irrelevant = {LemmaIR::Kind::FunIrrelevance, fun.name + "_prf_irrelevant", 0, 0, bisim};
  for (std::size_t ci = 0; ci < fun.clauses.size(); ++ci)
    l.steps.push_back({LemmaIR::Kind::Step, fun.name + "_step" + std::to_string(ci + 1), ci, 0, {}});
  l.equation = {LemmaIR::Kind::Equation, fun.name + "_equation", 0, 0, bisim};
  return l;
}

inline TransformArtifacts transform(const FunDef& fun) {
  TransformArtifacts a;
  a.source = &fun;
  a.classification = classify_function(fun);
  a.eventually = build_eventually(fun, a.classification);
  a.inversions = build_inversions(fun, a.eventually);
  a.pre = build_inductive_component(fun, a.eventually, a.inversions);
  a.infinite = build_infinite(fun, a.pre);
  a.guarded = build_guarded(fun, a.pre, a.infinite);
  a.lemmas = build_lemma_statements(fun, a.eventually, a.pre, a.infinite);
  return a;
}

}  // namespace corec
