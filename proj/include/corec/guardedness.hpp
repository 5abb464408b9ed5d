#pragma once

// Syntactic tests: guarded positions for corecursive definitions and the
// structurally-smaller-call test for `rec` functions.
//
// A codata node is pre-guarded when it is the root of a clause body
// (patterns and `when` guards are transparent). A node is guarded when its
// parent is a constructor that is itself pre-guarded or guarded. Arguments
// of any call are unprotected.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "corec/ast.hpp"
#include "corec/pretty.hpp"

namespace corec {

enum class PositionTag { PreGuarded, Guarded, Unprotected };

enum class CallTag {
  GuardedCall,        // directly under a chain of constructors from the root
  UnguardedStar,      // under no constructor: condition * fails
  UnguardedStarStar,  // inside an argument of another function: condition ** fails
  UnsupportedNested,  // inside the arguments of another recursive call
};

enum class Verdict { Guarded, TransformableUnguarded, RejectedStarStar, RejectedUnsupported };

inline const char* to_string(PositionTag t) {
  switch (t) {
    case PositionTag::PreGuarded: return "PreGuarded";
    case PositionTag::Guarded: return "Guarded";
    case PositionTag::Unprotected: return "Unprotected";
  }
  return "?";
}

inline const char* to_string(CallTag t) {
  switch (t) {
    case CallTag::GuardedCall: return "GuardedCall";
    case CallTag::UnguardedStar: return "UnguardedStar";
    case CallTag::UnguardedStarStar: return "UnguardedStarStar";
    case CallTag::UnsupportedNested: return "UnsupportedNested";
  }
  return "?";
}

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Guarded: return "Guarded";
    case Verdict::TransformableUnguarded: return "TransformableUnguarded";
    case Verdict::RejectedStarStar: return "RejectedStarStar";
    case Verdict::RejectedUnsupported: return "RejectedUnsupported";
  }
  return "?";
}

using Path = std::vector<std::size_t>;

inline std::string to_string(const Path& p) {
  if (p.empty()) return "root";
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ".";
    s += std::to_string(p[i]);
  }
  return s;
}

struct TaggedNode {
  Path path;
  ExprKind kind;
  PositionTag tag;
};

/// Preorder listing of the codata nodes of a body with their position tag.
using PositionMap = std::vector<TaggedNode>;

namespace detail {

inline void tag_rec(const Expr& e, PositionTag tag, Path& path, PositionMap& out) {
  out.push_back({path, e.kind, tag});
  PositionTag child = PositionTag::Unprotected;
  if (e.kind == ExprKind::Ctor && tag != PositionTag::Unprotected) child = PositionTag::Guarded;
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (!e.args[i].is_codata()) continue;
    path.push_back(i);
    tag_rec(e.args[i], child, path, out);
    path.pop_back();
  }
}

}  // namespace detail

inline PositionMap tag_positions(const Expr& body) {
  PositionMap out;
  Path path;
  detail::tag_rec(body, PositionTag::PreGuarded, path, out);
  return out;
}

struct CallInfo {
  std::size_t clause = 0;
  Path path;
  CallTag tag = CallTag::GuardedCall;
  SourcePos pos;
  std::string enclosing;  // the function whose argument holds the call, for ** and nesting
};

struct Classification {
  std::string function;
  Verdict verdict = Verdict::Guarded;
  std::vector<CallInfo> calls;
  std::vector<PositionMap> positions;  // per clause
  std::vector<bool> clause_guarded;    // clause body holds no unguarded call
  std::vector<std::string> diagnostics;

  bool transformable() const {
    return verdict == Verdict::Guarded || verdict == Verdict::TransformableUnguarded;
  }
};

namespace detail {

struct CallScan {
  std::size_t clause;
  std::vector<CallInfo>& out;

  void run(const Expr& e, PositionTag tag, Path& path, const std::string& helper, const std::string& rec) {
    if (e.kind == ExprKind::RecCall) {
      CallInfo info{clause, path, CallTag::GuardedCall, e.pos, {}};
      if (!helper.empty()) {
        info.tag = CallTag::UnguardedStarStar;
        info.enclosing = helper;
      } else if (!rec.empty()) {
        info.tag = CallTag::UnsupportedNested;
        info.enclosing = rec;
      } else if (tag == PositionTag::Guarded) {
        info.tag = CallTag::GuardedCall;
      } else {
        info.tag = CallTag::UnguardedStar;
      }
      out.push_back(std::move(info));
    }
    PositionTag child = PositionTag::Unprotected;
    if (e.kind == ExprKind::Ctor && tag != PositionTag::Unprotected) child = PositionTag::Guarded;
    const std::string& h = e.kind == ExprKind::HelperCall && helper.empty() ? e.name : helper;
    const std::string& r = e.kind == ExprKind::RecCall && rec.empty() ? e.name : rec;
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      if (!e.args[i].is_codata()) continue;
      path.push_back(i);
      run(e.args[i], child, path, h, r);
      path.pop_back();
    }
  }
};

}  // namespace detail

/// Verdict for one definition. Only the tree shape of the clause bodies
/// matters; payload expressions never influence the result.
inline Classification classify_function(const FunDef& fun) {
  Classification cls;
  cls.function = fun.name;
  for (std::size_t ci = 0; ci < fun.clauses.size(); ++ci) {
    const Clause& c = fun.clauses[ci];
    cls.positions.push_back(tag_positions(c.body));
    std::size_t before = cls.calls.size();
    Path path;
    detail::CallScan{ci, cls.calls}.run(c.body, PositionTag::PreGuarded, path, {}, {});
    bool guarded = std::all_of(cls.calls.begin() + static_cast<std::ptrdiff_t>(before), cls.calls.end(),
                               [](const CallInfo& k) { return k.tag == CallTag::GuardedCall; });
    cls.clause_guarded.push_back(guarded);
  }

  auto where = [&](const CallInfo& k) {
    return to_string(k.pos) + ": clause " + std::to_string(k.clause + 1) + ": ";
  };
  bool star_star = false;
  bool nested = false;
  bool star = false;
  for (const auto& k : cls.calls) {
    switch (k.tag) {
      case CallTag::GuardedCall: break;
      case CallTag::UnguardedStar:
        star = true;
        cls.diagnostics.push_back(where(k) + "recursive call of '" + fun.name +
                                  "' is not under a constructor (condition *)");
        break;
      case CallTag::UnguardedStarStar:
        star_star = true;
        cls.diagnostics.push_back(where(k) + "recursive call of '" + fun.name + "' is an argument of '" +
                                  k.enclosing + "' (condition **)");
        break;
      case CallTag::UnsupportedNested:
        nested = true;
        cls.diagnostics.push_back(where(k) + "recursive call of '" + fun.name +
                                  "' nested inside another recursive call is not supported");
        break;
    }
  }

  if (star_star) {
    cls.verdict = Verdict::RejectedStarStar;
  } else if (nested) {
    cls.verdict = Verdict::RejectedUnsupported;
  } else if (!star) {
    cls.verdict = Verdict::Guarded;
  } else {
    cls.verdict = Verdict::TransformableUnguarded;
    // The inductive component needs a head constructor from every clause
    // that does not recurse unguardedly.
    for (std::size_t ci = 0; ci < fun.clauses.size(); ++ci) {
      const Expr& body = fun.clauses[ci].body;
      if (cls.clause_guarded[ci] && body.kind != ExprKind::Ctor) {
        cls.verdict = Verdict::RejectedUnsupported;
        cls.diagnostics.push_back(to_string(body.pos) + ": clause " + std::to_string(ci + 1) +
                                  ": body produces no head constructor; only bare recursive calls and "
                                  "constructor-headed bodies can be separated");
      }
    }
  }
  return cls;
}

// ---------------------------------------------------------------------------
// Structural recursion

struct RecCallSite {
  std::size_t clause = 0;
  Path path;
  SourcePos pos;
  std::string text;
};

struct StructuralVerdict {
  bool accepted = true;
  std::optional<std::size_t> structural_param;  // the decreasing argument when accepted
  std::vector<RecCallSite> calls;
  // Set when rejected.
  std::optional<RecCallSite> offending;
  std::string reason;
};

namespace detail {

inline void collect_smaller(const Pattern& p, bool under_succ, std::set<std::string>& out) {
  if (p.kind == Pattern::Kind::Var && under_succ) out.insert(p.name);
  bool below = under_succ || p.kind == Pattern::Kind::Succ;
  for (const auto& s : p.subs) collect_smaller(s, below, out);
}

}  // namespace detail

/// Accepted iff some parameter position receives, at every recursive call,
/// a pattern variable bound strictly below at least one S in that clause.
inline StructuralVerdict check_structural(const RecFunDef& rec) {
  StructuralVerdict v;
  struct Site {
    RecCallSite site;
    const Expr* call;
  };
  std::vector<Site> sites;
  std::vector<std::vector<std::set<std::string>>> smaller(rec.clauses.size());
  for (std::size_t ci = 0; ci < rec.clauses.size(); ++ci) {
    const Clause& c = rec.clauses[ci];
    for (const auto& p : c.patterns) {
      std::set<std::string> s;
      detail::collect_smaller(p, false, s);
      smaller[ci].push_back(std::move(s));
    }
    walk(c.body, [&](const Expr& e, const Path& path) {
      if (e.kind == ExprKind::RecCall) sites.push_back({{ci, path, e.pos, pretty(e)}, &e});
    });
  }
  for (const auto& s : sites) v.calls.push_back(s.site);
  if (sites.empty()) {
    if (!rec.params.empty()) v.structural_param = 0;
    return v;
  }

  auto violation = [&](std::size_t param, const Site& s) -> std::optional<std::string> {
    const Expr& arg = s.call->args[param];
    const std::string& pname = rec.params[param].name;
    if (arg.kind != ExprKind::Var)
      return "argument " + std::to_string(param + 1) + " '" + pretty(arg) + "' is not a pattern variable";
    if (!smaller[s.site.clause][param].count(arg.name))
      return "argument " + std::to_string(param + 1) + " '" + arg.name + "' is not bound under S in the pattern for '" +
             pname + "'";
    return std::nullopt;
  };

  std::size_t best_param = 0;
  std::size_t best_count = sites.size() + 1;
  for (std::size_t i = 0; i < rec.params.size(); ++i) {
    std::size_t bad = 0;
    for (const auto& s : sites) bad += violation(i, s).has_value();
    if (bad == 0) {
      v.structural_param = i;
      return v;
    }
    if (bad < best_count) {
      best_count = bad;
      best_param = i;
    }
  }
  v.accepted = false;
  for (const auto& s : sites) {
    if (auto why = violation(best_param, s)) {
      v.offending = s.site;
      v.reason = "recursive call '" + s.site.text + "': " + *why;
      break;
    }
  }
  if (!v.offending) {
    v.offending = sites.front().site;
    v.reason = "recursive call '" + sites.front().site.text + "' has no arguments to decrease";
  }
  return v;
}

}  // namespace corec
