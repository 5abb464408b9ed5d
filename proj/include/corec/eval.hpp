#pragma once

// Executable semantics. Codata values are demand-driven thunks; every
// suspension remembers a canonical state key (`from(3)`, `filter(repeat(1))`)
// so that repeated states can be recognised.
//
// Two evaluation modes share the same machinery:
//   Semantics::Transformed  unguarded-but-transformable functions are run
//                           through their inductive component (run_pre) one
//                           guarded layer at a time; unguarded loops with a
//                           repeated state key are reported as not productive.
//   Semantics::Direct       every function is unfolded clause by clause,
//                           leftmost-outermost, with no cycle detection. This
//                           is the reference side of the equation check.
//
// Fuel counts clause reductions (one per selected clause, pattern match and
// guard included).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "corec/ast.hpp"
#include "corec/guardedness.hpp"
#include "corec/parser.hpp"

namespace corec {

struct BaseValue {
  bool is_bool = false;
  Nat nat = 0;
  bool boolean = false;

  static BaseValue of_nat(Nat n) { return {false, n, false}; }
  static BaseValue of_bool(bool b) { return {true, 0, b}; }

  friend bool operator==(const BaseValue&, const BaseValue&) = default;
};

inline std::string to_string(const BaseValue& v) {
  if (v.is_bool) return v.boolean ? "true" : "false";
  return std::to_string(v.nat);
}

enum class EvalErrorKind {
  FuelExhausted,
  NotEstablished,    // the inductive component cannot produce the next layer
  NoMatchingClause,
  DepthLimit,        // nested forcing or base recursion too deep
  BaseDiverged,      // base-level recursion exceeded its call budget
  Unsupported,       // observer applied to a value of the wrong shape
};

inline const char* to_string(EvalErrorKind k) {
  switch (k) {
    case EvalErrorKind::FuelExhausted: return "FuelExhausted";
    case EvalErrorKind::NotEstablished: return "NotEstablished";
    case EvalErrorKind::NoMatchingClause: return "NoMatchingClause";
    case EvalErrorKind::DepthLimit: return "DepthLimit";
    case EvalErrorKind::BaseDiverged: return "BaseDiverged";
    case EvalErrorKind::Unsupported: return "Unsupported";
  }
  return "?";
}

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, std::string detail, bool definite = true)
      : std::runtime_error(std::string(to_string(kind)) + (detail.empty() ? "" : " (" + detail + ")")),
        kind_(kind),
        detail_(std::move(detail)),
        definite_(definite) {}

  EvalErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  /// False when more fuel or depth might change the outcome.
  bool definite() const noexcept { return definite_; }
  bool resource_limited() const noexcept {
    return kind_ == EvalErrorKind::FuelExhausted || kind_ == EvalErrorKind::DepthLimit ||
           (kind_ == EvalErrorKind::NotEstablished && !definite_);
  }

 private:
  EvalErrorKind kind_;
  std::string detail_;
  bool definite_;
};

/// Step budget shared by everything forced on behalf of one request.
class Fuel {
 public:
  explicit Fuel(std::uint64_t budget) : remaining_(budget) {}

  void consume() {
    if (remaining_ == 0) throw EvalError(EvalErrorKind::FuelExhausted, "after " + std::to_string(used_) + " steps", false);
    --remaining_;
    ++used_;
  }
  std::uint64_t remaining() const { return remaining_; }
  std::uint64_t used() const { return used_; }

 private:
  std::uint64_t remaining_;
  std::uint64_t used_ = 0;
};

class Thunk;
using LazyValue = std::shared_ptr<Thunk>;
using Value = std::variant<BaseValue, LazyValue>;

struct Node {
  std::size_t ctor = 0;
  std::vector<BaseValue> payloads;
  std::vector<LazyValue> children;
};

/// A codata value: either a constructor node or a pending call. Forcing is
/// memoized, so a thunk yields the same Node object every time.
class Thunk {
 public:
  Thunk(const CodataTypeDef* type, std::optional<std::string> key, Node node)
      : type_(type), key_(std::move(key)), node_(std::move(node)) {}
  Thunk(const CodataTypeDef* type, std::optional<std::string> key, const FunDef* fun, std::vector<Value> args)
      : type_(type), key_(std::move(key)), fun_(fun), args_(std::move(args)) {}

  const CodataTypeDef& type() const { return *type_; }
  const std::optional<std::string>& key() const { return key_; }
  bool forced() const { return node_.has_value(); }
  const Node& node() const { return *node_; }

 private:
  friend class Evaluator;

  const CodataTypeDef* type_;
  std::optional<std::string> key_;
  std::optional<Node> node_;
  const FunDef* fun_ = nullptr;
  std::vector<Value> args_;
};

enum class Semantics { Transformed, Direct };

struct EvalOptions {
  Semantics semantics = Semantics::Transformed;
  // Also run guarded functions layer by layer through the inductive
  // component (only meaningful with Semantics::Transformed).
  bool layer_guarded = false;
  std::size_t max_key_length = 2048;
  std::size_t max_force_depth = 4000;
  std::size_t max_base_depth = 100000;
  std::uint64_t base_call_limit = 50'000'000;
};

struct RecStats {
  std::uint64_t calls = 0;
  std::size_t max_depth = 0;
};

struct TraceStep {
  std::size_t clause = 0;  // 0-based clause index
  std::string args;        // rendered argument keys
};

/// Evidence that the first guarded step is reachable: `depth` unguarded
/// steps followed by one guarded clause. trace.size() == depth + 1.
struct EventuallyCertificate {
  std::size_t depth = 0;
  std::vector<TraceStep> trace;
};

struct EventuallyResult {
  enum class Kind { Holds, NotEventually, Unknown };
  Kind kind = Kind::Unknown;
  EventuallyCertificate certificate;  // Holds; for the others, the steps taken
  std::string witness;                // NotEventually: repeated state or failure point
  std::uint64_t fuel_used = 0;
};

inline const char* to_string(EventuallyResult::Kind k) {
  switch (k) {
    case EventuallyResult::Kind::Holds: return "Holds";
    case EventuallyResult::Kind::NotEventually: return "NotEventually";
    case EventuallyResult::Kind::Unknown: return "Unknown";
  }
  return "?";
}

struct HeadNode;

struct HeadChild {
  enum class Kind { Node, RecHole, PlainHole };
  Kind kind = Kind::PlainHole;
  std::vector<HeadNode> node;  // exactly one element when kind == Node
  std::vector<Value> args;     // RecHole: arguments of the next call
  LazyValue plain;             // PlainHole: an existing codata value
};

/// An instantiated constructor context produced by one inductive-component run.
struct HeadNode {
  std::size_t ctor = 0;
  std::string ctor_name;
  std::vector<BaseValue> payloads;
  std::vector<HeadChild> children;
};

struct PreResult {
  HeadNode head;
  EventuallyCertificate certificate;
};

struct InfiniteVerdict {
  enum class Kind { BoundedVerified, DefinitelyNotProductive, Unknown };
  Kind kind = Kind::Unknown;
  std::size_t steps = 0;  // verified layers, or the layer where the check stopped
  std::string witness;
};

inline const char* to_string(InfiniteVerdict::Kind k) {
  switch (k) {
    case InfiniteVerdict::Kind::BoundedVerified: return "BoundedVerified";
    case InfiniteVerdict::Kind::DefinitelyNotProductive: return "DefinitelyNotProductive";
    case InfiniteVerdict::Kind::Unknown: return "Unknown";
  }
  return "?";
}

struct BisimResult {
  enum class Kind { Equal, Different, Unknown };
  Kind kind = Kind::Unknown;
  Path at;  // first differing position, or where evaluation stopped
  std::string detail;
};

struct EquationResult {
  enum class Kind { Bisimilar, Counterexample, Unknown };
  Kind kind = Kind::Unknown;
  Path position;
  std::string detail;
};

inline const char* to_string(EquationResult::Kind k) {
  switch (k) {
    case EquationResult::Kind::Bisimilar: return "Bisimilar";
    case EquationResult::Kind::Counterexample: return "Counterexample";
    case EquationResult::Kind::Unknown: return "Unknown";
  }
  return "?";
}

struct Fetched {
  std::string ctor;
  std::size_t ctor_index = 0;
  BaseValue payload;
};

class Evaluator {
 public:
  using Env = std::vector<std::pair<std::string, Value>>;

  explicit Evaluator(const Program& prog, EvalOptions opts = {}) : prog_(prog), opts_(opts) {
    for (const auto& f : prog_.funs) classes_.emplace(f.name, classify_function(f));
  }

  const Program& program() const { return prog_; }
  const EvalOptions& options() const { return opts_; }
  const Classification& classification(const FunDef& f) const { return classes_.at(f.name); }

  /// Whether forcing a call of `f` goes through run_pre.
  bool layered(const FunDef& f) const {
    if (opts_.semantics != Semantics::Transformed) return false;
    const Classification& c = classification(f);
    if (c.verdict == Verdict::TransformableUnguarded) return true;
    if (c.verdict != Verdict::Guarded || !opts_.layer_guarded) return false;
    for (const auto& clause : f.clauses)
      if (clause.body.kind != ExprKind::Ctor) return false;
    return true;
  }

  // ---- base level ----

  BaseValue eval_base(const Expr& e, const Env& env) const {
    BaseCtx ctx;
    return base(e, env, nullptr, ctx);
  }

  /// Runs a rec function; `stats` counts every invocation of `rec` itself.
  BaseValue call_rec(const RecFunDef& rec, std::span<const BaseValue> args, RecStats* stats = nullptr) const {
    BaseCtx ctx;
    ctx.stats_for = stats ? &rec : nullptr;
    ctx.stats = stats;
    return rec_call(rec, args, ctx);
  }

  BaseValue call_def(const HelperDef& def, std::span<const BaseValue> args) const {
    BaseCtx ctx;
    return def_call(def, args, ctx);
  }

  // ---- codata ----

  /// A suspended call of `fun`; nothing is evaluated until forced.
  LazyValue call(const FunDef& fun, std::vector<Value> args) const {
    auto key = call_key(fun.name, args);
    return std::make_shared<Thunk>(prog_.find_codata(fun.result), std::move(key), &fun, std::move(args));
  }

  Value instantiate(const Term& t) const {
    switch (t.kind) {
      case Term::Kind::Nat: return BaseValue::of_nat(t.nat);
      case Term::Kind::Bool: return BaseValue::of_bool(t.boolean);
      case Term::Kind::Call: break;
    }
    std::vector<Value> args;
    for (const auto& a : t.args) args.push_back(instantiate(a));
    if (auto ref = prog_.find_ctor(t.name)) return make_node(*ref, std::move(args));
    if (const auto* f = prog_.find_fun(t.name)) return call(*f, std::move(args));
    std::vector<BaseValue> base_args;
    for (auto& a : args) base_args.push_back(std::get<BaseValue>(a));
    if (const auto* d = prog_.find_def(t.name)) return call_def(*d, base_args);
    if (const auto* r = prog_.find_rec(t.name)) return call_rec(*r, base_args);
    throw EvalError(EvalErrorKind::Unsupported, "unknown name '" + t.name + "'");
  }

  std::vector<Value> instantiate(const std::vector<Term>& ts) const {
    std::vector<Value> out;
    for (const auto& t : ts) out.push_back(instantiate(t));
    return out;
  }

  /// Weak head normal form of `v`.
  const Node& force(const LazyValue& v, Fuel& fuel) const {
    if (v->forced()) return v->node();
    DepthGuard guard(depth_, opts_.max_force_depth);
    const FunDef* fun = v->fun_;
    if (layered(*fun)) {
      PreResult pre = run_pre(*fun, v->args_, fuel);
      v->node_ = materialize_root(*fun, pre.head);
    } else {
      v->node_ = unfold(*fun, v->args_, fuel);
    }
    v->fun_ = nullptr;
    v->args_.clear();
    return v->node();
  }

  /// Canonical state key of an argument tuple, or nullopt when unkeyable.
  std::optional<std::string> args_key(const std::vector<Value>& args) const {
    std::string s;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) s += ", ";
      auto k = value_key(args[i]);
      if (!k) return std::nullopt;
      s += *k;
    }
    return s;
  }

  static std::optional<std::string> value_key(const Value& v) {
    if (const auto* b = std::get_if<BaseValue>(&v)) return to_string(*b);
    return std::get<LazyValue>(v)->key();
  }

  // ---- eventually / inductive component ----

  EventuallyResult decide_eventually(const FunDef& fun, std::vector<Value> args, Fuel& fuel) const {
    Walk w = walk_to_guarded(fun, std::move(args), fuel);
    return std::move(w.result);
  }

  /// Runs the inductive component: every computation up to the first guarded
  /// clause, then the instantiated head context of that clause. Throws
  /// EvalError(NotEstablished) when eventually does not hold within `fuel`.
  PreResult run_pre(const FunDef& fun, std::vector<Value> args, Fuel& fuel) const {
    Walk w = walk_to_guarded(fun, std::move(args), fuel);
    switch (w.result.kind) {
      case EventuallyResult::Kind::Holds: break;
      case EventuallyResult::Kind::NotEventually:
        throw EvalError(EvalErrorKind::NotEstablished, "NotEventually: " + w.result.witness, true);
      case EventuallyResult::Kind::Unknown:
        throw EvalError(EvalErrorKind::NotEstablished, "Unknown: " + w.result.witness, false);
    }
    const Expr& body = fun.clauses[w.clause].body;
    if (body.kind != ExprKind::Ctor)
      throw EvalError(EvalErrorKind::Unsupported, "clause " + std::to_string(w.clause + 1) + " of '" + fun.name +
                                                      "' has no head constructor");
    PreResult out;
    out.head = build_head(fun, body, w.env);
    out.certificate = std::move(w.result.certificate);
    return out;
  }

  /// Layered check of the infinite predicate: `steps` rounds of run_pre over
  /// every recursive hole, each obligation with its own `fuel_per_step`.
  InfiniteVerdict check_infinite(const FunDef& fun, std::vector<Value> args, std::size_t steps,
                                 std::uint64_t fuel_per_step, std::size_t max_obligations = 1u << 14) const {
    InfiniteVerdict out;
    std::vector<std::vector<Value>> layer{std::move(args)};
    std::set<std::string> verified;
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<std::vector<Value>> next;
      std::set<std::string> queued;
      std::optional<std::string> not_productive;
      std::optional<std::string> unknown;
      bool fresh = false;
      for (auto& obligation : layer) {
        auto key = args_key(obligation);
        if (key && verified.count(*key)) continue;
        fresh = true;
        Fuel fuel(fuel_per_step);
        Walk w = walk_to_guarded(fun, obligation, fuel);
        if (w.result.kind == EventuallyResult::Kind::NotEventually) {
          if (!not_productive) not_productive = w.result.witness;
          continue;
        }
        if (w.result.kind == EventuallyResult::Kind::Unknown) {
          if (!unknown) unknown = w.result.witness;
          continue;
        }
        if (key) verified.insert(*key);
        const Expr& body = fun.clauses[w.clause].body;
        // A guarded clause without a head constructor returns an existing
        // value: nothing further to verify on this branch.
        if (body.kind != ExprKind::Ctor) continue;
        HeadNode head;
        try {
          head = build_head(fun, body, w.env);
        } catch (const EvalError& e) {
          if (!unknown) unknown = e.what();
          continue;
        }
        collect_rec_holes(head, [&](std::vector<Value> hole) {
          auto hk = args_key(hole);
          if (hk && (queued.count(*hk) || verified.count(*hk))) return;
          if (hk) queued.insert(*hk);
          next.push_back(std::move(hole));
        });
      }
      if (not_productive) return {InfiniteVerdict::Kind::DefinitelyNotProductive, s, *not_productive};
      if (unknown) return {InfiniteVerdict::Kind::Unknown, s, *unknown};
      if (next.size() > max_obligations) return {InfiniteVerdict::Kind::Unknown, s, "obligation budget exceeded"};
      // Every remaining obligation repeats one already verified: later layers
      // are copies of checked ones.
      if (!fresh && s > 0) break;
      layer = std::move(next);
      if (layer.empty()) break;
    }
    out.kind = InfiniteVerdict::Kind::BoundedVerified;
    out.steps = steps;
    return out;
  }

  /// Value computed layer by layer through the inductive component.
  LazyValue eval_transformed(const FunDef& fun, std::vector<Value> args) const { return call(fun, std::move(args)); }

  // ---- observers ----

  BaseValue observe_nth(LazyValue v, Nat n, Fuel& fuel) const {
    for (Nat i = 0;; ++i) {
      const Node& node = force(v, fuel);
      const CtorDef& c = v->type().ctors[node.ctor];
      if (c.slot_count() != 1 || c.payload_count() != 1)
        throw EvalError(EvalErrorKind::Unsupported, "nth needs one payload and one slot per constructor; '" + c.name + "' differs");
      if (i == n) return node.payloads[0];
      v = node.children[0];
    }
  }

  std::vector<BaseValue> take(LazyValue v, Nat n, Fuel& fuel) const {
    std::vector<BaseValue> out;
    for (Nat i = 0; i < n; ++i) {
      const Node& node = force(v, fuel);
      const CtorDef& c = v->type().ctors[node.ctor];
      if (c.slot_count() != 1 || c.payload_count() != 1)
        throw EvalError(EvalErrorKind::Unsupported, "take needs one payload and one slot per constructor; '" + c.name + "' differs");
      out.push_back(node.payloads[0]);
      v = node.children[0];
    }
    return out;
  }

  /// One-slot nodes consume a direction without branching; two-slot nodes
  /// follow L to the first child and R to the second.
  Fetched observe_fetch(LazyValue v, std::span<const Direction> path, Fuel& fuel) const {
    std::size_t i = 0;
    for (;;) {
      const Node& node = force(v, fuel);
      const CtorDef& c = v->type().ctors[node.ctor];
      if (c.payload_count() != 1 || c.slot_count() < 1 || c.slot_count() > 2)
        throw EvalError(EvalErrorKind::Unsupported, "fetch needs one payload and one or two slots; '" + c.name + "' differs");
      if (i == path.size()) return {c.name, node.ctor, node.payloads[0]};
      Direction d = path[i++];
      v = c.slot_count() == 1 ? node.children[0] : node.children[d == Direction::L ? 0 : 1];
    }
  }

  /// Forces every node of `v` above depth `k`, breadth first.
  void force_to_depth(const LazyValue& v, std::size_t k, Fuel& fuel) const {
    std::deque<std::pair<LazyValue, std::size_t>> queue{{v, 0}};
    while (!queue.empty()) {
      auto [x, d] = queue.front();
      queue.pop_front();
      if (d >= k) continue;
      const Node& n = force(x, fuel);
      for (const auto& c : n.children) queue.emplace_back(c, d + 1);
    }
  }

  // ---- internals shared with tests ----

  std::string render(const HeadNode& h) const {
    std::string s = h.ctor_name + "(";
    bool first = true;
    auto sep = [&] {
      if (!first) s += ", ";
      first = false;
    };
    for (const auto& p : h.payloads) {
      sep();
      s += to_string(p);
    }
    for (const auto& c : h.children) {
      sep();
      switch (c.kind) {
        case HeadChild::Kind::Node: s += render(c.node.front()); break;
        case HeadChild::Kind::RecHole: s += "<next " + args_key(c.args).value_or("?") + ">"; break;
        case HeadChild::Kind::PlainHole: s += "<value " + c.plain->key().value_or("?") + ">"; break;
      }
    }
    return s + ")";
  }

 private:
  struct BaseCtx {
    std::uint64_t calls = 0;
    std::size_t depth = 0;
    const RecFunDef* stats_for = nullptr;
    RecStats* stats = nullptr;
  };

  class DepthGuard {
   public:
    DepthGuard(std::size_t& depth, std::size_t limit) : depth_(depth) {
      if (++depth_ > limit) {
        --depth_;
        throw EvalError(EvalErrorKind::DepthLimit, "forcing nested deeper than " + std::to_string(limit), false);
      }
    }
    ~DepthGuard() { --depth_; }
    DepthGuard(const DepthGuard&) = delete;
    DepthGuard& operator=(const DepthGuard&) = delete;

   private:
    std::size_t& depth_;
  };

  static const Value* lookup(const Env& env, const std::string& name) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == name) return &it->second;
    return nullptr;
  }

  static Nat sat_add(Nat a, Nat b) { return a > std::numeric_limits<Nat>::max() - b ? std::numeric_limits<Nat>::max() : a + b; }
  static Nat sat_mul(Nat a, Nat b) {
    if (a == 0 || b == 0) return 0;
    return a > std::numeric_limits<Nat>::max() / b ? std::numeric_limits<Nat>::max() : a * b;
  }

  BaseValue base(const Expr& e, const Env& env, const RecFunDef* self, BaseCtx& ctx) const {
    switch (e.kind) {
      case ExprKind::NatLit: return BaseValue::of_nat(e.nat);
      case ExprKind::BoolLit: return BaseValue::of_bool(e.boolean);
      case ExprKind::Var: {
        const Value* v = lookup(env, e.name);
        if (!v || !std::holds_alternative<BaseValue>(*v))
          throw std::logic_error("unbound base variable '" + e.name + "'");
        return std::get<BaseValue>(*v);
      }
      case ExprKind::Not: return BaseValue::of_bool(!base(e.args[0], env, self, ctx).boolean);
      case ExprKind::Succ: return BaseValue::of_nat(sat_add(base(e.args[0], env, self, ctx).nat, 1));
      case ExprKind::If:
        return base(e.args[0], env, self, ctx).boolean ? base(e.args[1], env, self, ctx) : base(e.args[2], env, self, ctx);
      case ExprKind::Binary: {
        if (e.op == BinOp::And) {
          return BaseValue::of_bool(base(e.args[0], env, self, ctx).boolean && base(e.args[1], env, self, ctx).boolean);
        }
        if (e.op == BinOp::Or) {
          return BaseValue::of_bool(base(e.args[0], env, self, ctx).boolean || base(e.args[1], env, self, ctx).boolean);
        }
        BaseValue a = base(e.args[0], env, self, ctx);
        BaseValue b = base(e.args[1], env, self, ctx);
        switch (e.op) {
          case BinOp::Add: return BaseValue::of_nat(sat_add(a.nat, b.nat));
          case BinOp::Monus: return BaseValue::of_nat(a.nat > b.nat ? a.nat - b.nat : 0);
          case BinOp::Mul: return BaseValue::of_nat(sat_mul(a.nat, b.nat));
          case BinOp::Div: return BaseValue::of_nat(b.nat == 0 ? 0 : a.nat / b.nat);
          case BinOp::Mod: return BaseValue::of_nat(b.nat == 0 ? 0 : a.nat % b.nat);
          case BinOp::Eq: return BaseValue::of_bool(a == b);
          case BinOp::Ne: return BaseValue::of_bool(!(a == b));
          case BinOp::Lt: return BaseValue::of_bool(a.nat < b.nat);
          case BinOp::Le: return BaseValue::of_bool(a.nat <= b.nat);
          case BinOp::Gt: return BaseValue::of_bool(a.nat > b.nat);
          case BinOp::Ge: return BaseValue::of_bool(a.nat >= b.nat);
          case BinOp::And: case BinOp::Or: break;
        }
        break;
      }
      case ExprKind::Apply: {
        std::vector<BaseValue> args;
        for (const auto& a : e.args) args.push_back(base(a, env, self, ctx));
        if (const auto* d = prog_.find_def(e.name)) return def_call(*d, args, ctx);
        return rec_call(*prog_.find_rec(e.name), args, ctx);
      }
      case ExprKind::RecCall: {
        std::vector<BaseValue> args;
        for (const auto& a : e.args) args.push_back(base(a, env, self, ctx));
        return rec_call(*self, args, ctx);
      }
      case ExprKind::Ctor:
      case ExprKind::HelperCall: break;
    }
    throw std::logic_error("codata expression in base position");
  }

  BaseValue def_call(const HelperDef& d, std::span<const BaseValue> args, BaseCtx& ctx) const {
    Env env;
    for (std::size_t i = 0; i < d.params.size(); ++i) env.emplace_back(d.params[i].name, args[i]);
    return base(d.body, env, nullptr, ctx);
  }

  static bool match_nat(const Pattern& p, Nat n, Env& env) {
    switch (p.kind) {
      case Pattern::Kind::Var: env.emplace_back(p.name, BaseValue::of_nat(n)); return true;
      case Pattern::Kind::Wildcard: return true;
      case Pattern::Kind::NatLit: return p.nat == n;
      case Pattern::Kind::Succ: return n > 0 && match_nat(p.subs[0], n - 1, env);
      default: return false;
    }
  }

  BaseValue rec_call(const RecFunDef& r, std::span<const BaseValue> args, BaseCtx& ctx) const {
    if (++ctx.calls > opts_.base_call_limit)
      throw EvalError(EvalErrorKind::BaseDiverged, "'" + r.name + "' exceeded " + std::to_string(opts_.base_call_limit) + " calls");
    if (ctx.depth + 1 > opts_.max_base_depth)
      throw EvalError(EvalErrorKind::DepthLimit, "'" + r.name + "' recursion too deep", false);
    ++ctx.depth;
    if (ctx.stats && ctx.stats_for == &r) {
      ++ctx.stats->calls;
      ctx.stats->max_depth = std::max(ctx.stats->max_depth, ctx.depth);
    }
    struct Pop {
      std::size_t& d;
      ~Pop() { --d; }
    } pop{ctx.depth};
    for (const auto& c : r.clauses) {
      Env env;
      for (std::size_t i = 0; i < r.params.size(); ++i) env.emplace_back(r.params[i].name, args[i]);
      bool ok = true;
      for (std::size_t i = 0; i < c.patterns.size() && ok; ++i) ok = match_nat(c.patterns[i], args[i].nat, env);
      if (ok) return base(c.body, env, &r, ctx);
    }
    std::string shown;
    for (std::size_t i = 0; i < args.size(); ++i) shown += (i ? ", " : "") + to_string(args[i]);
    throw EvalError(EvalErrorKind::NoMatchingClause, r.name + "(" + shown + ")");
  }

  // ---- codata internals ----

  std::optional<std::string> call_key(const std::string& name, const std::vector<Value>& args) const {
    auto inner = args_key(args);
    if (!inner) return std::nullopt;
    std::string s = name + "(" + *inner + ")";
    if (s.size() > opts_.max_key_length) return std::nullopt;
    return s;
  }

  LazyValue make_node(const CtorRef& ref, std::vector<Value> fields) const {
    Node n;
    n.ctor = ref.index;
    const auto& kinds = ref.def().fields;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (kinds[i] == FieldKind::Slot) {
        n.children.push_back(std::get<LazyValue>(fields[i]));
      } else {
        n.payloads.push_back(std::get<BaseValue>(fields[i]));
      }
    }
    auto key = call_key(ref.def().name, fields);
    return std::make_shared<Thunk>(ref.type, std::move(key), std::move(n));
  }

  bool match(const Pattern& p, const Value& v, Env& env, Fuel& fuel) const {
    switch (p.kind) {
      case Pattern::Kind::Var: env.emplace_back(p.name, v); return true;
      case Pattern::Kind::Wildcard: return true;
      case Pattern::Kind::NatLit: case Pattern::Kind::Succ: return match_nat(p, std::get<BaseValue>(v).nat, env);
      case Pattern::Kind::BoolLit: return std::get<BaseValue>(v).boolean == p.boolean;
      case Pattern::Kind::Ctor: break;
    }
    const LazyValue& lv = std::get<LazyValue>(v);
    const Node& n = force(lv, fuel);
    const CtorDef& c = lv->type().ctors[n.ctor];
    if (c.name != p.name) return false;
    std::size_t pi = 0;
    std::size_t ci = 0;
    for (std::size_t i = 0; i < c.fields.size(); ++i) {
      Value field = c.fields[i] == FieldKind::Slot ? Value(n.children[ci++]) : Value(n.payloads[pi++]);
      if (!match(p.subs[i], field, env, fuel)) return false;
    }
    return true;
  }

  struct Selected {
    std::size_t clause;
    Env env;
  };

  Selected select_clause(const FunDef& fun, const std::vector<Value>& args, Fuel& fuel) const {
    fuel.consume();
    for (std::size_t ci = 0; ci < fun.clauses.size(); ++ci) {
      const Clause& c = fun.clauses[ci];
      Env env;
      for (std::size_t i = 0; i < fun.params.size(); ++i) env.emplace_back(fun.params[i].name, args[i]);
      bool ok = true;
      for (std::size_t i = 0; i < c.patterns.size() && ok; ++i) ok = match(c.patterns[i], args[i], env, fuel);
      if (ok && c.guard) ok = eval_base(*c.guard, env).boolean;
      if (ok) return {ci, std::move(env)};
    }
    throw EvalError(EvalErrorKind::NoMatchingClause, fun.name + "(" + args_key(args).value_or("...") + ")");
  }

  std::vector<Value> eval_args(const FunDef& callee, const Expr& call, const Env& env) const {
    std::vector<Value> out;
    for (std::size_t i = 0; i < call.args.size(); ++i) {
      if (callee.params[i].type.is_codata()) {
        out.push_back(eval_co(call.args[i], env));
      } else {
        out.push_back(eval_base(call.args[i], env));
      }
    }
    return out;
  }

  const FunDef& callee(const Expr& call, const FunDef& self) const {
    if (call.kind == ExprKind::RecCall) return self;
    return *prog_.find_fun(call.name);
  }

  /// Codata expression in a non-root position: never forces anything.
  LazyValue eval_co(const Expr& e, const Env& env, const FunDef* self = nullptr) const {
    switch (e.kind) {
      case ExprKind::Var: {
        const Value* v = lookup(env, e.name);
        if (!v || !std::holds_alternative<LazyValue>(*v))
          throw std::logic_error("unbound codata variable '" + e.name + "'");
        return std::get<LazyValue>(*v);
      }
      case ExprKind::Ctor: {
        auto ref = *prog_.find_ctor(e.name);
        std::vector<Value> fields;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (ref.def().fields[i] == FieldKind::Slot) {
            fields.push_back(eval_co(e.args[i], env, self));
          } else {
            fields.push_back(eval_base(e.args[i], env));
          }
        }
        return make_node(ref, std::move(fields));
      }
      case ExprKind::RecCall:
      case ExprKind::HelperCall: {
        const FunDef& f = e.kind == ExprKind::RecCall ? *self_or_lookup(e, self) : *prog_.find_fun(e.name);
        return call(f, eval_args(f, e, env));
      }
      default: break;
    }
    throw std::logic_error("base expression in codata position");
  }

  const FunDef* self_or_lookup(const Expr& e, const FunDef* self) const {
    return self ? self : prog_.find_fun(e.name);
  }

  /// Clause-by-clause unfolding until a constructor appears at the root.
  Node unfold(const FunDef& start, std::vector<Value> args, Fuel& fuel) const {
    const FunDef* fun = &start;
    std::set<std::string> seen;
    bool detect = opts_.semantics == Semantics::Transformed;
    for (;;) {
      if (detect) {
        if (auto k = call_key(fun->name, args)) {
          if (!seen.insert(*k).second)
            throw EvalError(EvalErrorKind::NotEstablished, "NotEventually: cycle: " + *k, true);
        }
      }
      Selected sel = select_clause(*fun, args, fuel);
      const Expr& body = fun->clauses[sel.clause].body;
      switch (body.kind) {
        case ExprKind::Ctor: {
          LazyValue v = eval_co(body, sel.env, fun);
          return v->node();
        }
        case ExprKind::Var: {
          LazyValue v = eval_co(body, sel.env, fun);
          return force(v, fuel);
        }
        case ExprKind::RecCall:
        case ExprKind::HelperCall: {
          const FunDef& next = body.kind == ExprKind::RecCall ? *fun : *prog_.find_fun(body.name);
          std::vector<Value> next_args = eval_args(next, body, sel.env);
          if (detect && &next != fun && layered(next))
            return force(call(next, std::move(next_args)), fuel);
          fun = &next;
          args = std::move(next_args);
          break;
        }
        default: throw std::logic_error("malformed clause body");
      }
    }
  }

  struct Walk {
    EventuallyResult result;
    std::size_t clause = 0;
    Env env;
  };

  Walk walk_to_guarded(const FunDef& fun, std::vector<Value> args, Fuel& fuel) const {
    Walk w;
    const Classification& cls = classification(fun);
    std::set<std::string> seen;
    std::uint64_t start = fuel.used();
    for (;;) {
      auto key = args_key(args);
      if (key && key->size() <= opts_.max_key_length && !seen.insert(*key).second) {
        w.result.kind = EventuallyResult::Kind::NotEventually;
        w.result.witness = "cycle: " + *key;
        break;
      }
      Selected sel;
      try {
        sel = select_clause(fun, args, fuel);
      } catch (const EvalError& e) {
        if (e.kind() == EvalErrorKind::NoMatchingClause) {
          w.result.kind = EventuallyResult::Kind::NotEventually;
          w.result.witness = "no clause matches " + e.detail();
        } else if (e.kind() == EvalErrorKind::NotEstablished && e.definite()) {
          w.result.kind = EventuallyResult::Kind::NotEventually;
          w.result.witness = "argument not productive: " + e.detail();
        } else if (e.resource_limited()) {
          w.result.kind = EventuallyResult::Kind::Unknown;
          w.result.witness = e.what();
        } else {
          throw;
        }
        break;
      }
      w.result.certificate.trace.push_back({sel.clause, key.value_or("<unkeyable>")});
      if (cls.clause_guarded[sel.clause]) {
        w.result.kind = EventuallyResult::Kind::Holds;
        w.clause = sel.clause;
        w.env = std::move(sel.env);
        break;
      }
      const Expr& body = fun.clauses[sel.clause].body;
      args = eval_args(fun, body, sel.env);
    }
    w.result.certificate.depth = w.result.certificate.trace.empty() ? 0 : w.result.certificate.trace.size() - 1;
    w.result.fuel_used = fuel.used() - start;
    return w;
  }

  HeadNode build_head(const FunDef& fun, const Expr& e, const Env& env) const {
    HeadNode h;
    auto ref = *prog_.find_ctor(e.name);
    h.ctor = ref.index;
    h.ctor_name = e.name;
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      const Expr& a = e.args[i];
      if (ref.def().fields[i] != FieldKind::Slot) {
        h.payloads.push_back(eval_base(a, env));
        continue;
      }
      HeadChild c;
      if (a.kind == ExprKind::Ctor) {
        c.kind = HeadChild::Kind::Node;
        c.node.push_back(build_head(fun, a, env));
      } else if (a.kind == ExprKind::RecCall) {
        c.kind = HeadChild::Kind::RecHole;
        c.args = eval_args(fun, a, env);
      } else {
        c.kind = HeadChild::Kind::PlainHole;
        c.plain = eval_co(a, env, &fun);
      }
      h.children.push_back(std::move(c));
    }
    return h;
  }

  LazyValue materialize(const FunDef& fun, const HeadNode& h) const {
    auto ref = *prog_.find_ctor(h.ctor_name);
    std::vector<Value> fields;
    std::size_t pi = 0;
    std::size_t ci = 0;
    for (auto kind : ref.def().fields) {
      if (kind != FieldKind::Slot) {
        fields.push_back(h.payloads[pi++]);
        continue;
      }
      const HeadChild& c = h.children[ci++];
      switch (c.kind) {
        case HeadChild::Kind::Node: fields.push_back(materialize(fun, c.node.front())); break;
        case HeadChild::Kind::RecHole: fields.push_back(call(fun, c.args)); break;
        case HeadChild::Kind::PlainHole: fields.push_back(c.plain); break;
      }
    }
    return make_node(ref, std::move(fields));
  }

  Node materialize_root(const FunDef& fun, const HeadNode& h) const { return materialize(fun, h)->node(); }

  template <typename Fn>
  static void collect_rec_holes(const HeadNode& h, Fn&& fn) {
    for (const auto& c : h.children) {
      if (c.kind == HeadChild::Kind::Node) collect_rec_holes(c.node.front(), fn);
      if (c.kind == HeadChild::Kind::RecHole) fn(c.args);
    }
  }

  const Program& prog_;
  EvalOptions opts_;
  std::map<std::string, Classification, std::less<>> classes_;
  mutable std::size_t depth_ = 0;
};

// ---------------------------------------------------------------------------
// Bisimilarity and the recursive-equation check

/// Compares constructor tags and payloads breadth first down to `k` layers
/// (layer 0 is the root). Fuel is shared by both sides.
inline BisimResult bisimilar_to_depth(const Evaluator& ea, const LazyValue& a, const Evaluator& eb,
                                      const LazyValue& b, std::size_t k, Fuel& fuel) {
  struct Item {
    LazyValue a, b;
    Path path;
  };
  std::deque<Item> queue;
  queue.push_back({a, b, {}});
  while (!queue.empty()) {
    Item it = std::move(queue.front());
    queue.pop_front();
    if (it.path.size() >= k) continue;
    const Node* na = nullptr;
    const Node* nb = nullptr;
    try {
      na = &ea.force(it.a, fuel);
      nb = &eb.force(it.b, fuel);
    } catch (const EvalError& e) {
      if (e.resource_limited()) return {BisimResult::Kind::Unknown, it.path, e.what()};
      throw;
    }
    const std::string& ca = it.a->type().ctors[na->ctor].name;
    const std::string& cb = it.b->type().ctors[nb->ctor].name;
    if (ca != cb) return {BisimResult::Kind::Different, it.path, "constructors " + ca + " and " + cb};
    if (na->payloads != nb->payloads) {
      std::string pa, pb;
      for (const auto& p : na->payloads) pa += (pa.empty() ? "" : ",") + to_string(p);
      for (const auto& p : nb->payloads) pb += (pb.empty() ? "" : ",") + to_string(p);
      return {BisimResult::Kind::Different, it.path, "payloads " + pa + " and " + pb};
    }
    for (std::size_t i = 0; i < na->children.size(); ++i) {
      Path p = it.path;
      p.push_back(i);
      queue.push_back({na->children[i], nb->children[i], std::move(p)});
    }
  }
  return {BisimResult::Kind::Equal, {}, {}};
}

inline BisimResult bisimilar_to_depth(const Evaluator& ev, const LazyValue& a, const LazyValue& b, std::size_t k,
                                      Fuel& fuel) {
  return bisimilar_to_depth(ev, a, ev, b, k, fuel);
}

/// Compares the layer-by-layer transformed value of `fun(args)` with a
/// direct clause-by-clause unfolding of the original definition. Both sides
/// get their own `fuel` budget; the direct side must produce `depth` layers
/// first, otherwise the result is Unknown.
inline EquationResult check_equation(const Program& prog, const FunDef& fun, const std::vector<Term>& args,
                                     std::size_t depth, std::uint64_t fuel) {
  EvalOptions direct_opts;
  direct_opts.semantics = Semantics::Direct;
  Evaluator direct(prog, direct_opts);
  Evaluator transformed(prog);
  LazyValue rhs = direct.call(fun, direct.instantiate(args));
  try {
    Fuel f(fuel);
    direct.force_to_depth(rhs, depth, f);
  } catch (const EvalError& e) {
    return {EquationResult::Kind::Unknown, {}, std::string("direct unfolding: ") + e.what()};
  }
  LazyValue lhs = transformed.eval_transformed(fun, transformed.instantiate(args));
  Fuel f(fuel);
  try {
    BisimResult r = bisimilar_to_depth(transformed, lhs, direct, rhs, depth, f);
    switch (r.kind) {
      case BisimResult::Kind::Equal: return {EquationResult::Kind::Bisimilar, {}, {}};
      case BisimResult::Kind::Different: return {EquationResult::Kind::Counterexample, r.at, r.detail};
      case BisimResult::Kind::Unknown: return {EquationResult::Kind::Unknown, r.at, "transformed side: " + r.detail};
    }
  } catch (const EvalError& e) {
    return {EquationResult::Kind::Counterexample, {}, std::string("transformed side failed: ") + e.what()};
  }
  return {};
}

}  // namespace corec
