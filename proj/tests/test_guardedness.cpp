#include <gtest/gtest.h>

#include <functional>
#include <map>

#include "corec/guardedness.hpp"
#include "corec/parser.hpp"
#include "support.hpp"

using namespace corec;

namespace {

const Program& corpus() {
  static const Program p = test::load("corpus/worked.corec");
  return p;
}

Verdict verdict_of(const std::string& name) { return classify_function(*corpus().find_fun(name)).verdict; }

}  // namespace

TEST(Positions, GuardedCallUnderConstructor) {
  PositionMap m = tag_positions(corpus().find_fun("repeat")->clauses[0].body);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].tag, PositionTag::PreGuarded);
  EXPECT_EQ(m[1].kind, ExprKind::RecCall);
  EXPECT_EQ(m[1].tag, PositionTag::Guarded);
}

TEST(Positions, BareCallIsNotUnderAConstructor) {
  PositionMap m = tag_positions(corpus().find_fun("filter")->clauses[1].body);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].kind, ExprKind::RecCall);
  EXPECT_NE(m[0].tag, PositionTag::Guarded);
  EXPECT_EQ(m[1].tag, PositionTag::Unprotected);
}

TEST(Positions, VariableBody) {
  Expr v = build::var("s", Type::of_codata("Stream"));
  PositionMap m = tag_positions(v);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].tag, PositionTag::PreGuarded);
}

TEST(Classify, CorpusVerdicts) {
  EXPECT_EQ(verdict_of("repeat"), Verdict::Guarded);
  EXPECT_EQ(verdict_of("from"), Verdict::Guarded);
  EXPECT_EQ(verdict_of("mapinc"), Verdict::Guarded);
  EXPECT_EQ(verdict_of("h3"), Verdict::Guarded);
  EXPECT_EQ(verdict_of("filter"), Verdict::TransformableUnguarded);
  EXPECT_EQ(verdict_of("dyn"), Verdict::TransformableUnguarded);
  EXPECT_EQ(verdict_of("e_filter"), Verdict::TransformableUnguarded);
  EXPECT_EQ(verdict_of("f"), Verdict::TransformableUnguarded);
  EXPECT_EQ(verdict_of("nats"), Verdict::RejectedStarStar);
}

TEST(Classify, DiagnosticsNameCondition) {
  Classification nats = classify_function(*corpus().find_fun("nats"));
  ASSERT_EQ(nats.diagnostics.size(), 1u);
  EXPECT_NE(nats.diagnostics[0].find("(condition **)"), std::string::npos);
  EXPECT_NE(nats.diagnostics[0].find("'mapinc'"), std::string::npos);
  Classification filter = classify_function(*corpus().find_fun("filter"));
  ASSERT_EQ(filter.diagnostics.size(), 1u);
  EXPECT_NE(filter.diagnostics[0].find("(condition *)"), std::string::npos);
  EXPECT_EQ(filter.diagnostics[0].rfind("28:", 0), 0u) << filter.diagnostics[0];
}

TEST(Classify, PayloadRewritesDoNotMatter) {
  Program a = parse_program(
      "codata Stream = SCons(nat, #)\n"
      "fun k(x: nat): Stream | x when x > 3 => SCons(x, k(x + 1)) | x => k(x * 2)");
  Program b = parse_program(
      "codata Stream = SCons(nat, #)\n"
      "fun k(x: nat): Stream | x when x == 0 => SCons(7, k(x / 3)) | x => k(1)");
  Classification ca = classify_function(a.funs[0]);
  Classification cb = classify_function(b.funs[0]);
  EXPECT_EQ(ca.verdict, cb.verdict);
  ASSERT_EQ(ca.calls.size(), cb.calls.size());
  for (std::size_t i = 0; i < ca.calls.size(); ++i) {
    EXPECT_EQ(ca.calls[i].tag, cb.calls[i].tag);
    EXPECT_EQ(ca.calls[i].path, cb.calls[i].path);
  }
}

TEST(Classify, MixedClauseBodiesAreUnsupported) {
  Program p = parse_program(
      "codata Stream = SCons(nat, #)\n"
      "cofun repeat(a: nat): Stream = SCons(a, repeat(a))\n"
      "fun k(x: nat): Stream | 0 => repeat(1) | S(n) => k(n)");
  EXPECT_EQ(classify_function(*p.find_fun("k")).verdict, Verdict::RejectedUnsupported);
  Program q = parse_program(
      "codata Stream = SCons(nat, #)\n"
      "fun k(s: Stream): Stream | SCons(x, t) => k(k(t))");
  Classification c = classify_function(q.funs[0]);
  EXPECT_EQ(c.verdict, Verdict::RejectedUnsupported);
  EXPECT_EQ(c.calls[1].tag, CallTag::UnsupportedNested);
}

// ---------------------------------------------------------------------------
// Exhaustive comparison against a path-based oracle.
//
// Bodies are built from A_node(0, _), B_node(0, _, _), h3(_), the recursive
// call r(_) and the variable t, up to 12 nodes. The oracle looks at the chain
// of ancestors of every call: any helper ancestor breaks **, any call
// ancestor is nesting, a non-empty chain of constructors is guarded and an
// empty chain (the call is the body) breaks *.

namespace {

struct Shapes {
  Program prog = parse_program(
      "codata ETree = A_node(nat, #) | B_node(nat, #, #)\n"
      "cofun h3(t: ETree): ETree | A_node(a, t1) => A_node(a + 1, t1) | B_node(b, t1, t2) => B_node(b + 1, t2, t1)");
  Type tree = Type::of_codata("ETree");

  Expr leaf() const { return build::var("t", tree); }
  Expr make(ExprKind kind, const char* name, bool payload, Expr c1, Expr* c2 = nullptr) const {
    Expr e;
    e.kind = kind;
    e.name = name;
    e.type = tree;
    e.args.reserve(3);
    if (payload) e.args.push_back(build::nat(0));
    e.args.push_back(std::move(c1));
    if (c2) e.args.push_back(std::move(*c2));
    return e;
  }
  Expr a(Expr c) const { return make(ExprKind::Ctor, "A_node", true, std::move(c)); }
  Expr b(Expr l, Expr r) const { return make(ExprKind::Ctor, "B_node", true, std::move(l), &r); }
  Expr h(Expr c) const { return make(ExprKind::HelperCall, "h3", false, std::move(c)); }
  Expr r(Expr c) const { return make(ExprKind::RecCall, "r", false, std::move(c)); }

  // Calls fn on every body with exactly n nodes. Bodies are enumerated as
  // prefix codes: 'a' A_node, 'b' B_node, 'h' h3, 'r' call, 't' variable.
  void each(int n, const std::function<void(Expr)>& fn) const {
    std::string code(static_cast<std::size_t>(n), ' ');
    fill(code, 0, 1, fn);
  }

  void fill(std::string& code, std::size_t pos, std::size_t need, const std::function<void(Expr)>& fn) const {
    if (pos == code.size()) {
      if (need == 0) {
        std::size_t i = 0;
        fn(decode(code, i));
      }
      return;
    }
    if (need == 0 || need > code.size() - pos) return;
    for (char c : {'a', 'b', 'h', 'r', 't'}) {
      std::size_t arity = c == 'b' ? 2 : c == 't' ? 0 : 1;
      code[pos] = c;
      fill(code, pos + 1, need - 1 + arity, fn);
    }
  }

  Expr decode(const std::string& code, std::size_t& i) const {
    switch (code[i++]) {
      case 'a': return a(decode(code, i));
      case 'h': return h(decode(code, i));
      case 'r': return r(decode(code, i));
      case 'b': {
        Expr l = decode(code, i);
        return b(std::move(l), decode(code, i));
      }
      default: return leaf();
    }
  }

  FunDef fun(std::vector<Expr> bodies) const {
    FunDef f;
    f.name = "r";
    f.kind = FunKind::Fun;
    f.params = {{"t", tree}};
    f.result = "ETree";
    for (auto& body : bodies) {
      Clause c;
      Pattern p;
      p.kind = Pattern::Kind::Var;
      p.name = "t";
      p.type = tree;
      c.patterns = {p};
      c.body = std::move(body);
      f.clauses.push_back(std::move(c));
    }
    return f;
  }
};

struct OracleCall {
  Path path;
  CallTag tag;
};

void oracle_calls(const Expr& e, std::vector<ExprKind>& ancestors, Path& path, std::vector<OracleCall>& out) {
  if (e.kind == ExprKind::RecCall) {
    bool helper = false, call = false;
    for (auto k : ancestors) {
      helper = helper || k == ExprKind::HelperCall;
      call = call || k == ExprKind::RecCall;
    }
    CallTag tag = helper ? CallTag::UnguardedStarStar
                  : call ? CallTag::UnsupportedNested
                  : ancestors.empty() ? CallTag::UnguardedStar
                                      : CallTag::GuardedCall;
    out.push_back({path, tag});
  }
  ancestors.push_back(e.kind);
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (e.args[i].kind == ExprKind::NatLit) continue;
    path.push_back(i);
    oracle_calls(e.args[i], ancestors, path, out);
    path.pop_back();
  }
  ancestors.pop_back();
}

Verdict oracle_verdict(const std::vector<const Expr*>& bodies, std::vector<OracleCall>& calls) {
  std::vector<bool> clause_ok;
  for (const Expr* body : bodies) {
    std::vector<ExprKind> anc;
    Path path;
    std::size_t before = calls.size();
    oracle_calls(*body, anc, path, calls);
    bool ok = true;
    for (std::size_t i = before; i < calls.size(); ++i) ok = ok && calls[i].tag == CallTag::GuardedCall;
    clause_ok.push_back(ok);
  }
  auto any = [&](CallTag t) {
    for (const auto& c : calls)
      if (c.tag == t) return true;
    return false;
  };
  if (any(CallTag::UnguardedStarStar)) return Verdict::RejectedStarStar;
  if (any(CallTag::UnsupportedNested)) return Verdict::RejectedUnsupported;
  if (!any(CallTag::UnguardedStar)) return Verdict::Guarded;
  for (std::size_t i = 0; i < bodies.size(); ++i)
    if (clause_ok[i] && bodies[i]->kind != ExprKind::Ctor) return Verdict::RejectedUnsupported;
  return Verdict::TransformableUnguarded;
}

void compare(const FunDef& fun, std::map<Verdict, long>& seen) {
  std::vector<OracleCall> expected;
  std::vector<const Expr*> bodies;
  for (const auto& c : fun.clauses) bodies.push_back(&c.body);
  Verdict want = oracle_verdict(bodies, expected);
  Classification got = classify_function(fun);
  ++seen[want];
  ASSERT_EQ(got.verdict, want);
  ASSERT_EQ(got.calls.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    ASSERT_EQ(got.calls[i].tag, expected[i].tag);
    ASSERT_EQ(got.calls[i].path, expected[i].path);
  }
}

}  // namespace

TEST(ClassifyOracle, AllSingleClauseBodiesUpTo12Nodes) {
  Shapes s;
  std::map<Verdict, long> seen;
  long total = 0;
  FunDef fun = s.fun({s.leaf()});
  for (int n = 1; n <= 12; ++n) {
    s.each(n, [&](Expr body) {
      ++total;
      fun.clauses[0].body = std::move(body);
      compare(fun, seen);
    });
    if (::testing::Test::HasFatalFailure()) return;
  }
  EXPECT_EQ(total, 4302644);
  EXPECT_GT(seen[Verdict::Guarded], 0);
  EXPECT_GT(seen[Verdict::TransformableUnguarded], 0);
  EXPECT_GT(seen[Verdict::RejectedStarStar], 0);
  EXPECT_GT(seen[Verdict::RejectedUnsupported], 0);
}

TEST(ClassifyOracle, PairedWithABareCallClause) {
  Shapes s;
  std::map<Verdict, long> seen;
  for (int n = 1; n <= 8; ++n) {
    s.each(n, [&](Expr body) {
      FunDef fun = s.fun({std::move(body), s.r(s.leaf())});
      compare(fun, seen);
    });
    if (::testing::Test::HasFatalFailure()) return;
  }
  EXPECT_GT(seen[Verdict::TransformableUnguarded], 0);
  EXPECT_GT(seen[Verdict::RejectedUnsupported], 0);
}

// ---------------------------------------------------------------------------

TEST(Structural, Div2Accepted) {
  StructuralVerdict v = check_structural(*corpus().find_rec("div2"));
  EXPECT_TRUE(v.accepted);
  EXPECT_EQ(v.structural_param, 0u);
  ASSERT_EQ(v.calls.size(), 1u);
}

TEST(Structural, LogRejected) {
  StructuralVerdict v = check_structural(*corpus().find_rec("log"));
  EXPECT_FALSE(v.accepted);
  ASSERT_TRUE(v.offending.has_value());
  EXPECT_EQ(v.offending->clause, 1u);
  EXPECT_NE(v.reason.find("S(div2(p))"), std::string::npos) << v.reason;
}

TEST(Structural, NonRecursiveAccepted) {
  Program p = parse_program("rec z(n: nat): nat | 0 => 1 | S(m) => m + 2");
  EXPECT_TRUE(check_structural(p.recs[0]).accepted);
}

TEST(Structural, VariableMustSitUnderSuccessor) {
  Program p = parse_program(
      "rec a(n: nat): nat | 0 => 0 | S(m) => a(m)\n"
      "rec b(n: nat): nat | 0 => 0 | n => b(n)\n"
      "rec c(n: nat, k: nat): nat | 0, k => k | S(m), k => c(m, k + 1)\n"
      "rec d(n: nat, k: nat): nat | n, 0 => n | n, S(j) => d(n + 1, j)\n"
      "rec e(n: nat, k: nat): nat | S(m), S(j) => e(m, k) + e(n, j) | n, k => 0\n");
  EXPECT_TRUE(check_structural(p.recs[0]).accepted);
  EXPECT_FALSE(check_structural(p.recs[1]).accepted);
  EXPECT_TRUE(check_structural(p.recs[2]).accepted);
  EXPECT_EQ(check_structural(p.recs[3]).structural_param, 1u);
  EXPECT_FALSE(check_structural(p.recs[4]).accepted);
}
