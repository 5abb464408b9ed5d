#include <gtest/gtest.h>

#include "corec/guardedness.hpp"
#include "corec/parser.hpp"
#include "corec/pretty.hpp"
#include "corec/transform.hpp"
#include "random_programs.hpp"
#include "support.hpp"

using namespace corec;

namespace {

const Program& corpus() {
  static const Program p = test::load("corpus/worked.corec");
  return p;
}

TransformArtifacts of(const std::string& name) { return transform(*corpus().find_fun(name)); }

Pattern pat(const std::string& src) {
  // Parse a pattern through a throwaway clause.
  static std::vector<Program> keep;
  keep.push_back(parse_program("codata Stream = SCons(nat, #)\nfun k(s: Stream): Stream | " + src + " => k(s)"));
  return keep.back().funs[0].clauses[0].patterns[0];
}

Pattern nat_pat(const std::string& src) {
  static std::vector<Program> keep;
  keep.push_back(parse_program("codata Stream = SCons(nat, #)\nfun k(n: nat): Stream | " + src + " => k(n)"));
  return keep.back().funs[0].clauses[0].patterns[0];
}

}  // namespace

TEST(Patterns, Relations) {
  patterns::Subst sigma;
  EXPECT_TRUE(patterns::subsumes(pat("s"), pat("SCons(x, tl)"), sigma));
  EXPECT_EQ(pretty(sigma.at("s")), "SCons(x, tl)");
  sigma.clear();
  EXPECT_TRUE(patterns::subsumes(pat("SCons(a, b)"), pat("SCons(x, SCons(y, tl))"), sigma));
  EXPECT_EQ(pretty(sigma.at("b")), "SCons(y, tl)");
  EXPECT_FALSE(patterns::subsumes(pat("SCons(x, SCons(y, tl))"), pat("SCons(a, b)"), sigma));
  EXPECT_TRUE(patterns::subsumes(nat_pat("S(m)"), nat_pat("3"), sigma));
  EXPECT_EQ(pretty(sigma.at("m")), "2");
  EXPECT_FALSE(patterns::subsumes(nat_pat("S(S(m))"), nat_pat("1"), sigma));

  EXPECT_TRUE(patterns::disjoint(nat_pat("0"), nat_pat("S(m)")));
  EXPECT_TRUE(patterns::disjoint(nat_pat("2"), nat_pat("S(S(S(m)))")));
  EXPECT_FALSE(patterns::disjoint(nat_pat("3"), nat_pat("S(S(m))")));
  EXPECT_FALSE(patterns::disjoint(pat("SCons(x, tl)"), pat("SCons(3, t)")));
  EXPECT_TRUE(patterns::disjoint(pat("SCons(2, tl)"), pat("SCons(3, t)")));

  EXPECT_TRUE(patterns::alpha_equivalent(pat("SCons(x, tl)"), pat("SCons(y, _)")));
  EXPECT_FALSE(patterns::alpha_equivalent(pat("SCons(x, tl)"), pat("SCons(0, tl)")));
}

TEST(Transform, EventuallyConstructorsFollowClauses) {
  auto dyn = of("dyn");
  EXPECT_EQ(dyn.eventually.name, "eventually_dyn");
  ASSERT_EQ(dyn.eventually.ctors.size(), 2u);
  EXPECT_EQ(dyn.eventually.ctors[0].name, "ev_dyn1");
  EXPECT_TRUE(dyn.eventually.ctors[0].guarded);
  EXPECT_FALSE(dyn.eventually.ctors[1].guarded);
  ASSERT_EQ(dyn.eventually.ctors[1].recursive_args.size(), 1u);
  EXPECT_EQ(pretty(dyn.eventually.ctors[1].recursive_args[0]), "g2(x)");
  // the second branch is reached only when the first guard fails
  const auto& ex = dyn.eventually.ctors[1].reach.exclusions;
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].clause, 0u);
  EXPECT_EQ(ex[0].kind, Exclusion::Kind::Subsumed);
  EXPECT_TRUE(ex[0].guarded);

  EXPECT_EQ(of("filter").eventually.ctors.size(), 2u);
  auto t = of("e_filter");
  ASSERT_EQ(t.eventually.ctors.size(), 4u);
  // A_node and B_node clauses never exclude each other
  EXPECT_EQ(t.eventually.ctors[2].reach.exclusions.size(), 0u);
  EXPECT_EQ(t.eventually.ctors[3].reach.exclusions.size(), 1u);
  EXPECT_EQ(t.eventually.ctors[3].reach.exclusions[0].clause, 2u);
}

TEST(Transform, GuardedInputIsDegenerate) {
  auto r = of("repeat");
  ASSERT_EQ(r.eventually.ctors.size(), 1u);
  EXPECT_TRUE(r.eventually.ctors[0].guarded);
  EXPECT_EQ(r.eventually.recursive_premises(), 0u);
  EXPECT_TRUE(r.inversions.empty());
  EXPECT_EQ(r.pre.self_calls(), 0u);
  ASSERT_EQ(r.infinite.premises_per_shape.size(), 1u);
  EXPECT_EQ(r.infinite.premises_per_shape[0], 1u);
}

TEST(Transform, RejectedInputIsNotTransformable) {
  const FunDef& nats = *corpus().find_fun("nats");
  EXPECT_THROW(build_eventually(nats, classify_function(nats)), NotTransformable);
  EXPECT_THROW(transform(nats), NotTransformable);
}

TEST(Transform, InversionLemmas) {
  auto dyn = of("dyn");
  ASSERT_EQ(dyn.inversions.size(), 1u);
  EXPECT_EQ(dyn.inversions[0].name, "dyn_inv2");
  EXPECT_EQ(pretty(dyn.inversions[0].conclusion_args[0]), "g2(x)");
  auto filter = of("filter");
  ASSERT_EQ(filter.inversions.size(), 1u);
  EXPECT_EQ(pretty(filter.inversions[0].conclusion_args[0]), "tl");
  auto t = of("e_filter");
  ASSERT_EQ(t.inversions.size(), 2u);
  EXPECT_EQ(t.inversions[0].name, "e_filter_inv2");
  EXPECT_EQ(t.inversions[1].name, "e_filter_inv4");
  EXPECT_EQ(pretty(t.inversions[1].conclusion_args[0]), "h3(B_node(b, t1, t2))");
}

TEST(Transform, InductiveComponent) {
  auto dyn = of("dyn");
  EXPECT_EQ(dyn.pre.name, "pre_dyn");
  ASSERT_EQ(dyn.pre.branches.size(), 2u);
  const auto& head = *dyn.pre.branches[0].head;
  EXPECT_EQ(head.ctor, "SCons");
  ASSERT_EQ(head.payloads.size(), 1u);
  EXPECT_EQ(pretty(head.payloads[0]), "h(x)");
  ASSERT_EQ(head.slots.size(), 1u);
  EXPECT_EQ(head.slots[0].kind, HeadSlot::Kind::RecHole);
  EXPECT_EQ(pretty(head.slots[0].args[0]), "g(x)");
  EXPECT_EQ(pretty(dyn.pre.branches[1].self_call_args[0]), "g2(x)");
  EXPECT_EQ(dyn.pre.branches[1].inversion, "dyn_inv2");
  EXPECT_TRUE(dyn.pre.uniform());
  EXPECT_EQ(dyn.pre.shapes[0].signature, "SCons(_, #rec)");

  auto filter = of("filter");
  EXPECT_EQ(pretty(filter.pre.branches[0].head->payloads[0]), "x");
  EXPECT_EQ(pretty(filter.pre.branches[0].head->slots[0].args[0]), "tl");

  auto t = of("e_filter");
  EXPECT_TRUE(t.pre.uniform());
  EXPECT_EQ(t.pre.shapes[0].signature, "A_node(_, #rec)");
}

TEST(Transform, MultiHoleAndStackedHeads) {
  Program p = parse_program(
      "codata ETree = A_node(nat, #) | B_node(nat, #, #)\n"
      "codata Stream = SCons(nat, #)\n"
      "fun w(t: ETree): ETree\n"
      "  | B_node(b, t1, t2) when b > 2 => B_node(b, w(t1), w(t2))\n"
      "  | B_node(b, t1, t2) => w(t1)\n"
      "  | A_node(a, t1) => A_node(a, A_node(a, t1))\n"
      "fun two(s: Stream): Stream\n"
      "  | SCons(x, SCons(y, tl)) when x < y => SCons(x, SCons(y, two(tl)))\n"
      "  | SCons(x, tl) => two(tl)\n");
  auto w = transform(*p.find_fun("w"));
  EXPECT_EQ(w.classification.verdict, Verdict::TransformableUnguarded);
  ASSERT_EQ(w.pre.shapes.size(), 2u);
  EXPECT_EQ(w.pre.shapes[0].rec_holes, 2u);
  EXPECT_EQ(w.pre.shapes[1].signature, "A_node(_, A_node(_, #plain))");
  EXPECT_EQ(w.infinite.premises_per_shape, (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(w.lemmas.infinite_always.size(), 2u);
  EXPECT_EQ(classify_function(w.guarded.erased).verdict, Verdict::Guarded);

  auto two = transform(*p.find_fun("two"));
  ASSERT_EQ(two.pre.shapes.size(), 1u);
  EXPECT_EQ(two.pre.shapes[0].signature, "SCons(_, SCons(_, #rec))");
  // the second clause overlaps the first without being subsumed by it
  ASSERT_EQ(two.eventually.ctors[1].reach.exclusions.size(), 1u);
  EXPECT_EQ(two.eventually.ctors[1].reach.exclusions[0].kind, Exclusion::Kind::Overlapping);
}

TEST(Transform, UnreachableClauseIsRecorded) {
  Program p = parse_program(
      "codata Stream = SCons(nat, #)\n"
      "fun u(x: nat): Stream | x => SCons(x, u(x + 1)) | 0 => u(1)");
  auto u = transform(p.funs[0]);
  EXPECT_TRUE(u.eventually.ctors[0].reach.reachable);
  EXPECT_FALSE(u.eventually.ctors[1].reach.reachable);
}

TEST(Transform, GuardedOutputRecheck) {
  for (const char* name : {"dyn", "filter", "e_filter", "f", "repeat", "from", "mapinc", "h3"}) {
    SCOPED_TRACE(name);
    auto a = of(name);
    Classification c = classify_function(a.guarded.erased);
    EXPECT_EQ(c.verdict, Verdict::Guarded) << pretty(a.guarded.erased);
  }
  EXPECT_EQ(pretty(of("dyn").guarded.erased),
            "cofun dyn_guarded(x: nat): Stream = SCons(pre_dyn_out1(x), dyn_guarded(pre_dyn_next1(x)))");
}

TEST(Transform, LemmaNames) {
  auto dyn = of("dyn");
  EXPECT_EQ(dyn.lemmas.steps.size(), 2u);
  EXPECT_EQ(dyn.lemmas.steps[1].name, "dyn_step2");
  EXPECT_EQ(dyn.lemmas.infinite_eventually.name, "infinite_eventually_dyn");
  ASSERT_EQ(dyn.lemmas.infinite_always.size(), 1u);
  EXPECT_EQ(dyn.lemmas.infinite_always[0].name, "infinite_always_dyn");
  EXPECT_EQ(dyn.lemmas.pre_irrelevant.relation, "eq");
  EXPECT_EQ(dyn.lemmas.fun_irrelevant.relation, "bisimilar_Stream");
  EXPECT_EQ(dyn.lemmas.equation.name, "dyn_equation");
  EXPECT_EQ(dyn.lemmas.equation.relation, "bisimilar_Stream");
  EXPECT_EQ(of("e_filter").lemmas.steps.size(), 4u);
}

TEST(Transform, CountLawsOnRandomPrograms) {
  test::ProgramGenerator gen(20241);
  for (int i = 0; i < 300; ++i) {
    test::RandomProgram rp = gen.next();
    SCOPED_TRACE(rp.source);
    Program p = parse_program(rp.source);
    const FunDef& f = *p.find_fun(rp.fun);
    Classification cls = classify_function(f);
    ASSERT_EQ(cls.verdict, Verdict::TransformableUnguarded);
    auto a = transform(f);
    std::size_t unguarded = 0;
    for (std::size_t c = 0; c < f.clauses.size(); ++c) unguarded += !cls.clause_guarded[c];
    std::size_t star = 0;
    for (const auto& k : cls.calls) star += k.tag == CallTag::UnguardedStar;
    EXPECT_EQ(a.eventually.ctors.size(), f.clauses.size());
    EXPECT_EQ(a.inversions.size(), unguarded);
    EXPECT_EQ(a.inversions.size(), star);
    EXPECT_EQ(a.lemmas.steps.size(), f.clauses.size());
    EXPECT_EQ(classify_function(a.guarded.erased).verdict, Verdict::Guarded);
    ASSERT_TRUE(parse_program(pretty(p)) == p);
  }
}
