#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "corec/cli.hpp"
#include "support.hpp"

using namespace corec;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  for (auto& a : args)
    if (a.find(".corec") != std::string::npos && a.find('/') != std::string::npos && a[0] != '/')
      a = std::string(COREC_SOURCE_DIR) + "/" + a;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, CheckTable) {
  Outcome r = invoke({"check", "corpus/worked.corec"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("name"), std::string::npos);
  EXPECT_NE(r.out.find("filter    fun    TransformableUnguarded"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("nats      cofun  RejectedStarStar"), std::string::npos);
}

TEST(Cli, CheckStrictFailsOnRejection) {
  EXPECT_EQ(invoke({"check", "--strict", "corpus/worked.corec"}).code, 1);
  EXPECT_EQ(invoke({"check", "--strict", "corpus/filter.corec"}).code, 0);
}

TEST(Cli, CheckJsonIsTheReport) {
  Outcome r = invoke({"check", "--json", "corpus/dyn.corec"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, test::read_file("tests/golden/dyn.report.json"));
}

TEST(Cli, RunNth) {
  Outcome r = invoke({"run", "corpus/worked.corec", "--expr", "nth(3, filter(from(0)))"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "6\n");
  EXPECT_EQ(invoke({"run", "corpus/worked.corec", "--expr", "take(4, filter(from(0)))"}).out, "0 2 4 6\n");
  EXPECT_EQ(invoke({"run", "corpus/worked.corec", "--expr", "div2(9)"}).out, "4\n");
}

TEST(Cli, RunUnproductiveIsNotEstablished) {
  Outcome r = invoke({"run", "corpus/worked.corec", "--expr", "nth(0, filter(repeat(1)))", "--fuel", "100"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out.rfind("NotEstablished", 0), 0u) << r.out;
}

TEST(Cli, Eventually) {
  Outcome r = invoke({"eventually", "corpus/worked.corec", "--fun", "filter", "--args", "repeat(1)"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out, "NotEventually (cycle: repeat(1))\n");
  Outcome ok = invoke({"eventually", "corpus/worked.corec", "--fun", "dyn", "--args", "1"});
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out.rfind("Holds (depth ", 0), 0u);
}

TEST(Cli, FuelFromEnvironment) {
  setenv("COREC_FUEL", "3", 1);
  Outcome r = invoke({"run", "corpus/worked.corec", "--expr", "nth(30, filter(from(0)))"});
  Outcome explicit_fuel = invoke({"run", "corpus/worked.corec", "--expr", "nth(30, filter(from(0)))", "--fuel", "10000"});
  unsetenv("COREC_FUEL");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out.rfind("NotEstablished", 0), 0u) << r.out;
  EXPECT_EQ(explicit_fuel.out, "60\n");
  EXPECT_EQ(default_fuel(), kDefaultFuel);
}

TEST(Cli, InfiniteBisimEqcheck) {
  EXPECT_EQ(invoke({"infinite", "corpus/worked.corec", "--fun", "filter", "--args", "from(0)"}).out,
            "BoundedVerified (20 steps)\n");
  EXPECT_EQ(invoke({"infinite", "corpus/worked.corec", "--fun", "filter", "--args", "repeat(1)"}).code, 1);
  Outcome b = invoke({"bisim", "corpus/worked.corec", "--lhs", "filter(from(0))", "--rhs", "evens(0)"});
  EXPECT_EQ(b.code, 0);
  EXPECT_EQ(b.out, "Bisimilar (depth 20)\n");
  EXPECT_EQ(invoke({"bisim", "corpus/worked.corec", "--lhs", "from(0)", "--rhs", "evens(0)"}).code, 1);
  Outcome e = invoke({"eqcheck", "corpus/worked.corec", "--fun", "e_filter", "--args", "tree(0)", "--depth", "8"});
  EXPECT_EQ(e.code, 0) << e.out;
}

TEST(Cli, TransformSummary) {
  Outcome r = invoke({"transform", "corpus/worked.corec", "--fun", "e_filter"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("eventually_e_filter (4 constructors)"), std::string::npos);
  EXPECT_NE(r.out.find("e_filter_step4"), std::string::npos);
}

TEST(Cli, EmitWritesVernacularAndSidecar) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "corec_cli_emit";
  fs::create_directories(dir);
  fs::copy_file(fs::path(COREC_SOURCE_DIR) / "corpus/filter.corec", dir / "filter.corec",
                fs::copy_options::overwrite_existing);
  Outcome r = invoke({"emit", (dir / "filter.corec").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(test::read_file("tests/golden/filter.v"), [&] {
    std::ifstream in(dir / "filter.v", std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }());
  EXPECT_TRUE(fs::exists(dir / "filter.report.json"));
  Outcome j = invoke({"emit", "--json", "-o", (dir / "x.v").string(), (dir / "filter.corec").string()});
  EXPECT_EQ(j.out, test::read_file("tests/golden/filter.report.json"));
  fs::remove_all(dir);
}

TEST(Cli, UsageAndParseErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"run", "corpus/worked.corec"}).code, 2);
  EXPECT_EQ(invoke({"check", "/nonexistent/x.corec"}).code, 2);
  EXPECT_EQ(invoke({"eventually", "corpus/worked.corec", "--fun", "nope", "--args", "1"}).code, 2);
  EXPECT_EQ(invoke({"eventually", "corpus/worked.corec", "--fun", "dyn", "--args", "1, 2"}).code, 2);
  EXPECT_EQ(invoke({"run", "corpus/worked.corec", "--expr", "nth(0, "}).code, 2);
  EXPECT_EQ(invoke({"check", "--help"}).code, 0);
}
