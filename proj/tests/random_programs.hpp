#pragma once

// Random unguarded-but-transformable definitions, written as source text so
// that every generated program also goes through the parser.

#include <random>
#include <string>
#include <vector>

namespace corec::test {

struct RandomProgram {
  std::string source;
  std::string fun;
  std::vector<std::string> args;  // argument lists to try, in the term syntax
  std::string family;
};

inline const char* random_prelude() {
  return "codata Stream = SCons(nat, #)\n"
         "codata ETree = A_node(nat, #) | B_node(nat, #, #)\n"
         "cofun repeat(a: nat): Stream = SCons(a, repeat(a))\n"
         "cofun from(n: nat): Stream = SCons(n, from(n + 1))\n"
         "cofun evens(n: nat): Stream = SCons(n, evens(n + 2))\n"
         "cofun h3(t: ETree): ETree\n"
         "  | A_node(a, t1) => A_node(a + 1, t1)\n"
         "  | B_node(b, t1, t2) => B_node(b + 1, t2, t1)\n"
         "cofun tree(n: nat): ETree = B_node(n, A_node(n + 1, tree(n + 2)), tree(n + 3))\n";
}

class ProgramGenerator {
 public:
  explicit ProgramGenerator(unsigned seed) : rng_(seed) {}

  RandomProgram next() {
    switch (pick(0, 5)) {
      case 0: return dyn_like();
      case 1: return countdown();
      case 2: return filter_like();
      case 3: return bump_filter();
      case 4: return pairwise();
      default: return tree_filter();
    }
  }

  unsigned pick(unsigned lo, unsigned hi) { return std::uniform_int_distribution<unsigned>(lo, hi)(rng_); }

 private:
  std::string n(unsigned lo, unsigned hi) { return std::to_string(pick(lo, hi)); }

  std::string nat_payload(const std::string& x) {
    switch (pick(0, 3)) {
      case 0: return x;
      case 1: return x + " + " + n(0, 9);
      case 2: return x + " * " + n(1, 3);
      default: return x + " / " + n(1, 3);
    }
  }

  std::string stream_source() {
    switch (pick(0, 2)) {
      case 0: return "from(" + n(0, 20) + ")";
      case 1: return "evens(" + n(0, 20) + ")";
      default: return "repeat(" + n(0, 12) + ")";
    }
  }

  // Guard selecting the productive branch; the modulus keeps it reachable
  // from most starting points.
  std::string guard(const std::string& x) {
    switch (pick(0, 2)) {
      case 0: return x + " mod " + n(2, 5) + " == " + n(0, 1);
      case 1: return x + " mod " + n(2, 4) + " != 1";
      default: return "(" + x + " / " + n(1, 3) + ") mod " + n(2, 3) + " == 0";
    }
  }

  RandomProgram dyn_like() {
    RandomProgram p;
    p.family = "dyn";
    p.fun = "r";
    std::string src = random_prelude();
    src += "fun r(x: nat): Stream\n";
    src += "  | x when " + guard("x") + " => SCons(" + nat_payload("x") + ", r(x + " + n(1, 4) + "))\n";
    if (pick(0, 1)) src += "  | x when x mod " + n(5, 7) + " == 0 => r(x + " + n(1, 3) + ")\n";
    src += "  | x => r(x + " + n(1, 3) + ")\n";
    p.source = src;
    for (int i = 0; i < 3; ++i) p.args.push_back(n(0, 30));
    return p;
  }

  RandomProgram countdown() {
    RandomProgram p;
    p.family = "countdown";
    p.fun = "r";
    std::string src = random_prelude();
    std::string reset = n(1, 9);
    src += "fun r(x: nat): Stream\n";
    src += "  | 0 => SCons(" + n(0, 5) + ", r(" + reset + "))\n";
    if (pick(0, 1)) src += "  | S(y) when y mod 2 == 0 => SCons(y, r(y))\n";
    src += "  | S(y) => r(y" + std::string(pick(0, 1) ? " - 1" : "") + ")\n";
    p.source = src;
    for (int i = 0; i < 3; ++i) p.args.push_back(n(0, 25));
    return p;
  }

  RandomProgram filter_like() {
    RandomProgram p;
    p.family = "filter";
    p.fun = "r";
    std::string src = random_prelude();
    src += "fun r(s: Stream): Stream\n";
    std::string out = nat_payload("x");
    switch (pick(0, 2)) {
      case 0: src += "  | SCons(x, tl) when " + guard("x") + " => SCons(" + out + ", r(tl))\n"; break;
      case 1: src += "  | SCons(x, tl) when " + guard("x") + " => SCons(" + out + ", SCons(x, r(tl)))\n"; break;
      default:
        src += "  | SCons(x, tl) when x > " + n(40, 60) + " => SCons(x, tl)\n";
        src += "  | SCons(x, tl) when " + guard("x") + " => SCons(" + out + ", r(tl))\n";
        break;
    }
    src += "  | SCons(x, tl) => r(tl)\n";
    p.source = src;
    for (int i = 0; i < 3; ++i) p.args.push_back(stream_source());
    return p;
  }

  RandomProgram bump_filter() {
    RandomProgram p;
    p.family = "bump";
    p.fun = "r";
    std::string src = random_prelude();
    src += "fun r(s: Stream): Stream\n";
    src += "  | SCons(x, tl) when " + guard("x") + " => SCons(" + nat_payload("x") + ", r(tl))\n";
    src += "  | SCons(x, tl) => r(SCons(x + " + n(1, 3) + ", tl))\n";
    p.source = src;
    for (int i = 0; i < 3; ++i) p.args.push_back(stream_source());
    return p;
  }

  RandomProgram pairwise() {
    RandomProgram p;
    p.family = "pairwise";
    p.fun = "r";
    std::string src = random_prelude();
    src += "fun r(s: Stream): Stream\n";
    src += "  | SCons(x, SCons(y, tl)) when x <= y => SCons(" + nat_payload("x") + ", r(SCons(y, tl)))\n";
    src += "  | SCons(x, SCons(y, tl)) => r(SCons(x - " + n(1, 3) + ", SCons(y, tl)))\n";
    p.source = src;
    for (int i = 0; i < 3; ++i) p.args.push_back(stream_source());
    return p;
  }

  RandomProgram tree_filter() {
    RandomProgram p;
    p.family = "tree";
    p.fun = "r";
    std::string src = random_prelude();
    src += "fun r(t: ETree): ETree\n";
    src += "  | A_node(a, t1) when " + guard("a") + " => A_node(" + nat_payload("a") + ", r(A_node(a + " + n(1, 2) +
           ", t1)))\n";
    src += "  | A_node(a, t1) => r(h3(A_node(a, t1)))\n";
    switch (pick(0, 1)) {
      case 0:
        src += "  | B_node(b, t1, t2) when " + guard("b") + " => A_node(" + nat_payload("b") + ", r(B_node(b + 1, t1, t2)))\n";
        break;
      default: src += "  | B_node(b, t1, t2) when " + guard("b") + " => B_node(b, r(t1), r(t2))\n"; break;
    }
    src += "  | B_node(b, t1, t2) => r(h3(B_node(b, t1, t2)))\n";
    p.source = src;
    for (int i = 0; i < 3; ++i) {
      switch (pick(0, 2)) {
        case 0: p.args.push_back("tree(" + n(0, 10) + ")"); break;
        case 1: p.args.push_back("A_node(" + n(0, 9) + ", tree(" + n(0, 9) + "))"); break;
        default: p.args.push_back("B_node(" + n(0, 9) + ", tree(" + n(0, 5) + "), tree(" + n(0, 5) + "))"); break;
      }
    }
    return p;
  }

  std::mt19937 rng_;
};

}  // namespace corec::test
