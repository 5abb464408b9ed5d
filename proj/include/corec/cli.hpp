#pragma once

// Command-line driver: classification table, transformation summary,
// vernacular emission, observations and the bounded checks.
// Exit codes: 0 success, 1 negative verdict, 2 usage or input errors.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "corec/ast.hpp"
#include "corec/emit.hpp"
#include "corec/eval.hpp"
#include "corec/guardedness.hpp"
#include "corec/parser.hpp"
#include "corec/report.hpp"
#include "corec/transform.hpp"

namespace corec {

inline constexpr std::uint64_t kDefaultFuel = 10000;
inline constexpr std::size_t kDefaultDepth = 20;
inline constexpr std::size_t kDefaultSteps = 20;

struct CliConfig {
  std::string subcommand;
  std::string input;
  std::string fun;
  std::string expr;
  std::string args;
  std::string lhs;
  std::string rhs;
  std::uint64_t fuel = kDefaultFuel;
  std::size_t depth = kDefaultDepth;
  std::size_t steps = kDefaultSteps;
  std::string output;
  bool json = false;
  bool strict = false;
};

/// Default fuel, overridden by COREC_FUEL when it holds a positive integer.
inline std::uint64_t default_fuel() {
  if (const char* env = std::getenv("COREC_FUEL")) {
    try {
      std::size_t used = 0;
      unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size() && v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return kDefaultFuel;
}

namespace cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Program load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

inline const FunDef& find_fun(const Program& prog, const std::string& name) {
  const FunDef* f = prog.find_fun(name);
  if (!f) throw UsageError("no fun or cofun named '" + name + "'");
  return *f;
}

inline std::vector<Term> fun_args(const Program& prog, const FunDef& f, const std::string& text) {
  std::vector<Term> args = text.empty() ? std::vector<Term>{} : parse_term_list(text, prog);
  if (args.size() != f.params.size())
    throw UsageError("'" + f.name + "' expects " + std::to_string(f.params.size()) + " argument(s), got " +
                     std::to_string(args.size()));
  for (std::size_t i = 0; i < args.size(); ++i)
    if (!(args[i].type == f.params[i].type))
      throw UsageError("argument " + std::to_string(i + 1) + " of '" + f.name + "' must have type " +
                       to_string(f.params[i].type));
  return args;
}

inline std::string join_terms(const std::vector<Term>& ts) {
  std::string s;
  for (std::size_t i = 0; i < ts.size(); ++i) s += (i ? ", " : "") + to_string(ts[i]);
  return s;
}

inline void print_json(std::ostream& out, const Json& j) { out << j.dump(2) << "\n"; }

inline Json verdict_json(const std::string& verdict, const std::string& detail) {
  Json j;
  j["verdict"] = verdict;
  j["detail"] = detail;
  return j;
}

/// Prints `Verdict (detail)` or its JSON form.
inline void print_verdict(std::ostream& out, const CliConfig& cfg, const std::string& verdict,
                          const std::string& detail) {
  if (cfg.json) {
    print_json(out, verdict_json(verdict, detail));
    return;
  }
  out << verdict;
  if (!detail.empty()) out << " (" << detail << ")";
  out << "\n";
}

// ---- check -----------------------------------------------------------------

inline int check(const CliConfig& cfg, std::ostream& out) {
  Program prog = load(cfg.input);
  bool rejected = false;
  struct Row {
    std::string name, kind, verdict;
  };
  std::vector<Row> rows;
  std::vector<std::string> notes;
  for (const auto& d : prog.order) {
    if (d.kind == DeclKind::Rec) {
      const RecFunDef& r = prog.recs[d.index];
      StructuralVerdict v = check_structural(r);
      rows.push_back({r.name, "rec", v.accepted ? "Accepted" : "Rejected"});
      if (!v.accepted) {
        rejected = true;
        notes.push_back(to_string(v.offending->pos) + ": " + r.name + ": " + v.reason);
      }
    } else if (d.kind == DeclKind::Fun) {
      const FunDef& f = prog.funs[d.index];
      Classification c = classify_function(f);
      rows.push_back({f.name, f.kind == FunKind::Cofun ? "cofun" : "fun", to_string(c.verdict)});
      if (!c.transformable()) rejected = true;
      for (const auto& diag : c.diagnostics) notes.push_back(f.name + ": " + diag);
    }
  }
  if (cfg.json) {
    print_json(out, report_json(prog));
  } else {
    std::size_t wn = 4, wk = 4;
    for (const auto& r : rows) {
      wn = std::max(wn, r.name.size());
      wk = std::max(wk, r.kind.size());
    }
    auto line = [&](const std::string& a, const std::string& b, const std::string& c) {
      out << a << std::string(wn - a.size() + 2, ' ') << b << std::string(wk - b.size() + 2, ' ') << c << "\n";
    };
    line("name", "kind", "verdict");
    for (const auto& r : rows) line(r.name, r.kind, r.verdict);
    if (!notes.empty()) {
      out << "\n";
      for (const auto& n : notes) out << n << "\n";
    }
  }
  return cfg.strict && rejected ? 1 : 0;
}

// ---- transform ---------------------------------------------------------------

inline void describe(std::ostream& out, const TransformArtifacts& a) {
  auto list = [&](const std::string& label, const std::vector<std::string>& names) {
    out << "  " << label << ":";
    for (const auto& n : names) out << " " << n;
    out << "\n";
  };
  out << a.source->name << ": " << to_string(a.classification.verdict) << "\n";
  std::vector<std::string> ctors;
  for (const auto& c : a.eventually.ctors) ctors.push_back(c.name);
  out << "  eventually: " << a.eventually.name << " (" << ctors.size() << " constructors)\n";
  list("constructors", ctors);
  std::vector<std::string> invs;
  for (const auto& i : a.inversions) invs.push_back(i.name);
  list("inversions", invs);
  out << "  inductive component: " << a.pre.name << " (" << a.pre.shapes.size() << " shape"
      << (a.pre.shapes.size() == 1 ? "" : "s") << ")\n";
  out << "  infinite: " << a.infinite.name << " (constructor " << a.infinite.ctor << ")\n";
  std::vector<std::string> always;
  for (const auto& l : a.lemmas.infinite_always) always.push_back(l.name);
  list("infinite lemmas", {a.lemmas.infinite_eventually.name});
  list("infinite_always lemmas", always);
  out << "  guarded: " << a.guarded.name << "\n";
  list("irrelevance", {a.lemmas.pre_irrelevant.name, a.lemmas.fun_irrelevant.name});
  std::vector<std::string> steps;
  for (const auto& s : a.lemmas.steps) steps.push_back(s.name);
  list("step lemmas", steps);
  out << "  equation: " << a.lemmas.equation.name << "\n";
}

inline int transform_cmd(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  Program prog = load(cfg.input);
  std::vector<const FunDef*> targets;
  if (!cfg.fun.empty()) {
    targets.push_back(&find_fun(prog, cfg.fun));
  } else {
    for (const auto& f : prog.funs)
      if (classify_function(f).verdict == Verdict::TransformableUnguarded) targets.push_back(&f);
  }
  Json defs = Json::array();
  int code = 0;
  for (const FunDef* f : targets) {
    Classification cls = classify_function(*f);
    try {
      TransformArtifacts a = transform(*f);
      if (cfg.json)
        defs.push_back(report_entry(*f, cls, &a));
      else
        describe(out, a);
    } catch (const NotTransformable& e) {
      err << f->name << ": " << e.what() << "\n";
      if (cfg.json) defs.push_back(report_entry(*f, cls, nullptr));
      code = 1;
    }
  }
  if (cfg.json) {
    Json j;
    j["definitions"] = std::move(defs);
    print_json(out, j);
  }
  return code;
}

// ---- emit --------------------------------------------------------------------

inline int emit_cmd(const CliConfig& cfg, std::ostream& out) {
  Program prog = load(cfg.input);
  namespace fs = std::filesystem;
  fs::path in(cfg.input);
  EmitOptions opts;
  opts.source_name = in.filename().string();
  std::string text = emit(prog, opts);
  std::string report = emit_report(prog);
  if (cfg.output == "-") {
    out << text;
    if (cfg.json) out << report;
    return 0;
  }
  fs::path v = cfg.output.empty() ? fs::path(in).replace_extension(".v") : fs::path(cfg.output);
  std::ofstream vf(v, std::ios::binary);
  if (!vf) throw UsageError("cannot write '" + v.string() + "'");
  vf << text;
  if (cfg.json) {
    out << report;
    return 0;
  }
  fs::path r = fs::path(v).replace_extension(".report.json");
  std::ofstream rf(r, std::ios::binary);
  if (!rf) throw UsageError("cannot write '" + r.string() + "'");
  rf << report;
  out << "wrote " << v.string() << " and " << r.string() << "\n";
  return 0;
}

// ---- observations and checks -----------------------------------------------

inline int run_cmd(const CliConfig& cfg, std::ostream& out) {
  Program prog = load(cfg.input);
  Observation obs = parse_observation(cfg.expr, prog);
  Evaluator ev(prog);
  Fuel fuel(cfg.fuel);
  try {
    Value v = ev.instantiate(obs.term);
    auto lazy = [&]() -> LazyValue {
      if (!std::holds_alternative<LazyValue>(v)) throw UsageError("the observed expression is not codata");
      return std::get<LazyValue>(v);
    };
    std::string result;
    switch (obs.kind) {
      case Observation::Kind::Value:
        if (!std::holds_alternative<BaseValue>(v))
          throw UsageError("the expression denotes codata; observe it with nth, take or fetch");
        result = to_string(std::get<BaseValue>(v));
        break;
      case Observation::Kind::Nth: result = to_string(ev.observe_nth(lazy(), obs.count, fuel)); break;
      case Observation::Kind::Take: {
        for (const auto& x : ev.take(lazy(), obs.count, fuel)) result += (result.empty() ? "" : " ") + to_string(x);
        break;
      }
      case Observation::Kind::Fetch: {
        Fetched f = ev.observe_fetch(lazy(), obs.path, fuel);
        result = to_string(f.payload);
        break;
      }
    }
    if (cfg.json) {
      Json j;
      j["value"] = result;
      j["fuel_used"] = fuel.used();
      print_json(out, j);
    } else {
      out << result << "\n";
    }
    return 0;
  } catch (const EvalError& e) {
    std::string verdict = to_string(e.kind());
    print_verdict(out, cfg, verdict, e.detail());
    return 1;
  }
}

inline int eventually_cmd(const CliConfig& cfg, std::ostream& out) {
  Program prog = load(cfg.input);
  const FunDef& f = find_fun(prog, cfg.fun);
  std::vector<Term> args = fun_args(prog, f, cfg.args);
  Evaluator ev(prog);
  Fuel fuel(cfg.fuel);
  EventuallyResult r = ev.decide_eventually(f, ev.instantiate(args), fuel);
  std::string detail = r.kind == EventuallyResult::Kind::Holds
                           ? "depth " + std::to_string(r.certificate.depth)
                           : r.witness;
  print_verdict(out, cfg, to_string(r.kind), detail);
  return r.kind == EventuallyResult::Kind::Holds ? 0 : 1;
}

inline int infinite_cmd(const CliConfig& cfg, std::ostream& out) {
  Program prog = load(cfg.input);
  const FunDef& f = find_fun(prog, cfg.fun);
  std::vector<Term> args = fun_args(prog, f, cfg.args);
  Evaluator ev(prog);
  InfiniteVerdict r = ev.check_infinite(f, ev.instantiate(args), cfg.steps, cfg.fuel);
  std::string detail = r.kind == InfiniteVerdict::Kind::BoundedVerified ? std::to_string(r.steps) + " steps"
                                                                         : "step " + std::to_string(r.steps) + ": " + r.witness;
  print_verdict(out, cfg, to_string(r.kind), detail);
  return r.kind == InfiniteVerdict::Kind::BoundedVerified ? 0 : 1;
}

inline int bisim_cmd(const CliConfig& cfg, std::ostream& out) {
  Program prog = load(cfg.input);
  Term lhs = parse_term(cfg.lhs, prog);
  Term rhs = parse_term(cfg.rhs, prog);
  if (!lhs.type.is_codata() || !(lhs.type == rhs.type))
    throw UsageError("--lhs and --rhs must be codata terms of the same type");
  Evaluator ev(prog);
  Fuel fuel(cfg.fuel);
  try {
    BisimResult r = bisimilar_to_depth(ev, std::get<LazyValue>(ev.instantiate(lhs)),
                                       std::get<LazyValue>(ev.instantiate(rhs)), cfg.depth, fuel);
    switch (r.kind) {
      case BisimResult::Kind::Equal:
        print_verdict(out, cfg, "Bisimilar", "depth " + std::to_string(cfg.depth));
        return 0;
      case BisimResult::Kind::Different:
        print_verdict(out, cfg, "Different", "at " + to_string(r.at) + ": " + r.detail);
        return 1;
      case BisimResult::Kind::Unknown:
        print_verdict(out, cfg, "Unknown", "at " + to_string(r.at) + ": " + r.detail);
        return 1;
    }
  } catch (const EvalError& e) {
    print_verdict(out, cfg, to_string(e.kind()), e.detail());
  }
  return 1;
}

inline int eqcheck_cmd(const CliConfig& cfg, std::ostream& out) {
  Program prog = load(cfg.input);
  const FunDef& f = find_fun(prog, cfg.fun);
  std::vector<Term> args = fun_args(prog, f, cfg.args);
  EquationResult r = check_equation(prog, f, args, cfg.depth, cfg.fuel);
  std::string detail = r.kind == EquationResult::Kind::Bisimilar
                           ? "depth " + std::to_string(cfg.depth)
                           : (r.position.empty() ? "" : "at " + to_string(r.position) + ": ") + r.detail;
  print_verdict(out, cfg, to_string(r.kind), detail);
  return r.kind == EquationResult::Kind::Bisimilar ? 0 : 1;
}

}  // namespace cli

/// Runs the driver on `args` (without the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  cfg.fuel = default_fuel();
  CLI::App app{"Guardedness analysis, transformation and evaluation of .corec programs", "corec"};
  app.require_subcommand(1);

  auto positive = CLI::PositiveNumber;
  auto common = [&](CLI::App* sub, bool eval_opts) {
    sub->add_option("file", cfg.input, "input .corec file")->required();
    sub->add_flag("--json", cfg.json, "machine-readable output");
    if (eval_opts) {
      sub->add_option("--fuel", cfg.fuel, "evaluation step budget (default 10000, or COREC_FUEL)")->check(positive);
      sub->add_option("--depth", cfg.depth, "bisimulation depth")->check(positive);
      sub->add_option("--steps", cfg.steps, "layers checked by infinite")->check(positive);
    }
  };

  auto* check = app.add_subcommand("check", "classify every definition");
  common(check, false);
  check->add_flag("--strict", cfg.strict, "exit 1 when a definition is rejected");

  auto* transform = app.add_subcommand("transform", "summarize the generated artifacts");
  common(transform, false);
  transform->add_option("--fun", cfg.fun, "only this function");

  auto* emit = app.add_subcommand("emit", "write vernacular and the JSON report");
  common(emit, false);
  emit->add_option("-o,--output", cfg.output, "output .v path, or - for standard output");

  auto* run = app.add_subcommand("run", "evaluate an observation");
  common(run, true);
  run->add_option("--expr", cfg.expr, "nth(N, E), take(N, E), fetch([L,R,...], E) or a base term")->required();

  auto* eventually = app.add_subcommand("eventually", "decide whether a call reaches a guarded clause");
  common(eventually, true);
  eventually->add_option("--fun", cfg.fun)->required();
  eventually->add_option("--args", cfg.args, "comma-separated argument terms");

  auto* infinite = app.add_subcommand("infinite", "check productivity layer by layer");
  common(infinite, true);
  infinite->add_option("--fun", cfg.fun)->required();
  infinite->add_option("--args", cfg.args, "comma-separated argument terms");

  auto* bisim = app.add_subcommand("bisim", "compare two codata terms to a depth");
  common(bisim, true);
  bisim->add_option("--lhs", cfg.lhs)->required();
  bisim->add_option("--rhs", cfg.rhs)->required();

  auto* eqcheck = app.add_subcommand("eqcheck", "check the recursive equation of a transformed function");
  common(eqcheck, true);
  eqcheck->add_option("--fun", cfg.fun)->required();
  eqcheck->add_option("--args", cfg.args, "comma-separated argument terms");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (cfg.subcommand == "check") return cli::check(cfg, out);
    if (cfg.subcommand == "transform") return cli::transform_cmd(cfg, out, err);
    if (cfg.subcommand == "emit") return cli::emit_cmd(cfg, out);
    if (cfg.subcommand == "run") return cli::run_cmd(cfg, out);
    if (cfg.subcommand == "eventually") return cli::eventually_cmd(cfg, out);
    if (cfg.subcommand == "infinite") return cli::infinite_cmd(cfg, out);
    if (cfg.subcommand == "bisim") return cli::bisim_cmd(cfg, out);
    if (cfg.subcommand == "eqcheck") return cli::eqcheck_cmd(cfg, out);
  } catch (const ParseError& e) {
    for (const auto& d : e.diagnostics()) err << cfg.input << ":" << to_string(d) << "\n";
    if (e.diagnostics().empty()) err << e.what() << "\n";
    return 2;
  } catch (const cli::UsageError& e) {
    err << "corec: " << e.what() << "\n";
    return 2;
  } catch (const EvalError& e) {
    err << "corec: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace corec
