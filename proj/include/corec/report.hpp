#pragma once

// Machine-readable verdicts: one record per recursive definition with its
// classified calls and, for transformable unguarded functions, the names and
// counts of the generated artifacts.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "corec/ast.hpp"
#include "corec/guardedness.hpp"
#include "corec/transform.hpp"

namespace corec {

using Json = nlohmann::ordered_json;

inline Json path_json(const Path& p) {
  Json a = Json::array();
  for (auto i : p) a.push_back(i);
  return a;
}

inline Json artifact_counts(const TransformArtifacts& a) {
  Json c = Json::object();
  c["eventually_constructors"] = a.eventually.ctors.size();
  c["inversion_lemmas"] = a.inversions.size();
  c["pre_branches"] = a.pre.branches.size();
  c["shapes"] = a.pre.shapes.size();
  c["infinite_constructors"] = 1;
  c["infinite_always_lemmas"] = a.lemmas.infinite_always.size();
  c["step_lemmas"] = a.lemmas.steps.size();
  return c;
}

/// Record for a corecursive definition; `artifacts` is set when it was transformed.
inline Json report_entry(const FunDef& fun, const Classification& cls, const TransformArtifacts* artifacts) {
  Json d;
  d["name"] = fun.name;
  d["kind"] = fun.kind == FunKind::Cofun ? "cofun" : "fun";
  d["verdict"] = to_string(cls.verdict);
  Json calls = Json::array();
  for (const auto& c : cls.calls) {
    Json j;
    j["clause"] = c.clause + 1;
    j["path"] = path_json(c.path);
    j["tag"] = to_string(c.tag);
    calls.push_back(std::move(j));
  }
  d["calls"] = std::move(calls);
  Json names = Json::array();
  if (artifacts)
    for (const auto& n : artifacts->names()) names.push_back(n);
  d["artifact_names"] = std::move(names);
  d["counts"] = artifacts ? artifact_counts(*artifacts) : Json::object();
  return d;
}

/// Record for a structurally recursive helper.
inline Json report_entry(const RecFunDef& rec, const StructuralVerdict& v) {
  Json d;
  d["name"] = rec.name;
  d["kind"] = "rec";
  d["verdict"] = v.accepted ? "Accepted" : "Rejected";
  Json calls = Json::array();
  for (const auto& c : v.calls) {
    bool offending = v.offending && v.offending->clause == c.clause && v.offending->path == c.path;
    Json j;
    j["clause"] = c.clause + 1;
    j["path"] = path_json(c.path);
    j["tag"] = v.accepted ? "Structural" : offending ? "NotStructural" : "Unchecked";
    calls.push_back(std::move(j));
  }
  d["calls"] = std::move(calls);
  d["artifact_names"] = Json::array();
  d["counts"] = Json::object();
  return d;
}

/// Every rec and fun/cofun of the program, in source order.
inline Json report_json(const Program& prog) {
  Json defs = Json::array();
  for (const auto& d : prog.order) {
    if (d.kind == DeclKind::Rec) {
      const RecFunDef& r = prog.recs[d.index];
      defs.push_back(report_entry(r, check_structural(r)));
    } else if (d.kind == DeclKind::Fun) {
      const FunDef& f = prog.funs[d.index];
      Classification cls = classify_function(f);
      std::optional<TransformArtifacts> art;
      if (cls.verdict == Verdict::TransformableUnguarded) {
        try {
          art = transform(f);
        } catch (const NotTransformable&) {
        }
      }
      defs.push_back(report_entry(f, cls, art ? &*art : nullptr));
    }
  }
  Json out;
  out["definitions"] = std::move(defs);
  return out;
}

inline std::string emit_report(const Program& prog) {
  Json j = report_json(prog);
  if (j["definitions"].empty()) return "{\"definitions\": []}\n";
  return j.dump(2) + "\n";
}

}  // namespace corec
