#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <span>
#include <string>

#include "json.hpp"

#include "ansnse/error.hpp"
#include "ansnse/exponents.hpp"
#include "ansnse/inequality_lab.hpp"
#include "ansnse/run.hpp"

// JSON schemas of the run and suite configs, and of suite reports.

namespace ansnse {

using Json = nlohmann::json;

struct OutputSpec {
  std::filesystem::path csv = "diagnostics.csv";
  std::filesystem::path manifest = "manifest.json";
  std::filesystem::path snapshot_dir = "snapshots";
  std::filesystem::path report = "report.json";  // suites only
};

struct RunConfigFile {
  SolverConfig solver;
  OutputSpec outputs;
  Json raw;
};

struct SuiteConfigFile {
  SuiteConfig suite;
  OutputSpec outputs;
  Json raw;
};

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& where, std::set<std::string> known) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown key");
  }
}

inline double get_number(const Json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

inline long long get_integer(const Json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<long long>();
}

// Numbers or "n/d" strings.
inline Rational get_rational(const Json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number()) {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw FormatError("non-finite");
      return Rational(d);  // exact binary value
    }
  } catch (const FormatError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ": expected a number or a \"n/d\" string");
}

inline Grid parse_grid(const Json& g) {
  reject_unknown(g, "grid", {"n", "L"});
  if (!g.contains("n")) throw ConfigError("grid.n: missing");
  std::array<int, 3> n{};
  const auto& jn = g.at("n");
  if (jn.is_number_integer()) {
    n.fill(jn.get<int>());
  } else if (jn.is_array() && jn.size() == 3) {
    for (int i = 0; i < 3; ++i) {
      if (!jn[i].is_number_integer()) throw ConfigError("grid.n: expected integers");
      n[i] = jn[i].get<int>();
    }
  } else {
    throw ConfigError("grid.n: expected three integers");
  }
  const double L = g.contains("L") ? get_number(g, "L", "grid.L") : 2.0 * std::numbers::pi;
  try {
    return Grid(n, L);
  } catch (const InvalidGridError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

}  // namespace detail

inline RunConfigFile parse_run_config(const Json& j) {
  using namespace detail;
  reject_unknown(j, "", {"grid", "dt", "t_end", "cadence", "cfl_limit", "initial", "q_list", "outputs",
                         "test_hooks"});
  RunConfigFile out;
  out.raw = j;
  SolverConfig& c = out.solver;
  for (const char* key : {"grid", "dt", "t_end"}) {
    if (!j.contains(key)) throw ConfigError(std::string(key) + ": missing");
  }
  c.grid = parse_grid(j.at("grid"));
  c.dt = get_number(j, "dt", "dt");
  c.t_end = get_number(j, "t_end", "t_end");
  if (j.contains("cadence")) c.cadence = static_cast<int>(get_integer(j, "cadence", "cadence"));
  if (j.contains("cfl_limit") && !j.at("cfl_limit").is_null()) {
    c.cfl_limit = get_number(j, "cfl_limit", "cfl_limit");
  }
  if (j.contains("initial")) {
    const Json& ini = j.at("initial");
    reject_unknown(ini, "initial", {"type", "amplitude", "seed", "kmin", "kmax", "slope", "path"});
    const std::string type = ini.value("type", std::string("taylor_green"));
    if (type == "taylor_green" || type == "taylor-green") {
      c.initial.type = InitialKind::taylor_green;
    } else if (type == "random_solenoidal" || type == "random-solenoidal") {
      c.initial.type = InitialKind::random_solenoidal;
    } else if (type == "snapshot") {
      c.initial.type = InitialKind::snapshot;
      if (!ini.contains("path")) throw ConfigError("initial.path: missing for snapshot input");
    } else {
      throw ConfigError("initial.type: unknown value '" + type + "'");
    }
    if (ini.contains("amplitude")) c.initial.amplitude = get_number(ini, "amplitude", "initial.amplitude");
    if (ini.contains("seed")) {
      const long long s = get_integer(ini, "seed", "initial.seed");
      if (s < 0) throw ConfigError("initial.seed: must be >= 0");
      c.initial.seed = static_cast<std::uint64_t>(s);
    }
    if (ini.contains("kmin")) c.initial.kmin = static_cast<int>(get_integer(ini, "kmin", "initial.kmin"));
    if (ini.contains("kmax")) c.initial.kmax = static_cast<int>(get_integer(ini, "kmax", "initial.kmax"));
    if (ini.contains("slope")) c.initial.slope = get_number(ini, "slope", "initial.slope");
    if (ini.contains("path")) c.initial.path = ini.at("path").get<std::string>();
    if (!(c.initial.amplitude > 0.0) || !std::isfinite(c.initial.amplitude)) {
      throw ConfigError("initial.amplitude: must be positive");
    }
  }
  if (j.contains("q_list")) {
    const Json& ql = j.at("q_list");
    if (!ql.is_array()) throw ConfigError("q_list: expected an array");
    c.q_list.clear();
    for (const auto& q : ql) c.q_list.push_back(to_double(get_rational(q, "q_list")));
  }
  if (j.contains("outputs")) {
    const Json& o = j.at("outputs");
    reject_unknown(o, "outputs", {"csv", "manifest", "snapshots_every", "snapshot_dir"});
    if (o.contains("csv")) out.outputs.csv = o.at("csv").get<std::string>();
    if (o.contains("manifest")) out.outputs.manifest = o.at("manifest").get<std::string>();
    if (o.contains("snapshot_dir")) out.outputs.snapshot_dir = o.at("snapshot_dir").get<std::string>();
    if (o.contains("snapshots_every")) {
      c.snapshots_every = static_cast<int>(get_integer(o, "snapshots_every", "outputs.snapshots_every"));
    }
  }
  if (j.contains("test_hooks")) {
    const Json& h = j.at("test_hooks");
    reject_unknown(h, "test_hooks", {"inject_nan_at_step"});
    if (h.contains("inject_nan_at_step")) {
      c.inject_nan_at_step = static_cast<int>(get_integer(h, "inject_nan_at_step", "test_hooks.inject_nan_at_step"));
    }
  }
  validate(c);
  return out;
}

inline RunConfigFile load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json(path));
}

inline const char* param_key(LemmaId id) {
  switch (id) {
    case LemmaId::lemma21: return "r";
    case LemmaId::lemma22: return "b";
    default: return "q";
  }
}

inline SuiteConfigFile parse_suite_config(const Json& j) {
  using namespace detail;
  reject_unknown(j, "", {"lemma", "params", "n_samples", "generator", "seed", "outputs"});
  SuiteConfigFile out;
  out.raw = j;
  SuiteConfig& c = out.suite;
  if (!j.contains("lemma") || !j.at("lemma").is_string()) throw ConfigError("lemma: missing");
  c.lemma = parse_lemma(j.at("lemma").get<std::string>());
  if (!j.contains("n_samples")) throw ConfigError("n_samples: missing");
  c.n_samples = static_cast<int>(get_integer(j, "n_samples", "n_samples"));
  if (j.contains("seed")) {
    const long long s = get_integer(j, "seed", "seed");
    if (s < 0) throw ConfigError("seed: must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (!j.contains("params") || !j.at("params").is_array()) throw ConfigError("params: expected an array");
  const std::string key = param_key(c.lemma);
  for (const auto& p : j.at("params")) {
    reject_unknown(p, "params[]", {key, "order", "variant", "baseline"});
    if (!p.contains(key)) throw ConfigError("params." + key + ": missing");
    SuiteParam sp;
    sp.value = get_rational(p.at(key), "params." + key);
    if (p.contains("order")) sp.order = static_cast<int>(get_integer(p, "order", "params.order"));
    if (p.contains("variant")) {
      const std::string v = p.at("variant").get<std::string>();
      if (v == "cubic") {
        sp.variant = Lemma24Variant::cubic;
      } else if (v == "quintic") {
        sp.variant = Lemma24Variant::quintic;
      } else {
        throw ConfigError("params.variant: unknown value '" + v + "'");
      }
    }
    if (p.contains("baseline") && !p.at("baseline").is_null()) {
      sp.baseline = get_number(p, "baseline", "params.baseline");
    }
    c.params.push_back(sp);
  }
  if (j.contains("generator")) {
    const Json& g = j.at("generator");
    reject_unknown(g, "generator", {"n", "kmin", "kmax", "slope", "hardy_points"});
    if (g.contains("n")) c.generator.n = static_cast<int>(get_integer(g, "n", "generator.n"));
    if (g.contains("kmin")) c.generator.kmin = static_cast<int>(get_integer(g, "kmin", "generator.kmin"));
    if (g.contains("kmax")) c.generator.kmax = static_cast<int>(get_integer(g, "kmax", "generator.kmax"));
    if (g.contains("slope")) c.generator.slope = get_number(g, "slope", "generator.slope");
    if (g.contains("hardy_points")) {
      const long long hp = get_integer(g, "hardy_points", "generator.hardy_points");
      if (hp < 8) throw ConfigError("generator.hardy_points: must be >= 8");
      c.generator.hardy_points = static_cast<std::size_t>(hp);
    }
  }
  if (j.contains("outputs")) {
    const Json& o = j.at("outputs");
    reject_unknown(o, "outputs", {"report"});
    if (o.contains("report")) out.outputs.report = o.at("report").get<std::string>();
  }
  try {
    detail::validate_suite(c);
  } catch (const AdmissibilityError& e) {
    throw ConfigError(std::string("params.b: ") + e.what());
  }
  return out;
}

inline SuiteConfigFile load_suite_config(const std::filesystem::path& path) {
  return parse_suite_config(read_json(path));
}

inline Json generator_json(const InequalityReport& r) {
  if (r.lemma == LemmaId::hardy) {
    return {{"kind", "radial_quartic"}, {"points", r.generator.hardy_points}, {"R", 1.0}};
  }
  return {{"kind", r.lemma == LemmaId::lemma21 ? "random_solenoidal" : "random_scalar"},
          {"n", r.generator.n},
          {"kmin", r.generator.kmin},
          {"kmax", r.generator.kmax},
          {"slope", r.generator.slope},
          {"admissible_only", true}};
}

inline Json params_json(const InequalityReport& r) {
  Json p = {{param_key(r.lemma), to_string(r.param.value)}};
  if (r.lemma == LemmaId::lemma21) p["order"] = r.param.order;
  if (r.lemma == LemmaId::lemma24) p["variant"] = r.param.variant == Lemma24Variant::cubic ? "cubic" : "quintic";
  if (r.lemma == LemmaId::lemma22) {
    const auto ex = lemma22_exponents(r.param.value);
    p["s"] = to_string(ex.s);
    p["a"] = to_string(ex.a);
  }
  return p;
}

inline Json report_json(const InequalityReport& r) {
  return {{"lemma", lemma_name(r.lemma)},   {"params", params_json(r)},
          {"n_samples", r.n_samples},      {"n_degenerate", r.n_degenerate},
          {"max_ratio", r.max_ratio},      {"mean_ratio", r.mean_ratio},
          {"seed", r.seed},                {"generator", generator_json(r)},
          {"ratios", r.ratios}};
}

inline Json reports_json(std::span<const InequalityReport> reports) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr;
}

/// Allowed growth of a recorded max ratio before it counts as a regression.
inline constexpr double kBaselineTolerance = 1.05;
/// Quadrature slack on the sharp Hardy constant.
inline constexpr double kHardySlack = 1.01;

struct Regression {
  std::string param;
  double max_ratio;
  double limit;
  std::string reason;
};

inline std::vector<Regression> find_regressions(std::span<const InequalityReport> reports) {
  std::vector<Regression> out;
  for (const auto& r : reports) {
    for (double v : r.ratios) {
      if (!std::isfinite(v)) {
        out.push_back({r.param.label(), v, 0.0, "non-finite ratio"});
        break;
      }
    }
    if (r.param.baseline && r.max_ratio > kBaselineTolerance * *r.param.baseline) {
      out.push_back({r.param.label(), r.max_ratio, kBaselineTolerance * *r.param.baseline, "baseline exceeded"});
    }
    if (r.lemma == LemmaId::hardy) {
      const double limit = kHardySlack * hardy_constant(to_double(r.param.value));
      if (r.max_ratio > limit) out.push_back({r.param.label(), r.max_ratio, limit, "sharp constant exceeded"});
    }
  }
  return out;
}

}  // namespace ansnse
