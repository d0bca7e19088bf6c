// ansnse: run / exponents / verify / decompose.
//
// Exit codes: 0 success, 1 usage or config, 2 blow-up, 3 regression or
// failed check, 4 precondition.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ansnse/config.hpp"
#include "ansnse/diagnostics.hpp"
#include "ansnse/exponents.hpp"
#include "ansnse/inequality_lab.hpp"
#include "ansnse/run.hpp"
#include "ansnse/snapshot.hpp"

#ifndef ANSNSE_VERSION
#define ANSNSE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace ansnse;

namespace {

enum Exit { kOk = 0, kUsage = 1, kBlowUp = 2, kRegression = 3, kPrecondition = 4 };

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Write to a sibling temp file, then rename over the target.
void write_atomically(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw FormatError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cmd_run(const std::string& config_path) {
  const std::string start = utc_now();
  const RunConfigFile cfg = load_run_config(config_path);
  const auto& out = cfg.outputs;
  ensure_parent(out.csv);
  std::ofstream csv(out.csv, std::ios::trunc);
  if (!csv) throw ConfigError("outputs.csv: cannot open " + out.csv.string());
  write_csv_header(csv, cfg.solver.q_list);

  std::vector<std::string> snapshots;
  RunObserver obs;
  std::size_t rows = 0;
  obs.on_record = [&](const DiagnosticsRecord& r) {
    write_csv_row(csv, r);
    csv.flush();
    ++rows;
  };
  if (cfg.solver.snapshots_every > 0) {
    fs::create_directories(out.snapshot_dir);
    obs.on_snapshot = [&](long step, const SolverState& s) {
      char name[64];
      std::snprintf(name, sizeof name, "u_%08ld.ansf", step);
      const fs::path p = out.snapshot_dir / name;
      write_snapshot(p, s.u);
      snapshots.push_back(p.string());
    };
  }

  Json manifest = {{"tool", "ansnse"},
                   {"version", ANSNSE_VERSION},
                   {"command", "run"},
                   {"config_path", config_path},
                   {"config", cfg.raw},
                   {"start_time", start}};
  int status = kOk;
  try {
    const RunResult res = run(cfg.solver, obs);
    manifest["final_time"] = res.final_state.t;
    manifest["steps"] = res.steps;
    manifest["sup_d3u_L3_2"] = res.sup_borderline;
    std::cout << "completed " << res.steps << " steps to t=" << res.final_state.t << ", " << rows
              << " records -> " << out.csv.string() << "\n";
  } catch (const BlowUpError& e) {
    status = kBlowUp;
    manifest["blow_up"] = {{"message", e.what()}, {"last_good_time", e.time()}};
    std::cerr << "blow-up: " << e.what() << " (" << rows << " records flushed)\n";
  }
  csv.close();
  manifest["end_time"] = utc_now();
  manifest["outputs"] = {{"csv", out.csv.string()}, {"manifest", out.manifest.string()}, {"snapshots", snapshots}};
  manifest["records"] = rows;
  manifest["exit_status"] = status;
  write_atomically(out.manifest, manifest.dump(2) + "\n");
  return status;
}

std::vector<Rational> expand_range(const std::string& spec) {
  // lo:hi:step, lo inclusive, hi exclusive.
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() != 3) throw FormatError("--range expects lo:hi:step");
  const Rational lo = parse_rational(parts[0]), hi = parse_rational(parts[1]), step = parse_rational(parts[2]);
  if (step <= 0) throw FormatError("--range step must be positive");
  std::vector<Rational> out;
  for (Rational q = lo; q < hi; q += step) out.push_back(q);
  return out;
}

Json validation_json(const ValidationReport& r) {
  Json j = {{"q", to_string(r.q)}, {"degenerate", r.degenerate}, {"passed", r.all_passed()}};
  if (r.recovered_p) j["recovered_p"] = to_string(*r.recovered_p);
  if (r.exponents) {
    const auto& e = *r.exponents;
    j["exponents"] = {{"p", e.p.str()},
                      {"s", to_string(e.s)},
                      {"one_minus_s", to_string(1 - e.s)},
                      {"kappa", to_string(e.kappa)},
                      {"a", to_string(e.a)},
                      {"five_a", to_string(5 * e.a)},
                      {"b", e.b.str()},
                      {"theta", to_string(e.theta)},
                      {"total_d3u_exponent", to_string(total_d3u_exponent(e))},
                      {"D", to_string(dissipation_exponent(e))},
                      {"a_at_least_two", e.a_at_least_two}};
  } else {
    j["p"] = to_string(serrin_pair(r.q));
  }
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"lhs", to_string(c.lhs)}, {"rhs", to_string(c.rhs)}, {"passed", c.passed()}});
  }
  j["checks"] = checks;
  return j;
}

void print_table(const std::vector<ValidationReport>& reports) {
  std::cout << std::left;
  const int w = 12;
  for (const char* h : {"q", "p", "s", "1-s", "kappa", "a", "5a", "b", "theta", "d3u_exp", "D", "status"}) {
    std::cout << std::setw(w) << h;
  }
  std::cout << "\n";
  for (const auto& r : reports) {
    auto cell = [&](const std::string& s) { std::cout << std::setw(w) << s << (s.size() >= std::size_t(w) ? " " : ""); };
    cell(to_string(r.q));
    if (r.exponents) {
      const auto& e = *r.exponents;
      cell(e.p.str());
      cell(to_string(e.s));
      cell(to_string(1 - e.s));
      cell(to_string(e.kappa));
      cell(to_string(e.a));
      cell(to_string(5 * e.a));
      cell(e.b.str());
      cell(to_string(e.theta));
      cell(to_string(total_d3u_exponent(e)));
      cell(to_string(dissipation_exponent(e)));
    } else {
      cell(to_string(serrin_pair(r.q)));
      for (int i = 0; i < 9; ++i) cell("-");
    }
    std::string status = r.all_passed() ? "pass" : "FAIL";
    if (r.degenerate) status += ",degenerate";
    if (r.exponents && r.exponents->a_at_least_two) status += ",a>=2";
    cell(status);
    std::cout << "\n";
    for (const auto& c : r.checks) {
      if (!c.passed()) std::cout << "  " << c.name << ": " << to_string(c.lhs) << " != " << to_string(c.rhs) << "\n";
    }
    if (r.recovered_p) std::cout << "  recovered p = " << to_string(*r.recovered_p) << "\n";
  }
}

int cmd_exponents(const std::vector<std::string>& qs, const std::string& range, const std::string& format) {
  std::vector<Rational> values;
  for (const auto& s : qs) values.push_back(parse_rational(s));
  if (!range.empty()) {
    const auto more = expand_range(range);
    values.insert(values.end(), more.begin(), more.end());
  }
  if (values.empty()) throw FormatError("give at least one q or --range");
  std::vector<ValidationReport> reports;
  for (const auto& q : values) reports.push_back(validate_identities(q));
  bool ok = true;
  for (const auto& r : reports) ok = ok && r.all_passed();
  if (format == "json") {
    Json arr = Json::array();
    for (const auto& r : reports) arr.push_back(validation_json(r));
    std::cout << arr.dump(2) << "\n";
  } else {
    print_table(reports);
  }
  return ok ? kOk : kRegression;
}

int cmd_verify(const std::string& path, const std::string& report_override, bool update_baseline) {
  SuiteConfigFile cfg = load_suite_config(path);
  const fs::path report_path = report_override.empty() ? cfg.outputs.report : fs::path(report_override);
  const auto t0 = std::chrono::steady_clock::now();
  const auto reports = run_suite(cfg.suite);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_atomically(report_path, reports_json(reports).dump(2) + "\n");
  for (const auto& r : reports) {
    std::cout << lemma_name(r.lemma) << " " << param_key(r.lemma) << "=" << r.param.label() << ": max "
              << format_number(r.max_ratio) << ", mean " << format_number(r.mean_ratio) << ", "
              << r.ratios.size() << " samples, " << r.n_degenerate << " degenerate";
    if (r.param.baseline) std::cout << ", baseline " << format_number(*r.param.baseline);
    std::cout << "\n";
  }
  std::cout << "report -> " << report_path.string() << " (" << secs << " s)\n";
  if (update_baseline) {
    Json raw = cfg.raw;
    for (std::size_t k = 0; k < reports.size(); ++k) raw["params"][k]["baseline"] = reports[k].max_ratio;
    write_atomically(path, raw.dump(2) + "\n");
    std::cout << "baselines updated in " << path << "\n";
    return kOk;
  }
  const auto regressions = find_regressions(reports);
  for (const auto& g : regressions) {
    std::cerr << "regression: " << g.param << ": " << g.reason << " (max " << format_number(g.max_ratio)
              << " > " << format_number(g.limit) << ")\n";
  }
  return regressions.empty() ? kOk : kRegression;
}

int cmd_decompose(const std::string& path) {
  const VectorField3 u = to_vector_field(read_snapshot(path));
  if (!u.is_finite()) throw InvalidFieldError("snapshot holds non-finite samples");
  const double div = relative_divergence(u);
  std::cout << "divergence " << format_number(div) << "\n";
  const auto rec = reconstruct_uh(u);  // PreconditionError when not solenoidal
  std::cout << "residual " << format_number(rec.residual) << "\n";
  return rec.residual < 1e-8 ? kOk : kRegression;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral Navier-Stokes regularity diagnostics"};
  app.set_version_flag("--version", ANSNSE_VERSION);
  app.require_subcommand(1);

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "integrate a JSON-configured run, writing CSV diagnostics and a manifest");
  run_cmd->add_option("config", run_config, "run config (JSON)")->required();

  std::vector<std::string> qs;
  std::string range, format = "table";
  auto* exp_cmd = app.add_subcommand("exponents", "exact exponent sets and identity checks");
  exp_cmd->add_option("q", qs, "exponents as rational literals, e.g. 3/2");
  exp_cmd->add_option("--range", range, "lo:hi:step, lo inclusive, hi exclusive (rationals)");
  exp_cmd->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}));

  std::string suite_config, report_path;
  bool update_baseline = false;
  auto* verify_cmd = app.add_subcommand("verify", "run an inequality suite and compare with its baselines");
  verify_cmd->add_option("config", suite_config, "suite config (JSON)")->required();
  verify_cmd->add_option("--report", report_path, "report path (overrides outputs.report)");
  verify_cmd->add_flag("--update-baseline", update_baseline, "store the measured max ratios as baselines");

  std::string snapshot;
  auto* dec_cmd = app.add_subcommand("decompose", "check the horizontal-velocity reconstruction on a snapshot");
  dec_cmd->add_option("snapshot", snapshot, "field snapshot (ANSF)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_config);
    if (*exp_cmd) return cmd_exponents(qs, range, format);
    if (*verify_cmd) return cmd_verify(suite_config, report_path, update_baseline);
    if (*dec_cmd) return cmd_decompose(snapshot);
  } catch (const PreconditionError& e) {
    std::cerr << "precondition: " << e.what() << "\n";
    return kPrecondition;
  } catch (const BlowUpError& e) {
    std::cerr << "blow-up: " << e.what() << "\n";
    return kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
