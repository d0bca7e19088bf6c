// Acceptance suite: one PASS/FAIL line per primary criterion.
//
//   acceptance                       run every criterion
//   acceptance --write-gronwall PATH recalibrate C on the reference run
//
// Exit status is 1 when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ansnse/config.hpp"
#include "ansnse/diagnostics.hpp"
#include "ansnse/exponents.hpp"
#include "ansnse/inequality_lab.hpp"
#include "ansnse/run.hpp"

namespace fs = std::filesystem;
using namespace ansnse;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS " : "FAIL ") << name << " | " << detail << std::endl;
}

void note(const std::string& text) { std::cout << "     " << text << std::endl; }

fs::path source(const std::string& rel) { return fs::path(ANSNSE_SOURCE_DIR) / rel; }

// ---------------------------------------------------------------------------

void exponent_fidelity() {
  const auto t0 = Clock::now();
  const ExponentSet e = j2_exponents(rat(3, 2));
  const auto l22 = lemma22_exponents(e.b.value());
  std::vector<std::string> bad;
  auto expect = [&](const char* what, const Rational& got, const Rational& want) {
    if (got != want) bad.push_back(std::string(what) + "=" + to_string(got));
  };
  expect("a", e.a, rat(144, 85));
  expect("5a", 5 * e.a, rat(144, 17));
  expect("b", e.b.value(), rat(18));
  expect("s", e.s, rat(4, 9));
  expect("1-s", 1 - e.s, rat(5, 9));
  expect("d3u exponent", total_d3u_exponent(e), rat(9, 5));
  expect("lemma22 s", l22.s, rat(4, 9));
  expect("lemma22 a", l22.a, rat(3, 2));
  const double lib = seconds_since(t0);

  // the same numbers through the command line
  const auto t1 = Clock::now();
  const fs::path out = fs::temp_directory_path() / "ansnse_acceptance_exponents.txt";
  const std::string cmd = std::string("'") + ANSNSE_CLI + "' exponents 3/2 > '" + out.string() + "'";
  const int rc = std::system(cmd.c_str());
  const double cli = seconds_since(t1);
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  for (const char* v : {"144/85", "144/17", "18", "4/9", "5/9", "9/5"}) {
    if (ss.str().find(v) == std::string::npos) bad.push_back(std::string("cli output lacks ") + v);
  }
  const bool ok = bad.empty() && rc == 0 && cli < 1.0;
  std::string detail = "a=144/85 5a=144/17 b=18 s=4/9 1-s=5/9 d3u=9/5; library " + num(lib) + " s, cli " + num(cli) + " s";
  for (const auto& b : bad) detail += "; " + b;
  report("exponent fidelity", ok, detail);
}

void identity_suite() {
  const auto t0 = Clock::now();
  int passed = 0, total = 0, recovered = 0;
  bool degenerate_ok = false;
  for (int k = 1; k <= 499; ++k) {
    const Rational q = rat(3, 2) + rat(k, 1000);
    const auto r = validate_identities(q);
    ++total;
    if (r.all_passed()) ++passed;
    if (r.recovered_p && *r.recovered_p == 2 * q / (2 * q - 3)) ++recovered;
  }
  int iv_passed = 0;
  for (int q = 2; q <= 6; ++q) {
    const auto r = validate_identities(rat(q));
    ++total;
    if (r.all_passed()) ++passed, ++iv_passed;
    if (r.recovered_p && *r.recovered_p == rat(2 * q, 2 * q - 3)) ++recovered;
  }
  const auto border = validate_identities(rat(3, 2));
  degenerate_ok = border.degenerate && border.all_passed() && dissipation_exponent(*border.exponents) == 2;
  const double secs = seconds_since(t0);
  const bool ok = passed == total && recovered == total && iv_passed == 5 && degenerate_ok && secs < 5.0;
  report("identity suite", ok,
         std::to_string(passed) + "/" + std::to_string(total) + " q pass, Young recovery exact for " +
             std::to_string(recovered) + "/" + std::to_string(total) + ", D=2 at q=3/2: " +
             (degenerate_ok ? "yes" : "no") + ", " + num(secs) + " s");
}

void decomposition() {
  const auto t0 = Clock::now();
  const Grid g = make_grid(32);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ShellSpectrum spec;
    spec.kmin = 1;
    spec.kmax = 10;
    spec.seed = seed;
    worst = std::max(worst, reconstruct_uh(random_solenoidal(g, spec)).residual);
  }
  const double tg = reconstruct_uh(taylor_green(g)).residual;
  const double secs = seconds_since(t0);
  report("decomposition identity", worst < 1e-10 && tg < 1e-10 && secs < 30.0,
         "max residual over 20 random fields " + num(worst) + ", taylor-green " + num(tg) + ", " + num(secs) + " s");
}

void spectral_operators() {
  const Grid g = make_grid(32);
  double sup = 0.0;
  auto track = [&](const ScalarField& a, const ScalarField& b) { sup = std::max(sup, (a - b).max_abs()); };
  const auto sx = ScalarField::sample(g, [](double x, double, double) { return std::sin(3 * x); });
  const auto cx = ScalarField::sample(g, [](double x, double, double) { return 3 * std::cos(3 * x); });
  track(derivative(sx, 0), cx);
  const auto c2 = ScalarField::sample(g, [](double, double y, double z) { return std::cos(2 * y) * std::sin(z); });
  track(derivative(c2, 1), ScalarField::sample(g, [](double, double y, double z) { return -2 * std::sin(2 * y) * std::sin(z); }));
  track(laplacian(c2), c2.scaled(-5.0));
  track(apply_multiplier(c2, MultiplierSpec::full(1.0)), c2.scaled(std::sqrt(5.0)));
  track(apply_multiplier(c2, MultiplierSpec::full(-1.5)), c2.scaled(std::pow(5.0, -0.75)));
  track(apply_multiplier(c2, MultiplierSpec::horizontal(2.0)), c2.scaled(4.0));
  track(apply_multiplier(c2, MultiplierSpec::vertical(0.5)), c2);
  track(derivative(c2, 2), apply_multiplier(c2, MultiplierSpec::derivative(2)));

  ShellSpectrum spec;
  spec.kmax = 10;
  spec.seed = 3;
  const ScalarField f = random_scalar(g, spec);
  double direct = 0.0;
  for (double v : f.values()) direct += v * v;
  direct *= g.cell_volume();
  const double parseval = std::abs(spectral_l2_squared(g, f.spectrum()) - direct) / direct;

  const VectorField3 v(f, derivative(f, 0), f * f);
  const VectorField3 pv = leray_project(v);
  const double idem = lp_norm(leray_project(pv) - pv, kInfinity);
  report("spectral operators", sup < 1e-12 && parseval < 1e-10 && idem < 1e-12,
         "single-mode sup error " + num(sup) + ", parseval " + num(parseval) + ", leray idempotence " + num(idem));
}

// ---------------------------------------------------------------------------
// Taylor-Green runs shared by the solver, balance and Gronwall criteria.

struct TgRun {
  RunResult result;
  double max_rel_div = 0.0;
  double secs = 0.0;
};

SolverConfig tg_config(double dt, double t_end, double amplitude = 1.0) {
  SolverConfig c;
  c.grid = make_grid(32);
  c.dt = dt;
  c.t_end = t_end;
  c.initial.amplitude = amplitude;
  c.q_list = {1.75, 2.0, 3.0, 6.0};
  return c;
}

TgRun tg_run(const SolverConfig& c) {
  TgRun out;
  SolverConfig cfg = c;
  cfg.snapshots_every = 1;
  RunObserver obs;
  obs.on_snapshot = [&](long, const SolverState& s) {
    out.max_rel_div = std::max(out.max_rel_div, relative_divergence(s.u));
  };
  const auto t0 = Clock::now();
  out.result = run(cfg, obs);
  out.secs = seconds_since(t0);
  return out;
}

VectorField3 final_velocity(double dt, double t_end, double amplitude) {
  SolverState s{0.0, taylor_green(make_grid(32), amplitude)};
  const long n = std::lround(t_end / dt);
  for (long i = 0; i < n; ++i) s = step(s, dt);
  return s.u;
}

void solver(const TgRun& ref, double ref_secs_extra) {
  const auto t0 = Clock::now();
  const auto& rec = ref.result.records;
  bool monotone = true;
  for (std::size_t i = 1; i < rec.size(); ++i) monotone = monotone && rec[i].kinetic_energy <= rec[i - 1].kinetic_energy;

  const VectorField3 a = final_velocity(2e-3, 0.5, 1.0), b = final_velocity(1e-3, 0.5, 1.0), c = final_velocity(5e-4, 0.5, 1.0);
  const double e1 = lp_norm(a - b, 2.0), e2 = lp_norm(b - c, 2.0);
  const double order = std::log2(e1 / e2);
  const double secs = ref.secs + ref_secs_extra + seconds_since(t0);
  const bool ok = monotone && ref.max_rel_div < 1e-10 && order >= 3.8 && secs < 300.0;
  report("solver", ok,
         std::string("energy monotone: ") + (monotone ? "yes" : "no") + " over " + std::to_string(rec.size()) +
             " records, max div/|u| " + num(ref.max_rel_div) + ", order " + num(order) + " (|u_2e-3 - u_1e-3| = " +
             num(e1) + ", |u_1e-3 - u_5e-4| = " + num(e2) + "), " + num(secs) + " s");
  if (order < 3.8) {
    // Both differences sit at round-off, so the slope is noise. The same
    // three-run study with the temporal error lifted above round-off:
    const VectorField3 a10 = final_velocity(2e-3, 0.1, 10.0), b10 = final_velocity(1e-3, 0.1, 10.0),
                       c10 = final_velocity(5e-4, 0.1, 10.0);
    note("amplitude 1 differences are at double round-off; amplitude 10, t=0.1 gives order " +
         num(std::log2(lp_norm(a10 - b10, 2.0) / lp_norm(b10 - c10, 2.0))));
  }
}

std::array<double, 5> max_residuals(const RunResult& r) {
  std::array<double, 5> m{};
  for (const auto& rec : r.records)
    for (std::size_t i = 0; i < 5; ++i)
      if (std::isfinite(rec.residuals[i])) m[i] = std::max(m[i], rec.residuals[i]);
  return m;
}

std::vector<SolverState> trajectory(const VectorField3& u0, double dt, int steps) {
  std::vector<SolverState> out{{0.0, u0}};
  for (int n = 0; n < steps; ++n) out.push_back(step(out.back(), dt));
  return out;
}

void balance(const TgRun& ref, const TgRun& fine) {
  const auto coarse_max = max_residuals(ref.result), fine_max = max_residuals(fine.result);
  bool ok = true;
  std::string detail;
  for (auto id : kBalanceIdentities) {
    const auto i = static_cast<std::size_t>(id);
    const double order = std::log2(coarse_max[i] / fine_max[i]);
    ok = ok && coarse_max[i] < 1e-5 && order >= 1.8;
    detail += std::string(identity_name(id)) + " " + num(coarse_max[i]) + " (order " + num(order) + "); ";
  }

  // Flows whose production terms vanish identically.
  const Grid g = make_grid(32);
  const VectorField3 shear(ScalarField::sample(g, [](double, double, double z) { return std::sin(z); }),
                           ScalarField::zeros(g), ScalarField::zeros(g));
  const VectorField3 planar(ScalarField::sample(g, [](double, double y, double) { return -std::sin(y); }),
                            ScalarField::sample(g, [](double x, double, double) { return std::sin(x); }),
                            ScalarField::zeros(g));
  double prod = 0.0, zero_res = 0.0, shear_d3u = 0.0;
  for (const auto* u0 : {&shear, &planar}) {
    const auto traj = trajectory(*u0, 1e-3, 4);
    for (const auto& s : traj) prod = std::max(prod, production_integrals(s.u).max_abs());
    std::vector<BalanceIdentity> both_zero = {BalanceIdentity::u3sq, BalanceIdentity::u3_94};
    if (u0 == &shear) both_zero.push_back(BalanceIdentity::omega3);
    if (u0 == &planar) both_zero.push_back(BalanceIdentity::d3u);
    for (auto id : both_zero)
      for (double r : balance_residual(traj, id)) zero_res = std::max(zero_res, r);
    if (u0 == &shear)
      for (double r : balance_residual(traj, BalanceIdentity::d3u)) shear_d3u = std::max(shear_d3u, r);
  }
  ok = ok && prod < 1e-12 && zero_res < 1e-12;
  detail += "zero-production flows: max |production| " + num(prod) + ", residual where both sides vanish " +
            num(zero_res) + " (shear d3u, time-discretization only: " + num(shear_d3u) + ")";
  report("balance identities", ok, detail);

  // d/dt int u3^4 changes sign once on the reference run; near that time both
  // sides pass through zero and the relative residual spikes. Show where.
  for (auto id : {BalanceIdentity::u3sq, BalanceIdentity::u3_94}) {
    const auto i = static_cast<std::size_t>(id);
    const auto& rc = ref.result.records;
    std::size_t peak = 0;
    for (std::size_t k = 0; k < rc.size(); ++k)
      if (std::isfinite(rc[k].residuals[i]) && rc[k].residuals[i] > rc[peak].residuals[i]) peak = k;
    const double tp = rc[peak].t;
    auto away = [&](const RunResult& r) {
      double m = 0.0;
      for (const auto& rec : r.records)
        if (std::abs(rec.t - tp) > 0.02 && std::isfinite(rec.residuals[i])) m = std::max(m, rec.residuals[i]);
      return m;
    };
    const double a = away(ref.result), b = away(fine.result);
    note(std::string(identity_name(id)) + " peaks at t = " + num(tp) + "; outside |t - " + num(tp) +
         "| <= 0.02 the max is " + num(a) + " (order " + num(std::log2(a / b)) + ")");
  }
}

Json reference_calibration(const RunResult& ref) {
  Json c = Json::object();
  for (double q : {1.75, 2.0, 3.0, 6.0}) c[format_q(q)] = calibrate_gronwall(ref.records, q);
  return {{"reference", {{"initial", "taylor_green"}, {"amplitude", 1.0}, {"n", 32}, {"dt", 1e-3}, {"t_end", 0.5}}},
          {"C", c}};
}

void gronwall(const TgRun& ref) {
  const fs::path path = source("configs/gronwall-calibration.json");
  if (!fs::exists(path)) {
    report("gronwall monitor", false, "missing " + path.string());
    return;
  }
  const Json cal = read_json(path);
  bool ok = true;
  std::string detail;
  for (double q : {1.75, 2.0, 3.0, 6.0}) {
    const double C = cal.at("C").at(format_q(q)).get<double>();
    const auto res = gronwall_monitor(ref.result.records, q, C);
    ok = ok && !res.violated;
    detail += "q=" + format_q(q) + " C=" + num(C) + (res.violated ? " violated; " : " holds; ");
  }
  // planar flow: d3u = 0, so the bound is E_k(0) for every C
  const Grid g = make_grid(32);
  const VectorField3 planar(ScalarField::sample(g, [](double, double y, double) { return -std::sin(y); }),
                            ScalarField::sample(g, [](double x, double, double) { return std::sin(x); }),
                            ScalarField::zeros(g));
  const std::vector<double> qs = {1.75, 2.0, 3.0, 6.0};
  std::vector<DiagnosticsRecord> recs;
  for (const auto& s : trajectory(planar, 1e-3, 20)) recs.push_back(instantaneous_record(s, qs));
  int margin_violations = 0;
  for (double q : qs) {
    const double C = cal.at("C").at(format_q(q)).get<double>();
    const auto res = gronwall_monitor(recs, q, C);
    for (std::size_t i = 0; i < res.bound.size(); ++i) {
      if (res.bound[i] != res.functional_values.front() || res.functional_values[i] > res.bound[i]) ++margin_violations;
    }
    ok = ok && !res.violated;
  }
  ok = ok && margin_violations == 0;
  detail += "planar flow: constant bound E_k(0), " + std::to_string(margin_violations) + " violations";
  report("gronwall monitor", ok, detail);
}

void inequality_suites() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const char* name : {"lemma21", "lemma22", "lemma24", "hardy"}) {
    const auto cfg = load_suite_config(source(std::string("configs/") + name + "-suite.json"));
    const auto reports = run_suite(cfg.suite);
    for (const auto& r : reports) {
      bool finite = true;
      for (double v : r.ratios) finite = finite && std::isfinite(v);
      bool within = true;
      std::string bound;
      if (r.lemma == LemmaId::hardy) {
        const double limit = hardy_constant(to_double(r.param.value)) * kHardySlack;
        within = r.max_ratio <= limit;
        bound = "<= " + num(limit);
      } else if (r.param.baseline) {
        within = r.max_ratio <= kBaselineTolerance * *r.param.baseline;
        bound = "baseline " + num(*r.param.baseline);
      } else {
        within = false;
        bound = "no baseline";
      }
      ok = ok && finite && within && r.n_degenerate == 0;
      detail += std::string(name) + "[" + r.param.label() + "] max " + num(r.max_ratio) + " " + bound +
                (finite && within ? "" : " !") + "; ";
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 180.0;
  report("inequality suites", ok, detail + num(secs) + " s");
}

void scale_invariance() {
  const Grid g = make_grid(32);
  double worst = 0.0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b) / std::abs(b)); };
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    ShellSpectrum spec;
    spec.kmax = 6;
    spec.seed = seed;
    spec.admissible_only = true;
    const VectorField3 u = random_solenoidal(g, spec);
    const ScalarField f = random_scalar(g, spec);
    const RadialProfile p = random_hardy_profile(seed, kHardyPoints);
    for (double lambda : {1e-3, 1e3}) {
      for (double r : {1.5, 2.0, 3.0, 6.0})
        for (int order : {1, 2}) track(check_lemma21(u.scaled(lambda), r, order), check_lemma21(u, r, order));
      for (const Rational& b : {rat(22, 3), rat(10), rat(18)}) track(check_lemma22(f.scaled(lambda), b), check_lemma22(f, b));
      for (double q : {2.0, 3.0})
        for (auto v : {Lemma24Variant::cubic, Lemma24Variant::quintic})
          track(check_lemma24(f.scaled(lambda), q, v), check_lemma24(f, q, v));
      RadialProfile ps = p;
      for (auto& x : ps.values) x *= lambda;
      for (double q : {2.0, 3.0, 4.0}) track(check_hardy(ps, q), check_hardy(p, q));
    }
  }
  report("scale invariance", worst < 1e-10, "max relative change over lambda in {1e-3, 1e3}: " + num(worst));
}

}  // namespace

int main(int argc, char** argv) {
  std::cout.setf(std::ios::unitbuf);
  try {
    if (argc == 3 && std::string(argv[1]) == "--write-gronwall") {
      const TgRun ref = tg_run(tg_config(1e-3, 0.5));
      std::ofstream(argv[2]) << reference_calibration(ref.result).dump(2) << "\n";
      std::cout << "wrote " << argv[2] << "\n";
      return 0;
    }
    exponent_fidelity();
    identity_suite();
    decomposition();
    spectral_operators();
    const auto t0 = Clock::now();
    const TgRun ref = tg_run(tg_config(1e-3, 0.5));
    const TgRun fine = tg_run(tg_config(5e-4, 0.5));
    solver(ref, 0.0);
    note("reference run " + num(ref.secs) + " s, refined run " + num(fine.secs) + " s, setup " + num(seconds_since(t0)) + " s");
    balance(ref, fine);
    gronwall(ref);
    inequality_suites();
    scale_invariance();
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted | " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
