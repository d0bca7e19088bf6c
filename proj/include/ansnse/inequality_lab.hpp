#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ansnse/diagnostics.hpp"
#include "ansnse/error.hpp"
#include "ansnse/exponents.hpp"
#include "ansnse/initial_data.hpp"
#include "ansnse/solver.hpp"
#include "ansnse/spectral.hpp"

namespace ansnse {

/// Right-hand sides below this are rejected as degenerate samples.
inline constexpr double kDegenerateRhs = 1e-14;
/// Largest spectral energy fraction allowed on excluded planes.
inline constexpr double kExcludedEnergyFraction = 1e-12;

namespace detail {

inline double checked_ratio(double lhs, double rhs, const char* who) {
  if (!(rhs >= kDegenerateRhs)) {
    throw DegenerateSampleError(std::string(who) + ": right-hand side vanishes");
  }
  return lhs / rhs;
}

// Fraction of squared L2 norm carried by modes with xi_3 = 0 (and, when
// asked, by modes with xi_h = 0).
inline double excluded_fraction(const ScalarField& f, bool horizontal_too) {
  const Grid& g = f.grid();
  const Coefficients c = f.spectrum();
  const int h3 = g.half_n3();
  double total = 0.0, bad = 0.0;
  for_each_mode(g, [&](std::size_t idx, double k1, double k2, double k3) {
    const double e = hermitian_weight(g, static_cast<int>(idx % h3)) * std::norm(c[idx]);
    total += e;
    if (k3 == 0.0 || (horizontal_too && k1 == 0.0 && k2 == 0.0)) bad += e;
  });
  return total > 0.0 ? bad / total : 0.0;
}

inline void require_admissible(const ScalarField& f, bool horizontal_too, const char* who) {
  const double frac = excluded_fraction(f, horizontal_too);
  if (frac > kExcludedEnergyFraction) {
    throw InadmissibleFieldError(std::string(who) + ": " + std::to_string(frac) +
                                 " of the energy sits on excluded modes (" +
                                 (horizontal_too ? "xi_3 = 0 or xi_h = 0" : "xi_3 = 0") + ")");
  }
}

inline void check_lebesgue_interior(double r) {
  if (!(r > 1.0) || !std::isfinite(r)) throw InvalidExponentError("exponent must lie in (1, inf)");
}

}  // namespace detail

/// ||grad u^h||_r / (||d3 u||_r + ||w3||_r), or the second-order version
/// ||grad^2 u^h||_r / (||grad d3 u||_r + ||grad w3||_r).
inline double check_lemma21(const VectorField3& u, double r, int order = 1) {
  detail::check_lebesgue_interior(r);
  if (order != 1 && order != 2) throw PreconditionError("lemma21 order must be 1 or 2");
  require_solenoidal(u, "check_lemma21");
  const ScalarField w3 = vorticity3(u);
  std::vector<ScalarField> lhs, d3, dw;
  if (order == 1) {
    for (int h = 0; h < 2; ++h)
      for (int j = 0; j < 3; ++j) lhs.push_back(derivative(u[h], j));
    for (int c = 0; c < 3; ++c) d3.push_back(derivative(u[c], 2));
    dw.push_back(w3);
  } else {
    for (int h = 0; h < 2; ++h)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) lhs.push_back(derivative(derivative(u[h], i), j));
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < 3; ++j) d3.push_back(derivative(derivative(u[c], 2), j));
    for (int j = 0; j < 3; ++j) dw.push_back(derivative(w3, j));
  }
  const double rhs = lp_norm_magnitude(d3, r) + lp_norm_magnitude(dw, r);
  return detail::checked_ratio(lp_norm_magnitude(lhs, r), rhs, "check_lemma21");
}

/// ||f||_b / (||d3 f||_a^s ||grad^2 f||_2^{1-s}) with (s, a) from
/// lemma22_exponents(b).
inline double check_lemma22(const ScalarField& f, const Rational& b) {
  const auto ex = lemma22_exponents(b);
  detail::require_admissible(f, false, "check_lemma22");
  const double s = to_double(ex.s), a = to_double(ex.a);
  std::vector<ScalarField> hessian;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) hessian.push_back(derivative(derivative(f, i), j));
  const double rhs = std::pow(lp_norm(derivative(f, 2), a), s) *
                     std::pow(lp_norm_magnitude(hessian, 2.0), 1.0 - s);
  return detail::checked_ratio(lp_norm(f, to_double(b)), rhs, "check_lemma22");
}

enum class Lemma24Variant { cubic, quintic };

/// cubic:   ||f||_{3q} / (||d3 f||_q^{1/3} ||grad_h f||_2^{2/3})
/// quintic: ||f||_{5q} / (||d3 f||_q^{1/5} ||grad_h (f^2)||_2^{2/5})
inline double check_lemma24(const ScalarField& f, double q, Lemma24Variant variant) {
  if (!(q >= 1.0) || !std::isfinite(q)) throw InvalidExponentError("lemma24 needs 1 <= q < inf");
  detail::require_admissible(f, true, "check_lemma24");
  const double d3 = lp_norm(derivative(f, 2), q);
  const ScalarField f1 = derivative(f, 0), f2 = derivative(f, 1);
  if (variant == Lemma24Variant::cubic) {
    const std::array<ScalarField, 2> gh{f1, f2};
    const double rhs = std::cbrt(d3) * std::pow(lp_norm_magnitude(gh, 2.0), 2.0 / 3.0);
    return detail::checked_ratio(lp_norm(f, 3.0 * q), rhs, "check_lemma24");
  }
  // grad_h(f^2) = 2 f grad_h f, taken pointwise to avoid aliasing the square.
  const std::array<ScalarField, 2> gh{(f * f1).scaled(2.0), (f * f2).scaled(2.0)};
  const double rhs = std::pow(d3, 0.2) * std::pow(lp_norm_magnitude(gh, 2.0), 0.4);
  return detail::checked_ratio(lp_norm(f, 5.0 * q), rhs, "check_lemma24");
}

/// Samples of u^r at r_j = j R / N, j = 1..N.
struct RadialProfile {
  double R = 1.0;
  std::vector<double> values;

  double spacing() const { return R / static_cast<double>(values.size()); }
  double radius(std::size_t j) const { return static_cast<double>(j + 1) * spacing(); }

  template <class F>
  static RadialProfile sample(double R, std::size_t n, F&& fn) {
    RadialProfile p{R, std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) p.values[j] = fn(p.radius(j));
    return p;
  }
};

inline constexpr std::size_t kHardyPoints = 4096;

/// Sharp constant of the weighted Hardy inequality in the measure r dr.
inline double hardy_constant(double q) { return q / (2.0 * (q - 1.0)); }

namespace detail {

inline void validate_profile(const RadialProfile& p) {
  if (!(p.R > 0.0) || !std::isfinite(p.R)) throw InvalidProfileError("support radius must be positive");
  if (p.values.size() < 8) throw InvalidProfileError("profile needs at least 8 samples");
  double umax = 0.0;
  for (double v : p.values) {
    if (!std::isfinite(v)) throw InvalidProfileError("profile holds non-finite samples");
    umax = std::max(umax, std::abs(v));
  }
  if (umax == 0.0) return;  // degenerate, reported by the caller
  if (std::abs(p.values.back()) > 1e-12 * umax) throw InvalidProfileError("u^r(R) must vanish");
  // Linear vanishing at the axis: the linear extrapolation to r = 0 is ~0.
  if (std::abs(2.0 * p.values[0] - p.values[1]) > 1e-3 * umax) {
    throw InvalidProfileError("u^r must vanish linearly at the axis");
  }
}

}  // namespace detail

/// (int |u/r|^q r dr / int |d_r(r u)/r|^q r dr)^{1/q} by the trapezoid rule
/// on the profile grid, with centered differences for d_r(r u).
inline double check_hardy(const RadialProfile& profile, double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw InvalidExponentError("hardy check needs q > 1");
  detail::validate_profile(profile);
  const std::size_t n = profile.values.size();
  const double h = profile.spacing();
  // F_j = r_j u_j with F_0 = 0 at the axis.
  std::vector<double> F(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) F[j + 1] = profile.radius(j) * profile.values[j];
  double A = 0.0, B = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double r = static_cast<double>(j) * h;
    const double dF = j < n ? (F[j + 1] - F[j - 1]) / (2.0 * h)
                            : (3.0 * F[n] - 4.0 * F[n - 1] + F[n - 2]) / (2.0 * h);
    const double w = j < n ? 1.0 : 0.5;  // trapezoid; the r = 0 end contributes 0
    A += w * std::pow(std::abs(profile.values[j - 1] / r), q) * r;
    B += w * std::pow(std::abs(dF / r), q) * r;
  }
  A *= h;
  B *= h;
  if (!(B >= kDegenerateRhs)) throw DegenerateSampleError("check_hardy: right-hand side vanishes");
  return std::pow(A / B, 1.0 / q);
}

// ---------------------------------------------------------------------------
// Seeded suites.

enum class LemmaId { lemma21, lemma22, lemma24, hardy };

inline const char* lemma_name(LemmaId id) {
  switch (id) {
    case LemmaId::lemma21: return "lemma21";
    case LemmaId::lemma22: return "lemma22";
    case LemmaId::lemma24: return "lemma24";
    case LemmaId::hardy: return "hardy";
  }
  return "?";
}

inline LemmaId parse_lemma(const std::string& s) {
  if (s == "lemma21") return LemmaId::lemma21;
  if (s == "lemma22") return LemmaId::lemma22;
  if (s == "lemma24") return LemmaId::lemma24;
  if (s == "hardy") return LemmaId::hardy;
  throw ConfigError("lemma: unknown lemma id '" + s + "'");
}

/// One parameter point of a suite. `value` is r (lemma21), b (lemma22) or q.
struct SuiteParam {
  Rational value;
  int order = 1;                               // lemma21
  Lemma24Variant variant = Lemma24Variant::cubic;  // lemma24
  std::optional<double> baseline;              // recorded max ratio

  std::string label() const;
};

struct GeneratorSpec {
  int n = 32;
  int kmin = 1;
  int kmax = 6;
  double slope = -2.0;
  std::size_t hardy_points = kHardyPoints;
};

struct SuiteConfig {
  LemmaId lemma = LemmaId::lemma22;
  std::vector<SuiteParam> params;
  int n_samples = 100;
  GeneratorSpec generator;
  std::uint64_t seed = 0;
};

struct InequalityReport {
  LemmaId lemma = LemmaId::lemma22;
  SuiteParam param;
  int n_samples = 0;
  int n_degenerate = 0;
  std::vector<double> ratios;  // accepted samples, ascending sample index
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  GeneratorSpec generator;
  std::uint64_t seed = 0;
};

inline std::string SuiteParam::label() const {
  return to_string(value) + (order == 2 ? ",order=2" : "") +
         (variant == Lemma24Variant::quintic ? ",quintic" : "");
}

/// splitmix64 finalizer; per-sample seeds independent of thread layout.
inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Random profile u = r (1 - r/R) P(r/R), P a quartic with U[-1,1]
/// coefficients and P(0) kept away from 0.
inline RadialProfile random_hardy_profile(std::uint64_t seed, std::size_t points, double R = 1.0) {
  std::mt19937_64 rng(seed);
  std::array<double, 5> c{};
  for (auto& v : c) v = 2.0 * detail::uniform01(rng) - 1.0;
  c[0] = 0.5 + 0.5 * detail::uniform01(rng);
  return RadialProfile::sample(R, points, [&](double r) {
    const double x = r / R;
    double poly = 0.0;
    for (std::size_t m = c.size(); m-- > 0;) poly = poly * x + c[m];
    return r * (1.0 - x) * poly;
  });
}

inline unsigned suite_threads() {
  unsigned n = 0;
  if (const char* env = std::getenv("ANSNSE_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

namespace detail {

// Ratio of one sample for every parameter; NaN marks a degenerate sample.
inline std::vector<double> sample_ratios(const SuiteConfig& cfg, std::size_t index) {
  const std::uint64_t seed = sample_seed(cfg.seed, index);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out(cfg.params.size(), nan);
  auto guarded = [&](std::size_t k, auto&& fn) {
    try {
      out[k] = fn();
    } catch (const DegenerateSampleError&) {
    } catch (const InadmissibleFieldError&) {
    } catch (const DegenerateSpectrumError&) {
    }
  };
  if (cfg.lemma == LemmaId::hardy) {
    const RadialProfile p = random_hardy_profile(seed, cfg.generator.hardy_points);
    for (std::size_t k = 0; k < cfg.params.size(); ++k)
      guarded(k, [&] { return check_hardy(p, to_double(cfg.params[k].value)); });
    return out;
  }
  const Grid grid = make_grid(cfg.generator.n);
  ShellSpectrum spec;
  spec.kmin = cfg.generator.kmin;
  spec.kmax = cfg.generator.kmax;
  spec.slope = cfg.generator.slope;
  spec.seed = seed;
  spec.admissible_only = true;
  if (cfg.lemma == LemmaId::lemma21) {
    const VectorField3 u = random_solenoidal(grid, spec);
    for (std::size_t k = 0; k < cfg.params.size(); ++k)
      guarded(k, [&] { return check_lemma21(u, to_double(cfg.params[k].value), cfg.params[k].order); });
    return out;
  }
  const ScalarField f = random_scalar(grid, spec);
  for (std::size_t k = 0; k < cfg.params.size(); ++k) {
    const auto& p = cfg.params[k];
    if (cfg.lemma == LemmaId::lemma22) {
      guarded(k, [&] { return check_lemma22(f, p.value); });
    } else {
      guarded(k, [&] { return check_lemma24(f, to_double(p.value), p.variant); });
    }
  }
  return out;
}

inline void validate_suite(const SuiteConfig& cfg) {
  if (cfg.n_samples < 1) throw ConfigError("n_samples: must be >= 1");
  if (cfg.params.empty()) throw ConfigError("params: at least one parameter is required");
  for (const auto& p : cfg.params) {
    const double v = to_double(p.value);
    switch (cfg.lemma) {
      case LemmaId::lemma21:
        if (!(v > 1.0)) throw ConfigError("params.r: must lie in (1, inf)");
        if (p.order != 1 && p.order != 2) throw ConfigError("params.order: must be 1 or 2");
        break;
      case LemmaId::lemma22:
        lemma22_exponents(p.value);  // throws AdmissibilityError
        break;
      case LemmaId::lemma24:
        if (!(v >= 1.0)) throw ConfigError("params.q: must be >= 1");
        break;
      case LemmaId::hardy:
        if (!(v > 1.0)) throw ConfigError("params.q: must be > 1");
        break;
    }
  }
}

}  // namespace detail

/// Runs every parameter of a suite on the same seeded samples. Samples are
/// evaluated on up to ANSNSE_THREADS threads; reductions run in ascending
/// sample order so reports are bitwise reproducible.
inline std::vector<InequalityReport> run_suite(const SuiteConfig& cfg) {
  detail::validate_suite(cfg);
  const std::size_t n = static_cast<std::size_t>(cfg.n_samples);
  std::vector<std::vector<double>> per_sample(n);
  const unsigned workers = std::min<unsigned>(suite_threads(), static_cast<unsigned>(n));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&](unsigned id) {
    try {
      for (std::size_t i = id; i < n; i += workers) per_sample[i] = detail::sample_ratios(cfg, i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<InequalityReport> reports;
  for (std::size_t k = 0; k < cfg.params.size(); ++k) {
    InequalityReport rep;
    rep.lemma = cfg.lemma;
    rep.param = cfg.params[k];
    rep.n_samples = cfg.n_samples;
    rep.generator = cfg.generator;
    rep.seed = cfg.seed;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = per_sample[i][k];
      if (std::isnan(r)) {
        ++rep.n_degenerate;
        continue;
      }
      rep.ratios.push_back(r);
      rep.max_ratio = std::max(rep.max_ratio, r);
      sum += r;
    }
    if (rep.ratios.empty()) {
      throw EmptySuiteError(std::string(lemma_name(cfg.lemma)) + " " + rep.param.label() +
                            ": every sample was degenerate");
    }
    rep.mean_ratio = sum / static_cast<double>(rep.ratios.size());
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace ansnse
