#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ansnse/error.hpp"
#include "ansnse/field.hpp"
#include "ansnse/solver.hpp"
#include "ansnse/spectral.hpp"

namespace ansnse {

/// Guard in relative residuals so zero trajectories stay well defined.
inline constexpr double kResidualFloor = 1e-300;

inline double relative_residual(double lhs, double rhs) {
  return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + kResidualFloor);
}

/// Vertical vorticity d1 u^2 - d2 u^1.
inline ScalarField vorticity3(const VectorField3& u) {
  const Grid& g = u.grid();
  Coefficients w = derivative(g, u[1].spectrum(), 0);
  const Coefficients d2u1 = derivative(g, u[0].spectrum(), 1);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= d2u1[i];
  return ScalarField::from_spectrum(g, std::move(w));
}

struct HorizontalReconstruction {
  ScalarField u1;
  ScalarField u2;
  double residual = 0.0;  // ||uh_rec - uh||_2 / max(||uh||_2, eps)
};

/// Rebuilds u^h = Lap^{-1}(-grad_h d3 u^3 + d3^2 u^h + grad_h^perp w3) from
/// the vertical vorticity, the vertical derivative and u^3.
inline HorizontalReconstruction reconstruct_uh(const VectorField3& u) {
  require_solenoidal(u, "reconstruct_uh");
  const Grid& g = u.grid();
  const VectorCoefficients uh = spectra(u);
  const Coefficients w3 = vorticity3(u).spectrum();
  Coefficients r1(g.spectral_size()), r2(g.spectral_size());
  const Complex i(0.0, 1.0);
  for_each_mode(g, [&](std::size_t idx, double k1, double k2, double k3) {
    const double ksq = k1 * k1 + k2 * k2 + k3 * k3;
    if (ksq == 0.0) return;
    const Complex d3u3 = i * k3 * uh[2][idx];
    // Lap^{-1} has symbol -1/|k|^2.
    const Complex rhs1 = -(i * k1) * d3u3 - k3 * k3 * uh[0][idx] - (i * k2) * w3[idx];
    const Complex rhs2 = -(i * k2) * d3u3 - k3 * k3 * uh[1][idx] + (i * k1) * w3[idx];
    r1[idx] = -rhs1 / ksq;
    r2[idx] = -rhs2 / ksq;
  });
  HorizontalReconstruction out{ScalarField::from_spectrum(g, std::move(r1)),
                               ScalarField::from_spectrum(g, std::move(r2)), 0.0};
  const ScalarField e1 = out.u1 - u[0], e2 = out.u2 - u[1];
  const std::array<ScalarField, 2> err{e1, e2};
  const std::array<ScalarField, 2> ref{u[0], u[1]};
  const double denom = std::max(lp_norm_magnitude(ref, 2.0), 1e-300);
  out.residual = lp_norm_magnitude(err, 2.0) / denom;
  return out;
}

inline double kinetic_energy(const VectorField3& u) {
  const Grid& g = u.grid();
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) sum += spectral_l2_squared(g, u[c].spectrum());
  return 0.5 * sum;
}

/// ||grad u||_2^2 summed over all nine derivatives.
inline double gradient_l2_squared(const VectorField3& u) {
  const Grid& g = u.grid();
  const int h3 = g.half_n3();
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Coefficients uc = u[c].spectrum();
    for_each_mode(g, [&](std::size_t idx, double k1, double k2, double k3) {
      sum += hermitian_weight(g, static_cast<int>(idx % h3)) * (k1 * k1 + k2 * k2 + k3 * k3) *
             std::norm(uc[idx]);
    });
  }
  return g.volume() * sum;
}

struct EnergyFunctionals {
  double E = 0.0;   // ||w3||^2 + ||d3 u||^2
  double E1 = 0.0;  // E + ||(u3)^2||_2^2
  double E2 = 0.0;  // E + || |u3|^{3/2} ||_3^2
};

inline EnergyFunctionals energy_functionals(const VectorField3& u) {
  const Grid& g = u.grid();
  const double w = spectral_l2_squared(g, vorticity3(u).spectrum());
  double d3 = 0.0;
  for (int c = 0; c < 3; ++c) d3 += spectral_l2_squared(g, derivative(g, u[c].spectrum(), 2));
  double quartic = 0.0, nine_halves = 0.0;
  for (double v : u[2].values()) {
    const double a = std::abs(v);
    quartic += a * a * a * a;
    nine_halves += a * a * a * a * std::sqrt(a);
  }
  quartic *= g.cell_volume();
  nine_halves *= g.cell_volume();
  EnergyFunctionals out;
  out.E = w + d3;
  out.E1 = out.E + quartic;
  out.E2 = out.E + std::cbrt(nine_halves * nine_halves);
  return out;
}

/// Serrin partner p = 2q/(2q - 3) of q > 3/2.
inline double serrin_exponent(double q) {
  if (!(q > 1.5) || !std::isfinite(q)) {
    throw RangeError("criterion exponent q must lie in (3/2, inf); q = 3/2 is the "
                     "L^inf-in-time smallness regime, monitored separately");
  }
  return 2.0 * q / (2.0 * q - 3.0);
}

struct SerrinNorm {
  double norm = 0.0;  // ||d3 u||_q, Euclidean magnitude
  double p = 0.0;
};

inline VectorField3 vertical_derivative(const VectorField3& u) {
  return {derivative(u[0], 2), derivative(u[1], 2), derivative(u[2], 2)};
}

inline SerrinNorm serrin_norm(const VectorField3& u, double q) {
  const double p = serrin_exponent(q);
  return {lp_norm(vertical_derivative(u), q), p};
}

/// ||d3 u||_{3/2}, the borderline quantity whose sup in time is monitored.
inline double borderline_norm(const VectorField3& u) { return lp_norm(vertical_derivative(u), 1.5); }

struct CriterionEntry {
  double q = 0.0;
  double norm = 0.0;
  double p = 0.0;
  double accumulated = 0.0;  // trapezoid integral of norm^p from t = 0
};

enum class BalanceIdentity { omega3, u3sq, u3_94, d3u, gradu };

inline constexpr std::array<BalanceIdentity, 5> kBalanceIdentities = {
    BalanceIdentity::omega3, BalanceIdentity::u3sq, BalanceIdentity::u3_94, BalanceIdentity::d3u,
    BalanceIdentity::gradu};

inline const char* identity_name(BalanceIdentity id) {
  switch (id) {
    case BalanceIdentity::omega3: return "omega3";
    case BalanceIdentity::u3sq: return "u3sq";
    case BalanceIdentity::u3_94: return "u3_94";
    case BalanceIdentity::d3u: return "d3u";
    case BalanceIdentity::gradu: return "gradu";
  }
  return "?";
}

struct DiagnosticsRecord {
  double t = 0.0;
  double kinetic_energy = 0.0;
  double grad_u_sq = 0.0;
  double E = 0.0, E1 = 0.0, E2 = 0.0;
  std::vector<CriterionEntry> criteria;
  /// Indexed like kBalanceIdentities; NaN until enough neighbours exist.
  std::array<double, 5> residuals{};
  double decomp_residual = 0.0;
  double borderline = 0.0;  // ||d3 u||_{3/2}

  const CriterionEntry& criterion(double q) const {
    for (const auto& c : criteria)
      if (c.q == q) return c;
    throw RangeError("record does not monitor q = " + std::to_string(q));
  }
};

// ---------------------------------------------------------------------------
// Production integrals of the balance identities.

struct ProductionIntegrals {
  double I1 = 0, I2 = 0, I3 = 0;        // vorticity identity
  double J1 = 0, J2 = 0;                // (u3)^3 test function
  double J1_94 = 0, J2_94 = 0;          // |u3|^{5/2} u3 test function
  double K1 = 0, K2 = 0;                // d3 u identity
  double G = 0;                         // grad u identity

  double max_abs() const {
    return std::max({std::abs(I1), std::abs(I2), std::abs(I3), std::abs(J1), std::abs(J2),
                     std::abs(J1_94), std::abs(J2_94), std::abs(K1), std::abs(K2), std::abs(G)});
  }
};

namespace detail {

inline double power_test_function(double v, BalanceIdentity id) {
  if (id == BalanceIdentity::u3sq) return v * v * v;
  const double a = std::abs(v);
  return a * a * std::sqrt(a) * v;  // |v|^{5/2} v
}

}  // namespace detail

inline ProductionIntegrals production_integrals(const VectorField3& u) {
  const Grid& g = u.grid();
  const double dv = g.cell_volume();
  const std::size_t n = g.size();
  const VectorCoefficients uh = spectra(u);
  const auto grad = detail::velocity_gradient(g, uh);
  const auto& du = grad.du;  // du[i][j] = d_j u^i
  const auto& uu = grad.u;

  const Coefficients w3h = vorticity3(u).spectrum();
  const auto w3 = inverse_transform(g, w3h);
  const auto d1w3 = inverse_transform(g, derivative(g, w3h, 0));
  const auto d2w3 = inverse_transform(g, derivative(g, w3h, 1));

  ProductionIntegrals out;
  for (std::size_t x = 0; x < n; ++x) {
    out.I1 += du[1][2][x] * uu[2][x] * d1w3[x];
    out.I2 -= du[0][2][x] * uu[2][x] * d2w3[x];
    out.I3 += 0.5 * du[2][2][x] * w3[x] * w3[x];
    // K: -sum_k int d3u^j d_j u^k d3u^k, split into horizontal k and k = 3.
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += du[j][2][x] * du[k][j][x];
      (k < 2 ? out.K1 : out.K2) -= s * du[k][2][x];
    }
    double gsum = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) gsum += du[j][i][x] * du[k][j][x] * du[k][i][x];
    out.G -= gsum;
  }
  out.I1 *= dv;
  out.I2 *= dv;
  out.I3 *= dv;
  out.K1 *= dv;
  out.K2 *= dv;
  out.G *= dv;

  // Pressure part: P_v = Lap^{-1} sum_i d_i d_3 (d3u^i u^3) and
  // P_h = Lap^{-1} sum_{i,h<3} d_i d_h (d3u^i u^h).
  std::array<std::array<Coefficients, 3>, 3> prod;  // prod[i][j] = (d3 u^i u^j)^
  std::vector<double> buf(n);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (std::size_t x = 0; x < n; ++x) buf[x] = du[i][2][x] * uu[j][x];
      prod[i][j] = forward_transform(g, buf);
    }
  }
  Coefficients pv(g.spectral_size()), ph(g.spectral_size());
  for_each_mode(g, [&](std::size_t idx, double k1, double k2, double k3) {
    const double k[3] = {k1, k2, k3};
    const double ksq = k1 * k1 + k2 * k2 + k3 * k3;
    if (ksq == 0.0) return;
    // d_i d_j has symbol -k_i k_j and Lap^{-1} has -1/|k|^2.
    Complex sv = 0.0, sh = 0.0;
    for (int i = 0; i < 3; ++i) {
      sv += k[i] * k[2] * prod[i][2][idx];
      for (int h = 0; h < 2; ++h) sh += k[i] * k[h] * prod[i][h][idx];
    }
    pv[idx] = sv / ksq;
    ph[idx] = sh / ksq;
  });
  const auto pvx = inverse_transform(g, pv);
  const auto phx = inverse_transform(g, ph);
  for (std::size_t x = 0; x < n; ++x) {
    const double cube = detail::power_test_function(uu[2][x], BalanceIdentity::u3sq);
    const double frac = detail::power_test_function(uu[2][x], BalanceIdentity::u3_94);
    out.J1 += 2.0 * pvx[x] * cube;
    out.J2 += 2.0 * phx[x] * cube;
    out.J1_94 += 2.0 * pvx[x] * frac;
    out.J2_94 += 2.0 * phx[x] * frac;
  }
  out.J1 *= dv;
  out.J2 *= dv;
  out.J1_94 *= dv;
  out.J2_94 *= dv;
  return out;
}

/// The two sides of one balance identity at one time. `lhs` is the
/// time-derivative term; `rhs` is production minus dissipation.
struct BalanceSides {
  double lhs = 0.0;
  double dissipation = 0.0;
  double production = 0.0;
  double rhs() const { return production - dissipation; }
  double residual() const { return relative_residual(lhs, rhs()); }
};

/// Evaluates every identity at state `u`, given a time-derivative estimate
/// `dudt` of the velocity (in coefficient space).
inline std::array<BalanceSides, 5> balance_sides(const VectorField3& u, const VectorCoefficients& dudt,
                                                 const ProductionIntegrals& prod) {
  const Grid& g = u.grid();
  const VectorCoefficients uh = spectra(u);
  std::array<BalanceSides, 5> out;

  // Quadratic functionals: everything in coefficient space (discrete Parseval).
  auto weighted = [&](const Coefficients& a, const Coefficients& b, auto&& weight) {
    const int h3 = g.half_n3();
    double sum = 0.0;
    for_each_mode(g, [&](std::size_t idx, double k1, double k2, double k3) {
      sum += hermitian_weight(g, static_cast<int>(idx % h3)) * weight(k1, k2, k3) *
             std::real(std::conj(a[idx]) * b[idx]);
    });
    return g.volume() * sum;
  };
  auto w3_of = [&](const VectorCoefficients& v) {
    Coefficients w = derivative(g, v[1], 0);
    const Coefficients d2v1 = derivative(g, v[0], 1);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= d2v1[i];
    return w;
  };
  const auto ksq = [](double a, double b, double c) { return a * a + b * b + c * c; };
  const auto k3sq = [](double, double, double c) { return c * c; };

  {
    const Coefficients w = w3_of(uh), wt = w3_of(dudt);
    auto& s = out[0];
    s.lhs = weighted(w, wt, [](double, double, double) { return 1.0; });
    s.dissipation = weighted(w, w, ksq);
    s.production = prod.I1 + prod.I2 + prod.I3;
  }
  {
    auto& s = out[3];
    for (int c = 0; c < 3; ++c) {
      s.lhs += weighted(uh[c], dudt[c], k3sq);
      s.dissipation += weighted(uh[c], uh[c], [&](double a, double b, double c3) {
        return c3 * c3 * ksq(a, b, c3);
      });
    }
    s.production = prod.K1 + prod.K2;
  }
  {
    auto& s = out[4];
    for (int c = 0; c < 3; ++c) {
      s.lhs += weighted(uh[c], dudt[c], ksq);
      s.dissipation += weighted(uh[c], uh[c], [&](double a, double b, double c3) {
        const double k = ksq(a, b, c3);
        return k * k;
      });
    }
    s.production = prod.G;
  }

  // Power-type functionals of u3: pointwise quadrature. The dissipation
  // integral int grad u3 . grad F(u3) is evaluated as -int F(u3) Lap u3.
  const auto u3t = inverse_transform(g, dudt[2]);
  const auto lap_u3 = inverse_transform(g, laplacian(g, uh[2]));
  const double dv = g.cell_volume();
  for (BalanceIdentity id : {BalanceIdentity::u3sq, BalanceIdentity::u3_94}) {
    auto& s = out[id == BalanceIdentity::u3sq ? 1 : 2];
    double lhs = 0.0, diss = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) {
      const double f = detail::power_test_function(u[2][x], id);
      lhs += f * u3t[x];
      diss -= f * lap_u3[x];
    }
    s.lhs = lhs * dv;
    s.dissipation = diss * dv;
    s.production = id == BalanceIdentity::u3sq ? prod.J1 + prod.J2 : prod.J1_94 + prod.J2_94;
  }
  return out;
}

/// Second-order finite-difference weights for d/dt at `at` (0, 1 or 2) from
/// three samples at t0 < t1 < t2.
inline std::array<double, 3> difference_weights(double t0, double t1, double t2, int at) {
  const double h0 = t1 - t0, h1 = t2 - t1;
  if (!(h0 > 0.0) || !(h1 > 0.0)) throw InsufficientDataError("snapshot times must increase");
  switch (at) {
    case 0:
      return {-(2 * h0 + h1) / (h0 * (h0 + h1)), (h0 + h1) / (h0 * h1), -h0 / (h1 * (h0 + h1))};
    case 1:
      return {-h1 / (h0 * (h0 + h1)), (h1 - h0) / (h0 * h1), h0 / (h1 * (h0 + h1))};
    default:
      return {h1 / (h0 * (h0 + h1)), -(h0 + h1) / (h0 * h1), (2 * h1 + h0) / (h1 * (h0 + h1))};
  }
}

/// Finite-difference velocity time derivative from three consecutive states.
inline VectorCoefficients time_derivative(std::span<const SolverState, 3> states, int at) {
  const auto w = difference_weights(states[0].t, states[1].t, states[2].t, at);
  std::array<VectorCoefficients, 3> s = {spectra(states[0].u), spectra(states[1].u),
                                         spectra(states[2].u)};
  VectorCoefficients out;
  for (int c = 0; c < 3; ++c) {
    out[c].resize(s[0][c].size());
    for (std::size_t i = 0; i < out[c].size(); ++i)
      out[c][i] = w[0] * s[0][c][i] + w[1] * s[1][c][i] + w[2] * s[2][c][i];
  }
  return out;
}

/// Residual series of one identity along stored snapshots, one value per
/// interior snapshot (centered differences).
inline std::vector<double> balance_residual(std::span<const SolverState> trajectory,
                                            BalanceIdentity identity) {
  if (trajectory.size() < 3) {
    throw InsufficientDataError("balance residuals need at least 3 snapshots");
  }
  const auto slot = static_cast<std::size_t>(identity);
  std::vector<double> out;
  out.reserve(trajectory.size() - 2);
  for (std::size_t k = 1; k + 1 < trajectory.size(); ++k) {
    const auto window = trajectory.subspan(k - 1).first<3>();
    const auto dudt = time_derivative(window, 1);
    const auto& u = trajectory[k].u;
    out.push_back(balance_sides(u, dudt, production_integrals(u))[slot].residual());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criterion accumulation and the Gronwall monitor.

inline double trapezoid(std::span<const double> t, std::span<const double> f) {
  double sum = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) sum += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return sum;
}

namespace detail {
inline void require_time_ordered(std::span<const DiagnosticsRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (!(records[i].t > records[i - 1].t)) {
      throw PreconditionError("diagnostics records are not time-ordered");
    }
  }
}
}  // namespace detail

/// Trapezoid integral of ||d3 u||_q^p over the record times.
inline double accumulate_criterion(std::span<const DiagnosticsRecord> records, double q) {
  detail::require_time_ordered(records);
  std::vector<double> t, f;
  for (const auto& r : records) {
    const auto& c = r.criterion(q);
    t.push_back(r.t);
    f.push_back(std::pow(c.norm, c.p));
  }
  return trapezoid(t, f);
}

enum class GronwallFunctional { E1, E2 };

inline GronwallFunctional gronwall_functional(double q) {
  if (!(q > 1.5) || !(q <= 6.0)) throw RangeError("gronwall monitor needs q in (3/2, 6]");
  return q < 2.0 ? GronwallFunctional::E1 : GronwallFunctional::E2;
}

struct GronwallResult {
  GronwallFunctional functional = GronwallFunctional::E1;
  std::vector<double> bound;      // E_k(0) exp(C A(t)) per record
  std::vector<double> functional_values;
  std::vector<double> accumulated;  // A(t)
  bool violated = false;
};

inline GronwallResult gronwall_monitor(std::span<const DiagnosticsRecord> records, double q, double C) {
  const auto which = gronwall_functional(q);
  if (!(C >= 0.0) || !std::isfinite(C)) throw RangeError("gronwall constant must be >= 0");
  detail::require_time_ordered(records);
  GronwallResult out;
  out.functional = which;
  if (records.empty()) return out;
  double acc = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& c = records[i].criterion(q);
    if (i > 0) {
      const auto& prev = records[i - 1].criterion(q);
      acc += 0.5 * (records[i].t - records[i - 1].t) *
             (std::pow(c.norm, c.p) + std::pow(prev.norm, prev.p));
    }
    const double e = which == GronwallFunctional::E1 ? records[i].E1 : records[i].E2;
    out.functional_values.push_back(e);
    out.accumulated.push_back(acc);
  }
  const double e0 = out.functional_values.front();
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.bound.push_back(e0 * std::exp(C * out.accumulated[i]));
    if (out.functional_values[i] > out.bound[i]) out.violated = true;
  }
  return out;
}

/// Smallest C >= 0 for which gronwall_monitor reports no violation
/// (infinity when the functional grows while the criterion integral is 0).
inline double calibrate_gronwall(std::span<const DiagnosticsRecord> records, double q) {
  const auto res = gronwall_monitor(records, q, 0.0);
  double c = 0.0;
  if (res.functional_values.empty()) return c;
  const double e0 = res.functional_values.front();
  for (std::size_t i = 1; i < res.functional_values.size(); ++i) {
    const double e = res.functional_values[i];
    if (!(e > e0)) continue;
    if (res.accumulated[i] <= 0.0) return kInfinity;
    c = std::max(c, std::log(e / e0) / res.accumulated[i]);
  }
  // exp/log round trip can land one ulp short; nudge until the bound holds.
  while (gronwall_monitor(records, q, c).violated) c = std::nextafter(c, kInfinity) * (1 + 1e-15);
  return c;
}

// ---------------------------------------------------------------------------
// CSV output.

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_q(double q) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}

inline std::vector<std::string> csv_columns(std::span<const double> q_list) {
  std::vector<std::string> cols = {"t", "kinetic_energy", "grad_u_sq", "E", "E1", "E2"};
  for (double q : q_list) {
    const std::string tag = format_q(q);
    cols.push_back("norm_q" + tag);
    cols.push_back("p_q" + tag);
    cols.push_back("accum_q" + tag);
  }
  for (auto id : kBalanceIdentities) cols.push_back(std::string("res_") + identity_name(id));
  cols.push_back("decomp_residual");
  return cols;
}

inline void write_csv_header(std::ostream& out, std::span<const double> q_list) {
  const auto cols = csv_columns(q_list);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

inline void write_csv_row(std::ostream& out, const DiagnosticsRecord& r) {
  out << format_number(r.t) << ',' << format_number(r.kinetic_energy) << ','
      << format_number(r.grad_u_sq) << ',' << format_number(r.E) << ',' << format_number(r.E1)
      << ',' << format_number(r.E2);
  for (const auto& c : r.criteria) {
    out << ',' << format_number(c.norm) << ',' << format_number(c.p) << ','
        << format_number(c.accumulated);
  }
  for (double res : r.residuals) out << ',' << format_number(res);
  out << ',' << format_number(r.decomp_residual) << '\n';
}

}  // namespace ansnse
