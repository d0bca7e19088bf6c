#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ansnse/error.hpp"
#include "ansnse/field.hpp"
#include "ansnse/spectral.hpp"

namespace ansnse {

/// Relative divergence bound max|div u| <= tol * ||u||_2 used as the
/// solenoidality precondition throughout.
inline constexpr double kDivergenceTolerance = 1e-10;

/// Blow-up threshold on max|u|.
inline constexpr double kBlowUpMagnitude = 1e8;

struct SolverState {
  double t = 0.0;
  VectorField3 u;
};

/// Raised when a step produces non-finite or runaway velocities. Carries the
/// last state that passed the checks.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, SolverState last_good)
      : Error(what), last_good_(std::move(last_good)) {}
  const SolverState& last_good_state() const { return last_good_; }
  double time() const { return last_good_.t; }

 private:
  SolverState last_good_;
};

/// max|div u| / ||u||_2 (0 for the zero field).
inline double relative_divergence(const VectorField3& u) {
  const double norm = lp_norm(u, 2.0);
  const double div = divergence(u).max_abs();
  if (norm == 0.0) return div == 0.0 ? 0.0 : kInfinity;
  return div / norm;
}

inline void require_solenoidal(const VectorField3& u, const std::string& who) {
  const double rel = relative_divergence(u);
  if (!(rel <= kDivergenceTolerance)) {
    throw PreconditionError(who + ": velocity is not divergence-free (max|div u|/||u||_2 = " +
                            std::to_string(rel) + ")");
  }
}

namespace detail {

inline std::vector<double> squared_wavenumbers(const Grid& grid) {
  std::vector<double> k2(grid.spectral_size());
  for_each_mode(grid, [&](std::size_t idx, double k1, double kk2, double k3) {
    k2[idx] = k1 * k1 + kk2 * kk2 + k3 * k3;
  });
  return k2;
}

// Physical-space samples of u and all nine first derivatives d_j u^i.
struct VelocityGradient {
  std::array<std::vector<double>, 3> u;
  std::array<std::array<std::vector<double>, 3>, 3> du;  // du[i][j] = d_j u^i
};

inline VelocityGradient velocity_gradient(const Grid& grid, const VectorCoefficients& uh) {
  VelocityGradient g;
  for (int i = 0; i < 3; ++i) {
    g.u[i] = inverse_transform(grid, uh[i]);
    for (int j = 0; j < 3; ++j) g.du[i][j] = inverse_transform(grid, derivative(grid, uh[i], j));
  }
  return g;
}

inline void check_blow_up(const VectorField3& u, const SolverState& last_good) {
  if (!u.is_finite() || u.max_abs() > kBlowUpMagnitude) {
    throw BlowUpError("blow-up detected after t=" + std::to_string(last_good.t), last_good);
  }
}

}  // namespace detail

/// Dealiased, Leray-projected -(u.grad)u in coefficient space.
inline VectorCoefficients nonlinear_rhs(const Grid& grid, const VectorCoefficients& uh) {
  const auto g = detail::velocity_gradient(grid, uh);
  VectorCoefficients out;
  std::vector<double> adv(grid.size());
  for (int i = 0; i < 3; ++i) {
    for (std::size_t x = 0; x < adv.size(); ++x) {
      adv[x] = -(g.u[0][x] * g.du[i][0][x] + g.u[1][x] * g.du[i][1][x] + g.u[2][x] * g.du[i][2][x]);
    }
    out[i] = forward_transform(grid, adv);
    dealias_in_place(grid, out[i]);
  }
  return leray_project(grid, out);
}

inline VectorField3 nonlinear_rhs(const VectorField3& u) {
  return from_spectra(u.grid(), nonlinear_rhs(u.grid(), spectra(u)));
}

/// Zero-mean pressure with -Lap(Pi) = sum_ij d_i d_j (u^i u^j).
inline ScalarField pressure_from_velocity(const VectorField3& u) {
  require_solenoidal(u, "pressure_from_velocity");
  const Grid& grid = u.grid();
  std::array<std::array<Coefficients, 3>, 3> products;
  std::vector<double> prod(grid.size());
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      for (std::size_t x = 0; x < prod.size(); ++x) prod[x] = u[i][x] * u[j][x];
      products[i][j] = forward_transform(grid, prod);
    }
  }
  Coefficients pi(grid.spectral_size());
  for_each_mode(grid, [&](std::size_t idx, double k1, double k2, double k3) {
    const double k[3] = {k1, k2, k3};
    const double ksq = k1 * k1 + k2 * k2 + k3 * k3;
    if (ksq == 0.0) return;
    Complex sum = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) sum += (i == j ? 1.0 : 2.0) * k[i] * k[j] * products[i][j][idx];
    pi[idx] = -sum / ksq;
  });
  return ScalarField::from_spectrum(grid, std::move(pi));
}

/// One integrating-factor RK4 step of du/dt = Lap u - P(u.grad)u (unit
/// viscosity); the diffusion propagator exp(-|k|^2 dt) is applied exactly.
inline SolverState step(const SolverState& state, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("dt must be positive");
  const Grid& grid = state.u.grid();
  const VectorCoefficients u0 = spectra(state.u);
  const auto k2 = detail::squared_wavenumbers(grid);
  std::vector<double> e_half(k2.size()), e_full(k2.size());
  for (std::size_t i = 0; i < k2.size(); ++i) {
    e_half[i] = std::exp(-0.5 * dt * k2[i]);
    e_full[i] = e_half[i] * e_half[i];
  }
  const std::size_t m = grid.spectral_size();
  auto combine = [&](auto&& f) {
    VectorCoefficients out;
    for (int c = 0; c < 3; ++c) {
      out[c].resize(m);
      for (std::size_t i = 0; i < m; ++i) out[c][i] = f(c, i);
    }
    return out;
  };

  const auto a = nonlinear_rhs(grid, u0);
  const auto u2 = combine([&](int c, std::size_t i) { return e_half[i] * (u0[c][i] + 0.5 * dt * a[c][i]); });
  const auto b = nonlinear_rhs(grid, u2);
  const auto u3 = combine([&](int c, std::size_t i) { return e_half[i] * u0[c][i] + 0.5 * dt * b[c][i]; });
  const auto cc = nonlinear_rhs(grid, u3);
  const auto u4 = combine([&](int c, std::size_t i) { return e_full[i] * u0[c][i] + dt * e_half[i] * cc[c][i]; });
  const auto d = nonlinear_rhs(grid, u4);
  auto next = combine([&](int c, std::size_t i) {
    return e_full[i] * u0[c][i] +
           dt / 6.0 * (e_full[i] * a[c][i] + 2.0 * e_half[i] * (b[c][i] + cc[c][i]) + d[c][i]);
  });

  VectorField3 u = from_spectra(grid, std::move(next));
  detail::check_blow_up(u, state);
  return {state.t + dt, std::move(u)};
}

}  // namespace ansnse
