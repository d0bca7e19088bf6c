#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "ansnse/error.hpp"
#include "ansnse/field.hpp"
#include "ansnse/spectral.hpp"

namespace ansnse {

/// u = A (sin x1 cos x2 cos x3, -cos x1 sin x2 cos x3, 0) on the 2*pi box.
inline VectorField3 taylor_green(const Grid& grid, double amplitude = 1.0) {
  if (std::abs(grid.length() - 2.0 * std::numbers::pi) > 1e-12) {
    throw PreconditionError("taylor-green data needs the 2*pi box");
  }
  auto u1 = ScalarField::sample(grid, [&](double x1, double x2, double x3) {
    return amplitude * std::sin(x1) * std::cos(x2) * std::cos(x3);
  });
  auto u2 = ScalarField::sample(grid, [&](double x1, double x2, double x3) {
    return -amplitude * std::cos(x1) * std::sin(x2) * std::cos(x3);
  });
  return {std::move(u1), std::move(u2), ScalarField::zeros(grid)};
}

/// Parameters of the random-phase shell spectrum shared by the generators.
struct ShellSpectrum {
  int kmin = 1;
  int kmax = 4;
  double slope = -2.0;
  double amplitude = 1.0;  // requested L2 norm of the result
  std::uint64_t seed = 0;
  bool admissible_only = false;  // drop modes with xi_h = 0 or xi_3 = 0
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline void check_shell(const Grid& grid, const ShellSpectrum& spec) {
  const int nmin = std::min({grid.n(0), grid.n(1), grid.n(2)});
  if (spec.kmin < 1 || spec.kmax < spec.kmin || 3 * spec.kmax >= nmin) {
    throw PreconditionError("shell needs 1 <= kmin <= kmax < min(n)/3");
  }
  if (!(spec.amplitude > 0.0) || !std::isfinite(spec.amplitude)) {
    throw PreconditionError("requested amplitude must be positive");
  }
}

// Fills `count` independent Hermitian-consistent half spectra with random
// phases on the shell kmin <= |k| <= kmax (integer frequencies).
inline std::vector<Coefficients> random_shell(const Grid& grid, const ShellSpectrum& spec,
                                              int count) {
  check_shell(grid, spec);
  std::mt19937_64 rng(spec.seed);
  std::vector<Coefficients> out(count, Coefficients(grid.spectral_size()));
  const int n1 = grid.n(0), n2 = grid.n(1), h3 = grid.half_n3();
  std::size_t populated = 0;
  for (int i1 = 0; i1 < n1; ++i1) {
    const int f1 = grid.frequency(0, i1);
    for (int i2 = 0; i2 < n2; ++i2) {
      const int f2 = grid.frequency(1, i2);
      for (int i3 = 0; i3 < h3; ++i3) {
        const int f3 = grid.frequency(2, i3);
        const double k = std::sqrt(double(f1 * f1 + f2 * f2 + f3 * f3));
        if (k < spec.kmin || k > spec.kmax) continue;
        if (spec.admissible_only && ((f1 == 0 && f2 == 0) || f3 == 0)) continue;
        // In the k3 = 0 plane only one of each +-k pair is drawn.
        if (f3 == 0 && (f1 < 0 || (f1 == 0 && f2 < 0))) continue;
        const double magnitude = std::pow(k, spec.slope);
        for (int c = 0; c < count; ++c) {
          const double phase = 2.0 * std::numbers::pi * uniform01(rng);
          out[c][grid.spectral_index(i1, i2, i3)] = std::polar(magnitude, phase);
        }
        ++populated;
        if (f3 == 0) {
          const int j1 = (n1 - i1) % n1, j2 = (n2 - i2) % n2;
          for (int c = 0; c < count; ++c) {
            out[c][grid.spectral_index(j1, j2, 0)] =
                std::conj(out[c][grid.spectral_index(i1, i2, i3)]);
          }
        }
      }
    }
  }
  if (populated == 0) throw DegenerateSpectrumError("no modes in the requested shell");
  return out;
}

}  // namespace detail

/// Random divergence-free field with shell amplitudes |k|^slope, rescaled so
/// that its L2 norm equals spec.amplitude. Bit-reproducible for a seed.
inline VectorField3 random_solenoidal(const Grid& grid, const ShellSpectrum& spec) {
  auto raw = detail::random_shell(grid, spec, 3);
  VectorCoefficients projected = leray_project(grid, {raw[0], raw[1], raw[2]});
  const double norm = std::sqrt(spectral_l2_squared(grid, projected[0]) +
                                spectral_l2_squared(grid, projected[1]) +
                                spectral_l2_squared(grid, projected[2]));
  if (!(norm > 0.0)) throw DegenerateSpectrumError("projection removed every mode");
  // Rescale by the quadrature norm of the synthesized field.
  VectorField3 field = from_spectra(grid, projected);
  const double measured = lp_norm(field, 2.0);
  const double factor = spec.amplitude / measured;
  for (auto& c : projected)
    for (auto& z : c) z *= factor;
  return from_spectra(grid, std::move(projected));
}

/// Random scalar field with the same shell spectrum, rescaled to L2 norm
/// spec.amplitude.
inline ScalarField random_scalar(const Grid& grid, const ShellSpectrum& spec) {
  auto raw = detail::random_shell(grid, spec, 1);
  const double measured = lp_norm(ScalarField::from_spectrum(grid, raw[0]), 2.0);
  if (!(measured > 0.0)) throw DegenerateSpectrumError("empty scalar spectrum");
  for (auto& z : raw[0]) z *= spec.amplitude / measured;
  return ScalarField::from_spectrum(grid, std::move(raw[0]));
}

}  // namespace ansnse
