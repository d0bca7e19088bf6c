#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ansnse/error.hpp"
#include "ansnse/fft.hpp"
#include "ansnse/field.hpp"
#include "ansnse/grid.hpp"
#include "ansnse/log.hpp"

namespace ansnse {

/// Visits every half-spectrum mode in storage order as
/// f(index, k1, k2, k3) with symbol wavenumbers (Nyquist mapped to zero).
template <class F>
void for_each_mode(const Grid& grid, F&& f) {
  const int n1 = grid.n(0), n2 = grid.n(1), h3 = grid.half_n3();
  std::vector<double> k3(h3);
  for (int i3 = 0; i3 < h3; ++i3) k3[i3] = grid.symbol_wavenumber(2, i3);
  std::size_t idx = 0;
  for (int i1 = 0; i1 < n1; ++i1) {
    const double k1 = grid.symbol_wavenumber(0, i1);
    for (int i2 = 0; i2 < n2; ++i2) {
      const double k2 = grid.symbol_wavenumber(1, i2);
      for (int i3 = 0; i3 < h3; ++i3, ++idx) f(idx, k1, k2, k3[i3]);
    }
  }
}

/// Multiplicity of a half-spectrum plane index in the full spectrum.
inline double hermitian_weight(const Grid& grid, int i3) {
  return (i3 == 0 || 2 * i3 == grid.n(2)) ? 1.0 : 2.0;
}

/// ||f||_2^2 evaluated in coefficient space: V * sum_k |c_k|^2.
inline double spectral_l2_squared(const Grid& grid, const Coefficients& c) {
  const int h3 = grid.half_n3();
  double sum = 0.0;
  for (std::size_t idx = 0; idx < c.size(); ++idx) {
    const int i3 = static_cast<int>(idx % h3);
    sum += hermitian_weight(grid, i3) * std::norm(c[idx]);
  }
  return grid.volume() * sum;
}

/// V * sum_k Re(conj(a_k) b_k), equal to the grid quadrature of a*b.
inline double spectral_inner(const Grid& grid, const Coefficients& a, const Coefficients& b) {
  const int h3 = grid.half_n3();
  double sum = 0.0;
  for (std::size_t idx = 0; idx < a.size(); ++idx) {
    const int i3 = static_cast<int>(idx % h3);
    sum += hermitian_weight(grid, i3) * std::real(std::conj(a[idx]) * b[idx]);
  }
  return grid.volume() * sum;
}

enum class MultiplierKind {
  full,               // |xi|^s
  horizontal,         // |xi_h|^s
  vertical,           // |xi_3|^s
  inverse_laplacian,  // -1/|xi|^2
  derivative,         // i xi_axis
  leray_projection,   // I - xi xi^T / |xi|^2 (vector fields only)
};

enum class ZeroModePolicy { zero, error };

struct MultiplierSpec {
  MultiplierKind kind = MultiplierKind::full;
  double s = 0.0;
  int axis = 0;  // 0-based, derivative kind only
  ZeroModePolicy policy = ZeroModePolicy::zero;

  static MultiplierSpec full(double s, ZeroModePolicy p = ZeroModePolicy::zero) {
    return {MultiplierKind::full, s, 0, p};
  }
  static MultiplierSpec horizontal(double s, ZeroModePolicy p = ZeroModePolicy::zero) {
    return {MultiplierKind::horizontal, s, 0, p};
  }
  static MultiplierSpec vertical(double s, ZeroModePolicy p = ZeroModePolicy::zero) {
    return {MultiplierKind::vertical, s, 0, p};
  }
  static MultiplierSpec inverse_laplacian(ZeroModePolicy p = ZeroModePolicy::zero) {
    return {MultiplierKind::inverse_laplacian, 0.0, 0, p};
  }
  static MultiplierSpec derivative(int axis) {
    return {MultiplierKind::derivative, 0.0, axis, ZeroModePolicy::zero};
  }
  static MultiplierSpec leray() { return {MultiplierKind::leray_projection, 0.0, 0, ZeroModePolicy::zero}; }
};

namespace detail {

inline std::string kind_name(MultiplierKind kind) {
  switch (kind) {
    case MultiplierKind::full: return "full";
    case MultiplierKind::horizontal: return "horizontal";
    case MultiplierKind::vertical: return "vertical";
    case MultiplierKind::inverse_laplacian: return "inverse-laplacian";
    case MultiplierKind::derivative: return "derivative";
    case MultiplierKind::leray_projection: return "leray-projection";
  }
  return "?";
}

// Power of a nonnegative symbol magnitude. Returns false when the symbol is
// singular (negative power of zero); s == 0 is the identity everywhere.
inline bool power_symbol(double magnitude, double s, double& out) {
  if (s == 0.0) {
    out = 1.0;
    return true;
  }
  if (magnitude == 0.0) {
    if (s < 0.0) return false;
    out = 0.0;
    return true;
  }
  out = std::pow(magnitude, s);
  return true;
}

}  // namespace detail

/// Coefficient-wise product with the symbol of `spec`; scalar kinds only.
inline Coefficients apply_multiplier(const Grid& grid, const Coefficients& c,
                                     const MultiplierSpec& spec) {
  if (!std::isfinite(spec.s)) throw InvalidExponentError("multiplier exponent must be finite");
  if (spec.kind == MultiplierKind::leray_projection) {
    throw PreconditionError("leray projection acts on vector fields");
  }
  if (spec.kind == MultiplierKind::derivative && (spec.axis < 0 || spec.axis > 2)) {
    throw PreconditionError("derivative axis must be 1, 2 or 3");
  }
  Coefficients out(c.size());
  double singular_energy = 0.0;
  const int h3 = grid.half_n3();
  for_each_mode(grid, [&](std::size_t idx, double k1, double k2, double k3) {
    double sym = 0.0;
    bool regular = true;
    switch (spec.kind) {
      case MultiplierKind::full:
        regular = detail::power_symbol(std::sqrt(k1 * k1 + k2 * k2 + k3 * k3), spec.s, sym);
        break;
      case MultiplierKind::horizontal:
        regular = detail::power_symbol(std::sqrt(k1 * k1 + k2 * k2), spec.s, sym);
        break;
      case MultiplierKind::vertical:
        regular = detail::power_symbol(std::abs(k3), spec.s, sym);
        break;
      case MultiplierKind::inverse_laplacian: {
        const double k2sum = k1 * k1 + k2 * k2 + k3 * k3;
        regular = k2sum != 0.0;
        if (regular) sym = -1.0 / k2sum;
        break;
      }
      case MultiplierKind::derivative: {
        const double k = spec.axis == 0 ? k1 : (spec.axis == 1 ? k2 : k3);
        out[idx] = Complex(0.0, k) * c[idx];
        return;
      }
      case MultiplierKind::leray_projection: break;
    }
    if (regular) {
      out[idx] = sym * c[idx];
    } else {
      singular_energy += hermitian_weight(grid, static_cast<int>(idx % h3)) * std::norm(c[idx]);
      out[idx] = 0.0;
    }
  });
  if (singular_energy > 0.0) {
    const double total = spectral_l2_squared(grid, c);
    const double singular_norm = std::sqrt(grid.volume() * singular_energy);
    if (singular_norm > 1e-12 * std::sqrt(total)) {
      std::ostringstream msg;
      msg << detail::kind_name(spec.kind) << " multiplier (s=" << spec.s
          << "): dropped singular-mode content of L2 size " << singular_norm;
      if (spec.policy == ZeroModePolicy::error) throw ZeroModeError(msg.str());
      log::warn(msg.str());
    }
  }
  return out;
}

inline ScalarField apply_multiplier(const ScalarField& f, const MultiplierSpec& spec) {
  return ScalarField::from_spectrum(f.grid(), apply_multiplier(f.grid(), f.spectrum(), spec));
}

/// Spectral derivative along `axis` (0-based). Shares the multiplier code path.
inline Coefficients derivative(const Grid& grid, const Coefficients& c, int axis) {
  return apply_multiplier(grid, c, MultiplierSpec::derivative(axis));
}

inline ScalarField derivative(const ScalarField& f, int axis) {
  return apply_multiplier(f, MultiplierSpec::derivative(axis));
}

/// Laplacian symbol -|xi|^2 applied coefficient-wise.
inline Coefficients laplacian(const Grid& grid, const Coefficients& c) {
  Coefficients out(c.size());
  for_each_mode(grid, [&](std::size_t idx, double k1, double k2, double k3) {
    out[idx] = -(k1 * k1 + k2 * k2 + k3 * k3) * c[idx];
  });
  return out;
}

inline ScalarField laplacian(const ScalarField& f) {
  return ScalarField::from_spectrum(f.grid(), laplacian(f.grid(), f.spectrum()));
}

/// g with Laplacian(g) = f - mean(f) and zero mean. The mean is dropped with a
/// warning when it is not negligible.
inline ScalarField inverse_laplacian(const ScalarField& f) {
  return apply_multiplier(f, MultiplierSpec::inverse_laplacian());
}

using VectorCoefficients = std::array<Coefficients, 3>;

inline VectorCoefficients spectra(const VectorField3& v) {
  return {v[0].spectrum(), v[1].spectrum(), v[2].spectrum()};
}

inline VectorField3 from_spectra(const Grid& grid, VectorCoefficients c) {
  return {ScalarField::from_spectrum(grid, std::move(c[0])),
          ScalarField::from_spectrum(grid, std::move(c[1])),
          ScalarField::from_spectrum(grid, std::move(c[2]))};
}

/// Removes the gradient part: v - grad Lap^{-1} div v, mode by mode.
inline VectorCoefficients leray_project(const Grid& grid, const VectorCoefficients& v) {
  VectorCoefficients out{Coefficients(v[0].size()), Coefficients(v[1].size()),
                         Coefficients(v[2].size())};
  for_each_mode(grid, [&](std::size_t idx, double k1, double k2, double k3) {
    const double k2sum = k1 * k1 + k2 * k2 + k3 * k3;
    if (k2sum == 0.0) {
      out[0][idx] = v[0][idx];
      out[1][idx] = v[1][idx];
      out[2][idx] = v[2][idx];
      return;
    }
    const Complex kdotv = k1 * v[0][idx] + k2 * v[1][idx] + k3 * v[2][idx];
    const Complex factor = kdotv / k2sum;
    out[0][idx] = v[0][idx] - k1 * factor;
    out[1][idx] = v[1][idx] - k2 * factor;
    out[2][idx] = v[2][idx] - k3 * factor;
  });
  return out;
}

inline VectorField3 leray_project(const VectorField3& v) {
  return from_spectra(v.grid(), leray_project(v.grid(), spectra(v)));
}

inline VectorField3 apply_multiplier(const VectorField3& v, const MultiplierSpec& spec) {
  if (spec.kind == MultiplierKind::leray_projection) return leray_project(v);
  return {apply_multiplier(v[0], spec), apply_multiplier(v[1], spec), apply_multiplier(v[2], spec)};
}

inline Coefficients divergence(const Grid& grid, const VectorCoefficients& v) {
  Coefficients out(v[0].size());
  for_each_mode(grid, [&](std::size_t idx, double k1, double k2, double k3) {
    out[idx] = Complex(0.0, 1.0) * (k1 * v[0][idx] + k2 * v[1][idx] + k3 * v[2][idx]);
  });
  return out;
}

inline ScalarField divergence(const VectorField3& v) {
  return ScalarField::from_spectrum(v.grid(), divergence(v.grid(), spectra(v)));
}

inline VectorField3 gradient(const ScalarField& f) {
  const Coefficients c = f.spectrum();
  return from_spectra(f.grid(), {derivative(f.grid(), c, 0), derivative(f.grid(), c, 1),
                                 derivative(f.grid(), c, 2)});
}

/// True when mode (i1, i2, i3) survives the 2/3 rule: every |k_i| <= n_i/3.
inline bool survives_dealiasing(const Grid& grid, int i1, int i2, int i3) {
  return 3 * std::abs(grid.frequency(0, i1)) <= grid.n(0) &&
         3 * std::abs(grid.frequency(1, i2)) <= grid.n(1) &&
         3 * std::abs(grid.frequency(2, i3)) <= grid.n(2);
}

inline void dealias_in_place(const Grid& grid, Coefficients& c) {
  const int n1 = grid.n(0), n2 = grid.n(1), h3 = grid.half_n3();
  std::size_t idx = 0;
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i3 = 0; i3 < h3; ++i3, ++idx)
        if (!survives_dealiasing(grid, i1, i2, i3)) c[idx] = 0.0;
}

inline ScalarField dealias(const ScalarField& f) {
  Coefficients c = f.spectrum();
  dealias_in_place(f.grid(), c);
  return ScalarField::from_spectrum(f.grid(), std::move(c));
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

inline void check_lebesgue_exponent(double r) {
  if (std::isnan(r) || r < 1.0) {
    throw InvalidExponentError("Lebesgue exponent must be >= 1 (or infinity)");
  }
}

// Rectangle-rule L^r norm of a sampled nonnegative magnitude.
inline double lp_of_magnitude(std::span<const double> mag, double cell_volume, double r) {
  check_lebesgue_exponent(r);
  if (std::isinf(r)) {
    double m = 0.0;
    for (double v : mag) m = std::max(m, v);
    return m;
  }
  double sum = 0.0;
  if (r == 2.0) {
    for (double v : mag) sum += v * v;
  } else {
    for (double v : mag) sum += std::pow(v, r);
  }
  return std::pow(sum * cell_volume, 1.0 / r);
}

}  // namespace detail

/// Rectangle-rule Lebesgue norm (sum |f|^r dV)^(1/r); r = infinity gives max |f|.
inline double lp_norm(const ScalarField& f, double r) {
  std::vector<double> mag(f.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(f[i]);
  return detail::lp_of_magnitude(mag, f.grid().cell_volume(), r);
}

/// L^r norm of the pointwise Euclidean magnitude of a list of components.
inline double lp_norm_magnitude(std::span<const ScalarField> parts, double r) {
  if (parts.empty()) return 0.0;
  const std::size_t n = parts.front().size();
  std::vector<double> mag(n, 0.0);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < n; ++i) mag[i] += p[i] * p[i];
  }
  for (auto& m : mag) m = std::sqrt(m);
  return detail::lp_of_magnitude(mag, parts.front().grid().cell_volume(), r);
}

inline double lp_norm(const VectorField3& v, double r) {
  return lp_norm_magnitude(v.components(), r);
}

/// Rectangle-rule integral over the box.
inline double integrate(const ScalarField& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return sum * f.grid().cell_volume();
}

inline double l2_squared(const VectorField3& v) {
  double sum = 0.0;
  for (const auto& c : v.components())
    for (double x : c.values()) sum += x * x;
  return sum * v.grid().cell_volume();
}

}  // namespace ansnse
