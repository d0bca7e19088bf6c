#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "ansnse/error.hpp"

namespace ansnse {

/// Uniform periodic box [0, L)^3 with n_i samples per axis.
///
/// Samples are stored row-major with x3 fastest. Spectral coefficients use
/// the real-to-complex half layout: n1 x n2 x (n3/2 + 1), again x3 fastest.
/// Integer frequencies follow the usual FFT ordering
/// {0, 1, ..., n/2 - 1, -n/2, ..., -1}.
class Grid {
 public:
  Grid() = default;

  Grid(std::array<int, 3> n, double length) : n_(n), length_(length) {
    for (int axis = 0; axis < 3; ++axis) {
      if (n[axis] < 4 || n[axis] % 2 != 0) {
        throw InvalidGridError("grid size along axis " + std::to_string(axis + 1) +
                               " must be even and >= 4, got " + std::to_string(n[axis]));
      }
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw InvalidGridError("box length must be positive and finite");
    }
    for (int axis = 0; axis < 3; ++axis) {
      const int m = n[axis];
      spacing_[axis] = length / m;
      frequencies_[axis].resize(m);
      wavenumbers_[axis].resize(m);
      for (int i = 0; i < m; ++i) {
        const int f = i < m / 2 ? i : i - m;
        frequencies_[axis][i] = f;
        wavenumbers_[axis][i] = f * (2.0 * std::numbers::pi / length);
      }
    }
  }

  const std::array<int, 3>& n() const { return n_; }
  int n(int axis) const { return n_[axis]; }
  double length() const { return length_; }
  double spacing(int axis) const { return spacing_[axis]; }

  std::size_t size() const {
    return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
  }
  /// Number of complex coefficients in the half-spectrum layout.
  std::size_t spectral_size() const {
    return static_cast<std::size_t>(n_[0]) * n_[1] * half_n3();
  }
  int half_n3() const { return n_[2] / 2 + 1; }

  double volume() const { return length_ * length_ * length_; }
  double cell_volume() const { return spacing_[0] * spacing_[1] * spacing_[2]; }

  std::size_t index(int i1, int i2, int i3) const {
    return (static_cast<std::size_t>(i1) * n_[1] + i2) * n_[2] + i3;
  }
  std::size_t spectral_index(int i1, int i2, int i3) const {
    return (static_cast<std::size_t>(i1) * n_[1] + i2) * half_n3() + i3;
  }

  double coordinate(int axis, int i) const { return i * spacing_[axis]; }

  const std::vector<int>& frequencies(int axis) const { return frequencies_[axis]; }
  const std::vector<double>& wavenumbers(int axis) const { return wavenumbers_[axis]; }

  /// Integer frequency of half-spectrum index i along `axis`. Along axis 3 the
  /// half layout only stores i in [0, n3/2]; i = n3/2 is reported as -n3/2.
  int frequency(int axis, int i) const {
    if (axis == 2 && i == n_[2] / 2) return -n_[2] / 2;
    return frequencies_[axis][i];
  }

  bool is_nyquist(int axis, int i) const { return frequency(axis, i) == -n_[axis] / 2; }

  /// Wavenumber entering every derivative and multiplier symbol. The Nyquist
  /// wavenumber is replaced by zero.
  double symbol_wavenumber(int axis, int i) const {
    if (is_nyquist(axis, i)) return 0.0;
    return frequency(axis, i) * (2.0 * std::numbers::pi / length_);
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.n_ == b.n_ && a.length_ == b.length_;
  }

 private:
  std::array<int, 3> n_{};
  double length_ = 0.0;
  std::array<double, 3> spacing_{};
  std::array<std::vector<int>, 3> frequencies_;
  std::array<std::vector<double>, 3> wavenumbers_;
};

inline Grid make_grid(std::array<int, 3> n, double length = 2.0 * std::numbers::pi) {
  return Grid(n, length);
}

inline Grid make_grid(int n, double length = 2.0 * std::numbers::pi) {
  return Grid({n, n, n}, length);
}

}  // namespace ansnse
