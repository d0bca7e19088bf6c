#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ansnse/error.hpp"
#include "ansnse/fft.hpp"
#include "ansnse/grid.hpp"

namespace ansnse {

/// Real samples of a periodic function, optionally carrying the spectral
/// coefficients it was synthesized from. Immutable once built.
class ScalarField {
 public:
  ScalarField() = default;

  ScalarField(Grid grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw InvalidFieldError("sample count does not match the grid");
    }
  }

  static ScalarField zeros(const Grid& grid) {
    return ScalarField(grid, std::vector<double>(grid.size(), 0.0));
  }

  static ScalarField constant(const Grid& grid, double value) {
    return ScalarField(grid, std::vector<double>(grid.size(), value));
  }

  /// Samples f(x1, x2, x3) at every grid node.
  template <class F>
  static ScalarField sample(const Grid& grid, F&& f) {
    std::vector<double> values(grid.size());
    for (int i1 = 0; i1 < grid.n(0); ++i1) {
      const double x1 = grid.coordinate(0, i1);
      for (int i2 = 0; i2 < grid.n(1); ++i2) {
        const double x2 = grid.coordinate(1, i2);
        for (int i3 = 0; i3 < grid.n(2); ++i3) {
          values[grid.index(i1, i2, i3)] = f(x1, x2, grid.coordinate(2, i3));
        }
      }
    }
    return ScalarField(grid, std::move(values));
  }

  /// Synthesizes the samples from half-spectrum coefficients and keeps them.
  static ScalarField from_spectrum(const Grid& grid, Coefficients coeffs) {
    if (coeffs.size() != grid.spectral_size()) {
      throw InvalidFieldError("coefficient count does not match the grid");
    }
    ScalarField f(grid, inverse_transform(grid, coeffs));
    f.spectrum_ = std::move(coeffs);
    return f;
  }

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  bool has_spectrum() const { return spectrum_.has_value(); }

  /// Spectral coefficients (cached copy if present, else a fresh transform).
  Coefficients spectrum() const {
    if (spectrum_) return *spectrum_;
    return forward_transform(grid_, values_);
  }

  bool is_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  double mean() const {
    double sum = 0.0;
    for (double v : values_) sum += v;
    return sum / static_cast<double>(values_.size());
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Pointwise map, dropping any cached spectrum.
  template <class F>
  ScalarField map(F&& f) const {
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(), std::forward<F>(f));
    return ScalarField(grid_, std::move(out));
  }

  ScalarField scaled(double factor) const {
    ScalarField out = map([factor](double v) { return factor * v; });
    if (spectrum_) {
      Coefficients c = *spectrum_;
      for (auto& z : c) z *= factor;
      out.spectrum_ = std::move(c);
    }
    return out;
  }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    return combine(a, b, std::plus<>{});
  }
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    return combine(a, b, std::minus<>{});
  }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    return combine(a, b, std::multiplies<>{});
  }
  friend ScalarField operator*(double s, const ScalarField& a) { return a.scaled(s); }

 private:
  template <class Op>
  static ScalarField combine(const ScalarField& a, const ScalarField& b, Op op) {
    if (!(a.grid_ == b.grid_)) throw InvalidFieldError("fields live on different grids");
    std::vector<double> out(a.values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a.values_[i], b.values_[i]);
    return ScalarField(a.grid_, std::move(out));
  }

  Grid grid_;
  std::vector<double> values_;
  std::optional<Coefficients> spectrum_;
};

/// Three scalar components on one shared grid.
class VectorField3 {
 public:
  VectorField3() = default;

  VectorField3(ScalarField c1, ScalarField c2, ScalarField c3)
      : components_{std::move(c1), std::move(c2), std::move(c3)} {
    if (!(components_[0].grid() == components_[1].grid()) ||
        !(components_[0].grid() == components_[2].grid())) {
      throw InvalidFieldError("vector components live on different grids");
    }
  }

  static VectorField3 zeros(const Grid& grid) {
    return {ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)};
  }

  const Grid& grid() const { return components_[0].grid(); }
  const ScalarField& operator[](int i) const { return components_[i]; }
  const std::array<ScalarField, 3>& components() const { return components_; }

  bool is_finite() const {
    return components_[0].is_finite() && components_[1].is_finite() && components_[2].is_finite();
  }

  double max_abs() const {
    return std::max({components_[0].max_abs(), components_[1].max_abs(), components_[2].max_abs()});
  }

  VectorField3 scaled(double s) const {
    return {components_[0].scaled(s), components_[1].scaled(s), components_[2].scaled(s)};
  }

  friend VectorField3 operator+(const VectorField3& a, const VectorField3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
  }
  friend VectorField3 operator-(const VectorField3& a, const VectorField3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  }

 private:
  std::array<ScalarField, 3> components_;
};

}  // namespace ansnse
