#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "ansnse/initial_data.hpp"
#include "ansnse/log.hpp"
#include "ansnse/solver.hpp"
#include "ansnse/spectral.hpp"

using namespace ansnse;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kPi = std::numbers::pi;

double sup_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

ScalarField zero_mean_noise(const Grid& g, std::uint64_t seed) {
  ShellSpectrum spec;
  spec.kmin = 1;
  spec.kmax = g.n(0) / 3 - 1;
  spec.seed = seed;
  return random_scalar(g, spec);
}

struct WarningCapture {
  std::vector<std::string> messages;
  log::ScopedSink sink{[this](const std::string& m) { messages.push_back(m); }};
};
}  // namespace

TEST_CASE("spectral derivatives of single modes", "[spectral]") {
  const Grid g = make_grid(16);
  const auto s1 = ScalarField::sample(g, [](double x, double, double) { return std::sin(x); });
  const auto c1 = ScalarField::sample(g, [](double x, double, double) { return std::cos(x); });
  CHECK(sup_diff(derivative(s1, 0), c1) < 1e-12);

  const auto c2 = ScalarField::sample(g, [](double, double, double z) { return std::cos(2 * z); });
  const auto ds = ScalarField::sample(g, [](double, double, double z) { return -2 * std::sin(2 * z); });
  CHECK(sup_diff(derivative(c2, 2), ds) < 1e-12);

  const auto one = ScalarField::constant(g, 3.5);
  for (int axis = 0; axis < 3; ++axis) CHECK(derivative(one, axis).max_abs() == 0.0);
}

TEST_CASE("derivative along x3 and the i*xi3 multiplier agree bitwise", "[spectral]") {
  const Grid g = make_grid(16);
  const ScalarField f = zero_mean_noise(g, 5);
  const ScalarField a = derivative(f, 2);
  const ScalarField b = apply_multiplier(f, MultiplierSpec::derivative(2));
  for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("fractional and anisotropic multipliers on single modes", "[spectral]") {
  const Grid g = make_grid(16);
  const auto s1 = ScalarField::sample(g, [](double x, double, double) { return std::sin(x); });
  CHECK(sup_diff(apply_multiplier(s1, MultiplierSpec::full(2.0)), s1) < 1e-12);

  const auto s3 = ScalarField::sample(g, [](double, double, double z) { return std::sin(z); });
  CHECK(apply_multiplier(s3, MultiplierSpec::horizontal(1.0)).max_abs() < 1e-12);

  const auto s23 = ScalarField::sample(g, [](double, double, double z) { return std::sin(2 * z); });
  CHECK(sup_diff(apply_multiplier(s23, MultiplierSpec::vertical(1.0)), s23.scaled(2.0)) < 1e-12);

  // |xi| = sqrt(2) on sin(x1) sin(x2)
  const auto s12 = ScalarField::sample(g, [](double x, double y, double) { return std::sin(x) * std::sin(y); });
  CHECK(sup_diff(apply_multiplier(s12, MultiplierSpec::full(1.0)), s12.scaled(std::sqrt(2.0))) < 1e-12);
  CHECK(sup_diff(apply_multiplier(s12, MultiplierSpec::full(-0.5)), s12.scaled(std::pow(2.0, -0.25))) < 1e-12);
}

TEST_CASE("multiplier exponents compose", "[spectral]") {
  const Grid g = make_grid(16);
  const ScalarField f = zero_mean_noise(g, 9);
  for (double s : {-2.0, -0.7, 0.5, 2.0}) {
    for (double t : {-1.3, 0.25, 1.0}) {
      const auto lhs = apply_multiplier(apply_multiplier(f, MultiplierSpec::full(t)), MultiplierSpec::full(s));
      const auto rhs = apply_multiplier(f, MultiplierSpec::full(s + t));
      CHECK(sup_diff(lhs, rhs) < 1e-11 * std::max(1.0, rhs.max_abs()));
    }
  }
}

TEST_CASE("zero-mode policies", "[spectral]") {
  const Grid g = make_grid(8);
  const auto one = ScalarField::constant(g, 1.0);
  {
    WarningCapture cap;
    const ScalarField out = inverse_laplacian(one);
    CHECK(out.max_abs() == 0.0);
    CHECK(cap.messages.size() == 1);
  }
  CHECK_THROWS_AS(apply_multiplier(one, MultiplierSpec::inverse_laplacian(ZeroModePolicy::error)), ZeroModeError);
  CHECK_THROWS_AS(apply_multiplier(one, MultiplierSpec::full(-1.0, ZeroModePolicy::error)), ZeroModeError);
  // s > 0 and zero-mean inputs need no policy
  const auto s1 = ScalarField::sample(g, [](double x, double, double) { return std::sin(x); });
  {
    WarningCapture cap;
    apply_multiplier(s1, MultiplierSpec::full(-1.0, ZeroModePolicy::error));
    apply_multiplier(one, MultiplierSpec::full(1.0, ZeroModePolicy::error));
    CHECK(cap.messages.empty());
  }
  // horizontal negative power on a columnar mode is singular
  const auto s3 = ScalarField::sample(g, [](double, double, double z) { return std::sin(z); });
  CHECK_THROWS_AS(apply_multiplier(s3, MultiplierSpec::horizontal(-1.0, ZeroModePolicy::error)), ZeroModeError);
  CHECK_THROWS_AS(apply_multiplier(s1, MultiplierSpec::full(std::nan(""))), InvalidExponentError);
}

TEST_CASE("inverse laplacian", "[spectral]") {
  const Grid g = make_grid(16);
  const auto s1 = ScalarField::sample(g, [](double x, double, double) { return std::sin(x); });
  CHECK(sup_diff(inverse_laplacian(s1), s1.scaled(-1.0)) < 1e-12);

  WarningCapture cap;
  const ScalarField f = zero_mean_noise(g, 3) + ScalarField::constant(g, 0.25);
  const ScalarField back = laplacian(inverse_laplacian(f));
  const ScalarField expect = f - ScalarField::constant(g, f.mean());
  CHECK(lp_norm(back - expect, 2.0) < 1e-11 * lp_norm(expect, 2.0));
  CHECK(std::abs(inverse_laplacian(f).mean()) < 1e-14);
}

TEST_CASE("leray projection", "[spectral]") {
  const Grid g = make_grid(16);
  const auto phi = ScalarField::sample(g, [](double x, double y, double) { return std::sin(x) * std::sin(y); });
  CHECK(lp_norm(leray_project(gradient(phi)), kInfinity) < 1e-12);

  ShellSpectrum spec;
  spec.kmax = 4;
  spec.seed = 1;
  const VectorField3 u = random_solenoidal(g, spec);
  CHECK(lp_norm(leray_project(u) - u, kInfinity) < 1e-12);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::array<ScalarField, 3> comps;
  for (auto& c : comps) {
    std::vector<double> v(g.size());
    for (auto& x : v) x = nd(rng);
    c = ScalarField(g, std::move(v));
  }
  const VectorField3 v(comps[0], comps[1], comps[2]);
  const VectorField3 pv = leray_project(v);
  CHECK(lp_norm(leray_project(pv) - pv, kInfinity) < 1e-12);
  CHECK(divergence(pv).max_abs() < 1e-11 * lp_norm(v, 2.0));
}

TEST_CASE("two-thirds dealiasing", "[spectral]") {
  const Grid g = make_grid(16);
  const auto k6 = ScalarField::sample(g, [](double x, double, double) { return std::cos(6 * x); });
  CHECK(dealias(k6).max_abs() < 1e-14);
  const auto k111 = ScalarField::sample(g, [](double x, double y, double z) { return std::sin(x + y + z); });
  const ScalarField d = dealias(k111);
  CHECK((d - k111).max_abs() < 1e-14);
  const auto a = k111.spectrum(), b = d.spectrum();
  const std::size_t kept = g.spectral_index(1, 1, 1);
  CHECK(a[kept] == b[kept]);
  CHECK(survives_dealiasing(g, 5, 0, 0));
  CHECK_FALSE(survives_dealiasing(g, 6, 0, 0));
  CHECK_FALSE(survives_dealiasing(g, 10, 0, 0));  // frequency -6

  // realness: the inverse of the truncated spectrum has no imaginary residue
  const ScalarField f = zero_mean_noise(g, 2) + k6;
  Coefficients c = f.spectrum();
  dealias_in_place(g, c);
  for (int i1 = 0; i1 < 16; ++i1)
    for (int i2 = 0; i2 < 16; ++i2) {
      const auto z = c[g.spectral_index(i1, i2, 0)];
      const auto w = c[g.spectral_index((16 - i1) % 16, (16 - i2) % 16, 0)];
      REQUIRE(std::abs(z - std::conj(w)) < 1e-14);
    }
}

TEST_CASE("lebesgue norms by quadrature", "[spectral]") {
  const Grid g = make_grid(16);
  const double vol = std::pow(2 * kPi, 3);
  CHECK_THAT(lp_norm(ScalarField::constant(g, 1.0), 2.0), WithinRel(std::pow(2 * kPi, 1.5), 1e-14));
  const auto s1 = ScalarField::sample(g, [](double x, double, double) { return std::sin(x); });
  CHECK_THAT(lp_norm(s1, 2.0), WithinRel(std::sqrt(vol / 2.0), 1e-12));
  CHECK_THAT(lp_norm(s1, kInfinity), WithinAbs(1.0, 1e-15));
  // |sin| has kinks, so compare with the discrete sum: sum_j |sin(2 pi j/n)| = 2 cot(pi/n)
  CHECK_THAT(lp_norm(s1, 1.0), WithinRel(4 * kPi * kPi * (2 * kPi / 16) * 2 / std::tan(kPi / 16), 1e-12));
  CHECK_THROWS_AS(lp_norm(s1, 0.5), InvalidExponentError);
  CHECK_THROWS_AS(lp_norm(s1, std::nan("")), InvalidExponentError);

  // vector norm uses the pointwise euclidean magnitude
  const VectorField3 v(s1, s1, ScalarField::zeros(g));
  CHECK_THAT(lp_norm(v, 2.0), WithinRel(std::sqrt(vol), 1e-12));
}
