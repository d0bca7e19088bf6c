#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "ansnse/error.hpp"

namespace ansnse {

/// Arbitrary precision, always reduced, positive denominator.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational rat(long long num, long long den = 1) { return Rational(num, den); }

/// Parses "n", "-n" or "n/d".
inline Rational parse_rational(const std::string& text) {
  static const std::regex pattern(R"(\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw FormatError("not a rational literal: '" + text + "'");
  const BigInt num(m[1].str());
  const BigInt den(m[2].matched ? m[2].str() : std::string("1"));
  if (den == 0) throw FormatError("zero denominator in '" + text + "'");
  return Rational(num, den);
}

inline std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << numerator(r);
  if (denominator(r) != 1) os << '/' << denominator(r);
  return os.str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// A rational or +infinity.
class ExtendedRational {
 public:
  ExtendedRational(Rational v) : value_(std::move(v)) {}  // NOLINT(implicit)
  static ExtendedRational infinity() { return ExtendedRational(); }

  bool is_infinite() const { return !value_.has_value(); }
  const Rational& value() const {
    if (!value_) throw RangeError("value is infinite");
    return *value_;
  }
  std::string str() const { return value_ ? to_string(*value_) : "inf"; }

  friend bool operator==(const ExtendedRational& a, const ExtendedRational& b) {
    return a.value_ == b.value_;
  }

 private:
  ExtendedRational() = default;
  std::optional<Rational> value_;
};

/// p with 2/p + 3/q = 2.
inline Rational serrin_pair(const Rational& q) {
  if (q <= rat(3, 2)) {
    throw RangeError("serrin_pair needs q > 3/2 (q = " + to_string(q) +
                     "); q = 3/2 is the L^inf-in-time borderline");
  }
  return 2 * q / (2 * q - 3);
}

struct Lemma22Exponents {
  Rational s;
  Rational a;
};

/// Solves 1/2 - 1/b = s and 3(1/a - 1/2) = 2/s - 4 for given b > 2, and
/// checks 1 <= a < 2. Admissible b form the interval [22/3, inf).
inline Lemma22Exponents lemma22_exponents(const Rational& b) {
  if (b <= 2) throw AdmissibilityError("lemma22 needs b > 2 (b = " + to_string(b) + ")");
  const Rational s = rat(1, 2) - 1 / b;
  const Rational inv_a = (2 / s - 4) / 3 + rat(1, 2);
  if (inv_a <= 0) throw AdmissibilityError("no finite a for b = " + to_string(b));
  const Rational a = 1 / inv_a;
  if (a < 1) {
    throw AdmissibilityError("constraint 1 <= a violated: b = " + to_string(b) + " gives a = " +
                             to_string(a) + "; admissible b lies in [22/3, inf)");
  }
  if (a >= 2) {
    throw AdmissibilityError("constraint a < 2 violated: b = " + to_string(b) + " gives a = " +
                             to_string(a));
  }
  return {s, a};
}

struct ExponentSet {
  Rational q;
  ExtendedRational p = Rational(0);
  Rational s;
  Rational kappa;
  Rational a;
  ExtendedRational b = Rational(0);
  Rational theta;
  /// q = 3/2: the Young step closes only under smallness.
  bool degenerate = false;
  /// a >= 2: outside the nominal lemma22 window, see validate_identities.
  bool a_at_least_two = false;
};

/// Exponent choices for the J2 estimate, 3/2 <= q < 2.
inline ExponentSet j2_exponents(const Rational& q) {
  if (q < rat(3, 2) || q >= 2) {
    throw RangeError("j2_exponents needs 3/2 <= q < 2 (q = " + to_string(q) + ")");
  }
  ExponentSet e;
  e.q = q;
  e.degenerate = q == rat(3, 2);
  e.p = e.degenerate ? ExtendedRational::infinity() : ExtendedRational(serrin_pair(q));
  e.s = 4 * q / (5 * q + 6);
  e.kappa = 5 * (3 - q) / (7 * q - 3);
  const Rational inv_b = rat(1, 2) - e.s;
  e.b = inv_b == 0 ? ExtendedRational::infinity() : ExtendedRational(1 / inv_b);
  e.a = (12 * e.kappa + 20) / (20 * e.s + 15 * e.kappa - 5);
  e.theta = (3 * e.kappa + 15 - 10 * e.s) / (6 * e.kappa + 10);

  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw AdmissibilityError("q = " + to_string(q) + ": " + what);
  };
  require(e.s > 0 && e.s < rat(1, 2), "0 < s < 1/2 fails");
  require(!e.b.is_infinite() && e.b.value() > 2, "2 < b < inf fails");
  require(e.kappa > 0 && e.kappa <= 1, "0 < kappa <= 1 fails");
  require(e.theta > 0 && e.theta < 1, "0 < theta < 1 fails");
  require(e.a >= 1, "1 <= a fails");
  require(e.a > q && e.a < 6, "q < a < 6 (interpolation between L^q and L^6) fails");
  e.a_at_least_two = e.a >= 2;
  return e;
}

/// Exponent of ||d3 u|| collected by the J2 estimate before the Young step.
inline Rational total_d3u_exponent(const ExponentSet& e) {
  return (1 + 3 * e.kappa / 5) * e.theta + e.s;
}

/// Exponent D of the dissipative factors in the J2 estimate.
inline Rational dissipation_exponent(const ExponentSet& e) {
  return (1 + 3 * e.kappa / 5) * (1 - e.theta) + (1 - e.s) + 6 * e.kappa / 5;
}

struct IdentityCheck {
  std::string name;
  Rational lhs;
  Rational rhs;
  bool passed() const { return lhs == rhs; }
};

struct ValidationReport {
  Rational q;
  std::vector<IdentityCheck> checks;
  bool degenerate = false;
  std::optional<Rational> recovered_p;  // from the Young step
  std::optional<ExponentSet> exponents;  // for q in [3/2, 2)

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed()) return false;
    return true;
  }
};

/// Checks, in exact arithmetic, every Hölder/Young exponent relation the
/// estimates at exponent q rely on. q in [3/2, 2) covers the J2 bookkeeping;
/// q in [2, 6] covers the |u3|^{9/4} estimates.
inline ValidationReport validate_identities(const Rational& q) {
  ValidationReport r;
  r.q = q;
  if (q >= rat(3, 2) && q < 2) {
    const ExponentSet e = j2_exponents(q);
    r.exponents = e;
    r.degenerate = e.degenerate;
    const Rational& b = e.b.value();
    r.checks.push_back({"holder_partition",
                        1 / e.a + 1 / b + (3 - 3 * e.kappa) / 4 + 3 * e.kappa / (5 * e.a), rat(1)});
    const Rational D = dissipation_exponent(e);
    r.checks.push_back({"dissipation_exponent", 2 - D, (3 - 3 * e.kappa) / 2});
    if (e.degenerate) {
      r.checks.push_back({"degenerate_D", D, rat(2)});
    } else {
      const Rational recovered = total_d3u_exponent(e) * 2 / (2 - D);
      r.recovered_p = recovered;
      r.checks.push_back({"young_recovery", recovered, serrin_pair(q)});
    }
    r.checks.push_back({"interpolation", 1 / e.a, e.theta / q + (1 - e.theta) / 6});
    r.checks.push_back({"lemma22_link", lemma22_exponents(b).a, q});
    r.checks.push_back({"lemma22_s", lemma22_exponents(b).s, e.s});
    return r;
  }
  if (q >= 2 && q <= 6) {
    r.checks.push_back({"holder_u94", 1 / q + 1 / (3 * q) + rat(14, 9) * (9 * q - 12) / (14 * q), rat(1)});
    r.checks.push_back({"holder_j1_split", (2 * q + 7) / (9 * q) + (7 * q - 7) / (9 * q), rat(1)});
    r.checks.push_back({"j1_norm_match", rat(9, 4) * (2 * q) / (q - 1), 9 * q / (2 * q - 2)});
    // Young with exponents 3q/(6-q) and 3q/(4q-6) on the J2 line.
    r.checks.push_back({"young_conjugate", (6 - q) / (3 * q) + (4 * q - 6) / (3 * q), rat(1)});
    const Rational recovered = rat(4, 3) * 3 * q / (4 * q - 6);
    r.recovered_p = recovered;
    r.checks.push_back({"young_recovery", recovered, serrin_pair(q)});
    return r;
  }
  throw RangeError("validate_identities needs q in [3/2, 6] (q = " + to_string(q) + ")");
}

}  // namespace ansnse
