#pragma once

// Closed real intervals, used to push quadrature error bars through the
// polynomial and power expressions that make up the operator values.

#include <algorithm>
#include <cmath>
#include <limits>

namespace htype {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double v) : lo(v), hi(v) {}  // NOLINT(google-explicit-constructor)
  Interval(double l, double h) : lo(l), hi(h) {}

  static Interval around(double mid, double radius)
  {
    const double r = std::abs(radius);
    return {mid - r, mid + r};
  }
  static Interval whole()
  {
    const double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
  }

  double mid() const { return 0.5 * (lo + hi); }
  double radius() const { return 0.5 * (hi - lo); }
  double mag() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }

  /// Largest distance from `v` to a point of the interval.
  double deviation_from(double v) const { return std::max(std::abs(v - lo), std::abs(hi - v)); }
};

inline Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval operator-(Interval a, Interval b) { return {a.lo - b.hi, a.hi - b.lo}; }
inline Interval operator-(Interval a) { return {-a.hi, -a.lo}; }

inline Interval operator*(Interval a, Interval b)
{
  const double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

inline Interval& operator+=(Interval& a, Interval b) { return a = a + b; }

inline Interval sqr(Interval a)
{
  if (a.lo >= 0.0) return {a.lo * a.lo, a.hi * a.hi};
  if (a.hi <= 0.0) return {a.hi * a.hi, a.lo * a.lo};
  return {0.0, std::max(a.lo * a.lo, a.hi * a.hi)};
}

inline Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

/// x^e for x >= 0 (negative parts are clipped to 0). Monotone in x.
inline Interval pow_nonneg(Interval x, double e)
{
  const double lo = std::max(0.0, x.lo);
  const double hi = std::max(0.0, x.hi);
  if (e >= 0.0) return {std::pow(lo, e), std::pow(hi, e)};
  return {std::pow(hi, e), lo == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(lo, e)};
}

/// a / b, b bounded away from zero; otherwise the whole line.
inline Interval divide(Interval a, Interval b)
{
  if (b.lo <= 0.0 && b.hi >= 0.0) return Interval::whole();
  return a * Interval{1.0 / b.hi, 1.0 / b.lo};
}

}  // namespace htype
