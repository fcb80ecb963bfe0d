#pragma once

// Riesz potentials F(g) = int rho(g') N(g'^-1 g)^q dg' (q = -alpha, or log N
// when q = 0) of bump densities and finite atomic measures, their horizontal
// jets, the K field and the bracket that decides the sign of L_p F.
//
// Writing w = g'^-1 g, F(g) = int rho(g w^-1) k(w) dw: the kernel singularity
// sits at w = 0 and left-invariance puts all derivatives on k.

#include "htype/interval.hpp"
#include "htype/operators.hpp"
#include "htype/parallel.hpp"
#include "htype/quadrature.hpp"

#include <algorithm>
#include <chrono>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace htype {

/// amplitude * max(0, 1 - d^2/radius^2)^3, d the Euclidean coordinate distance.
struct Bump {
  GroupPoint center;
  double radius = 1.0;
  double amplitude = 1.0;

  double value(const GroupPoint& x) const
  {
    const double s = ((x.z - center.z).squaredNorm() + (x.t - center.t).squaredNorm()) / (radius * radius);
    if (s >= 1.0) return 0.0;
    const double u = 1.0 - s;
    return amplitude * u * u * u;
  }

  /// Euclidean Hessian in (z, t) coordinates, dimension m + k.
  Eigen::MatrixXd coordinate_hessian(const GroupPoint& x) const
  {
    const auto m = x.z.size();
    const auto k = x.t.size();
    Eigen::VectorXd d(m + k);
    d << x.z - center.z, x.t - center.t;
    const double r2 = radius * radius;
    const double s = d.squaredNorm() / r2;
    if (s >= 1.0) return Eigen::MatrixXd::Zero(m + k, m + k);
    const double u = 1.0 - s;
    const Eigen::VectorXd ds = (2.0 / r2) * d;
    Eigen::MatrixXd h = (6.0 * amplitude * u) * (ds * ds.transpose());
    h.diagonal().array() -= 3.0 * amplitude * u * u * (2.0 / r2);
    return h;
  }

  void validate(const GroupSpec& spec) const
  {
    check_dims(spec, center);
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("bump radius must be positive");
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw DomainError("bump amplitude must be nonnegative");
  }
};

struct Density {
  std::vector<Bump> bumps;

  double value(const GroupPoint& x) const
  {
    double v = 0.0;
    for (const Bump& b : bumps) v += b.value(x);
    return v;
  }

  /// Coordinate hull of the bump supports.
  Box support_box(const GroupSpec& spec) const
  {
    const int d = spec.dim();
    Box box{std::vector<double>(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity()),
            std::vector<double>(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity())};
    std::vector<double> c(static_cast<std::size_t>(d));
    for (const Bump& b : bumps) {
      b.center.to_coords(c.data());
      for (std::size_t a = 0; a < c.size(); ++a) {
        box.lower[a] = std::min(box.lower[a], c[a] - b.radius);
        box.upper[a] = std::max(box.upper[a], c[a] + b.radius);
      }
    }
    return box;
  }

  void validate(const GroupSpec& spec) const
  {
    if (bumps.empty()) throw DomainError("density needs at least one bump");
    for (const Bump& b : bumps) b.validate(spec);
  }
};

struct Atom {
  double weight = 1.0;
  GroupPoint point;
};

struct DiscreteMeasure {
  std::vector<Atom> atoms;

  void validate(const GroupSpec& spec) const
  {
    if (atoms.empty()) throw DomainError("measure needs at least one atom");
    for (const Atom& a : atoms) {
      check_dims(spec, a.point);
      if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) throw DomainError("atom weights must be nonnegative");
    }
  }
};

using Source = std::variant<Density, DiscreteMeasure>;

inline void validate_source(const GroupSpec& spec, const Source& source)
{
  std::visit([&](const auto& s) { s.validate(spec); }, source);
}

/// Kernel N^q, or log N when `log` is set.
struct RieszKernel {
  double q = -1.0;
  bool log = false;

  Kernel jet_kernel() const { return log ? Kernel::log_N() : Kernel::N_pow(q); }
  /// Exponent used in derivative formulas; the log kernel behaves as q = 0
  /// with the overall factor q removed.
  double q_eff() const { return log ? 0.0 : q; }
  double factor() const { return log ? 1.0 : q; }
};

enum class CaseKind { super, sub, log, infinity };

inline std::string to_string(CaseKind k)
{
  switch (k) {
    case CaseKind::super: return "super";
    case CaseKind::sub: return "sub";
    case CaseKind::log: return "log";
    case CaseKind::infinity: return "infinity";
  }
  return "?";
}

/// Tolerance used when comparing (p, alpha) against the theorem bounds.
inline constexpr double kCaseTolerance = 1e-12;

/// A (p, alpha) pair together with the case of the theorem it falls under.
struct TheoremCase {
  double p = 3.0;  // +infinity for the L_inf branch
  double alpha = 0.5;
  CaseKind kind = CaseKind::super;
  double q = -0.5;
  bool exploratory = false;  // (p, alpha) lies outside the theorem's range

  bool p_infinite() const { return std::isinf(p); }
  RieszKernel kernel() const { return {q, kind == CaseKind::log}; }

  /// Sign the theorem predicts for the operator value: -1 (<= 0) or +1 (>= 0).
  int predicted_sign() const { return kind == CaseKind::super ? -1 : 1; }

  /// Classifies (p, alpha) for a group of homogeneous dimension Q. Pairs
  /// outside the theorem are rejected unless `allow_exploratory`.
  static TheoremCase classify(int Q, double p, double alpha, bool allow_exploratory = false)
  {
    if (!std::isfinite(alpha)) throw DomainError("alpha must be finite");
    if (!(p > 2.0)) throw DomainError("p must exceed 2");
    TheoremCase c;
    c.p = p;
    c.alpha = alpha;
    c.q = -alpha;
    std::string why;
    if (std::isinf(p)) {
      c.kind = CaseKind::infinity;
      if (!(-alpha >= 1.0 - kCaseTolerance)) why = "p = infinity needs -alpha >= 1";
    } else if (std::abs(p - Q) <= kCaseTolerance * Q) {
      c.kind = CaseKind::log;
      c.p = Q;
      if (alpha != 0.0) why = "p = Q needs alpha = 0 (logarithmic kernel)";
    } else if (p < Q) {
      c.kind = CaseKind::super;
      const double bound = (Q - p) / (p - 1.0);
      if (!(alpha > 0.0) || alpha > bound * (1.0 + kCaseTolerance) + kCaseTolerance)
        why = "2 < p < Q needs 0 < alpha <= (Q-p)/(p-1) = " + std::to_string(bound);
    } else {
      c.kind = CaseKind::sub;
      const double bound = (p - Q) / (p - 1.0);
      if (-alpha < bound * (1.0 - kCaseTolerance) - kCaseTolerance)
        why = "p > Q needs -alpha >= (p-Q)/(p-1) = " + std::to_string(bound);
    }
    if (!(alpha < Q)) why = "alpha must be below Q";
    if (!why.empty()) {
      if (!allow_exploratory || !(alpha < Q)) throw DomainError("(p, alpha) outside the theorem: " + why);
      c.exploratory = true;
    }
    return c;
  }
};

/// Jet together with absolute error bars on every entry.
struct RieszJet {
  HorizontalJet jet;
  HorizontalJet error;
  long cells = 0;
  bool converged = true;
};

struct FieldK {
  Vector value;
  Vector error;
  bool converged = true;
};

namespace detail {

/// Upper bound for the volume of the unit gauge ball: it lies in [-1,1]^m x [-1/4,1/4]^k.
inline double gauge_ball_volume_bound(const GroupSpec& spec)
{
  return std::pow(2.0, spec.m()) * std::pow(0.5, spec.k());
}

/// U_r = [-r,r]^m x [-r^2,r^2]^k is contained in {N <= c r}.
inline double shell_gauge_factor(const GroupSpec& spec)
{
  return std::pow(double(spec.m()) * spec.m() + 16.0 * spec.k(), 0.25);
}

/// Bound on int_{N<R} N^beta, beta > -Q.
inline double power_ball_bound(const GroupSpec& spec, double beta, double R)
{
  const double Q = spec.Q();
  return gauge_ball_volume_bound(spec) * Q / (Q + beta) * std::pow(R, Q + beta);
}

/// Bound on int_{N<R} |log N|.
inline double log_ball_bound(const GroupSpec& spec, double R)
{
  const double Q = spec.Q();
  const double V = gauge_ball_volume_bound(spec);
  if (R <= 1.0) return V * std::pow(R, Q) * (-std::log(R) + 1.0 / Q);
  return V * (std::pow(R, Q) * (std::log(R) - 1.0 / Q) + 2.0 / Q);
}

inline int sym_size(int m) { return m * (m + 1) / 2; }

/// w-box containing {w : g w^-1 in supp(bump)}, padded so that a nearby
/// pole sits well inside it (the integrand vanishes on the padding).
inline Box bump_w_box(const GroupSpec& spec, const Bump& bump, const GroupPoint& g)
{
  const GroupPoint c = multiply(spec, inverse(bump.center), g);
  // |x - c| < r gives |t_w - t_c| < r sqrt(1 + |z_g|^2 / 4) for w = x^-1 g.
  const double ht = bump.radius * std::sqrt(1.0 + 0.25 * g.z.squaredNorm());
  const int m = spec.m();
  Box box{std::vector<double>(static_cast<std::size_t>(spec.dim())),
          std::vector<double>(static_cast<std::size_t>(spec.dim()))};
  for (int a = 0; a < spec.dim(); ++a) {
    const double mid = a < m ? c.z(a) : c.t(a - m);
    const double half = a < m ? bump.radius : ht;
    box.lower[static_cast<std::size_t>(a)] = std::min(mid - half, -half);
    box.upper[static_cast<std::size_t>(a)] = std::max(mid + half, half);
  }
  return box;
}

/// Point of the ball of radius r about c with polar coordinates
/// (s, theta_1..theta_{D-1}), s in [0, 1]; returns the Jacobian.
inline double polar_point(const Bump& bump, std::span<const double> v, GroupPoint& x)
{
  const auto m = x.z.size();
  const auto D = static_cast<int>(v.size());
  const double rad = bump.radius * v[0];
  double jac = std::pow(bump.radius, D) * std::pow(v[0], D - 1);
  double sin_prod = 1.0;
  auto put = [&](int a, double val) {
    if (a < m) x.z(a) = bump.center.z(a) + rad * val;
    else x.t(a - m) = bump.center.t(a - m) + rad * val;
  };
  for (int j = 1; j < D; ++j) {
    const double th = v[static_cast<std::size_t>(j)];
    put(j - 1, sin_prod * std::cos(th));
    if (j < D - 1) jac *= std::pow(std::sin(th), D - 1 - j);
    sin_prod *= std::sin(th);
  }
  put(D - 1, sin_prod);
  return jac;
}

/// Integrates `integrand(bump, w, x, rho, out)` with x = g w^-1 and rho the
/// bump value at x, over every bump, summing values and errors.
///
/// A bump containing g is integrated in w around the kernel pole. Otherwise
/// the integrand is smooth on the bump's support and polar coordinates about
/// its centre turn the edge of the support into a coordinate face.
template <class Integrand, class Tail>
VectorIntegralResult integrate_density(const GroupSpec& spec, const Density& density, const GroupPoint& g,
                                       int ncomp, const QuadratureConfig& quad, Integrand&& integrand,
                                       Tail&& tail)
{
  const auto nc = static_cast<std::size_t>(ncomp);
  VectorIntegralResult total;
  total.value.assign(nc, 0.0);
  total.error.assign(nc, 0.0);
  total.converged = true;
  auto accumulate = [&](const VectorIntegralResult& r) {
    for (std::size_t c = 0; c < nc; ++c) {
      total.value[c] += r.value[c];
      total.error[c] += r.error[c];
    }
    total.cells_used += r.cells_used;
    total.converged = total.converged && r.converged;
  };
  const int m = spec.m();
  const int k = spec.k();
  const int D = spec.dim();
  for (const Bump& bump : density.bumps) {
    if (bump.amplitude == 0.0) continue;
    const double d2 = (g.z - bump.center.z).squaredNorm() + (g.t - bump.center.t).squaredNorm();
    if (d2 < bump.radius * bump.radius) {
      VectorIntegrand f = [&](std::span<const double> v, std::span<double> out) {
        const GroupPoint w = GroupPoint::from_coords(spec, v.data());
        const GroupPoint x = multiply(spec, g, inverse(w));
        const double rho = bump.value(x);
        if (rho == 0.0 || w.is_identity()) {
          std::fill(out.begin(), out.end(), 0.0);
          return;
        }
        integrand(bump, w, x, rho, out);
      };
      TailBound tb = [&](double r, std::span<double> bound) { tail(bump, r, bound); };
      accumulate(integrate_with_pole(spec, f, ncomp, bump_w_box(spec, bump, g), quad, tb));
      continue;
    }
    VectorIntegrand f = [&](std::span<const double> v, std::span<double> out) {
      GroupPoint x{Vector(m), Vector(k)};
      const double jac = polar_point(bump, v, x);
      const double rho = bump.value(x);
      const GroupPoint w = multiply(spec, inverse(x), g);
      if (jac == 0.0 || rho == 0.0 || w.is_identity()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
      }
      integrand(bump, w, x, rho, out);
      for (double& o : out) o *= jac;
    };
    Box polar{std::vector<double>(static_cast<std::size_t>(D), 0.0),
              std::vector<double>(static_cast<std::size_t>(D), std::numbers::pi)};
    polar.upper[0] = 1.0;
    polar.upper[static_cast<std::size_t>(D - 1)] = 2.0 * std::numbers::pi;
    AdaptiveCubature cub(f, D, ncomp, quad);
    cub.add_cell(polar);
    cub.refine();
    accumulate(cub.result());
  }
  return total;
}

inline void check_off_atoms(const DiscreteMeasure& mu, const GroupPoint& g)
{
  for (const Atom& a : mu.atoms) {
    if (a.weight != 0.0 && a.point == g) throw SingularityError("potential evaluated at an atom");
  }
}

// Floating-point model for exact atom sums: relative 64 eps of the absolute sum.
inline constexpr double kAtomRounding = 64.0 * std::numeric_limits<double>::epsilon();

}  // namespace detail

/// Certified value of F(g).
inline IntegralResult riesz_value_result(const GroupSpec& spec, const Source& source, const RieszKernel& kernel,
                                         const GroupPoint& g, const QuadratureConfig& quad)
{
  check_dims(spec, g);
  validate_source(spec, source);
  if (const auto* mu = std::get_if<DiscreteMeasure>(&source)) {
    detail::check_off_atoms(*mu, g);
    double v = 0.0, mag = 0.0;
    for (const Atom& a : mu->atoms) {
      if (a.weight == 0.0) continue;
      const double n = gauge_norm(multiply(spec, inverse(a.point), g));
      const double term = a.weight * (kernel.log ? std::log(n) : std::pow(n, kernel.q));
      v += term;
      mag += std::abs(term);
    }
    return {v, detail::kAtomRounding * mag, 0, true};
  }
  const Density& rho = std::get<Density>(source);
  quad.validate();
  const double R = detail::shell_gauge_factor(spec);
  const VectorIntegralResult r = detail::integrate_density(
      spec, rho, g, 1, quad,
      [&](const Bump&, const GroupPoint& w, const GroupPoint&, double dens, std::span<double> out) {
        const double n = gauge_norm(w);
        out[0] = dens * (kernel.log ? std::log(n) : std::pow(n, kernel.q));
      },
      [&](const Bump& b, double r, std::span<double> bound) {
        bound[0] = b.amplitude * (kernel.log ? detail::log_ball_bound(spec, R * r)
                                             : detail::power_ball_bound(spec, kernel.q, R * r));
      });
  return r.component(0);
}

inline double riesz_value(const GroupSpec& spec, const Source& source, const TheoremCase& c, const GroupPoint& g,
                          const QuadratureConfig& quad)
{
  const IntegralResult r = riesz_value_result(spec, source, c.kernel(), g, quad);
  if (!r.converged) throw QuadratureError("Riesz potential quadrature did not converge");
  return r.value;
}

/// Jet of F by differentiation under the integral sign.
inline RieszJet riesz_jet_result(const GroupSpec& spec, const Source& source, const RieszKernel& kernel,
                                 const GroupPoint& g, const QuadratureConfig& quad)
{
  check_dims(spec, g);
  validate_source(spec, source);
  const int m = spec.m();
  RieszJet out{HorizontalJet::zero(m), HorizontalJet::zero(m), 0, true};
  const Kernel jk = kernel.jet_kernel();

  if (const auto* mu = std::get_if<DiscreteMeasure>(&source)) {
    detail::check_off_atoms(*mu, g);
    HorizontalJet mag = HorizontalJet::zero(m);
    for (const Atom& a : mu->atoms) {
      if (a.weight == 0.0) continue;
      HorizontalJet j = analytic_jet(spec, multiply(spec, inverse(a.point), g), jk);
      j *= a.weight;
      out.jet += j;
      mag.value += std::abs(j.value);
      mag.grad += j.grad.cwiseAbs();
      mag.hess += j.hess.cwiseAbs();
    }
    mag *= detail::kAtomRounding;
    out.error = mag;
    return out;
  }

  const Density& rho = std::get<Density>(source);
  quad.validate();
  const int ns = detail::sym_size(m);
  const int ncomp = 1 + m + ns;
  const double R = detail::shell_gauge_factor(spec);
  const double q = kernel.q_eff();
  const double cg = kernel.log ? 1.0 : std::abs(q);
  const double ch = kernel.log ? 7.0 : std::abs(q) * (std::abs(q - 4.0) + 3.0);
  const VectorIntegralResult r = detail::integrate_density(
      spec, rho, g, ncomp, quad,
      [&](const Bump&, const GroupPoint& w, const GroupPoint&, double dens, std::span<double> o) {
        const HorizontalJet j = analytic_jet(spec, w, jk);
        o[0] = dens * j.value;
        for (int i = 0; i < m; ++i) o[static_cast<std::size_t>(1 + i)] = dens * j.grad(i);
        std::size_t c = static_cast<std::size_t>(1 + m);
        for (int i = 0; i < m; ++i)
          for (int l = i; l < m; ++l) o[c++] = dens * j.hess(i, l);
      },
      [&](const Bump& b, double r, std::span<double> bound) {
        const double Rr = R * r;
        bound[0] = b.amplitude * (kernel.log ? detail::log_ball_bound(spec, Rr)
                                             : detail::power_ball_bound(spec, q, Rr));
        const double bg = b.amplitude * cg * detail::power_ball_bound(spec, q - 1.0, Rr);
        const double bh = b.amplitude * ch * detail::power_ball_bound(spec, q - 2.0, Rr);
        for (int i = 0; i < m; ++i) bound[static_cast<std::size_t>(1 + i)] = bg;
        for (int c = 0; c < ns; ++c) bound[static_cast<std::size_t>(1 + m + c)] = bh;
      });
  out.jet.value = r.value[0];
  out.error.value = r.error[0];
  for (int i = 0; i < m; ++i) {
    out.jet.grad(i) = r.value[static_cast<std::size_t>(1 + i)];
    out.error.grad(i) = r.error[static_cast<std::size_t>(1 + i)];
  }
  std::size_t c = static_cast<std::size_t>(1 + m);
  for (int i = 0; i < m; ++i) {
    for (int l = i; l < m; ++l, ++c) {
      out.jet.hess(i, l) = out.jet.hess(l, i) = r.value[c];
      out.error.hess(i, l) = out.error.hess(l, i) = r.error[c];
    }
  }
  out.cells = r.cells_used;
  out.converged = r.converged;
  return out;
}

inline HorizontalJet riesz_jet(const GroupSpec& spec, const Source& source, const TheoremCase& c,
                               const GroupPoint& g, const QuadratureConfig& quad)
{
  const RieszJet r = riesz_jet_result(spec, source, c.kernel(), g, quad);
  if (!r.converged) throw QuadratureError("Riesz jet quadrature did not converge");
  return r.jet;
}

/// K(g) = int rho(g') N_{g'}(g)^{q-4} A_{g'}(g) dg'.
inline FieldK field_K_result(const GroupSpec& spec, const Source& source, double q, const GroupPoint& g,
                             const QuadratureConfig& quad)
{
  check_dims(spec, g);
  validate_source(spec, source);
  const int m = spec.m();
  FieldK out{Vector::Zero(m), Vector::Zero(m), true};
  auto integrand = [&](const GroupPoint& w) -> Vector {
    const Primitives p = primitives(spec, w);
    return std::pow(p.N, q - 4.0) * p.A;
  };
  if (const auto* mu = std::get_if<DiscreteMeasure>(&source)) {
    detail::check_off_atoms(*mu, g);
    for (const Atom& a : mu->atoms) {
      if (a.weight == 0.0) continue;
      const Vector term = a.weight * integrand(multiply(spec, inverse(a.point), g));
      out.value += term;
      out.error += detail::kAtomRounding * term.cwiseAbs();
    }
    return out;
  }
  const Density& rho = std::get<Density>(source);
  quad.validate();
  const double R = detail::shell_gauge_factor(spec);
  const VectorIntegralResult r = detail::integrate_density(
      spec, rho, g, m, quad,
      [&](const Bump&, const GroupPoint& w, const GroupPoint&, double dens, std::span<double> o) {
        const Vector v = integrand(w);
        for (int i = 0; i < m; ++i) o[static_cast<std::size_t>(i)] = dens * v(i);
      },
      [&](const Bump& b, double r, std::span<double> bound) {
        std::fill(bound.begin(), bound.end(), b.amplitude * detail::power_ball_bound(spec, q - 1.0, R * r));
      });
  for (int i = 0; i < m; ++i) {
    out.value(i) = r.value[static_cast<std::size_t>(i)];
    out.error(i) = r.error[static_cast<std::size_t>(i)];
  }
  out.converged = r.converged;
  return out;
}

inline Vector field_K(const GroupSpec& spec, const Source& source, double q, const GroupPoint& g,
                      const QuadratureConfig& quad)
{
  const FieldK k = field_K_result(spec, source, q, g, quad);
  if (!k.converged) throw QuadratureError("K field quadrature did not converge");
  return k.value;
}

struct BracketBreakdown {
  double bracket = 0.0;
  double cs_part = 0.0;
  double estimate0 = 0.0;
  double I = 0.0;
  double II = 0.0;
};

/// The pointwise quadratic form in (A_1, K) under the single integral.
inline BracketBreakdown bracket_terms(const GroupSpec& spec, double p, double q, const GroupPoint& g_rel,
                                      const Vector& K)
{
  check_dims(spec, g_rel);
  if (K.size() != spec.m()) throw DimensionError("K must have length m");
  if (g_rel.is_identity()) throw SingularityError("bracket evaluated at the identity");
  const Primitives pr = primitives(spec, g_rel);
  const double Q = spec.Q();
  const double AK = pr.A.dot(K);
  const double Kz = K.dot(g_rel.z);
  const Vector KJ = pr.B.transpose() * K;  // <K, J(eps_s) z>
  const double KJt = KJ.dot(g_rel.t);      // <K, J(t) z>
  BracketBreakdown b;
  b.cs_part = (Q + p + q - 4.0) * pr.A.squaredNorm() * K.squaredNorm() + (q - 2.0) * (p - 2.0) * AK * AK;
  b.estimate0 = pr.a * Kz * Kz + pr.a * KJ.squaredNorm() - AK * AK;
  for (int s = 0; s < spec.k(); ++s) {
    const double e = 4.0 * g_rel.t(s) * Kz - pr.psi * KJ(s);
    b.I += e * e;
  }
  b.II = 16.0 * pr.chi * KJ.squaredNorm() - 16.0 * KJt * KJt;
  b.bracket = b.cs_part + 2.0 * (p - 2.0) * b.estimate0;
  return b;
}

/// Matrix M(w) with bracket = K^T M K, so the bracket integral is K^T (int rho N^{q-8} M) K.
inline Matrix bracket_matrix(const GroupSpec& spec, double p, double q, const GroupPoint& w)
{
  const Primitives pr = primitives(spec, w);
  const int m = spec.m();
  const double Q = spec.Q();
  Matrix M = ((Q + p + q - 4.0) * pr.psi * pr.a) * Matrix::Identity(m, m);
  M.noalias() += ((q - 2.0) * (p - 2.0) - 2.0 * (p - 2.0)) * (pr.A * pr.A.transpose());
  M.noalias() += (2.0 * (p - 2.0) * pr.a) * (w.z * w.z.transpose() + pr.B * pr.B.transpose());
  return M;
}

namespace detail {

inline Interval quad_form_iv(const Matrix& H, const Matrix& dH, const Vector& x, const Vector& dx)
{
  Interval s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Interval xi = Interval::around(x(i), dx(i));
    for (Eigen::Index j = 0; j < x.size(); ++j)
      s += xi * Interval::around(H(i, j), dH(i, j)) * Interval::around(x(j), dx(j));
  }
  return s;
}

inline Interval trace_iv(const Matrix& H, const Matrix& dH)
{
  Interval s = 0.0;
  for (Eigen::Index i = 0; i < H.rows(); ++i) s += Interval::around(H(i, i), dH(i, i));
  return s;
}

}  // namespace detail

/// Operator values of a jet with error bars propagated by interval arithmetic.
struct OperatorEstimate {
  double grad_norm = 0.0;
  double sub = 0.0, sub_err = 0.0;
  double inf = 0.0, inf_err = 0.0;
  double plap = 0.0, plap_err = 0.0;  // L_p (zero when p is infinite)
  double scaled = 0.0, scaled_err = 0.0;  // |Xu|^{4-p} L_p u = |Xu|^2 L u + (p-2) L_inf u
  bool critical = false;
};

inline OperatorEstimate estimate_operators(const GroupSpec& spec, const HorizontalJet& jet,
                                           const HorizontalJet& err, double p)
{
  OperatorEstimate e;
  const OperatorTerms t = operator_terms(jet);
  e.grad_norm = t.grad_norm;
  e.sub = t.sub;
  e.inf = t.inf;
  e.critical = is_critical(jet);
  Interval n2 = 0.0;
  for (Eigen::Index i = 0; i < jet.grad.size(); ++i) n2 += sqr(Interval::around(jet.grad(i), err.grad(i)));
  const Interval tr = detail::trace_iv(jet.hess, err.hess);
  const Interval R = detail::quad_form_iv(jet.hess, err.hess, jet.grad, err.grad);
  e.sub_err = tr.deviation_from(e.sub);
  e.inf_err = R.deviation_from(e.inf);
  if (std::isinf(p)) return e;
  e.scaled = t.grad_norm * t.grad_norm * t.sub + (p - 2.0) * t.inf;
  e.scaled_err = (n2 * tr + Interval(p - 2.0) * R).deviation_from(e.scaled);
  e.plap = apply_operator(spec, jet, OperatorSelector::p_laplacian(p));
  // Enclosure 1: |G|^{p-2} (tr + (p-2) rho) with rho the Rayleigh quotient.
  const double hnorm = (jet.hess.cwiseAbs() + err.hess).norm();
  Interval lp = pow_nonneg(n2, 0.5 * (p - 2.0)) * (tr + Interval(p - 2.0) * Interval(-hnorm, hnorm));
  // Enclosure 2: direct formula, valid when |G| is bounded away from 0.
  if (n2.lo > 0.0) {
    const Interval direct = pow_nonneg(n2, 0.5 * (p - 2.0)) * tr +
                            Interval(p - 2.0) * pow_nonneg(n2, 0.5 * (p - 4.0)) * R;
    lp = {std::max(lp.lo, direct.lo), std::min(lp.hi, direct.hi)};
    if (lp.lo > lp.hi) lp = direct;
  }
  e.plap_err = lp.deviation_from(e.plap);
  return e;
}

struct TwoWays {
  double direct = 0.0, direct_err = 0.0;
  double via_bracket = 0.0, via_err = 0.0;
  double grad_norm = 0.0;
  bool skipped = false;  // |XF| <= 1e-8
  bool converged = true;

  double gap() const { return std::abs(direct - via_bracket); }
  double combined_error() const { return direct_err + via_err; }
};

/// |XF|^{4-p} L_p F computed from the jet of F and, independently, as
/// q^3 K^T (int rho_1 N_1^{q-8} M) K with the K field.
inline TwoWays plaplacian_two_ways(const GroupSpec& spec, const Source& source, const TheoremCase& c,
                                   const GroupPoint& g, const QuadratureConfig& quad)
{
  if (c.p_infinite()) throw DomainError("two-route check needs finite p");
  const RieszKernel kernel = c.kernel();
  const double p = c.p;
  const double q = kernel.q_eff();
  const double f3 = kernel.log ? 1.0 : q * q * q;
  const int m = spec.m();
  TwoWays out;

  const RieszJet rj = riesz_jet_result(spec, source, kernel, g, quad);
  out.grad_norm = rj.jet.grad.norm();
  out.converged = rj.converged;
  if (out.grad_norm <= 1e-8) {
    out.skipped = true;
    return out;
  }
  const OperatorEstimate est = estimate_operators(spec, rj.jet, rj.error, p);
  out.direct = est.scaled;
  out.direct_err = est.scaled_err;

  const FieldK K = field_K_result(spec, source, q, g, quad);
  out.converged = out.converged && K.converged;
  Matrix MM = Matrix::Zero(m, m), dMM = Matrix::Zero(m, m);
  if (const auto* mu = std::get_if<DiscreteMeasure>(&source)) {
    for (const Atom& a : mu->atoms) {
      if (a.weight == 0.0) continue;
      const GroupPoint w = multiply(spec, inverse(a.point), g);
      const Matrix term = (a.weight * std::pow(gauge_norm(w), q - 8.0)) * bracket_matrix(spec, p, q, w);
      MM += term;
      dMM += detail::kAtomRounding * term.cwiseAbs();
    }
  } else {
    const Density& rho = std::get<Density>(source);
    const int ns = detail::sym_size(m);
    const double R = detail::shell_gauge_factor(spec);
    const double Q = spec.Q();
    const double cm = std::abs(Q + p + q - 4.0) + std::abs(q - 2.0) * std::abs(p - 2.0) + 4.0 * (p - 2.0);
    const VectorIntegralResult r = detail::integrate_density(
        spec, rho, g, ns, quad,
        [&](const Bump&, const GroupPoint& w, const GroupPoint&, double dens, std::span<double> o) {
          const Matrix M = (dens * std::pow(gauge_norm(w), q - 8.0)) * bracket_matrix(spec, p, q, w);
          std::size_t c2 = 0;
          for (int i = 0; i < m; ++i)
            for (int l = i; l < m; ++l) o[c2++] = M(i, l);
        },
        [&](const Bump& b, double r, std::span<double> bound) {
          std::fill(bound.begin(), bound.end(), b.amplitude * cm * detail::power_ball_bound(spec, q - 2.0, R * r));
        });
    std::size_t c2 = 0;
    for (int i = 0; i < m; ++i) {
      for (int l = i; l < m; ++l, ++c2) {
        MM(i, l) = MM(l, i) = r.value[c2];
        dMM(i, l) = dMM(l, i) = r.error[c2];
      }
    }
    out.converged = out.converged && r.converged;
  }
  out.via_bracket = f3 * K.value.dot(MM * K.value);
  const Interval via = Interval(f3) * detail::quad_form_iv(MM, dMM, K.value, K.error);
  out.via_err = via.deviation_from(out.via_bracket);
  return out;
}

enum class Verdict { pass, fail, skipped, unconverged };

inline std::string to_string(Verdict v)
{
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::skipped: return "skipped";
    case Verdict::unconverged: return "unconverged";
  }
  return "?";
}

struct PointReport {
  GroupPoint g;
  double F = 0.0;
  double F_err = 0.0;
  double grad_norm = 0.0;
  double sub = 0.0;
  double inf = 0.0;
  double plap = 0.0;      // the operator the case is about (L_inf F for p = infinity)
  double error = 0.0;     // propagated error of `plap`
  double tau = 0.0;       // 3 error + floor
  double violation = 0.0; // signed distance to the wrong side: > tau means fail
  Verdict verdict = Verdict::pass;
};

struct VerificationReport {
  TheoremCase theorem_case;
  std::vector<PointReport> points;
  double max_violation = -std::numeric_limits<double>::infinity();
  bool pass = true;
  bool numerical_failure = false;
  double runtime_seconds = 0.0;
};

/// Absolute floor added to every verdict tolerance.
inline constexpr double kVerdictFloor = 1e-9;

struct VerifyOptions {
  int threads = 1;
  bool allow_high_dim_density = false;  // densities in dimension > 3 are slow
};

inline PointReport verify_point(const GroupSpec& spec, const Source& source, const TheoremCase& c,
                                const GroupPoint& g, const QuadratureConfig& quad)
{
  PointReport pr;
  pr.g = g;
  const RieszJet rj = riesz_jet_result(spec, source, c.kernel(), g, quad);
  const OperatorEstimate est = estimate_operators(spec, rj.jet, rj.error, c.p);
  pr.F = rj.jet.value;
  pr.F_err = rj.error.value;
  pr.grad_norm = est.grad_norm;
  pr.sub = est.sub;
  pr.inf = est.inf;
  if (c.p_infinite()) {
    pr.plap = est.inf;
    pr.error = est.inf_err;
  } else {
    pr.plap = est.plap;
    pr.error = est.plap_err;
  }
  pr.tau = 3.0 * pr.error + kVerdictFloor;
  pr.violation = c.predicted_sign() < 0 ? pr.plap : -pr.plap;
  if (!rj.converged) {
    pr.verdict = Verdict::unconverged;
  } else if (!c.p_infinite() && est.critical) {
    pr.verdict = Verdict::skipped;
  } else {
    pr.verdict = pr.violation <= pr.tau ? Verdict::pass : Verdict::fail;
  }
  return pr;
}

inline VerificationReport verify_theorem(const GroupSpec& spec, const Source& source, const TheoremCase& c,
                                         const std::vector<GroupPoint>& samples, const QuadratureConfig& quad,
                                         const VerifyOptions& options = {})
{
  validate_source(spec, source);
  if (std::holds_alternative<Density>(source) && spec.dim() > 3 && !options.allow_high_dim_density)
    throw DomainError("density sources above dimension 3 are disabled (cost guard); use atoms");
  if (const auto* mu = std::get_if<DiscreteMeasure>(&source)) {
    for (const GroupPoint& g : samples) detail::check_off_atoms(*mu, g);
  }
  const auto start = std::chrono::steady_clock::now();
  VerificationReport rep;
  rep.theorem_case = c;
  rep.points.resize(samples.size());
  parallel_for(samples.size(), options.threads,
               [&](std::size_t i) { rep.points[i] = verify_point(spec, source, c, samples[i], quad); });
  for (const PointReport& p : rep.points) {
    if (p.verdict == Verdict::skipped) continue;
    rep.max_violation = std::max(rep.max_violation, p.violation);
    if (p.verdict == Verdict::fail) rep.pass = false;
    if (p.verdict == Verdict::unconverged) {
      rep.pass = false;
      rep.numerical_failure = true;
    }
  }
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

struct LinearPotentialReport {
  std::vector<double> ratios;
  std::vector<double> errors;  // propagated quadrature error of each ratio
  double spread = 0.0;         // (max - min) / mean
  double mean = 0.0;
  double predicted = 0.0;      // (Q - 2) Q omega_2 from the normalisation of Gamma_2
  bool converged = true;
};

/// -L(R_2 rho)(g) / rho(g) at interior samples, with R_2 rho = int rho N^{2-Q}.
///
/// L is moved onto rho: along the flow g exp(s e_i) the point x = g w^-1
/// moves on the line x + s v_i with v_i = (e_i, -1/2 sum_j b^s_ij (z_j + w_j)),
/// so X_i^2 [rho(g w^-1)] = v_i^T (D^2 rho)(x) v_i in coordinates.
inline LinearPotentialReport verify_linear_potential(const GroupSpec& spec, const Density& rho,
                                                     const std::vector<GroupPoint>& samples,
                                                     const QuadratureConfig& quad, double omega_2 = -1.0,
                                                     int threads = 1)
{
  rho.validate(spec);
  quad.validate();
  const int m = spec.m();
  const int k = spec.k();
  const double Q = spec.Q();
  double amp = 0.0;
  for (const Bump& b : rho.bumps) amp = std::max(amp, b.amplitude);
  LinearPotentialReport rep;
  const double R = detail::shell_gauge_factor(spec);
  for (const GroupPoint& g : samples) {
    check_dims(spec, g);
    if (!(rho.value(g) > 1e-3 * amp)) throw DomainError("linear-potential sample where the density nearly vanishes");
  }
  rep.ratios.resize(samples.size());
  rep.errors.resize(samples.size());
  std::vector<char> converged(samples.size(), 1);
  parallel_for(samples.size(), threads, [&](std::size_t n) {
    const GroupPoint& g = samples[n];
    const double rg = rho.value(g);
    const VectorIntegralResult r = detail::integrate_density(
        spec, rho, g, 1, quad,
        [&](const Bump& b, const GroupPoint& w, const GroupPoint& x, double, std::span<double> o) {
          const Eigen::MatrixXd H = b.coordinate_hessian(x);
          Eigen::VectorXd v(m + k);
          double acc = 0.0;
          for (int i = 0; i < m; ++i) {
            v.setZero();
            v(i) = 1.0;
            for (int s = 0; s < k; ++s) {
              double c = 0.0;
              for (int j = 0; j < m; ++j) c += spec.b(s)(i, j) * (g.z(j) + w.z(j));
              v(m + s) = -0.5 * c;
            }
            acc += v.dot(H * v);
          }
          o[0] = -acc * std::pow(gauge_norm(w), 2.0 - Q);
        },
        [&](const Bump& b, double r, std::span<double> bound) {
          // |D^2 rho| <= 12 A / r_b^2 and sum_i |v_i|^2 <= m + k |z + w|^2 / 4.
          const double zw = g.z.norm() + std::sqrt(double(m)) * r;
          const double vv = m + 0.25 * k * zw * zw;
          bound[0] = 12.0 * b.amplitude / (b.radius * b.radius) * vv *
                     detail::power_ball_bound(spec, 2.0 - Q, R * r);
        });
    rep.ratios[n] = r.value[0] / rg;
    rep.errors[n] = r.error[0] / rg;
    converged[n] = r.converged;
  });
  for (char c : converged) rep.converged = rep.converged && c;
  if (!rep.ratios.empty()) {
    const auto [lo, hi] = std::minmax_element(rep.ratios.begin(), rep.ratios.end());
    double sum = 0.0;
    for (double v : rep.ratios) sum += v;
    rep.mean = sum / static_cast<double>(rep.ratios.size());
    rep.spread = (*hi - *lo) / std::abs(rep.mean);
  }
  if (omega_2 > 0.0) rep.predicted = (Q - 2.0) * Q * omega_2;
  return rep;
}

}  // namespace htype
