#pragma once

// Horizontal calculus: the left-invariant frame X_1..X_m, the gauge
// primitives psi, chi, a, N and their closed-form horizontal jets, plus a
// finite-difference oracle that applies the frame directly along its flow
// lines g -> g exp(s e_i).

#include "htype/group.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>

namespace htype {

/// Value, horizontal gradient X_i u and symmetrised horizontal Hessian
/// u_{,ij} = (X_i X_j u + X_j X_i u) / 2 of a function at one point.
struct HorizontalJet {
  double value = 0.0;
  Vector grad;
  Matrix hess;

  static HorizontalJet zero(int m)
  {
    return {0.0, Vector::Zero(m), Matrix::Zero(m, m)};
  }

  HorizontalJet& operator+=(const HorizontalJet& o)
  {
    value += o.value;
    grad += o.grad;
    hess += o.hess;
    return *this;
  }

  HorizontalJet& operator*=(double c)
  {
    value *= c;
    grad *= c;
    hess *= c;
    return *this;
  }

  double grad_norm() const { return grad.norm(); }
};

/// Gauge primitives at a point. B(i, s) = <J(eps_s) z, e_i>.
struct Primitives {
  double psi = 0.0;  // |z|^2
  double chi = 0.0;  // |t|^2
  double a = 0.0;    // psi^2 + 16 chi = N^4
  double N = 0.0;
  Matrix B;          // m x k
  Vector A;          // psi z + 4 J(t) z
};

inline Primitives primitives(const GroupSpec& spec, const GroupPoint& g)
{
  check_dims(spec, g);
  Primitives p;
  p.psi = g.z.squaredNorm();
  p.chi = g.t.squaredNorm();
  p.a = p.psi * p.psi + 16.0 * p.chi;
  p.N = std::sqrt(std::sqrt(p.a));
  p.B.resize(spec.m(), spec.k());
  for (int s = 0; s < spec.k(); ++s) p.B.col(s) = spec.J(s) * g.z;
  p.A = p.psi * g.z + 4.0 * (p.B * g.t);
  return p;
}

/// Functions of the gauge with closed-form jets.
struct Kernel {
  enum class Kind { psi, chi, a, N, N_pow, log_N };
  Kind kind = Kind::N;
  double q = 1.0;  // exponent for N_pow

  static Kernel psi() { return {Kind::psi, 0.0}; }
  static Kernel chi() { return {Kind::chi, 0.0}; }
  static Kernel a() { return {Kind::a, 0.0}; }
  static Kernel N() { return {Kind::N, 1.0}; }
  static Kernel N_pow(double q) { return {Kind::N_pow, q}; }
  static Kernel log_N() { return {Kind::log_N, 0.0}; }

  bool singular_at_identity() const
  {
    return kind == Kind::N || kind == Kind::log_N || (kind == Kind::N_pow && q < 4.0);
  }

  std::string name() const
  {
    switch (kind) {
      case Kind::psi: return "psi";
      case Kind::chi: return "chi";
      case Kind::a: return "a";
      case Kind::N: return "N";
      case Kind::N_pow: return "N^" + std::to_string(q);
      case Kind::log_N: return "log N";
    }
    return "?";
  }
};

namespace detail {

// C = z z^T + B B^T, the matrix shared by every second-order formula.
inline Matrix gauge_quadratic(const GroupPoint& g, const Primitives& p)
{
  Matrix C = g.z * g.z.transpose();
  C.noalias() += p.B * p.B.transpose();
  return C;
}

inline void symmetrize(Matrix& h) { h = 0.5 * (h + h.transpose()).eval(); }

}  // namespace detail

/// Closed-form horizontal jet of a gauge kernel.
///
/// N^q and log N follow from the jet of N by the chain rule:
///   X_i N^q     = q N^{q-4} A_i
///   (N^q)_{,ij} = q N^{q-8} [ (q-4) A_i A_j + a psi d_ij + 2a (z_i z_j + sum_s B_is B_js) ]
///   X_i log N   = N^{-4} A_i
///   (log N)_{,ij} = N^{-8} [ -4 A_i A_j + a psi d_ij + 2a (z_i z_j + sum_s B_is B_js) ]
inline HorizontalJet analytic_jet(const GroupSpec& spec, const GroupPoint& g, const Kernel& kernel)
{
  const Primitives p = primitives(spec, g);
  const int m = spec.m();
  const Matrix id = Matrix::Identity(m, m);
  HorizontalJet jet;

  if (kernel.singular_at_identity() && p.N == 0.0)
    throw SingularityError("kernel " + kernel.name() + " is singular at the identity");

  switch (kernel.kind) {
    case Kernel::Kind::psi:
      jet.value = p.psi;
      jet.grad = 2.0 * g.z;
      jet.hess = 2.0 * id;
      break;
    case Kernel::Kind::chi:
      jet.value = p.chi;
      jet.grad = p.B * g.t;  // J(t) z
      jet.hess = 0.5 * p.B * p.B.transpose();
      break;
    case Kernel::Kind::a: {
      jet.value = p.a;
      jet.grad = 4.0 * p.A;
      jet.hess = 4.0 * p.psi * id + 8.0 * detail::gauge_quadratic(g, p);
      break;
    }
    case Kernel::Kind::N: {
      const double n3 = p.N * p.N * p.N;
      const double n7 = n3 * n3 * p.N;
      jet.value = p.N;
      jet.grad = p.A / n3;
      jet.hess = (p.a * p.psi * id + 2.0 * p.a * detail::gauge_quadratic(g, p) -
                  3.0 * p.A * p.A.transpose()) / n7;
      break;
    }
    case Kernel::Kind::N_pow: {
      const double q = kernel.q;
      if (p.N == 0.0) {
        // q >= 4: every term carries a positive power of the gauge.
        jet.value = 0.0;
        jet.grad = Vector::Zero(m);
        jet.hess = Matrix::Zero(m, m);
        break;
      }
      const double nq = std::pow(p.N, q);
      const double a4 = p.a;  // N^4
      jet.value = nq;
      jet.grad = (q * nq / a4) * p.A;
      jet.hess = (q * nq / (a4 * a4)) *
                 ((q - 4.0) * p.A * p.A.transpose() + p.a * p.psi * id +
                  2.0 * p.a * detail::gauge_quadratic(g, p));
      break;
    }
    case Kernel::Kind::log_N: {
      jet.value = std::log(p.N);
      jet.grad = p.A / p.a;
      jet.hess = (-4.0 * p.A * p.A.transpose() + p.a * p.psi * id +
                  2.0 * p.a * detail::gauge_quadratic(g, p)) / (p.a * p.a);
      break;
    }
  }
  detail::symmetrize(jet.hess);
  return jet;
}

/// A scalar function on the group with an optional closed-form jet.
struct ScalarField {
  std::function<double(const GroupPoint&)> value;
  std::function<HorizontalJet(const GroupPoint&)> jet;  // may be empty

  static ScalarField of_kernel(const GroupSpec& spec, const Kernel& kernel)
  {
    return {[spec, kernel](const GroupPoint& g) { return analytic_jet(spec, g, kernel).value; },
            [spec, kernel](const GroupPoint& g) { return analytic_jet(spec, g, kernel); }};
  }

  /// x -> u(a x).
  ScalarField left_translated(const GroupSpec& spec, const GroupPoint& a) const
  {
    ScalarField out;
    out.value = [spec, a, f = value](const GroupPoint& g) { return f(multiply(spec, a, g)); };
    if (jet) {
      out.jet = [spec, a, f = jet](const GroupPoint& g) { return f(multiply(spec, a, g)); };
    }
    return out;
  }
};

/// Finite-difference step sizes. `first` drives the gradient stencil,
/// `second` the nested Hessian stencils.
struct FdSteps {
  double first = 1e-4;
  double second = 1e-3;

  /// h = 1e-4 max(1, N(g)) and 1e-3 max(1, N(g)).
  static FdSteps for_point(const GroupPoint& g)
  {
    const double s = std::max(1.0, gauge_norm(g));
    return {1e-4 * s, 1e-3 * s};
  }
};

namespace detail {

/// g exp(s e_i): the integral curve of X_i through g.
inline GroupPoint flow(const GroupSpec& spec, const GroupPoint& g, int i, double s)
{
  GroupPoint step = GroupPoint::identity(spec);
  step.z(i) = s;
  return multiply(spec, g, step);
}

// Fourth-order central first derivative of f(s) at s = 0.
template <class F>
double d1(F&& f, double h)
{
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

// Fourth-order central second derivative of f(s) at s = 0.
template <class F>
double d2(F&& f, double f0, double h)
{
  return (-f(2 * h) + 16 * f(h) - 30 * f0 + 16 * f(-h) - f(-2 * h)) / (12 * h * h);
}

/// X_i X_j u(g) by nested differences along the flows (not symmetrised).
inline double fd_mixed(const GroupSpec& spec, const ScalarField& field, const GroupPoint& g,
                       int i, int j, double h)
{
  return d1([&](double s) {
    const GroupPoint gs = flow(spec, g, i, s);
    return d1([&](double r) { return field.value(flow(spec, gs, j, r)); }, h);
  }, h);
}

}  // namespace detail

/// Horizontal jet by finite differences along the frame X_i.
inline HorizontalJet fd_jet(const GroupSpec& spec, const ScalarField& field, const GroupPoint& g,
                            FdSteps steps)
{
  check_dims(spec, g);
  const int m = spec.m();
  HorizontalJet jet = HorizontalJet::zero(m);
  jet.value = field.value(g);
  for (int i = 0; i < m; ++i) {
    jet.grad(i) = detail::d1(
        [&](double s) { return field.value(detail::flow(spec, g, i, s)); }, steps.first);
    jet.hess(i, i) = detail::d2(
        [&](double s) { return field.value(detail::flow(spec, g, i, s)); }, jet.value,
        steps.second);
  }
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const double xij = detail::fd_mixed(spec, field, g, i, j, steps.second);
      const double xji = detail::fd_mixed(spec, field, g, j, i, steps.second);
      jet.hess(i, j) = jet.hess(j, i) = 0.5 * (xij + xji);
    }
  }
  return jet;
}

/// Single-step overload: `h` drives the gradient, 10 h the Hessian.
inline HorizontalJet fd_jet(const GroupSpec& spec, const ScalarField& field, const GroupPoint& g,
                            double h)
{
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  return fd_jet(spec, field, g, FdSteps{h, 10.0 * h});
}

inline HorizontalJet fd_jet(const GroupSpec& spec, const ScalarField& field, const GroupPoint& g)
{
  return fd_jet(spec, field, g, FdSteps::for_point(g));
}

struct CommutatorCheck {
  double lhs = 0.0;     // (X_i X_j - X_j X_i) f
  double rhs = 0.0;     // sum_s b^s_ij d_{t_s} f
  double defect = 0.0;  // lhs - rhs
  double scale = 1.0;   // 1 + |X_i X_j f| + |X_j X_i f| + |rhs|

  double normalized() const { return std::abs(defect) / scale; }
};

inline CommutatorCheck commutator_check(const GroupSpec& spec, const ScalarField& field,
                                        const GroupPoint& g, int i, int j, double h)
{
  check_dims(spec, g);
  if (i == j) throw DomainError("commutator needs i != j");
  if (i < 0 || j < 0 || i >= spec.m() || j >= spec.m())
    throw DimensionError("commutator index out of range");
  const double xij = detail::fd_mixed(spec, field, g, i, j, h);
  const double xji = detail::fd_mixed(spec, field, g, j, i, h);
  double rhs = 0.0;
  for (int s = 0; s < spec.k(); ++s) {
    const double bs = spec.b(s)(i, j);
    if (bs == 0.0) continue;
    const double dt = detail::d1(
        [&](double r) {
          GroupPoint gr = g;
          gr.t(s) += r;
          return field.value(gr);
        },
        h);
    rhs += bs * dt;
  }
  CommutatorCheck c;
  c.lhs = xij - xji;
  c.rhs = rhs;
  c.defect = c.lhs - c.rhs;
  c.scale = 1.0 + std::abs(xij) + std::abs(xji) + std::abs(rhs);
  return c;
}

/// (X_i X_j - X_j X_i) f(g) - sum_s b^s_ij d_{t_s} f(g), all by finite differences.
inline double commutator_defect(const GroupSpec& spec, const ScalarField& field,
                                const GroupPoint& g, int i, int j, double h)
{
  return commutator_check(spec, field, g, i, j, h).defect;
}

} // namespace htype
