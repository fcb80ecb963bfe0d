#pragma once

// Sub-Laplacian, horizontal p-Laplacian and infinity-Laplacian evaluated on
// horizontal jets, and the singular p-harmonic functions built from the gauge.

#include "htype/horizontal.hpp"
#include "htype/quadrature.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace htype {

struct OperatorSelector {
  enum class Kind { sub_laplacian, p_laplacian, infinity_laplacian };
  Kind kind = Kind::sub_laplacian;
  double p = 2.0;

  static OperatorSelector sub_laplacian() { return {Kind::sub_laplacian, 2.0}; }
  static OperatorSelector infinity_laplacian()
  {
    return {Kind::infinity_laplacian, std::numeric_limits<double>::infinity()};
  }
  static OperatorSelector p_laplacian(double p)
  {
    if (!(p > 2.0) || !std::isfinite(p)) throw DomainError("p-Laplacian requires 2 < p < infinity");
    return {Kind::p_laplacian, p};
  }
};

/// The pieces entering L_p u = |Xu|^{p-2} L u + (p-2) |Xu|^{p-4} L_inf u.
struct OperatorTerms {
  double grad_norm = 0.0;
  double sub = 0.0;  // L u = trace of the symmetrised Hessian
  double inf = 0.0;  // L_inf u = <(X^2 u)* Xu, Xu>
};

inline OperatorTerms operator_terms(const HorizontalJet& jet)
{
  return {jet.grad.norm(), jet.hess.trace(), jet.grad.dot(jet.hess * jet.grad)};
}

/// True when the gradient is numerically zero and L_p is taken to vanish.
inline bool is_critical(const HorizontalJet& jet)
{
  const double hnorm = jet.hess.cwiseAbs().maxCoeff();
  return jet.grad.norm() <= 1e-12 * (1.0 + hnorm);
}

inline double p_laplacian_value(const OperatorTerms& t, double p)
{
  if (t.grad_norm == 0.0) return 0.0;
  return std::pow(t.grad_norm, p - 2.0) * t.sub +
         (p - 2.0) * std::pow(t.grad_norm, p - 4.0) * t.inf;
}

inline double apply_operator(const GroupSpec& spec, const HorizontalJet& jet, const OperatorSelector& sel)
{
  if (jet.grad.size() != spec.m() || jet.hess.rows() != spec.m() || jet.hess.cols() != spec.m())
    throw DimensionError("jet dimensions do not match the group");
  const OperatorTerms t = operator_terms(jet);
  switch (sel.kind) {
    case OperatorSelector::Kind::sub_laplacian: return t.sub;
    case OperatorSelector::Kind::infinity_laplacian: return t.inf;
    case OperatorSelector::Kind::p_laplacian:
      if (is_critical(jet)) return 0.0;
      return p_laplacian_value(t, sel.p);
  }
  return 0.0;
}

struct FundamentalSolutionParams {
  double p = 0.0;
  double omega_p = 0.0;  // integral of |XN|^p over the unit gauge ball
  double sigma_p = 0.0;  // Q omega_p
  double error_estimate = 0.0;  // quadrature error of omega_p
};

/// omega_p = int_{N<1} (psi / N^2)^{p/2} and sigma_p = Q omega_p.
inline FundamentalSolutionParams omega_sigma(const GroupSpec& spec, double p, const QuadratureConfig& quad)
{
  if (!(p > 2.0) || !std::isfinite(p)) throw DomainError("omega_sigma requires 2 < p < infinity");
  quad.validate();
  const IntegralResult r = integrate_gauge_ball(
      spec,
      [p](const GroupPoint& g) {
        const double psi = g.z.squaredNorm();
        if (psi == 0.0) return 0.0;
        const double n2 = std::sqrt(psi * psi + 16.0 * g.t.squaredNorm());
        return std::pow(std::min(1.0, psi / n2), 0.5 * p);
      },
      quad);
  if (!r.converged) {
    throw QuadratureError("omega_p for p = " + std::to_string(p) +
                          " not certified: error estimate " + std::to_string(r.error_estimate));
  }
  return {p, r.value, spec.Q() * r.value, r.error_estimate};
}

/// Gamma_p(g, g'): the singular p-harmonic function with pole g (log branch at p = Q).
inline double gamma_p(const GroupSpec& spec, const FundamentalSolutionParams& params, const GroupPoint& g,
                      const GroupPoint& gp)
{
  const double p = params.p;
  const double Q = spec.Q();
  if (!(params.sigma_p > 0.0)) throw DomainError("sigma_p must be positive");
  const double N = gauge_norm(multiply(spec, inverse(g), gp));
  if (N == 0.0) throw SingularityError("Gamma_p evaluated at its pole");
  const double c = std::pow(params.sigma_p, -1.0 / (p - 1.0));
  if (p == Q) return -c * std::log(N);
  return -((p - 1.0) / (Q - p)) * c * std::pow(N, (p - Q) / (p - 1.0));
}

/// |L_p u| divided by the magnitude of the two terms that cancel in it.
inline double normalized_p_residual(const HorizontalJet& jet, double p)
{
  const OperatorTerms t = operator_terms(jet);
  if (t.grad_norm == 0.0) return 0.0;
  const double a = std::pow(t.grad_norm, p - 2.0) * t.sub;
  const double b = (p - 2.0) * std::pow(t.grad_norm, p - 4.0) * t.inf;
  const double scale = std::abs(a) + std::abs(b);
  return scale == 0.0 ? 0.0 : (a + b) / scale;
}

/// L_p of u = N(pole^-1 .)^{(p-Q)/(p-1)} (log N at p = Q), normalised, at each sample.
inline std::vector<double> harmonicity_residuals(const GroupSpec& spec, double p, const GroupPoint& pole,
                                                 const std::vector<GroupPoint>& samples)
{
  if (!(p > 2.0) || !std::isfinite(p)) throw DomainError("harmonicity residuals need 2 < p < infinity");
  const double Q = spec.Q();
  const Kernel kernel = p == Q ? Kernel::log_N() : Kernel::N_pow((p - Q) / (p - 1.0));
  const GroupPoint pole_inv = inverse(pole);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const GroupPoint& g : samples) {
    const GroupPoint rel = multiply(spec, pole_inv, g);
    if (rel.is_identity()) throw SingularityError("harmonicity sample coincides with the pole");
    out.push_back(normalized_p_residual(analytic_jet(spec, rel, kernel), p));
  }
  return out;
}

/// L_inf N(pole^-1 .) normalised by sum_ij |N_ij X_i N X_j N|.
inline std::vector<double> infinity_residuals(const GroupSpec& spec, const GroupPoint& pole,
                                              const std::vector<GroupPoint>& samples)
{
  const GroupPoint pole_inv = inverse(pole);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const GroupPoint& g : samples) {
    const GroupPoint rel = multiply(spec, pole_inv, g);
    if (rel.is_identity()) throw SingularityError("infinity-Laplacian sample coincides with the pole");
    const HorizontalJet jet = analytic_jet(spec, rel, Kernel::N());
    const Vector& x = jet.grad;
    const double scale = (x.cwiseAbs().transpose() * jet.hess.cwiseAbs() * x.cwiseAbs())(0, 0);
    const double value = x.dot(jet.hess * x);
    out.push_back(scale == 0.0 ? 0.0 : value / scale);
  }
  return out;
}

} // namespace htype
