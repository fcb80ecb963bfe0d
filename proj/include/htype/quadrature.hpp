#pragma once

// Certified adaptive cubature on coordinate boxes.
//
// Every cell is integrated with tensor Gauss-Legendre rules of order n and
// n + 2; the higher order result is kept and the difference is the cell error.
// Cells are bisected greedily (largest error first) along the axis with the
// largest fourth difference. Refinement proceeds in stages: stage d only
// allows splits that keep every axis level <= d, so a run with max_depth D + 1
// is the run with max_depth D followed by one more stage.
//
// Point singularities of group kernels are handled by dilation shells: the
// neighbourhood U_r = [-r,r]^m x [-r^2,r^2]^k of the pole is cut into the
// self-similar annuli U_{r 2^-j} \ U_{r 2^-j-1}, each integrated as ordinary
// boxes, and the innermost remainder is bounded through a caller supplied
// homogeneity estimate.

#include "htype/group.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <vector>

namespace htype {

struct QuadratureConfig {
  int gauss_order = 8;
  double rel_tol = 1e-4;
  double abs_tol = 1e-12;
  int max_depth = 12;
  int singular_refine_depth = 8;

  void validate() const
  {
    if (gauss_order < 2 || gauss_order > 30) throw DomainError("gauss_order must lie in [2, 30]");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("quadrature tolerances must be positive");
    if (singular_refine_depth < 0 || max_depth < singular_refine_depth)
      throw DomainError("need max_depth >= singular_refine_depth >= 0");
  }

  /// One extra refinement level: one more dyadic level and a 4x tighter tolerance.
  QuadratureConfig refined() const
  {
    QuadratureConfig c = *this;
    c.max_depth += 1;
    c.singular_refine_depth += 1;
    c.rel_tol *= 0.25;
    c.abs_tol *= 0.25;
    return c;
  }

  /// Defaults used for 7-dimensional integrals.
  static QuadratureConfig for_dimension(int dim)
  {
    QuadratureConfig c;
    if (dim >= 7) c.rel_tol = 1e-3;
    return c;
  }
};

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  static Box cube(int dim, double lo, double hi)
  {
    return {std::vector<double>(static_cast<std::size_t>(dim), lo),
            std::vector<double>(static_cast<std::size_t>(dim), hi)};
  }

  int dim() const { return static_cast<int>(lower.size()); }

  double volume() const
  {
    double v = 1.0;
    for (std::size_t a = 0; a < lower.size(); ++a) v *= upper[a] - lower[a];
    return v;
  }

  bool contains(std::span<const double> x) const
  {
    for (std::size_t a = 0; a < lower.size(); ++a) {
      if (x[a] < lower[a] || x[a] > upper[a]) return false;
    }
    return true;
  }

  void validate() const
  {
    if (lower.size() != upper.size() || lower.empty()) throw DimensionError("malformed box");
    for (std::size_t a = 0; a < lower.size(); ++a) {
      if (!(lower[a] < upper[a])) throw DomainError("box needs lower < upper on every axis");
    }
  }
};

struct IntegralResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long cells_used = 0;
  bool converged = false;
};

/// Result for a vector of integrands sharing one adaptive mesh.
struct VectorIntegralResult {
  std::vector<double> value;
  std::vector<double> error;
  long cells_used = 0;
  bool converged = false;

  IntegralResult component(std::size_t c) const
  {
    return {value[c], error[c], cells_used, converged};
  }
  double max_error() const { return error.empty() ? 0.0 : *std::max_element(error.begin(), error.end()); }
};

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule of order n (Newton iteration on P_n).
inline const GaussRule& gauss_legendre(int n)
{
  static const std::array<GaussRule, 33> rules = [] {
    std::array<GaussRule, 33> out;
    for (int order = 1; order <= 32; ++order) {
      GaussRule& r = out[static_cast<std::size_t>(order)];
      r.nodes.resize(static_cast<std::size_t>(order));
      r.weights.resize(static_cast<std::size_t>(order));
      for (int i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
          double p0 = 1.0, p1 = x;
          for (int j = 2; j <= order; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
          }
          if (order == 1) p0 = 1.0;
          dp = order * (x * p1 - p0) / (x * x - 1.0);
          const double dx = p1 / dp;
          x -= dx;
          if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(order - 1 - i);
        r.nodes[lo] = -x;
        r.nodes[hi] = x;
        r.weights[lo] = w;
        r.weights[hi] = w;
      }
      if (order % 2 == 1) r.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
    }
    return out;
  }();
  if (n < 1 || n > 32) throw DomainError("Gauss-Legendre order must lie in [1, 32]");
  return rules[static_cast<std::size_t>(n)];
}

/// Integrand signature used throughout: writes ncomp values for point x.
using VectorIntegrand = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Global adaptive cubature for a vector of integrands over a union of boxes.
class AdaptiveCubature {
 public:
  /// Refinement gives up beyond this many cells and reports non-convergence.
  static constexpr std::size_t kMaxCells = 200000;

  AdaptiveCubature(VectorIntegrand f, int dim, int ncomp, QuadratureConfig config)
      : f_(std::move(f)), dim_(dim), ncomp_(ncomp), config_(config),
        x_(static_cast<std::size_t>(dim)), y_(static_cast<std::size_t>(ncomp)),
        total_(static_cast<std::size_t>(ncomp), 0.0), total_err_(static_cast<std::size_t>(ncomp), 0.0)
  {
    config_.validate();
  }

  /// Adds a cell at the given per-axis refinement level. `excluded` cells are
  /// never refined and carry their whole magnitude as error.
  void add_cell(const Box& box, int level = 0, bool excluded = false)
  {
    Cell c;
    c.lower = box.lower;
    c.upper = box.upper;
    c.level.assign(static_cast<std::size_t>(dim_), level);
    c.excluded = excluded;
    evaluate(c);
    push(std::move(c));
  }

  /// Adds a box, pre-splitting every sub-cell that contains one of `points`
  /// down to `depth` levels; the innermost point-containing cells are excluded.
  void add_cell_refined_around(const Box& box, std::span<const std::vector<double>> points, int depth)
  {
    std::vector<Cell> stack;
    Cell root;
    root.lower = box.lower;
    root.upper = box.upper;
    root.level.assign(static_cast<std::size_t>(dim_), 0);
    stack.push_back(std::move(root));
    while (!stack.empty()) {
      Cell c = std::move(stack.back());
      stack.pop_back();
      const bool hit = std::any_of(points.begin(), points.end(), [&](const auto& p) {
        return c.contains(p);
      });
      const int min_level = *std::min_element(c.level.begin(), c.level.end());
      if (hit && min_level < depth) {
        const int axis = static_cast<int>(std::min_element(c.level.begin(), c.level.end()) - c.level.begin());
        auto [a, b] = c.split(axis);
        stack.push_back(std::move(a));
        stack.push_back(std::move(b));
        continue;
      }
      c.excluded = hit;
      evaluate(c);
      push(std::move(c));
    }
  }

  /// Refines until the tolerance is met (with `extra_error` added to the
  /// cell error sum per component) or nothing can be refined.
  bool refine(std::span<const double> extra_error = {})
  {
    for (int stage = 1; stage <= config_.max_depth; ++stage) {
      if (refine_stage(stage, extra_error)) return true;
    }
    return converged(extra_error);
  }

  VectorIntegralResult result(std::span<const double> extra_error = {}) const
  {
    VectorIntegralResult r;
    r.value.assign(static_cast<std::size_t>(ncomp_), 0.0);
    r.error.assign(static_cast<std::size_t>(ncomp_), 0.0);
    // Fixed summation order (insertion order) for reproducibility.
    for (const Cell& c : cells_) {
      if (c.dead) continue;
      for (int q = 0; q < ncomp_; ++q) {
        r.value[static_cast<std::size_t>(q)] += c.value[static_cast<std::size_t>(q)];
        r.error[static_cast<std::size_t>(q)] += c.error[static_cast<std::size_t>(q)];
      }
    }
    for (std::size_t q = 0; q < extra_error.size(); ++q) r.error[q] += extra_error[q];
    r.cells_used = live_;
    r.converged = within_tolerance(r.value, r.error);
    return r;
  }

  /// Running estimate (not re-summed); cheap.
  const std::vector<double>& running_value() const { return total_; }

  bool within_tolerance(const std::vector<double>& value, const std::vector<double>& error) const
  {
    double scale = 0.0;
    for (double v : value) scale = std::max(scale, std::abs(v));
    const double tol = std::max(config_.abs_tol, config_.rel_tol * scale);
    return std::all_of(error.begin(), error.end(), [&](double e) { return e <= tol; });
  }

  const QuadratureConfig& config() const { return config_; }

 private:
  struct Cell {
    std::vector<double> lower, upper;
    std::vector<int> level;
    std::vector<double> value, error;
    double score = 0.0;
    int split_axis = 0;
    bool excluded = false;
    bool dead = false;

    bool contains(const std::vector<double>& p) const
    {
      for (std::size_t a = 0; a < lower.size(); ++a) {
        if (p[a] < lower[a] || p[a] > upper[a]) return false;
      }
      return true;
    }

    std::pair<Cell, Cell> split(int axis) const
    {
      Cell a, b;
      a.lower = b.lower = lower;
      a.upper = b.upper = upper;
      a.level = b.level = level;
      const auto ax = static_cast<std::size_t>(axis);
      const double mid = 0.5 * (lower[ax] + upper[ax]);
      a.upper[ax] = mid;
      b.lower[ax] = mid;
      ++a.level[ax];
      ++b.level[ax];
      return {std::move(a), std::move(b)};
    }
  };

  struct HeapEntry {
    double score;
    std::size_t index;
    bool operator<(const HeapEntry& o) const
    {
      if (score != o.score) return score < o.score;
      return index > o.index;  // older cells first on ties
    }
  };

  void push(Cell c)
  {
    for (int q = 0; q < ncomp_; ++q) {
      total_[static_cast<std::size_t>(q)] += c.value[static_cast<std::size_t>(q)];
      total_err_[static_cast<std::size_t>(q)] += c.error[static_cast<std::size_t>(q)];
    }
    heap_.push({c.score, cells_.size()});
    cells_.push_back(std::move(c));
    ++live_;
  }

  void kill(std::size_t idx)
  {
    Cell& c = cells_[idx];
    for (int q = 0; q < ncomp_; ++q) {
      total_[static_cast<std::size_t>(q)] -= c.value[static_cast<std::size_t>(q)];
      total_err_[static_cast<std::size_t>(q)] -= c.error[static_cast<std::size_t>(q)];
    }
    c.dead = true;
    c.value.clear();
    c.error.clear();
    --live_;
  }

  bool converged(std::span<const double> extra) const
  {
    std::vector<double> err = total_err_;
    for (std::size_t q = 0; q < extra.size(); ++q) err[q] += extra[q];
    for (double& e : err) e = std::max(e, 0.0);
    return within_tolerance(total_, err);
  }

  bool refine_stage(int stage, std::span<const double> extra)
  {
    std::vector<HeapEntry> blocked;
    bool done = false;
    while (!heap_.empty()) {
      if (converged(extra)) {
        done = true;
        break;
      }
      if (live_ >= kMaxCells) break;
      const HeapEntry top = heap_.top();
      heap_.pop();
      Cell& c = cells_[top.index];
      if (c.dead) continue;
      int axis = -1;
      if (!c.excluded) axis = choose_axis(c, stage);
      if (axis < 0) {
        blocked.push_back(top);
        continue;
      }
      auto [a, b] = c.split(axis);
      kill(top.index);
      evaluate(a);
      evaluate(b);
      push(std::move(a));
      push(std::move(b));
    }
    for (const auto& e : blocked) heap_.push(e);
    // Recompute running sums from scratch to shed cancellation drift.
    resum();
    return done || converged(extra);
  }

  void resum()
  {
    std::fill(total_.begin(), total_.end(), 0.0);
    std::fill(total_err_.begin(), total_err_.end(), 0.0);
    for (const Cell& c : cells_) {
      if (c.dead) continue;
      for (int q = 0; q < ncomp_; ++q) {
        total_[static_cast<std::size_t>(q)] += c.value[static_cast<std::size_t>(q)];
        total_err_[static_cast<std::size_t>(q)] += c.error[static_cast<std::size_t>(q)];
      }
    }
  }

  int choose_axis(const Cell& c, int stage) const
  {
    const auto preferred = static_cast<std::size_t>(c.split_axis);
    if (c.level[preferred] < stage) return c.split_axis;
    int best = -1;
    for (int a = 0; a < dim_; ++a) {
      if (c.level[static_cast<std::size_t>(a)] >= stage) continue;
      if (best < 0 || c.level[static_cast<std::size_t>(a)] < c.level[static_cast<std::size_t>(best)]) best = a;
    }
    return best;
  }

  // Tensor Gauss rule of the given order over the cell, accumulated into out.
  void tensor_rule(const Cell& c, int order, std::vector<double>& out)
  {
    const GaussRule& rule = gauss_legendre(order);
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(dim_), 0);
    double jac = 1.0;
    for (int a = 0; a < dim_; ++a)
      jac *= 0.5 * (c.upper[static_cast<std::size_t>(a)] - c.lower[static_cast<std::size_t>(a)]);
    while (true) {
      double w = jac;
      for (int a = 0; a < dim_; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const auto ia = static_cast<std::size_t>(idx[ua]);
        const double mid = 0.5 * (c.lower[ua] + c.upper[ua]);
        const double half = 0.5 * (c.upper[ua] - c.lower[ua]);
        x_[ua] = mid + half * rule.nodes[ia];
        w *= rule.weights[ia];
      }
      f_(x_, y_);
      for (int q = 0; q < ncomp_; ++q) out[static_cast<std::size_t>(q)] += w * y_[static_cast<std::size_t>(q)];
      int a = 0;
      while (a < dim_) {
        if (++idx[static_cast<std::size_t>(a)] < order) break;
        idx[static_cast<std::size_t>(a)] = 0;
        ++a;
      }
      if (a == dim_) break;
    }
  }

  void evaluate(Cell& c)
  {
    const int n = config_.gauss_order;
    std::vector<double> low(static_cast<std::size_t>(ncomp_)), high(static_cast<std::size_t>(ncomp_));
    tensor_rule(c, n, low);
    tensor_rule(c, n + 2, high);
    c.value = high;
    c.error.resize(static_cast<std::size_t>(ncomp_));
    c.score = 0.0;
    for (int q = 0; q < ncomp_; ++q) {
      const auto uq = static_cast<std::size_t>(q);
      c.error[uq] = std::abs(high[uq] - low[uq]);
      if (c.excluded) c.error[uq] += std::abs(high[uq]);
      c.score = std::max(c.score, c.error[uq]);
    }
    if (!c.excluded) c.split_axis = fourth_difference_axis(c);
  }

  // Axis with the largest fourth difference at the cell centre (the
  // Genz-Malik criterion); lowest level breaks ties.
  int fourth_difference_axis(const Cell& c)
  {
    constexpr double l2 = 0.35856858280031809199;  // sqrt(9/70)
    constexpr double l4 = 0.94868329805051379960;  // sqrt(9/10)
    constexpr double ratio = (l2 * l2) / (l4 * l4);
    std::vector<double> center(static_cast<std::size_t>(dim_));
    for (int a = 0; a < dim_; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      center[ua] = 0.5 * (c.lower[ua] + c.upper[ua]);
    }
    auto eval = [&](int axis, double offset) {
      x_ = center;
      if (axis >= 0) x_[static_cast<std::size_t>(axis)] += offset;
      f_(x_, y_);
      return y_;
    };
    const std::vector<double> f0 = eval(-1, 0.0);
    int best = 0;
    double best_diff = -1.0;
    for (int a = 0; a < dim_; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double half = 0.5 * (c.upper[ua] - c.lower[ua]);
      const std::vector<double> p2 = eval(a, l2 * half), m2 = eval(a, -l2 * half);
      const std::vector<double> p4 = eval(a, l4 * half), m4 = eval(a, -l4 * half);
      double diff = 0.0;
      for (int q = 0; q < ncomp_; ++q) {
        const auto uq = static_cast<std::size_t>(q);
        const double d2 = p2[uq] + m2[uq] - 2.0 * f0[uq];
        const double d4 = p4[uq] + m4[uq] - 2.0 * f0[uq];
        diff += std::abs(d2 - ratio * d4);
      }
      const bool better = best_diff < 0.0 || diff > best_diff * (1.0 + 1e-12) ||
                          (diff >= best_diff * (1.0 - 1e-12) &&
                           c.level[ua] < c.level[static_cast<std::size_t>(best)]);
      if (better) {
        best = a;
        best_diff = diff;
      }
    }
    return best;
  }

  VectorIntegrand f_;
  int dim_;
  int ncomp_;
  QuadratureConfig config_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<Cell> cells_;
  std::priority_queue<HeapEntry> heap_;
  std::vector<double> total_;
  std::vector<double> total_err_;
  std::size_t live_ = 0;
};

/// Adaptive integral of a vector integrand over a box. Cells containing a
/// singular point are pre-refined to `singular_refine_depth` and the
/// innermost ones are never refined further; their magnitude counts as error.
inline VectorIntegralResult integrate_adaptive(const VectorIntegrand& f, int ncomp, const Box& box,
                                               const QuadratureConfig& config,
                                               std::span<const std::vector<double>> singular_points = {})
{
  box.validate();
  AdaptiveCubature cub(f, box.dim(), ncomp, config);
  if (singular_points.empty()) {
    cub.add_cell(box);
  } else {
    for (const auto& p : singular_points) {
      if (static_cast<int>(p.size()) != box.dim()) throw DimensionError("singular point dimension mismatch");
    }
    cub.add_cell_refined_around(box, singular_points, config.singular_refine_depth);
  }
  cub.refine();
  return cub.result();
}

/// Scalar convenience overload.
inline IntegralResult integrate_adaptive(const std::function<double(std::span<const double>)>& f,
                                         const Box& box, const QuadratureConfig& config,
                                         std::span<const std::vector<double>> singular_points = {})
{
  VectorIntegrand vf = [&f](std::span<const double> x, std::span<double> out) { out[0] = f(x); };
  return integrate_adaptive(vf, 1, box, config, singular_points).component(0);
}

/// Integral of f over the gauge ball {N < radius}.
///
/// The ball is the iterated region x_a in [-h_a, h_a], h_a depending on the
/// earlier coordinates (z first, then t); writing x_a = h_a sin(pi v_a / 2)
/// maps the cube [-1,1]^{m+k} onto it with a smooth Jacobian, so no indicator
/// discontinuity is ever integrated.
inline IntegralResult integrate_gauge_ball(const GroupSpec& spec,
                                           const std::function<double(const GroupPoint&)>& f,
                                           const QuadratureConfig& config, double radius = 1.0)
{
  if (!(radius > 0.0)) throw DomainError("gauge ball radius must be positive");
  const int m = spec.m();
  const int k = spec.k();
  const double half_pi = 0.5 * std::numbers::pi;
  VectorIntegrand cube = [&, m, k](std::span<const double> v, std::span<double> out) {
    GroupPoint g{Vector(m), Vector(k)};
    double jac = 1.0;
    double h = radius;  // current half-width for z axes
    double cos_prod = 1.0;
    for (int i = 0; i < m; ++i) {
      const double u = std::sin(half_pi * v[static_cast<std::size_t>(i)]);
      const double c = std::cos(half_pi * v[static_cast<std::size_t>(i)]);
      g.z(i) = h * u;
      jac *= h * half_pi * c;
      h *= c;
      cos_prod *= c;
    }
    const double P = cos_prod * cos_prod;  // (radius^2 - |z|^2) / radius^2
    double ht = 0.25 * radius * radius * cos_prod * std::sqrt(2.0 - P);
    for (int s = 0; s < k; ++s) {
      const double vs = v[static_cast<std::size_t>(m + s)];
      const double u = std::sin(half_pi * vs);
      const double c = std::cos(half_pi * vs);
      g.t(s) = ht * u;
      jac *= ht * half_pi * c;
      ht *= c;
    }
    out[0] = jac == 0.0 ? 0.0 : jac * f(g);
  };
  AdaptiveCubature cub(cube, m + k, 1, config);
  cub.add_cell(Box::cube(m + k, -1.0, 1.0));
  cub.refine();
  return cub.result().component(0);
}

/// Bounds on the integral of |f_c| over box ∩ U_r, for every component c.
using TailBound = std::function<void(double r, std::span<double> bound)>;

namespace detail {

// Splits [lo, hi] around the sub-interval [ilo, ihi] (which it contains).
inline std::vector<std::pair<double, double>> axis_pieces(double lo, double hi, double ilo, double ihi)
{
  std::vector<std::pair<double, double>> out;
  if (ilo > lo) out.emplace_back(lo, ilo);
  out.emplace_back(ilo, ihi);
  if (ihi < hi) out.emplace_back(ihi, hi);
  return out;
}

// All boxes of the grid product of per-axis pieces, except the one made of
// the central piece on every axis.
inline std::vector<Box> ring_boxes(const std::vector<std::vector<std::pair<double, double>>>& pieces,
                                   const std::vector<std::size_t>& central)
{
  std::vector<Box> out;
  const std::size_t d = pieces.size();
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    bool all_central = true;
    Box b{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t a = 0; a < d; ++a) {
      b.lower[a] = pieces[a][idx[a]].first;
      b.upper[a] = pieces[a][idx[a]].second;
      all_central = all_central && idx[a] == central[a];
    }
    if (!all_central) out.push_back(std::move(b));
    std::size_t a = 0;
    while (a < d) {
      if (++idx[a] < pieces[a].size()) break;
      idx[a] = 0;
      ++a;
    }
    if (a == d) break;
  }
  return out;
}

}  // namespace detail

/// Adaptive integral over a box of an integrand with an integrable
/// singularity at the group identity (coordinates 0).
///
/// `tail(r, bound)` must bound the integral of |f_c| over box ∩ U_r for small
/// r; it is added to the error estimate for the part that is not integrated.
inline VectorIntegralResult integrate_with_pole(const GroupSpec& spec, const VectorIntegrand& f, int ncomp,
                                                const Box& box, const QuadratureConfig& config,
                                                const TailBound& tail)
{
  box.validate();
  const int m = spec.m();
  const int d = spec.dim();
  if (box.dim() != d) throw DimensionError("box dimension does not match the group");

  const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  AdaptiveCubature cub(f, d, ncomp, config);
  if (!box.contains(origin)) {
    cub.add_cell(box);
    cub.refine();
    return cub.result();
  }

  // Largest r0 for which box ∩ U_r0 is dilation invariant.
  double r0 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < d; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    for (double face : {box.lower[ua], box.upper[ua]}) {
      if (face == 0.0) continue;
      const double dist = std::abs(face);
      r0 = std::min(r0, a < m ? dist : std::sqrt(dist));
    }
  }
  auto halfwidth = [m](int a, double r) { return a < m ? r : r * r; };
  auto clipped = [&](double r) {
    std::vector<std::pair<double, double>> iv(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      iv[ua] = {std::max(box.lower[ua], -halfwidth(a, r)), std::min(box.upper[ua], halfwidth(a, r))};
    }
    return iv;
  };
  auto add_ring = [&](const std::vector<std::pair<double, double>>& outer,
                      const std::vector<std::pair<double, double>>& inner) {
    std::vector<std::vector<std::pair<double, double>>> pieces(static_cast<std::size_t>(d));
    std::vector<std::size_t> central(static_cast<std::size_t>(d));
    for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) {
      pieces[a] = detail::axis_pieces(outer[a].first, outer[a].second, inner[a].first, inner[a].second);
      central[a] = inner[a].first > outer[a].first ? 1 : 0;
    }
    for (const Box& b : detail::ring_boxes(pieces, central)) {
      if (b.volume() > 0.0) cub.add_cell(b);
    }
  };

  std::vector<std::pair<double, double>> outer(static_cast<std::size_t>(d));
  for (std::size_t a = 0; a < static_cast<std::size_t>(d); ++a) outer[a] = {box.lower[a], box.upper[a]};
  add_ring(outer, clipped(r0));

  int shells = 0;
  double r_inner = r0;
  auto add_shells = [&](int count) {
    for (int j = 0; j < count; ++j) {
      add_ring(clipped(r_inner), clipped(0.5 * r_inner));
      r_inner *= 0.5;
      ++shells;
    }
  };
  add_shells(8);

  std::vector<double> tail_err(static_cast<std::size_t>(ncomp));
  constexpr int kMaxShells = 200;
  auto tail_small = [&](const std::vector<double>& value) {
    tail(r_inner, tail_err);
    double scale = 0.0;
    for (double v : value) scale = std::max(scale, std::abs(v));
    const double tol = std::max(config.abs_tol, config.rel_tol * scale);
    return *std::max_element(tail_err.begin(), tail_err.end()) <= 0.1 * tol;
  };
  while (!tail_small(cub.running_value()) && shells < kMaxShells) add_shells(2);
  while (true) {
    cub.refine(tail_err);
    VectorIntegralResult r = cub.result(tail_err);
    if (shells >= kMaxShells || tail_small(r.value)) return cub.result(tail_err);
    while (!tail_small(r.value) && shells < kMaxShells) add_shells(2);
  }
}

} // namespace htype
