#pragma once

// Step-two Carnot groups of Heisenberg type in logarithmic coordinates.
//
// A group is described by its structure constants b^s_{ij} = <[e_i,e_j], eps_s>,
// one skew m x m matrix per direction of the centre. The J map is stored
// alongside with the orientation entry(J_s; row j, col i) = b^s_{ij}, i.e.
// J_s = (b^s)^T, so that (J(eps_s) z)_i = -sum_j b^s_{ij} z_j.

#include "htype/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace htype {

/// Default tolerance on matrix-entry defects when validating custom groups.
inline constexpr double kHTypeTolerance = 1e-10;

struct HTypeReport {
  std::vector<bool> skew_ok;         // per s
  std::vector<bool> orthogonal_ok;   // per s
  std::vector<bool> anticommute_ok;  // per pair (r, s), r < s, row-major
  double max_defect = 0.0;

  bool ok() const
  {
    auto all = [](const std::vector<bool>& v) {
      return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
    };
    return all(skew_ok) && all(orthogonal_ok) && all(anticommute_ok);
  }
};

/// Checks the H-type axioms on raw structure constants. Never throws on
/// well-shaped input; shape problems are reported as DimensionError.
inline HTypeReport validate_htype(const std::vector<Matrix>& b,
                                  double tol = kHTypeTolerance)
{
  if (b.empty()) throw DimensionError("group needs at least one structure matrix");
  const auto m = b.front().rows();
  for (const auto& bs : b) {
    if (bs.rows() != m || bs.cols() != m)
      throw DimensionError("structure matrices must be square and of equal size");
  }

  const auto k = static_cast<int>(b.size());
  HTypeReport report;
  std::vector<Matrix> J;
  J.reserve(b.size());
  for (const auto& bs : b) J.push_back(bs.transpose());

  const Matrix id = Matrix::Identity(m, m);
  auto record = [&](double defect, std::vector<bool>& flags) {
    report.max_defect = std::max(report.max_defect, defect);
    flags.push_back(defect <= tol);
  };
  for (int s = 0; s < k; ++s) {
    record((b[s] + b[s].transpose()).cwiseAbs().maxCoeff(), report.skew_ok);
    record((J[s] * J[s].transpose() - id).cwiseAbs().maxCoeff(), report.orthogonal_ok);
  }
  for (int r = 0; r < k; ++r) {
    for (int s = r + 1; s < k; ++s) {
      record((J[r] * J[s] + J[s] * J[r]).cwiseAbs().maxCoeff(), report.anticommute_ok);
    }
  }
  return report;
}

/// Immutable description of an H-type group.
class GroupSpec {
 public:
  /// H^n: m = 2n, k = 1, [e_i, e_{n+i}] = eps_1.
  static GroupSpec heisenberg(int n)
  {
    if (n < 1) throw DomainError("heisenberg(n) needs n >= 1");
    if (2 * n > kMaxLayerDim) throw DimensionError("heisenberg(n): n too large");
    Matrix b = Matrix::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      b(i, n + i) = 1.0;
      b(n + i, i) = -1.0;
    }
    return GroupSpec({b}, "heisenberg(" + std::to_string(n) + ")");
  }

  /// Quaternionic Heisenberg group: m = 4n, k = 3, J_1, J_2, J_3 act on each
  /// block of R^4 = H as left multiplication by the units i, j, k.
  static GroupSpec quaternionic(int n)
  {
    if (n < 1) throw DomainError("quaternionic(n) needs n >= 1");
    if (4 * n > kMaxLayerDim) throw DimensionError("quaternionic(n): n too large");
    // Left multiplication on (a, b, c, d) <-> a + bi + cj + dk.
    const double unit[3][4][4] = {
        {{0, -1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, -1}, {0, 0, 1, 0}},  // i
        {{0, 0, -1, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}, {0, -1, 0, 0}},  // j
        {{0, 0, 0, -1}, {0, 0, -1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}},  // k
    };
    std::vector<Matrix> b;
    for (const auto& u : unit) {
      Matrix J = Matrix::Zero(4 * n, 4 * n);
      for (int blk = 0; blk < n; ++blk) {
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < 4; ++c) J(4 * blk + r, 4 * blk + c) = u[r][c];
        }
      }
      b.push_back(J.transpose());
    }
    return GroupSpec(std::move(b), "quaternionic(" + std::to_string(n) + ")");
  }

  /// Group from user supplied constants; rejects anything that is not H-type.
  static GroupSpec custom(std::vector<Matrix> b, double tol = kHTypeTolerance)
  {
    const HTypeReport report = validate_htype(b, tol);
    if (b.front().rows() > kMaxLayerDim || static_cast<int>(b.size()) > kMaxLayerDim)
      throw DimensionError("custom group exceeds the supported layer dimension");
    if (!report.ok()) {
      std::string what = "structure constants are not of H-type:";
      auto failed = [](const std::vector<bool>& v) {
        return std::any_of(v.begin(), v.end(), [](bool x) { return !x; });
      };
      if (failed(report.skew_ok)) what += " skew-symmetry defect;";
      if (failed(report.orthogonal_ok)) what += " orthogonality defect;";
      if (failed(report.anticommute_ok)) what += " anticommutation defect;";
      what += " max defect " + std::to_string(report.max_defect);
      throw DomainError(what);
    }
    return GroupSpec(std::move(b), "custom");
  }

  int m() const { return static_cast<int>(b_.front().rows()); }
  int k() const { return static_cast<int>(b_.size()); }
  /// Homogeneous dimension.
  int Q() const { return m() + 2 * k(); }
  int dim() const { return m() + k(); }

  const Matrix& b(int s) const { return b_[static_cast<std::size_t>(s)]; }
  const Matrix& J(int s) const { return J_[static_cast<std::size_t>(s)]; }
  const std::vector<Matrix>& structure() const { return b_; }
  const std::string& name() const { return name_; }

  HTypeReport validate(double tol = kHTypeTolerance) const { return validate_htype(b_, tol); }

  friend bool operator==(const GroupSpec& a, const GroupSpec& b)
  {
    if (a.b_.size() != b.b_.size()) return false;
    for (std::size_t s = 0; s < a.b_.size(); ++s) {
      if (a.b_[s].rows() != b.b_[s].rows() || a.b_[s] != b.b_[s]) return false;
    }
    return true;
  }

 private:
  GroupSpec(std::vector<Matrix> b, std::string name) : b_(std::move(b)), name_(std::move(name))
  {
    J_.reserve(b_.size());
    for (const auto& bs : b_) J_.push_back(bs.transpose());
  }

  std::vector<Matrix> b_;
  std::vector<Matrix> J_;
  std::string name_;
};

/// Point g = exp(z + t) stored by its logarithmic coordinates.
struct GroupPoint {
  Vector z;
  Vector t;

  static GroupPoint identity(const GroupSpec& spec)
  {
    return {Vector::Zero(spec.m()), Vector::Zero(spec.k())};
  }

  /// Flat coordinates (z_1..z_m, t_1..t_k).
  static GroupPoint from_coords(const GroupSpec& spec, const double* x)
  {
    GroupPoint g{Vector(spec.m()), Vector(spec.k())};
    for (int i = 0; i < spec.m(); ++i) g.z(i) = x[i];
    for (int s = 0; s < spec.k(); ++s) g.t(s) = x[spec.m() + s];
    return g;
  }

  void to_coords(double* x) const
  {
    for (Eigen::Index i = 0; i < z.size(); ++i) x[i] = z(i);
    for (Eigen::Index s = 0; s < t.size(); ++s) x[z.size() + s] = t(s);
  }

  bool is_identity() const { return z.isZero(0.0) && t.isZero(0.0); }

  friend bool operator==(const GroupPoint& a, const GroupPoint& b)
  {
    return a.z.size() == b.z.size() && a.t.size() == b.t.size() && a.z == b.z && a.t == b.t;
  }
};

inline void check_dims(const GroupSpec& spec, const GroupPoint& g)
{
  if (g.z.size() != spec.m() || g.t.size() != spec.k())
    throw DimensionError("point dimensions do not match the group");
}

/// [z, z']_s = sum_{i,j} b^s_{ij} z_i z'_j.
inline Vector bracket(const GroupSpec& spec, const Vector& z, const Vector& zp)
{
  if (z.size() != spec.m() || zp.size() != spec.m())
    throw DimensionError("bracket: vectors must have length m");
  Vector out(spec.k());
  for (int s = 0; s < spec.k(); ++s) out(s) = z.dot(spec.b(s) * zp);
  return out;
}

/// Step-two Baker-Campbell-Hausdorff product.
inline GroupPoint multiply(const GroupSpec& spec, const GroupPoint& g, const GroupPoint& h)
{
  check_dims(spec, g);
  check_dims(spec, h);
  return {g.z + h.z, g.t + h.t + 0.5 * bracket(spec, g.z, h.z)};
}

inline GroupPoint inverse(const GroupPoint& g) { return {-g.z, -g.t}; }

/// delta_lambda(z, t) = (lambda z, lambda^2 t).
inline GroupPoint dilate(const GroupSpec& spec, double lambda, const GroupPoint& g)
{
  check_dims(spec, g);
  if (!(lambda > 0.0)) throw DomainError("dilation factor must be positive");
  return {lambda * g.z, (lambda * lambda) * g.t};
}

/// Folland-Kaplan gauge N = (|z|^4 + 16|t|^2)^(1/4).
inline double gauge_norm(const GroupPoint& g)
{
  const double psi = g.z.squaredNorm();
  return std::sqrt(std::sqrt(psi * psi + 16.0 * g.t.squaredNorm()));
}

/// J(t) z = sum_s t_s J_s z.
inline Vector j_apply(const GroupSpec& spec, const Vector& t, const Vector& z)
{
  if (t.size() != spec.k() || z.size() != spec.m())
    throw DimensionError("j_apply: expected t in R^k and z in R^m");
  Vector out = Vector::Zero(spec.m());
  for (int s = 0; s < spec.k(); ++s) out.noalias() += t(s) * (spec.J(s) * z);
  return out;
}

} // namespace htype
