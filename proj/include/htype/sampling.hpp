#pragma once

#include "htype/group.hpp"

#include <random>

namespace htype {

/// Point with coordinates uniform in [-scale, scale].
inline GroupPoint random_point(const GroupSpec& spec, std::mt19937_64& rng, double scale = 1.0)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  GroupPoint g{Vector(spec.m()), Vector(spec.k())};
  for (int i = 0; i < spec.m(); ++i) g.z(i) = u(rng);
  for (int s = 0; s < spec.k(); ++s) g.t(s) = u(rng);
  return g;
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

/// Random point dilated so that its gauge is uniform in [lo, hi].
inline GroupPoint random_point_in_shell(const GroupSpec& spec, std::mt19937_64& rng, double lo, double hi)
{
  std::uniform_real_distribution<double> u(lo, hi);
  GroupPoint g;
  do {
    g = random_point(spec, rng);
  } while (gauge_norm(g) < 1e-3);
  return dilate(spec, u(rng) / gauge_norm(g), g);
}

}  // namespace htype
