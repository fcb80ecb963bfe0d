#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <stdexcept>
#include <string>

namespace htype {

/// Upper bound on dim V1 and dim V2. Keeps the small vectors and matrices on
/// the stack inside quadrature loops.
inline constexpr int kMaxLayerDim = 16;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLayerDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                             kMaxLayerDim, kMaxLayerDim>;

inline Vector vec(std::initializer_list<double> values)
{
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of inputs do not agree with the group they are used with.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (negative dilation, p out of range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A kernel was evaluated at its pole.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// An integral could not be certified to the requested tolerance.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

} // namespace htype
