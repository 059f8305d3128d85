#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rigidflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;

/// x^perp = (-x2, x1), counterclockwise quarter turn.
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

/// Invalid input or configuration (CLI exit code 1).
struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runtime numerical failure: singular system, non-convergence, NaN (CLI exit code 2).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

inline void check_numeric(bool ok, const std::string& msg) {
  if (!ok) throw NumericalError(msg);
}

}  // namespace rigidflow
