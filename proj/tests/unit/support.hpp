#pragma once

#include <Eigen/Geometry>
#include <cmath>

#include "aae/geometry.hpp"
#include "aae/rng.hpp"

namespace aae::testing {

/// Uniform random rotation (Shoemake's quaternion method).
inline Rotation3d random_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double t1 = 2 * std::numbers::pi * u2, t2 = 2 * std::numbers::pi * u3;
  const Eigen::Quaterniond q(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1),
                             b * std::sin(t2));
  return Rotation3d::Orthonormalized(q.toRotationMatrix());
}

inline Vec3d random_unit(Rng& rng) {
  Vec3d v(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

/// Rotation by exactly `angle` about a random axis.
inline Rotation3d random_rotation_by(Rng& rng, double angle) {
  return Rotation3d::AboutAxis(random_unit(rng), angle);
}

}  // namespace aae::testing
