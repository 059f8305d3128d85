#pragma once

#include "rigidflow/common.hpp"

namespace rigidflow {

/// Disk body of radius `body_radius` centered at `body_center`, inside the
/// container disk of radius `outer_radius` centered at the origin.
struct DiskGeometry {
  double outer_radius = 1.0;
  double body_radius = 0.2;
  Vec2 body_center = Vec2::Zero();

  /// Initial clearance between body and container wall.
  double gap() const {
    return outer_radius - (body_center.norm() + body_radius);
  }

  void validate() const {
    require(body_radius > 0.0, "body_radius must be positive");
    require(outer_radius > body_radius,
            "body_radius must be smaller than outer_radius");
    require(gap() > 0.0, "body must be strictly inside the container");
  }
};

}  // namespace rigidflow
