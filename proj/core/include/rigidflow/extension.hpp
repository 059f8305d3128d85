#pragma once

#include "rigidflow/cutoff.hpp"
#include "rigidflow/kinematics.hpp"

namespace rigidflow {

/// Divergence-free extension of the rigid velocity field:
///   Lambda = perp-grad(psi * w),  w = (x - h)^perp . lin_vel + |x - h|^2 ang_vel / 2.
/// Equals the rigid velocity wherever psi == 1 and vanishes where psi == 0;
/// div Lambda = 0 identically. Derivatives up to second order are closed-form.
struct ExtensionField {
  struct Eval {
    Vec2 value;
    Mat2 jac;                   // jac(i,j) = d Lambda_i / dx_j
    std::array<Mat2, 2> hess;   // hess[i](j,k) = d^2 Lambda_i / dx_j dx_k
  };

  const Cutoff* cutoff = nullptr;
  Vec2 center = Vec2::Zero();  // current body center (body_center + position)
  Vec2 lin_vel = Vec2::Zero();
  double ang_vel = 0.0;

  Vec2 value(const Vec2& x) const;
  Eval full(const Vec2& x) const;
};

/// Extension field of the given state (body-centered coordinates).
ExtensionField lambda_field(const RigidState& s, const Cutoff& cutoff,
                            const Vec2& body_center = Vec2::Zero());

/// Finite-difference divergence (4th-order stencil; the field's higher
/// derivatives are large in the transition collar).
double divergence_fd(const ExtensionField& f, const Vec2& x, double h = 1e-5);

}  // namespace rigidflow
