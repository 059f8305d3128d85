#include "rigidflow/extension.hpp"

namespace rigidflow {

ExtensionField lambda_field(const RigidState& s, const Cutoff& cutoff,
                            const Vec2& body_center) {
  ExtensionField f;
  f.cutoff = &cutoff;
  f.center = body_center + s.position;
  f.lin_vel = s.lin_vel;
  f.ang_vel = s.ang_vel;
  return f;
}

Vec2 ExtensionField::value(const Vec2& x) const {
  const Vec2 d = x - center;
  double psi_flat;
  if (cutoff->is_flat(x, &psi_flat))  // rigid zone or wall zone
    return psi_flat * (lin_vel + ang_vel * perp(d));
  const double w = perp(d).dot(lin_vel) + 0.5 * d.squaredNorm() * ang_vel;
  const Vec2 dw(lin_vel.y() + ang_vel * d.x(), -lin_vel.x() + ang_vel * d.y());
  const double psi = cutoff->value(x);
  const Vec2 dpsi = cutoff->gradient(x);
  // Lambda = perp-grad(psi w) = (-(psi w)_,2 , (psi w)_,1)
  const Vec2 df = dpsi * w + psi * dw;
  return Vec2(-df.y(), df.x());
}

double divergence_fd(const ExtensionField& f, const Vec2& x, double h) {
  auto d4 = [&](int comp) {
    const Vec2 e = Vec2::Unit(comp);
    return (-f.value(x + 2.0 * h * e)(comp) + 8.0 * f.value(x + h * e)(comp) -
            8.0 * f.value(x - h * e)(comp) + f.value(x - 2.0 * h * e)(comp)) /
           (12.0 * h);
  };
  return d4(0) + d4(1);
}

ExtensionField::Eval ExtensionField::full(const Vec2& x) const {
  const Vec2 d = x - center;
  double psi_flat;
  if (cutoff->is_flat(x, &psi_flat)) {
    Eval e;
    e.value = psi_flat * (lin_vel + ang_vel * perp(d));
    e.jac << 0.0, -psi_flat * ang_vel, psi_flat * ang_vel, 0.0;
    e.hess[0].setZero();
    e.hess[1].setZero();
    return e;
  }
  const double w = perp(d).dot(lin_vel) + 0.5 * d.squaredNorm() * ang_vel;
  const Vec2 dw(lin_vel.y() + ang_vel * d.x(), -lin_vel.x() + ang_vel * d.y());
  const Mat2 hw = ang_vel * Mat2::Identity();  // third derivative of w is zero

  const double psi = cutoff->value(x);
  const Vec2 dpsi = cutoff->gradient(x);
  const Mat2 hpsi = cutoff->hessian(x);
  const std::array<Mat2, 2> tpsi = cutoff->third(x);

  // f = psi * w and its derivatives by the product rule
  Vec2 df = dpsi * w + psi * dw;
  Mat2 hf = hpsi * w + dpsi * dw.transpose() + dw * dpsi.transpose() + psi * hw;
  std::array<Mat2, 2> tf;  // tf[k](i,j) = f_,ijk
  for (int k = 0; k < 2; ++k) {
    Mat2 m = tpsi[k] * w;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        m(i, j) += hpsi(i, j) * dw(k) + hpsi(i, k) * dw(j) +
                   hpsi(j, k) * dw(i) + dpsi(i) * hw(j, k) +
                   dpsi(j) * hw(i, k) + dpsi(k) * hw(i, j);
    tf[k] = m;
  }

  Eval e;
  e.value = Vec2(-df.y(), df.x());
  for (int j = 0; j < 2; ++j) {
    e.jac(0, j) = -hf(1, j);
    e.jac(1, j) = hf(0, j);
  }
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      e.hess[0](j, k) = -tf[k](1, j);
      e.hess[1](j, k) = tf[k](0, j);
    }
  return e;
}

}  // namespace rigidflow
