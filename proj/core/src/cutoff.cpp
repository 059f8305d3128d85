#include "rigidflow/cutoff.hpp"

namespace rigidflow {

Cutoff::Cutoff(const DiskGeometry& geom, double safe_dist)
    : outer_radius_(geom.outer_radius), safe_dist_(safe_dist) {
  require(safe_dist > 0.0, "safe distance must be positive");
}

Cutoff build_cutoff(const DiskGeometry& geom, double safe_dist) {
  geom.validate();
  require(geom.gap() >= 2.0 * safe_dist,
          "body too close to the wall: need dist(S0, wall) >= 2*delta_safe");
  return Cutoff(geom, safe_dist);
}

double Cutoff::step(double u) { return ((6 * u - 15) * u + 10) * u * u * u; }
double Cutoff::step1(double u) { return ((30 * u - 60) * u + 30) * u * u; }
double Cutoff::step2(double u) { return ((120 * u - 180) * u + 60) * u; }
double Cutoff::step3(double u) { return (360 * u - 360) * u + 60; }

void Cutoff::profile(double d, double out[4]) const {
  const double lo = 0.25 * safe_dist_;
  const double width = 0.25 * safe_dist_;  // transition [delta/4, delta/2]
  const double u = (d - lo) / width;
  if (u <= 0.0) {
    out[0] = out[1] = out[2] = out[3] = 0.0;
  } else if (u >= 1.0) {
    out[0] = 1.0;
    out[1] = out[2] = out[3] = 0.0;
  } else {
    out[0] = step(u);
    out[1] = step1(u) / width;
    out[2] = step2(u) / (width * width);
    out[3] = step3(u) / (width * width * width);
  }
}

double Cutoff::value(const Vec2& x) const {
  double p[4];
  profile(wall_distance(x), p);
  return p[0];
}

Vec2 Cutoff::gradient(const Vec2& x) const {
  double p[4];
  profile(wall_distance(x), p);
  if (p[1] == 0.0) return Vec2::Zero();
  const double rho = x.norm();
  return p[1] * (-x / rho);
}

Mat2 Cutoff::hessian(const Vec2& x) const {
  double p[4];
  profile(wall_distance(x), p);
  if (p[1] == 0.0 && p[2] == 0.0) return Mat2::Zero();
  const double rho = x.norm();
  const Vec2 dd = -x / rho;  // grad of wall distance
  // hess of wall distance: -(I/rho - x x^T / rho^3)
  const Mat2 hd =
      -(Mat2::Identity() / rho - (x * x.transpose()) / (rho * rho * rho));
  return p[2] * dd * dd.transpose() + p[1] * hd;
}

std::array<Mat2, 2> Cutoff::third(const Vec2& x) const {
  double p[4];
  profile(wall_distance(x), p);
  std::array<Mat2, 2> t{Mat2::Zero(), Mat2::Zero()};
  if (p[1] == 0.0 && p[2] == 0.0 && p[3] == 0.0) return t;
  const double rho = x.norm();
  const double r3 = rho * rho * rho, r5 = r3 * rho * rho;
  const Vec2 dd = -x / rho;
  const Mat2 hd =
      -(Mat2::Identity() / rho - (x * x.transpose()) / r3);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double del_ij = (i == j) ? 1.0 : 0.0;
        const double del_ik = (i == k) ? 1.0 : 0.0;
        const double del_jk = (j == k) ? 1.0 : 0.0;
        const double td =  // d^3(dist)/dx_i dx_j dx_k
            (del_ij * x(k) + del_ik * x(j) + del_jk * x(i)) / r3 -
            3.0 * x(i) * x(j) * x(k) / r5;
        t[k](i, j) = p[3] * dd(i) * dd(j) * dd(k) +
                     p[2] * (hd(i, j) * dd(k) + hd(i, k) * dd(j) +
                             hd(j, k) * dd(i)) +
                     p[1] * td;
      }
    }
  }
  return t;
}

}  // namespace rigidflow
