#pragma once

#include "rigidflow/assembly.hpp"
#include "rigidflow/kinematics.hpp"

namespace rigidflow {

/// Steady Stokes problem with Navier slip (Robin) conditions on both rings:
///   -div(2 D(v)) + grad p = f,  div v = 0,
///   v.n prescribed,  (D(v) n).tau = -alpha (v - robin_offset).tau + tang.tau.
struct SteadyProblem {
  const ReferenceMesh* mesh = nullptr;
  double alpha = 0.0;
  std::function<Vec2(const Vec2&)> force;         // null = 0
  std::function<double(const Vec2&)> normal_inner;  // v.n data on INNER
  std::function<double(const Vec2&)> normal_outer;  // v.n data on OUTER
  std::function<Vec2(const Vec2&)> tang_inner;    // inhomogeneity h1
  std::function<Vec2(const Vec2&)> tang_outer;    // inhomogeneity h2
  std::function<Vec2(const Vec2&)> robin_offset_inner;  // u_S in (v-u_S).tau
};

struct SteadySolution {
  VecX velocity;  // Cartesian nodal dofs
  VecX pressure;  // zero mean
  double gauge = 0.0;
};

/// errors: incompatible normal flux (nonzero net), singular system.
SteadySolution solve_steady_robin(const SteadyProblem& prob);

/// |dissipation - work of the data| / dissipation for a computed solution.
double steady_energy_gap(const SteadyProblem& prob, const SteadySolution& sol);

/// Kirchhoff potentials: Laplace-Neumann solves with boundary data
/// e1.n, e2.n and (x - c0)^perp . n on INNER, zero on OUTER; zero-mean gauge.
/// Solvability of each Neumann datum is verified before solving.
std::array<VecX, 3> kirchhoff_potentials(const ReferenceMesh& mesh);

/// A_ij = int grad(phi_i) . grad(phi_j) over the fluid annulus.
Mat3 added_mass(const ReferenceMesh& mesh, const std::array<VecX, 3>& phi);

struct LiftingOperators {
  std::array<VecX, 3> potentials;
  Mat3 added = Mat3::Zero();
  Mat3 kmat = Mat3::Zero();  // diag(m, m, J) + added mass
};

LiftingOperators build_lifting(const ReferenceMesh& mesh,
                               const MaterialParams& mat);

/// Steady Stokes-Robin solve with rigid body datum v.n = (l + r x^perp).n on
/// INNER, homogeneous slip on OUTER.
SteadySolution lifting(const ReferenceMesh& mesh, const Vec2& l, double r,
                       double alpha);

/// Dirichlet energy of a scalar potential (quadrature of |grad phi|^2).
double dirichlet_energy(const ReferenceMesh& mesh, const VecX& phi);

/// Mean of a scalar Q2 nodal field (gauge check).
double scalar_mean(const ReferenceMesh& mesh, const VecX& phi);

// Smooth divergence-free manufactured solution on the annulus.
Vec2 mms_velocity(const Vec2& x);
Mat2 mms_velocity_grad(const Vec2& x);
double mms_pressure(const Vec2& x);
Vec2 mms_force(const Vec2& x);

struct MmsLevel {
  double h;
  double l2_error;
  double slip_residual;
};

struct MmsResult {
  std::vector<MmsLevel> levels;
  double observed_order = 0.0;       // L2 velocity, between last two levels
  double slip_order = 0.0;
};

/// Convergence study of the steady Robin solver against the manufactured
/// solution over uniformly refined meshes.
MmsResult manufactured_convergence(const DiskGeometry& geom, int n_levels,
                                   int nr0, int nt0, double alpha);

/// Boundary residual of the tangential slip condition for a discrete field.
double slip_condition_residual(const ReferenceMesh& mesh, const VecX& vdofs,
                               double alpha,
                               const std::function<Vec2(const Vec2&)>& h_inner,
                               const std::function<Vec2(const Vec2&)>& h_outer);

}  // namespace rigidflow
