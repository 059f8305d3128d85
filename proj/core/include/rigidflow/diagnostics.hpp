#pragma once

#include "rigidflow/fsi_solver.hpp"

namespace rigidflow {

/// Time series of the kinetic energies and cumulative dissipation terms whose
/// sum balances the initial energy; residual = (all terms) - E(0).
struct EnergyLedger {
  std::vector<double> time;
  std::vector<double> fluid_kinetic;
  std::vector<double> solid_kinetic;
  std::vector<double> dissip_interior;  // cumulative 2 int |Du|^2
  std::vector<double> dissip_wall;      // cumulative 2 alpha int_wall |u|^2
  std::vector<double> dissip_body;      // cumulative 2 alpha int_body |u-uS|^2
  std::vector<double> residual;

  double max_abs_residual() const;
};

EnergyLedger energy_audit(const Trajectory& traj);

/// Admissible test data: a smooth rigid path (V(t), w(t)) extended
/// divergence-free by the cutoff construction around the current body
/// position; must vanish near the final time.
struct AdmissibleTest {
  std::function<Vec2(double)> lin;
  std::function<double(double)> ang;
};

/// Residual of the integrated weak form evaluated with a second-order time
/// quadrature (trapezoid + central differences); measures the consistency of
/// the discrete trajectory and decreases at first order in dt.
/// errors: test not rigid/divergence-free/vanishing near the final time.
double weak_residual(const Trajectory& traj, const AdmissibleTest& test);

/// Same weak form paired with a test drawn from the solver's own discrete
/// space (backward-Euler quadrature): Galerkin orthogonality makes this
/// vanish to solver tolerance.
double weak_residual_discrete(const Trajectory& traj, const VecX& vdofs,
                              const Vec2& lin_body, double ang);

/// Rigidity-preserving time mollifier: convolves the body-frame data and the
/// reference-domain dofs with an even polynomial bump of width eps, constant
/// extension outside the run. The body path itself is unchanged.
Trajectory time_smooth(const Trajectory& traj, double eps);

/// Discrete solution-space distance (L2-in-time of H1 fluid + rigid norms).
double solution_norm_distance(const Trajectory& a, const Trajectory& b);

/// Fields of run 2 expressed on the geometry of run 1 (shared reference
/// domain and time grid).
struct TransformedRun {
  std::vector<VecX> velocity;
  std::vector<Vec2> lin_vel;      // Q1 Q2^T l2
  std::vector<double> ang_vel;    // r2
  std::vector<double> div_residual;
};

TransformedRun transform_between(const Trajectory& run2,
                                 const Trajectory& run1);

/// Distance and Groenwall-coefficient series for two runs from compatible
/// grids (equal, or one a refinement of the other).
struct ComparatorReport {
  std::vector<double> time;
  std::vector<double> ehat;     // squared solution distance
  std::vector<double> bquant;   // Groenwall coefficient surrogate
  std::vector<double> bint;     // running integral of bquant
  std::vector<Vec2> lin2_transformed;
  std::vector<double> ang2_transformed;
};

ComparatorReport compare_runs(const Trajectory& run1, const Trajectory& run2);

}  // namespace rigidflow
