#pragma once

#include <memory>

#include "rigidflow/assembly.hpp"
#include "rigidflow/stokes_robin.hpp"

namespace rigidflow {

/// Velocity/pressure unknowns on the reference mesh at one instant. The dof
/// vectors are the transformed fields; the attached rigid velocities are in
/// lab-frame components.
struct FluidField {
  double time = 0.0;
  VecX velocity;  // 2 per node, Cartesian reference components
  VecX pressure;  // zero mean
  VecX lam;       // interface normal-stress multipliers (one per INNER edge)
  Vec2 lin_vel = Vec2::Zero();
  double ang_vel = 0.0;
};

struct StepStats {
  int picard_iters = 0;
  double wall_dist = 0.0;
  double energy = 0.0;
  double normal_residual = 0.0;  // max per-edge weak trace residual
};

struct SolverParams {
  double dt = 1e-3;
  double picard_tol = 1e-10;
  int picard_max = 50;
  int substeps = 4;
  double collision_threshold = 0.0;  // defaulted to safe_dist/2
  int max_halvings = 3;
};

struct Trajectory {
  std::shared_ptr<const ReferenceMesh> mesh;
  Cutoff cutoff;
  MaterialParams material;
  SolverParams params;
  std::uint64_t config_hash = 0;

  FlowMap flow;  // one frame per stored time
  std::vector<RigidState> states;
  std::vector<FluidField> fields;
  std::vector<StepStats> stats;
  bool collided = false;

  int n_steps() const { return static_cast<int>(states.size()) - 1; }
  double time(int k) const { return flow.frame(k).time; }
};

struct InitialData {
  Vec2 lin_vel = Vec2::Zero();
  double ang_vel = 0.0;
  enum class FluidIc { Zero, RigidExtension, Stream } fluid_ic =
      FluidIc::RigidExtension;
  double stream_amp = 0.0;
  int stream_mode = 2;
};

struct PicardDiverged : NumericalError {
  using NumericalError::NumericalError;
};

/// Exact wall clearance for the disk-in-disk geometry.
double collision_distance(const DiskGeometry& geom, const RigidState& s);

/// Flow-map sample set: velocity nodes first, then cell quadrature points.
std::vector<Vec2> flow_sample_points(const ReferenceMesh& mesh);

/// Initial velocity dofs for the configured selector.
VecX initial_velocity(const ReferenceMesh& mesh, const Cutoff& cutoff,
                      const InitialData& data);

/// Metric-weighted L2 norm of a velocity dof vector.
double metric_l2(const ReferenceMesh& mesh, const std::vector<QuadCoeffs>& co,
                 const VecX& dofs);

/// Coupled time integrator: per step a Picard sweep over geometry prediction,
/// monolithic implicit solve, and rigid update; stops at collision.
class FsiSolver {
 public:
  FsiSolver(std::shared_ptr<const ReferenceMesh> mesh, MaterialParams mat,
            Cutoff cutoff, SolverParams params);

  Trajectory init(const InitialData& data, std::uint64_t config_hash = 0) const;

  /// Warm start from explicit initial dofs (reference components) and rigid
  /// velocities; the body starts at its reference position.
  Trajectory init_warm(const VecX& velocity, const Vec2& lin_vel,
                       double ang_vel, std::uint64_t config_hash = 0) const;

  /// One backward-Euler step; throws PicardDiverged on non-convergence.
  void step(Trajectory& traj, double dt) const;

  /// Steps an initialized trajectory until t_final or collision.
  void run_until(Trajectory& traj, double t_final) const;

  /// Runs until t_final or collision (flagged, not an error); subdivides a
  /// step on Picard failure up to max_halvings levels.
  Trajectory run(const InitialData& data, double t_final,
                 std::uint64_t config_hash = 0) const;

  const SolverParams& params() const { return params_; }

 private:
  void attempt_step(Trajectory& traj, double dt, int depth) const;

  std::shared_ptr<const ReferenceMesh> mesh_;
  MaterialParams mat_;
  Cutoff cutoff_;
  SolverParams params_;
  mutable LinearSolverCache lu_cache_;
  mutable VecX last_x_;
  mutable bool have_lu_ = false;
  mutable std::vector<Triplet> const_trips_;  // time-independent blocks
};

}  // namespace rigidflow
