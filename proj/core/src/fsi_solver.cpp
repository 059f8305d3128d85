#include "rigidflow/fsi_solver.hpp"

namespace rigidflow {

double collision_distance(const DiskGeometry& geom, const RigidState& s) {
  return geom.outer_radius -
         ((geom.body_center + s.position).norm() + geom.body_radius);
}

std::vector<Vec2> flow_sample_points(const ReferenceMesh& mesh) {
  std::vector<Vec2> pts = mesh.vnode;
  pts.reserve(mesh.n_vnodes + 9 * mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int q = 0; q < 9; ++q) pts.push_back(mesh.cache[c].xq[q]);
  return pts;
}

VecX initial_velocity(const ReferenceMesh& mesh, const Cutoff& cutoff,
                      const InitialData& data) {
  using Ic = InitialData::FluidIc;
  if (data.fluid_ic == Ic::Zero)
    return VecX::Zero(2 * mesh.n_vnodes);

  RigidState s0;
  s0.lin_vel = data.lin_vel;
  s0.ang_vel = data.ang_vel;
  const ExtensionField ext =
      lambda_field(s0, cutoff, mesh.geom.body_center);

  const Vec2 c0 = mesh.geom.body_center;
  const double a = mesh.geom.body_radius;
  const double gap = mesh.geom.gap();
  const double r0 = a + 0.15 * gap, r1 = a + 0.85 * gap;
  const double norm = std::pow(0.5 * (r1 - r0), 4);
  auto swirl = [&](const Vec2& x) -> Vec2 {
    const Vec2 d = x - c0;
    const double rho = d.norm();
    if (rho <= r0 || rho >= r1 || data.stream_amp == 0.0) return Vec2::Zero();
    const double b = (rho - r0) * (rho - r0) * (r1 - rho) * (r1 - rho) / norm;
    const double db =
        2.0 * (rho - r0) * (r1 - rho) * ((r1 - rho) - (rho - r0)) / norm;
    const double th = std::atan2(d.y(), d.x());
    const Vec2 er = d / rho, et = perp(er);
    const int k = data.stream_mode;
    const Vec2 grad = data.stream_amp * (db * std::cos(k * th) * er -
                                         k * b * std::sin(k * th) / rho * et);
    return perp(grad);
  };

  return interpolate_velocity(mesh, [&](const Vec2& x) {
    Vec2 v = ext.value(x);
    if (data.fluid_ic == Ic::Stream) v += swirl(x);
    return v;
  });
}

double metric_l2(const ReferenceMesh& mesh, const std::vector<QuadCoeffs>& co,
                 const VecX& dofs) {
  double s = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      Vec2 v = Vec2::Zero();
      for (int a = 0; a < 9; ++a) {
        const int id = mesh.cells[c][a];
        v += cc.n[q][a] * Vec2(dofs[2 * id], dofs[2 * id + 1]);
      }
      s += cc.wq[q] * v.dot(co[9 * c + q].metric * v);
    }
  }
  return std::sqrt(s);
}

namespace {

double max_trace_residual(const ReferenceMesh& mesh, const VecX& v,
                          const Vec2& lin_body, double ang) {
  const Vec2 c0 = mesh.geom.body_center;
  double worst = 0.0;
  for (const auto& e : mesh.inner) {
    double r = 0.0;
    for (const auto& qp : e.qp) {
      Vec2 u = Vec2::Zero();
      for (int i = 0; i < 3; ++i)
        u += qp.shp[i] * Vec2(v[2 * e.nodes[i]], v[2 * e.nodes[i] + 1]);
      r += (u - lin_body - ang * perp(qp.x - c0)).dot(qp.nds);
    }
    worst = std::max(worst, std::abs(r) / e.length);
  }
  return worst;
}

double total_energy(const ReferenceMesh& mesh,
                    const std::vector<QuadCoeffs>& co, const VecX& v,
                    const MaterialParams& mat, const Vec2& lin, double ang) {
  const double fluid = metric_l2(mesh, co, v);
  return 0.5 * fluid * fluid + 0.5 * mat.mass * lin.squaredNorm() +
         0.5 * mat.inertia * ang * ang;
}

}  // namespace

FsiSolver::FsiSolver(std::shared_ptr<const ReferenceMesh> mesh,
                     MaterialParams mat, Cutoff cutoff, SolverParams params)
    : mesh_(std::move(mesh)), mat_(mat), cutoff_(cutoff), params_(params) {
  mat_.validate();
  require(params_.dt > 0.0, "dt must be positive");
  if (params_.collision_threshold <= 0.0)
    params_.collision_threshold = 0.5 * cutoff_.safe_dist();
}

namespace {

// Discrete solenoidal projection of initial data: constrained mass solve
// keeping the weak divergence and trace conditions of the scheme.
VecX project_initial(const ReferenceMesh& mesh, const VecX& raw,
                     const Vec2& lin_body, double ang) {
  if (raw.cwiseAbs().maxCoeff() == 0.0) return raw;
  SystemLayout layout;
  layout.n_vnodes = mesh.n_vnodes;
  layout.np = mesh.n_pnodes;
  layout.n_lam = static_cast<int>(mesh.inner.size());
  layout.rigid = false;
  Assembler asd(mesh, layout);
  StrongNormalBc outer;
  for (int id : mesh.outer_nodes) {
    Mat2 f;
    f.col(0) = mesh.node_normal(id, false);
    f.col(1) = perp(f.col(0));
    outer.nodes.push_back(id);
    outer.frame.push_back(f);
    outer.data.push_back(0.0);
  }
  asd.set_strong_bc({outer});
  asd.add_metric_mass(1.0, nullptr);
  asd.add_divergence();
  asd.add_gauge();
  asd.add_inner_constraint(&lin_body, ang);
  const std::vector<QuadCoeffs> ident(
      static_cast<size_t>(mesh.n_cells()) * 9);
  asd.rhs_mass_old(1.0, raw, ident);
  return asd.solve().velocity;
}

}  // namespace

Trajectory FsiSolver::init_warm(const VecX& velocity, const Vec2& lin_vel,
                                double ang_vel,
                                std::uint64_t config_hash) const {
  require(velocity.size() == 2 * mesh_->n_vnodes,
          "warm start velocity has the wrong dof count");
  Trajectory traj;
  traj.mesh = mesh_;
  traj.cutoff = cutoff_;
  traj.material = mat_;
  traj.params = params_;
  traj.config_hash = config_hash;

  RigidState s0;
  s0.lin_vel = lin_vel;
  s0.ang_vel = ang_vel;
  traj.flow =
      FlowMap(flow_sample_points(*mesh_), mesh_->geom, cutoff_, params_.substeps);
  traj.flow.reset(s0);
  traj.states.push_back(s0);

  FluidField f;
  f.time = 0.0;
  f.velocity = project_initial(*mesh_, velocity,
                               s0.rotation().transpose() * lin_vel, ang_vel);
  f.pressure = VecX::Zero(mesh_->n_pnodes);
  f.lam = VecX::Zero(static_cast<int>(mesh_->inner.size()));
  f.lin_vel = lin_vel;
  f.ang_vel = ang_vel;
  traj.fields.push_back(std::move(f));

  const auto co = frame_coefficients(*mesh_, traj.flow.frame(0), nullptr);
  StepStats st;
  st.wall_dist = collision_distance(mesh_->geom, s0);
  st.energy = total_energy(*mesh_, co, traj.fields[0].velocity, mat_,
                           lin_vel, ang_vel);
  st.normal_residual =
      max_trace_residual(*mesh_, traj.fields[0].velocity,
                         s0.rotation().transpose() * lin_vel, ang_vel);
  traj.stats.push_back(st);
  return traj;
}

Trajectory FsiSolver::init(const InitialData& data,
                           std::uint64_t config_hash) const {
  return init_warm(initial_velocity(*mesh_, cutoff_, data), data.lin_vel,
                   data.ang_vel, config_hash);
}

void FsiSolver::step(Trajectory& traj, double dt) const {
  const ReferenceMesh& mesh = *mesh_;
  require(collision_distance(mesh.geom, traj.states.back()) >
              params_.collision_threshold,
          "collision guard: body within delta_safe/2 of the wall");
  const int last = traj.flow.n_frames() - 1;
  const FlowFrame& frame_n = traj.flow.frame(last);
  const RigidState state_n = traj.states.back();
  const VecX& v_n = traj.fields.back().velocity;
  const double alpha = mat_.friction;

  SystemLayout layout;
  layout.n_vnodes = mesh.n_vnodes;
  layout.np = mesh.n_pnodes;
  layout.n_lam = static_cast<int>(mesh.inner.size());
  layout.rigid = true;

  StrongNormalBc outer_bc;
  for (int id : mesh.outer_nodes) {
    Mat2 f;
    f.col(0) = mesh.node_normal(id, false);
    f.col(1) = perp(f.col(0));
    outer_bc.nodes.push_back(id);
    outer_bc.frame.push_back(f);
    outer_bc.data.push_back(0.0);
  }

  if (const_trips_.empty()) {
    Assembler a0(mesh, layout);
    a0.set_strong_bc({outer_bc});
    a0.add_slip_outer(alpha);
    a0.add_slip_inner_rigid(alpha);
    a0.add_divergence();
    a0.add_gauge();
    a0.add_inner_constraint();
    const_trips_ = a0.triplets();
  }

  // explicit extrapolation of the rigid velocities as the first prediction
  Vec2 l_pred = state_n.lin_vel;
  double r_pred = state_n.ang_vel;
  if (traj.states.size() >= 2) {
    const int nlast = static_cast<int>(traj.states.size()) - 1;
    const double dt_prev =
        traj.fields[nlast].time - traj.fields[nlast - 1].time;
    const double f = dt / dt_prev;
    l_pred += f * (state_n.lin_vel - traj.states[nlast - 1].lin_vel);
    r_pred += f * (state_n.ang_vel - traj.states[nlast - 1].ang_vel);
  }
  Vec2 l_it = state_n.lin_vel;
  double r_it = state_n.ang_vel;
  VecX v_prev = v_n;   // raw iterate, for the increment measure
  VecX v_conv = v_n;   // damped iterate feeding the transport velocity
  LinearSolution sol;
  Vec2 l_new = l_pred;
  double r_new = r_pred;
  int iters = 0;
  bool converged = false;
  double prev_incr = std::numeric_limits<double>::max();
  bool refactored_this_step = false;
  // geometry-prediction damping: the rotation feedback through the collar
  // coefficients has a dt-independent loop gain and can cycle undamped
  double relax = 1.0;
  // once the prediction settles far below the scheme accuracy, freeze the
  // geometry so the remaining sweeps iterate only the transport velocity
  bool geom_frozen = false;
  FlowFrame trial;
  std::vector<QuadCoeffs> coeffs;

  for (int sweep = 1; sweep <= params_.picard_max; ++sweep) {
    iters = sweep;
    if (!geom_frozen) {
      trial = traj.flow.advanced(l_pred, r_pred, dt);
      coeffs = frame_coefficients(mesh, trial, &frame_n);
    }
    const ExtensionField grid =
        lambda_field(trial.state, cutoff_, mesh.geom.body_center);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const CellCache& cc = mesh.cache[c];
      for (int q = 0; q < 9; ++q) {
        QuadCoeffs& co = coeffs[9 * c + q];
        const int s = mesh.n_vnodes + 9 * c + q;
        Vec2 vp = Vec2::Zero();
        for (int a = 0; a < 9; ++a) {
          const int id = mesh.cells[c][a];
          vp += cc.n[q][a] * Vec2(v_conv[2 * id], v_conv[2 * id + 1]);
        }
        co.conv_w = vp - co.pull * grid.value(trial.pts[s].x);
      }
    }

    Assembler asd(mesh, layout);
    asd.set_strong_bc({outer_bc});
    asd.seed_triplets(const_trips_);
    asd.add_volume_system(1.0 / dt, coeffs);
    asd.add_rigid_mass(mat_.mass / dt, mat_.inertia / dt);
    asd.rhs_mass_old(1.0 / dt, v_n, coeffs);
    // previous body momentum rotated into the current body frame
    const Mat2 qT = rotation_matrix(trial.state.angle).transpose();
    asd.rhs_rigid((mat_.mass / dt) * (qT * state_n.lin_vel),
                  (mat_.inertia / dt) * state_n.ang_vel);

    // Solve the sweep's linear system by iterative refinement against the
    // last factorized operator (exact at convergence); refactorize when the
    // refinement stops contracting.
    const VecX& rhs = asd.finalized_rhs();
    const SpMat a = asd.matrix();
    auto refactorize = [&] {
      if (!lu_cache_.analyzed) {
        lu_cache_.lu.analyzePattern(a);
        lu_cache_.analyzed = true;
      }
      lu_cache_.lu.factorize(a);
      check_numeric(lu_cache_.lu.info() == Eigen::Success,
                    "monolithic system factorization failed (singular system)");
      last_x_ = lu_cache_.lu.solve(rhs);
      have_lu_ = true;
      refactored_this_step = true;
    };
    if (!have_lu_ || static_cast<int>(last_x_.size()) != layout.total()) {
      refactorize();
    } else {
      const double lin_tol =
          0.01 * params_.picard_tol * std::max(1.0, last_x_.norm());
      double prev_corr = std::numeric_limits<double>::max();
      for (int j = 0; j < 40; ++j) {
        const VecX corr = lu_cache_.lu.solve(rhs - a * last_x_);
        last_x_ += corr;
        const double cn = corr.norm();
        if (cn <= lin_tol) break;
        if (cn > 0.5 * prev_corr || j == 39) {  // stalled refinement
          refactorize();
          break;
        }
        prev_corr = cn;
      }
    }
    check_numeric(last_x_.allFinite(),
                  "linear solve produced non-finite values");
    sol = asd.unpack(last_x_);
    l_new = rotation_matrix(trial.state.angle) * sol.rigid_lin;
    r_new = sol.rigid_ang;

    const double incr = metric_l2(mesh, coeffs, sol.velocity - v_prev) +
                        (l_new - l_it).norm() + std::abs(r_new - r_it);
    const double scale =
        std::max(1.0, metric_l2(mesh, coeffs, sol.velocity) + l_new.norm() +
                          std::abs(r_new));
    v_prev = sol.velocity;
    l_it = l_new;
    r_it = r_new;
    if (sweep >= 2 && incr > 0.7 * prev_incr &&
        incr > 100.0 * params_.picard_tol * scale)
      relax = std::max(0.0625, 0.5 * relax);
    const double pred_change =
        relax * ((l_new - l_pred).norm() + std::abs(r_new - r_pred));
    if (!geom_frozen) {
      l_pred += relax * (l_new - l_pred);
      r_pred += relax * (r_new - r_pred);
      // each refinement is already O(dt^2)-accurate; beyond a few updates the
      // collar-coefficient feedback can cycle without improving the step
      if (sweep >= 3 ||
          pred_change <= std::max(1e-8, 100.0 * params_.picard_tol) * scale) {
        geom_frozen = true;
        relax = 1.0;
      }
    }
    v_conv += relax * (sol.velocity - v_conv);
    if (incr <= params_.picard_tol * scale) {
      converged = true;
      break;
    }
    // stalling outer contraction: refresh the operator once per step
    if (sweep >= 4 && !refactored_this_step && incr > 0.5 * prev_incr)
      have_lu_ = false;
    prev_incr = incr;
  }
  if (!converged)
    throw PicardDiverged(
        "Picard iteration did not converge in " +
        std::to_string(params_.picard_max) +
        " sweeps at dt = " + std::to_string(dt) + "; reduce dt");

  // commit geometry consistent with the converged velocities
  FlowFrame final = traj.flow.advanced(l_new, r_new, dt);
  const auto co_final = frame_coefficients(mesh, final, nullptr);

  // correctness precondition of the Cartesian boundary terms: the map stays
  // the identity at the wall and a rigid motion on the body boundary
  for (size_t i = 0; i < mesh.outer_nodes.size(); i += 7) {
    const int id = mesh.outer_nodes[i];
    check_numeric((final.pts[id].x - mesh.vnode[id]).norm() <= 1e-10,
                  "flow map is not the identity at the wall");
  }
  for (size_t i = 0; i < mesh.inner_nodes.size(); i += 7) {
    const int id = mesh.inner_nodes[i];
    const Vec2 want =
        mesh.geom.body_center +
        body_point(final.state, mesh.vnode[id] - mesh.geom.body_center);
    check_numeric((final.pts[id].x - want).norm() <= 1e-5,
                  "flow map is not rigid on the body boundary");
  }

  StepStats st;
  st.picard_iters = iters;
  st.wall_dist = collision_distance(mesh.geom, final.state);
  st.energy =
      total_energy(mesh, co_final, sol.velocity, mat_, l_new, r_new);
  st.normal_residual =
      max_trace_residual(mesh, sol.velocity, sol.rigid_lin, r_new);

  FluidField f;
  f.time = final.time;
  f.velocity = sol.velocity;
  f.pressure = sol.pressure;
  f.lam = sol.lam;
  f.lin_vel = l_new;
  f.ang_vel = r_new;

  traj.flow.commit(std::move(final));
  traj.states.push_back(traj.flow.frame(traj.flow.n_frames() - 1).state);
  traj.fields.push_back(std::move(f));
  traj.stats.push_back(st);
}

void FsiSolver::attempt_step(Trajectory& traj, double dt, int depth) const {
  try {
    step(traj, dt);
  } catch (const PicardDiverged&) {
    if (depth >= params_.max_halvings) throw;
    attempt_step(traj, 0.5 * dt, depth + 1);
    if (!traj.collided &&
        traj.stats.back().wall_dist > params_.collision_threshold)
      attempt_step(traj, 0.5 * dt, depth + 1);
  }
}

void FsiSolver::run_until(Trajectory& traj, double t_final) const {
  require(t_final >= 0.0, "t_final must be nonnegative");
  // runs are self-contained: drop warm-start state so identical inputs
  // produce bit-identical output
  have_lu_ = false;
  last_x_.resize(0);
  if (collision_distance(mesh_->geom, traj.states.back()) <=
      params_.collision_threshold) {
    traj.collided = true;
    return;
  }
  double t = traj.fields.back().time;
  const double eps = 1e-12 * std::max(1.0, t_final);
  while (t < t_final - eps) {
    const double dt = std::min(params_.dt, t_final - t);
    attempt_step(traj, dt, 0);
    t = traj.fields.back().time;
    if (traj.stats.back().wall_dist <= params_.collision_threshold) {
      traj.collided = true;
      break;
    }
  }
}

Trajectory FsiSolver::run(const InitialData& data, double t_final,
                          std::uint64_t config_hash) const {
  Trajectory traj = init(data, config_hash);
  run_until(traj, t_final);
  return traj;
}

}  // namespace rigidflow
