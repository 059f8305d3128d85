#include "rigidflow/cli.hpp"

#include <filesystem>
#include <iostream>
#include <random>

#include "rigidflow/config.hpp"
#include "rigidflow/diagnostics.hpp"
#include "rigidflow/io.hpp"

namespace rigidflow {

namespace {

constexpr const char* kUsage =
    "usage: rigidflow <subcommand> [--config <path>] [--out <dir>]\n"
    "                 [--dump-stride <k>] [--levels <n>] [--quiet]\n"
    "subcommands:\n"
    "  simulate      run the coupled solver, write the per-step CSV log\n"
    "  energy-audit  run and write the energy balance ledger CSV\n"
    "  compare       run at dt and dt/2, write the solution-distance CSV\n"
    "  kirchhoff     solve the boundary potentials, write their summary CSV\n"
    "  added-mass    write the added-mass and combined inertia matrices\n"
    "  verify-geomap run the change-of-variables invariant checks\n"
    "  manufactured  steady-solver convergence study\n";

struct CliOptions {
  std::string config;
  std::string out = ".";
  int dump_stride = -1;  // -1 = from config
  int levels = 3;
  bool quiet = false;
};

bool parse_flags(const std::vector<std::string>& args, size_t start,
                 CliOptions& opt) {
  for (size_t i = start; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto value = [&](const char* flag) -> const std::string& {
      if (i + 1 >= args.size())
        throw InvalidArgument(std::string("missing value for ") + flag);
      return args[++i];
    };
    if (a == "--config") opt.config = value("--config");
    else if (a == "--out") opt.out = value("--out");
    else if (a == "--dump-stride") opt.dump_stride = std::stoi(value("--dump-stride"));
    else if (a == "--levels") opt.levels = std::stoi(value("--levels"));
    else if (a == "--quiet") opt.quiet = true;
    else return false;
  }
  return true;
}

std::string out_path(const CliOptions& opt, const std::string& name) {
  std::filesystem::create_directories(opt.out);
  return (std::filesystem::path(opt.out) / name).string();
}

RunConfig need_config(const CliOptions& opt) {
  require(!opt.config.empty(), "missing --config <path>");
  return load_config(opt.config);
}

Trajectory run_from_config(const RunConfig& cfg, double dt_override = 0.0) {
  auto mesh = std::make_shared<ReferenceMesh>(build_annular_mesh(
      cfg.geometry(), cfg.nr, cfg.ntheta, cfg.effective_delta_safe()));
  const Cutoff cut = build_cutoff(cfg.geometry(), cfg.effective_delta_safe());
  SolverParams sp = cfg.solver();
  if (dt_override > 0.0) sp.dt = dt_override;
  const FsiSolver solver(mesh, cfg.material(), cut, sp);
  return solver.run(cfg.initial(), cfg.t_final, cfg.hash());
}

void write_run_csv(const std::string& path, const Trajectory& traj) {
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < traj.fields.size(); ++k) {
    const auto& f = traj.fields[k];
    const auto& s = traj.states[k];
    rows.push_back({f.time, f.lin_vel.x(), f.lin_vel.y(), f.ang_vel,
                    s.position.x(), s.position.y(), s.angle,
                    traj.stats[k].energy,
                    static_cast<double>(traj.stats[k].picard_iters),
                    traj.stats[k].wall_dist});
  }
  write_timeseries(path,
                   {"t", "l_x", "l_y", "r", "h_x", "h_y", "theta", "energy",
                    "picard_iters", "dist"},
                   rows);
}

void write_dumps(const CliOptions& opt, const RunConfig& cfg,
                 const Trajectory& traj) {
  const int stride = (opt.dump_stride >= 0) ? opt.dump_stride : cfg.dump_stride;
  if (stride <= 0) return;
  for (size_t k = 0; k < traj.fields.size(); k += stride) {
    char name[32];
    std::snprintf(name, sizeof(name), "field_%06zu.fld", k);
    dump_field(out_path(opt, name), *traj.mesh, traj.fields[k],
               traj.states[k]);
  }
}

int cmd_simulate(const CliOptions& opt) {
  const RunConfig cfg = need_config(opt);
  const Trajectory traj = run_from_config(cfg);
  write_run_csv(out_path(opt, cfg.csv_path), traj);
  write_dumps(opt, cfg, traj);
  if (!opt.quiet)
    std::cout << "simulate: " << traj.n_steps() << " steps, final t = "
              << traj.fields.back().time
              << (traj.collided ? " (COLLISION)" : "") << "\n";
  return traj.collided ? 3 : 0;
}

int cmd_energy_audit(const CliOptions& opt) {
  const RunConfig cfg = need_config(opt);
  const Trajectory traj = run_from_config(cfg);
  const EnergyLedger led = energy_audit(traj);
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < led.time.size(); ++k)
    rows.push_back({led.time[k], led.fluid_kinetic[k], led.solid_kinetic[k],
                    led.dissip_interior[k], led.dissip_wall[k],
                    led.dissip_body[k], led.residual[k]});
  write_timeseries(out_path(opt, "energy.csv"),
                   {"t", "E_fluid", "E_solid", "D_int", "D_outer", "D_body",
                    "residual"},
                   rows);
  if (!opt.quiet)
    std::cout << "energy-audit: max |residual| = " << led.max_abs_residual()
              << "\n";
  return traj.collided ? 3 : 0;
}

int cmd_compare(const CliOptions& opt) {
  const RunConfig cfg = need_config(opt);
  const Trajectory coarse = run_from_config(cfg);
  const Trajectory fine = run_from_config(cfg, 0.5 * cfg.dt);
  const ComparatorReport rep = compare_runs(coarse, fine);
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < rep.time.size(); ++k)
    rows.push_back({rep.time[k], rep.ehat[k], rep.bquant[k], rep.bint[k]});
  write_timeseries(out_path(opt, "compare.csv"), {"t", "Ehat", "B", "intB"},
                   rows);
  if (!opt.quiet)
    std::cout << "compare: Ehat(T) = " << rep.ehat.back() << "\n";
  return 0;
}

int cmd_kirchhoff(const CliOptions& opt) {
  const RunConfig cfg = need_config(opt);
  const ReferenceMesh mesh = build_annular_mesh(
      cfg.geometry(), cfg.nr, cfg.ntheta, cfg.effective_delta_safe());
  const auto phi = kirchhoff_potentials(mesh);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 3; ++i)
    rows.push_back({static_cast<double>(i + 1), scalar_mean(mesh, phi[i]),
                    dirichlet_energy(mesh, phi[i])});
  write_timeseries(out_path(opt, "kirchhoff.csv"),
                   {"potential", "mean", "dirichlet_energy"}, rows);
  if (!opt.quiet) std::cout << "kirchhoff: wrote kirchhoff.csv\n";
  return 0;
}

int cmd_added_mass(const CliOptions& opt) {
  const RunConfig cfg = need_config(opt);
  const ReferenceMesh mesh = build_annular_mesh(
      cfg.geometry(), cfg.nr, cfg.ntheta, cfg.effective_delta_safe());
  const LiftingOperators ops = build_lifting(mesh, cfg.material());
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      rows.push_back({static_cast<double>(i + 1), static_cast<double>(j + 1),
                      ops.added(i, j), ops.kmat(i, j)});
  write_timeseries(out_path(opt, "added_mass.csv"), {"i", "j", "A", "K"},
                   rows);
  if (!opt.quiet)
    std::cout << "added-mass: A11 = " << ops.added(0, 0) << "\n";
  return 0;
}

int cmd_verify_geomap(const CliOptions& opt) {
  const RunConfig cfg = need_config(opt);
  const DiskGeometry geom = cfg.geometry();
  const double ds = cfg.effective_delta_safe();
  const Cutoff cut = build_cutoff(geom, ds);
  const ReferenceMesh mesh =
      build_annular_mesh(geom, cfg.nr, cfg.ntheta, ds);

  bool ok = true;
  auto check = [&](const char* what, double val, double tol) {
    const bool pass = val <= tol;
    ok = ok && pass;
    if (!opt.quiet)
      std::cout << (pass ? "ok   " : "FAIL ") << what << " = " << val
                << " (tol " << tol << ")\n";
  };

  // extension field identity and divergence at random points
  RigidState s;
  s.lin_vel = cfg.l0.norm() > 0 ? cfg.l0 : Vec2(0.3, -0.2);
  s.ang_vel = (cfg.r0 != 0.0) ? cfg.r0 : 0.7;
  const ExtensionField lam = lambda_field(s, cut, geom.body_center);
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-geom.outer_radius,
                                           geom.outer_radius);
  double worst_id = 0.0, worst_div = 0.0, sup = 0.0;
  int count = 0;
  while (count < 1000) {
    const Vec2 x(u(gen), u(gen));
    if (x.norm() > geom.outer_radius - 1e-6 ||
        (x - geom.body_center).norm() < geom.body_radius)
      continue;
    ++count;
    sup = std::max(sup, lam.value(x).norm());
    // componentwise formula vs perp-grad product rule
    const Vec2 d = x - (geom.body_center + s.position);
    const double w = perp(d).dot(s.lin_vel) + 0.5 * d.squaredNorm() * s.ang_vel;
    const Vec2 us = s.lin_vel + s.ang_vel * perp(d);
    const Vec2 dpsi = cut.gradient(x);
    const double psi = cut.value(x);
    const Vec2 alt(-dpsi.y() * w + psi * us.x(), dpsi.x() * w + psi * us.y());
    worst_id = std::max(worst_id, (lam.value(x) - alt).norm());
    worst_div = std::max(worst_div, std::abs(divergence_fd(lam, x)));
  }
  check("extension componentwise identity", worst_id, 1e-12);
  check("extension divergence (fd)", worst_div, 1e-8 * std::max(sup, 1e-30));

  // flow of a constant-velocity path: determinant and inversion
  std::vector<RigidState> path;
  RigidState st;
  st.lin_vel = s.lin_vel;
  st.ang_vel = s.ang_vel;
  path.push_back(st);
  const int nsteps = 100;
  const double dtv = 1e-3;
  for (int k = 0; k < nsteps; ++k) {
    st = advance_rigid(st, st.lin_vel, st.ang_vel, dtv);
    path.push_back(st);
  }
  const FlowMap map = integrate_flow(path, dtv, flow_sample_points(mesh), geom,
                                     cut, cfg.ode_substeps);
  double worst_det = 0.0;
  for (int k = 0; k < map.n_frames(); ++k)
    for (const auto& p : map.frame(k).pts)
      worst_det = std::max(worst_det, std::abs(p.det() - 1.0));
  check("flow map |det - 1|", worst_det, 1e-8);

  double worst_inv = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto& p = map.frame(nsteps).pts[i * 37 % map.ref_points().size()];
    const Vec2 y = map.invert(nsteps, p.x, 1e-12);
    worst_inv = std::max(
        worst_inv, (y - map.ref_points()[i * 37 % map.ref_points().size()]).norm());
  }
  check("inverse map roundtrip", worst_inv, 1e-9);

  // metric of the map against the identity of g g^-1
  double worst_gi = 0.0;
  for (const auto& p : map.frame(nsteps).pts) {
    const SampleCoeffs sc = map_coefficients(p);
    const double scale = 1.0 + sc.metric.cwiseAbs().maxCoeff();
    worst_gi = std::max(
        worst_gi,
        (sc.metric * sc.metric_inv - Mat2::Identity()).cwiseAbs().maxCoeff() /
            scale);
  }
  check("metric inverse identity (relative)", worst_gi, 1e-10);

  // self-composition is the identity
  const MapComposition comp = compose_maps(map, map, nsteps);
  double worst_c = 0.0;
  for (size_t i = 0; i < comp.point.size(); ++i)
    worst_c = std::max(worst_c,
                       (comp.point[i] - map.frame(nsteps).pts[i].x).norm());
  check("self-composition identity", worst_c, 1e-10);

  if (!opt.quiet) std::cout << (ok ? "verify-geomap: PASS\n" : "verify-geomap: FAIL\n");
  return ok ? 0 : 2;
}

int cmd_manufactured(const CliOptions& opt) {
  DiskGeometry geom;
  int nr0 = 8, nt0 = 32;
  double alpha = 1.0;
  if (!opt.config.empty()) {
    const RunConfig cfg = load_config(opt.config);
    geom = cfg.geometry();
    nr0 = cfg.nr;
    nt0 = cfg.ntheta;
    alpha = cfg.alpha;
  }
  const MmsResult res = manufactured_convergence(geom, opt.levels, nr0, nt0, alpha);
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < res.levels.size(); ++i)
    rows.push_back({static_cast<double>(i), res.levels[i].h,
                    res.levels[i].l2_error, res.levels[i].slip_residual});
  write_timeseries(out_path(opt, "manufactured.csv"),
                   {"level", "h", "l2_error", "slip_residual"}, rows);
  if (!opt.quiet)
    std::cout << "manufactured: L2 order " << res.observed_order
              << ", slip order " << res.slip_order << "\n";
  return res.observed_order >= 1.9 ? 0 : 2;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
  if (args.empty()) {
    std::cerr << kUsage;
    return 64;
  }
  const std::string& cmd = args[0];
  CliOptions opt;
  try {
    if (!parse_flags(args, 1, opt)) {
      std::cerr << kUsage;
      return 64;
    }
    if (cmd == "simulate") return cmd_simulate(opt);
    if (cmd == "energy-audit") return cmd_energy_audit(opt);
    if (cmd == "compare") return cmd_compare(opt);
    if (cmd == "kirchhoff") return cmd_kirchhoff(opt);
    if (cmd == "added-mass") return cmd_added_mass(opt);
    if (cmd == "verify-geomap") return cmd_verify_geomap(opt);
    if (cmd == "manufactured") return cmd_manufactured(opt);
    std::cerr << "unknown subcommand '" << cmd << "'\n" << kUsage;
    return 64;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rigidflow
