// Acceptance suite: runs every release criterion at its pinned tolerance and
// prints one PASS/FAIL line each. Exit code = number of failed criteria.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "rigidflow/cli.hpp"
#include "rigidflow/config.hpp"
#include "rigidflow/diagnostics.hpp"
#include "rigidflow/io.hpp"

using namespace rigidflow;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s  (%s)\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
  try {
    auto [pass, detail] = fn();
    report(id, name, pass, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

DiskGeometry unit_geom() {
  DiskGeometry g;
  g.outer_radius = 1.0;
  g.body_radius = 0.2;
  return g;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Rig {
  std::shared_ptr<ReferenceMesh> mesh;
  Cutoff cutoff;
  MaterialParams mat;
  Rig(int nr, int nt, double rho, double alpha, double safe = 0.2)
      : mesh(std::make_shared<ReferenceMesh>(
            build_annular_mesh(unit_geom(), nr, nt, safe))),
        cutoff(build_cutoff(unit_geom(), safe)),
        mat(inertia_from_density(0.2, rho, alpha)) {}
  FsiSolver solver(double dt, int substeps = 4) const {
    SolverParams sp;
    sp.dt = dt;
    sp.substeps = substeps;
    return FsiSolver(mesh, mat, cutoff, sp);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

int main() {
  const fs::path outdir = fs::temp_directory_path() / "rigidflow_acceptance";
  fs::remove_all(outdir);
  fs::create_directories(outdir);

  // ---- 1: volume preservation of the change of variables -----------------
  criterion(1, "volume preservation |det grad X - 1|", [&] {
    const Rig rig(4, 16, 2.0, 0.5);
    InitialData ic;
    ic.lin_vel = Vec2(0.1, 0.0);
    ic.ang_vel = 0.5;
    const Trajectory tr = rig.solver(1e-3, 6).run(ic, 1.0);
    double worst = 0.0;
    for (int k = 0; k < tr.flow.n_frames(); ++k)
      for (const auto& p : tr.flow.frame(k).pts)
        worst = std::max(worst, std::abs(p.det() - 1.0));
    return std::pair{worst <= 1e-7,
                     "max = " + fmt(worst) + " over " +
                         std::to_string(tr.flow.n_frames()) + " frames, tol 1e-7"};
  });

  // ---- 2: extension-field identity and divergence -------------------------
  criterion(2, "extension field identity and divergence", [&] {
    const Cutoff cut = build_cutoff(unit_geom(), 0.2);
    RigidState s;
    s.position = Vec2(0.04, -0.02);
    s.lin_vel = Vec2(0.1, 0.0);
    s.ang_vel = 0.5;
    const ExtensionField lam = lambda_field(s, cut);
    std::mt19937 gen(20260808);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_id = 0.0, worst_div = 0.0, sup = 0.0;
    std::vector<Vec2> pts;
    while (pts.size() < 1000) {
      const Vec2 x(u(gen), u(gen));
      if (x.norm() < 0.995 && (x - s.position).norm() > 0.205)
        pts.push_back(x);
    }
    for (const Vec2& x : pts) sup = std::max(sup, lam.value(x).norm());
    for (const Vec2& x : pts) {
      const Vec2 d = x - s.position;
      const double w =
          perp(d).dot(s.lin_vel) + 0.5 * d.squaredNorm() * s.ang_vel;
      const Vec2 us = rigid_velocity(s, x);
      const Vec2 dpsi = cut.gradient(x);
      const double psi = cut.value(x);
      const Vec2 alt(-dpsi.y() * w + psi * us.x(),
                     dpsi.x() * w + psi * us.y());
      worst_id = std::max(worst_id, (lam.value(x) - alt).norm());
      worst_div = std::max(worst_div, std::abs(divergence_fd(lam, x)));
    }
    const bool pass = worst_id <= 1e-12 && worst_div <= 1e-8 * sup;
    return std::pair{pass, "identity " + fmt(worst_id) + " (tol 1e-12), div " +
                               fmt(worst_div) + " (tol " + fmt(1e-8 * sup) +
                               ")"};
  });

  // shared runs for criteria 3, 6, 7, 8: settled smooth data, three dt levels
  const Rig rig3(6, 24, 2.0, 0.1);
  std::vector<Trajectory> eruns;
  {
    InitialData ic;
    ic.lin_vel = Vec2(0.05, -0.1);
    ic.ang_vel = 0.4;
    const Trajectory settle = rig3.solver(1e-3).run(ic, 0.1);
    const VecX v0 = settle.fields.back().velocity;
    const Vec2 l0 = settle.fields.back().lin_vel;
    const double r0 = settle.fields.back().ang_vel;
    for (double dt : {1e-3, 5e-4, 2.5e-4}) {
      const FsiSolver solver = rig3.solver(dt);
      Trajectory tr = solver.init_warm(v0, l0, r0);
      solver.run_until(tr, 0.2);
      eruns.push_back(std::move(tr));
    }
  }

  // ---- 3: energy equality --------------------------------------------------
  criterion(3, "energy equality residual and dt ratio", [&] {
    double res[3], e0 = eruns[0].stats.front().energy;
    for (int i = 0; i < 3; ++i)
      res[i] = energy_audit(eruns[i]).max_abs_residual();
    const double rel = res[0] / e0;
    const double r1 = res[0] / res[1], r2 = res[1] / res[2];
    const bool pass = rel <= 5e-3 && r1 >= 1.7 && r1 <= 2.3 && r2 >= 1.7 &&
                      r2 <= 2.3;
    return std::pair{pass, "rel " + fmt(rel) + " (tol 5e-3), ratios " +
                               fmt(r1) + ", " + fmt(r2) + " (in [1.7,2.3])"};
  });

  // ---- 4: Kirchhoff potentials and added mass ------------------------------
  criterion(4, "Kirchhoff potentials and added mass", [&] {
    const ReferenceMesh mesh = build_annular_mesh(unit_geom(), 32, 128, 0.2);
    const auto phi = kirchhoff_potentials(mesh);
    const double a = 0.2, b = 1.0;
    const double A = -a * a / (b * b - a * a), B = A * b * b;
    double worst = 0.0;
    for (int i = 0; i < mesh.n_vnodes; ++i) {
      const double r = mesh.vnode[i].norm();
      const double th = std::atan2(mesh.vnode[i].y(), mesh.vnode[i].x());
      worst = std::max(worst,
                       std::abs(phi[0][i] - (A * r + B / r) * std::cos(th)));
    }
    const Mat3 am = added_mass(mesh, phi);
    const double exact = M_PI * a * a * (b * b + a * a) / (b * b - a * a);
    const double a11_rel = std::abs(am(0, 0) - exact) / exact;
    const double phi3 = phi[2].cwiseAbs().maxCoeff();
    const double coup = std::max({std::abs(am(0, 2)), std::abs(am(1, 2)),
                                  std::abs(am(2, 2))});
    const MaterialParams mat = inertia_from_density(0.2, 2.0);
    Mat3 kmat = am;
    kmat(0, 0) += mat.mass;
    kmat(1, 1) += mat.mass;
    kmat(2, 2) += mat.inertia;
    const Eigen::SelfAdjointEigenSolver<Mat3> es(kmat);
    const bool spd = es.eigenvalues().minCoeff() > 0.0 &&
                     (kmat - kmat.transpose()).cwiseAbs().maxCoeff() <=
                         1e-10 * kmat.norm();
    const bool pass =
        worst <= 1e-4 && a11_rel <= 1e-3 && phi3 <= 1e-10 && coup <= 1e-10 && spd;
    return std::pair{pass, "phi1 err " + fmt(worst) + " (tol 1e-4), A11 rel " +
                               fmt(a11_rel) + " (tol 1e-3), phi3 " + fmt(phi3) +
                               ", couplings " + fmt(coup) + ", K SPD " +
                               (spd ? "yes" : "NO")};
  });

  // ---- 5: steady Robin solver ----------------------------------------------
  criterion(5, "steady Robin solver convergence", [&] {
    const MmsResult res = manufactured_convergence(unit_geom(), 3, 4, 16, 1.0);
    const ReferenceMesh mesh = build_annular_mesh(unit_geom(), 6, 24, 0.2);
    SteadyProblem zero;
    zero.mesh = &mesh;
    zero.alpha = 1.0;
    const SteadySolution z = solve_steady_robin(zero);
    const bool zexact = z.velocity.cwiseAbs().maxCoeff() == 0.0 &&
                        z.pressure.cwiseAbs().maxCoeff() == 0.0;
    const bool pass = res.observed_order >= 1.9 && zexact;
    return std::pair{pass, "L2 order " + fmt(res.observed_order) +
                               " (>= 1.9), zero data exact: " +
                               (zexact ? "yes" : "NO")};
  });

  // ---- 6: weak-form consistency --------------------------------------------
  criterion(6, "weak-form consistency order in dt", [&] {
    std::mt19937 gen(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double T = 0.2;
    double worst_o1 = 10.0, worst_o2 = 10.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Vec2 a1(u(gen), u(gen)), a2(u(gen), u(gen));
      const double b1 = u(gen), b2 = u(gen);
      // smooth profiles vanishing at the final time
      auto s1 = [T](double t) {
        const double q = 1.0 - t / T;
        return q * q * (1.0 + 2.0 * t / T);
      };
      auto s2 = [T](double t) {
        const double q = 1.0 - t / T;
        return (t / T) * q * q;
      };
      AdmissibleTest test{
          [=](double t) { return Vec2(s1(t) * a1 + s2(t) * a2); },
          [=](double t) { return s1(t) * b1 + s2(t) * b2; }};
      double r[3];
      for (int i = 0; i < 3; ++i) r[i] = weak_residual(eruns[i], test);
      worst_o1 = std::min(worst_o1, std::log2(r[0] / r[1]));
      worst_o2 = std::min(worst_o2, std::log2(r[1] / r[2]));
    }
    const bool pass = worst_o1 >= 0.9 && worst_o2 >= 0.9;
    return std::pair{pass, "observed orders >= " + fmt(worst_o1) + ", " +
                               fmt(worst_o2) + " (tol 0.9)"};
  });

  // ---- 7: mollifier fidelity -----------------------------------------------
  criterion(7, "time mollifier fidelity", [&] {
    const Trajectory& tr = eruns[0];
    const int n = static_cast<int>(tr.fields.size());
    // rigidity of the smoothed body field: symmetric gradient of the rigid
    // part at interior body samples
    const Trajectory sm = time_smooth(tr, 0.04);
    double worst_rigid = 0.0;
    {
      std::mt19937 gen(7);
      std::uniform_real_distribution<double> u(-0.14, 0.14);
      const double h = 1e-6;
      for (int k = 0; k < n; k += 17)
        for (int trial = 0; trial < 4; ++trial) {
          const Vec2 y(u(gen), u(gen));
          RigidState s = sm.states[k];
          Mat2 g;
          for (int c = 0; c < 2; ++c) {
            const Vec2 dx = h * Vec2::Unit(c);
            g.col(c) = (rigid_velocity(s, y + dx) - rigid_velocity(s, y - dx)) /
                       (2.0 * h);
          }
          worst_rigid =
              std::max(worst_rigid, (g + g.transpose()).cwiseAbs().maxCoeff());
        }
    }
    // closed rigid-part formula vs independent slab-Gauss quadrature
    double worst_formula = 0.0;
    {
      const double eps = 0.04;
      static const double gx[5] = {-0.906179845938664, -0.5384693101056831,
                                   0.0, 0.5384693101056831, 0.906179845938664};
      static const double gw[5] = {0.23692688505618908, 0.47862867049936647,
                                   0.5688888888888889, 0.47862867049936647,
                                   0.23692688505618908};
      std::vector<double> times(n);
      std::vector<Vec2> lb(n);
      std::vector<double> rr(n);
      for (int k = 0; k < n; ++k) {
        times[k] = tr.fields[k].time;
        lb[k] = tr.states[k].rotation().transpose() * tr.fields[k].lin_vel;
        rr[k] = tr.fields[k].ang_vel;
      }
      auto conv = [&](const std::vector<double>& vals, double t) {
        auto value_at = [&](double s) {
          if (s <= times.front()) return vals.front();
          if (s >= times.back()) return vals.back();
          for (int m = 0; m + 1 < n; ++m)
            if (s < 0.5 * (times[m] + times[m + 1])) return vals[m];
          return vals.back();
        };
        std::vector<double> knots{t - eps, t + eps};
        for (int m = 0; m + 1 < n; ++m) {
          const double b = 0.5 * (times[m] + times[m + 1]);
          if (b > t - eps && b < t + eps) knots.push_back(b);
        }
        std::sort(knots.begin(), knots.end());
        double acc = 0.0;
        for (size_t i = 0; i + 1 < knots.size(); ++i)
          for (int q = 0; q < 5; ++q) {
            const double s = 0.5 * (knots[i] + knots[i + 1]) +
                             0.5 * (knots[i + 1] - knots[i]) * gx[q];
            const double uu = (t - s) / eps;
            const double bump =
                (uu <= -1.0 || uu >= 1.0)
                    ? 0.0
                    : (35.0 / 32.0) * std::pow(1.0 - uu * uu, 3) / eps;
            acc += 0.5 * (knots[i + 1] - knots[i]) * gw[q] * bump * value_at(s);
          }
        return acc;
      };
      std::vector<double> lbx(n), lby(n);
      for (int k = 0; k < n; ++k) {
        lbx[k] = lb[k].x();
        lby[k] = lb[k].y();
      }
      for (int k = 0; k < n; k += 13) {
        const double t = times[k];
        const Vec2 want = tr.states[k].rotation() *
                          Vec2(conv(lbx, t), conv(lby, t));
        worst_formula =
            std::max(worst_formula, (sm.fields[k].lin_vel - want).norm());
        worst_formula = std::max(
            worst_formula, std::abs(sm.fields[k].ang_vel - conv(rr, t)));
      }
    }
    // monotone convergence in the solution norm
    double d_prev = std::numeric_limits<double>::max();
    bool monotone = true;
    std::string dists;
    for (double eps : {0.08, 0.04, 0.02}) {
      const double d = solution_norm_distance(time_smooth(tr, eps), tr);
      monotone = monotone && d < d_prev;
      d_prev = d;
      dists += fmt(d) + " ";
    }
    const bool pass =
        worst_rigid <= 1e-8 && worst_formula <= 1e-10 && monotone;
    return std::pair{pass, "rigidity " + fmt(worst_rigid) +
                               ", formula gap " + fmt(worst_formula) +
                               " (tol 1e-10), distances " + dists +
                               (monotone ? "(monotone)" : "(NOT monotone)")};
  });

  // ---- 8: uniqueness proxy ---------------------------------------------------
  criterion(8, "uniqueness proxy (solution distance, Groenwall factor)", [&] {
    const ComparatorReport r12 = compare_runs(eruns[0], eruns[1]);
    const ComparatorReport r23 = compare_runs(eruns[1], eruns[2]);
    const double e1 = r12.ehat.back(), e2 = r23.ehat.back();
    const double factor = e1 / e2;
    bool bfinite = true;
    double bint = 0.0;
    for (size_t k = 0; k < r12.time.size(); ++k) {
      if (r12.time[k] >= 0.05) {
        bfinite = bfinite && std::isfinite(r12.bquant[k]);
        bint = r12.bint[k];
      }
    }
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < r12.time.size(); ++k)
      rows.push_back({r12.time[k], r12.ehat[k], r12.bquant[k], r12.bint[k]});
    write_timeseries((outdir / "compare.csv").string(),
                     {"t", "Ehat", "B", "intB"}, rows);
    const bool pass = factor >= 1.5 && bfinite;
    return std::pair{pass, "Ehat(T) factor " + fmt(factor) +
                               " (>= 1.5), B integral " + fmt(bint) +
                               (bfinite ? " (finite)" : " (NOT finite)")};
  });

  // ---- 9: symmetry preservation ---------------------------------------------
  criterion(9, "symmetry preservation on the axis", [&] {
    const Rig rig(5, 20, 2.0, 0.5);
    InitialData ic;
    ic.lin_vel = Vec2(0.0, -0.1);
    const Trajectory tr = rig.solver(1e-3).run(ic, 0.1);
    double worst_h = 0.0, worst_r = 0.0;
    for (size_t k = 0; k < tr.fields.size(); ++k) {
      worst_h = std::max(worst_h, std::abs(tr.states[k].position.x()));
      worst_r = std::max(worst_r, std::abs(tr.fields[k].ang_vel));
    }
    const bool pass =
        tr.n_steps() == 100 && worst_h <= 1e-8 && worst_r <= 1e-8;
    return std::pair{pass, "|h1| " + fmt(worst_h) + ", |r| " + fmt(worst_r) +
                               " over " + std::to_string(tr.n_steps()) +
                               " steps (tol 1e-8)"};
  });

  // ---- 10: collision dichotomy ------------------------------------------------
  criterion(10, "collision dichotomy", [&] {
    const fs::path dir = outdir / "collision";
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "wall.cfg");
      cfg << "outer_radius = 1.0\nbody_radius = 0.2\ndt = 2e-3\n"
          << "t_final = 3.0\nrho_s = 50\nalpha = 0.5\nl0_y = -2.0\n"
          << "nr = 4\nntheta = 16\n";
    }
    const int code = cli_dispatch({"simulate", "--config",
                                   (dir / "wall.cfg").string(), "--out",
                                   dir.string(), "--quiet"});
    const std::string csv = slurp(dir / "run.csv");
    // final distance from the last CSV row
    double final_dist = 1.0;
    if (!csv.empty()) {
      const size_t last_nl = csv.find_last_of('\n', csv.size() - 2);
      std::istringstream row(csv.substr(last_nl + 1));
      std::string cell;
      for (int i = 0; i < 10 && std::getline(row, cell, ','); ++i)
        if (i == 9) final_dist = std::stod(cell);
    }
    const bool pass = code == 3 && !csv.empty() && final_dist <= 0.1;
    return std::pair{pass, "exit code " + std::to_string(code) +
                               " (want 3), final dist " + fmt(final_dist) +
                               " (tol 0.1), outputs written: " +
                               (csv.empty() ? "NO" : "yes")};
  });

  // ---- 11: determinism ---------------------------------------------------------
  criterion(11, "bit-identical reruns", [&] {
    const fs::path dir = outdir / "determinism";
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    {
      std::ofstream cfg(dir / "run.cfg");
      cfg << "outer_radius = 1.0\nbody_radius = 0.2\ndt = 2e-3\n"
          << "t_final = 0.02\nrho_s = 2\nalpha = 0.5\nl0_x = 0.05\n"
          << "l0_y = -0.1\nr0 = 0.4\nnr = 4\nntheta = 16\ndump_stride = 5\n";
    }
    const std::string cfgp = (dir / "run.cfg").string();
    bool same = true;
    for (const char* sub : {"simulate", "energy-audit", "compare",
                            "kirchhoff", "added-mass"}) {
      if (cli_dispatch({sub, "--config", cfgp, "--out", (dir / "a").string(),
                        "--quiet"}) > 2)
        return std::pair{false, std::string("subcommand failed: ") + sub};
      if (cli_dispatch({sub, "--config", cfgp, "--out", (dir / "b").string(),
                        "--quiet"}) > 2)
        return std::pair{false, std::string("subcommand failed: ") + sub};
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      const fs::path other = dir / "b" / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        same = false;
        break;
      }
      ++compared;
    }
    const bool pass = same && compared >= 6;
    return std::pair{pass, std::to_string(compared) + " output files compared, " +
                               (same ? "all identical" : "MISMATCH")};
  });

  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures;
}
