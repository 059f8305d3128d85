#include <benchmark/benchmark.h>

#include "rigidflow/fsi_solver.hpp"
#include "rigidflow/stokes_robin.hpp"

using namespace rigidflow;

namespace {

DiskGeometry unit_geom() {
  DiskGeometry g;
  g.outer_radius = 1.0;
  g.body_radius = 0.2;
  return g;
}

struct Bench {
  std::shared_ptr<ReferenceMesh> mesh;
  Cutoff cutoff;
  MaterialParams mat;
  Bench(int nr, int nt)
      : mesh(std::make_shared<ReferenceMesh>(
            build_annular_mesh(unit_geom(), nr, nt, 0.2))),
        cutoff(build_cutoff(unit_geom(), 0.2)),
        mat(inertia_from_density(0.2, 2.0, 0.5)) {}
};

}  // namespace

static void BM_FlowAdvance(benchmark::State& state) {
  const Bench b(static_cast<int>(state.range(0)),
                4 * static_cast<int>(state.range(0)));
  FlowMap map(flow_sample_points(*b.mesh), unit_geom(), b.cutoff, 4);
  RigidState s0;
  s0.lin_vel = Vec2(0.1, -0.05);
  s0.ang_vel = 0.5;
  map.reset(s0);
  for (auto _ : state) {
    FlowFrame f = map.advanced(s0.lin_vel, s0.ang_vel, 1e-3);
    benchmark::DoNotOptimize(f.pts.data());
  }
  state.SetItemsProcessed(state.iterations() * map.ref_points().size());
}
BENCHMARK(BM_FlowAdvance)->Arg(4)->Arg(8);

static void BM_AssembleMonolithic(benchmark::State& state) {
  const Bench b(static_cast<int>(state.range(0)),
                4 * static_cast<int>(state.range(0)));
  FlowMap map(flow_sample_points(*b.mesh), unit_geom(), b.cutoff, 4);
  RigidState s0;
  s0.lin_vel = Vec2(0.1, -0.05);
  s0.ang_vel = 0.5;
  map.reset(s0);
  const FlowFrame frame = map.advanced(s0.lin_vel, s0.ang_vel, 1e-3);
  const auto co = frame_coefficients(*b.mesh, frame, &map.frame(0));
  SystemLayout lay;
  lay.n_vnodes = b.mesh->n_vnodes;
  lay.np = b.mesh->n_pnodes;
  lay.n_lam = static_cast<int>(b.mesh->inner.size());
  lay.rigid = true;
  for (auto _ : state) {
    Assembler asd(*b.mesh, lay);
    asd.add_volume_system(1e3, co);
    asd.add_slip_outer(0.5);
    asd.add_slip_inner_rigid(0.5);
    asd.add_divergence();
    asd.add_gauge();
    asd.add_inner_constraint();
    asd.add_rigid_mass(1.0, 1.0);
    SpMat a = asd.matrix();
    benchmark::DoNotOptimize(a.valuePtr());
  }
}
BENCHMARK(BM_AssembleMonolithic)->Arg(4)->Arg(8);

static void BM_CoupledStep(benchmark::State& state) {
  const Bench b(static_cast<int>(state.range(0)),
                4 * static_cast<int>(state.range(0)));
  SolverParams sp;
  sp.dt = 1e-3;
  const FsiSolver solver(b.mesh, b.mat, b.cutoff, sp);
  InitialData ic;
  ic.lin_vel = Vec2(0.05, -0.1);
  ic.ang_vel = 0.4;
  for (auto _ : state) {
    state.PauseTiming();
    Trajectory tr = solver.init(ic);
    state.ResumeTiming();
    solver.step(tr, 1e-3);
    benchmark::DoNotOptimize(tr.fields.back().velocity.data());
  }
}
BENCHMARK(BM_CoupledStep)->Arg(4)->Arg(6);

static void BM_KirchhoffSolve(benchmark::State& state) {
  const int nr = static_cast<int>(state.range(0));
  const ReferenceMesh mesh = build_annular_mesh(unit_geom(), nr, 4 * nr, 0.2);
  for (auto _ : state) {
    auto phi = kirchhoff_potentials(mesh);
    benchmark::DoNotOptimize(phi[0].data());
  }
}
BENCHMARK(BM_KirchhoffSolve)->Arg(8)->Arg(16);

BENCHMARK_MAIN();
