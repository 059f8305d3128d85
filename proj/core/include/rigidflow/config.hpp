#pragma once

#include <cstdint>
#include <string>

#include "rigidflow/fsi_solver.hpp"

namespace rigidflow {

/// Run configuration parsed from line-oriented `key = value` text.
/// Required keys: outer_radius, body_radius, dt, t_final. Everything else
/// has documented defaults.
struct RunConfig {
  // geometry
  double outer_radius = 0.0;
  double body_radius = 0.0;
  Vec2 body_center = Vec2::Zero();
  // material
  double rho_s = 1.0;
  double alpha = 0.0;
  // initial data
  Vec2 l0 = Vec2::Zero();
  double r0 = 0.0;
  std::string fluid_ic = "rigid-extension";  // zero | rigid-extension | stream:<amp>,<mode>
  // numerics
  int nr = 8;
  int ntheta = 32;
  double dt = 0.0;
  double t_final = -1.0;
  double picard_tol = 1e-10;
  int picard_max = 50;
  int ode_substeps = 4;
  double delta_safe = 0.0;  // 0 -> gap/4
  // outputs
  std::string csv_path = "run.csv";
  int dump_stride = 0;  // 0 = no field dumps

  DiskGeometry geometry() const;
  double effective_delta_safe() const;
  MaterialParams material() const;
  SolverParams solver() const;
  InitialData initial() const;
  std::uint64_t hash() const;
};

/// errors: unknown key, missing required key, constraint violation — all
/// named with the offending key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize(const RunConfig& cfg);

}  // namespace rigidflow
