#pragma once

#include <string>
#include <vector>

#include "rigidflow/fsi_solver.hpp"

namespace rigidflow {

/// Shortest bit-exact decimal of a double (17 significant digits);
/// non-finite values abort with a numerical error.
std::string format_number(double v);

/// CSV with a fixed header row; identical inputs give identical bytes.
void write_timeseries(const std::string& path,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);

struct FieldDumpData {
  int nr = 0, ntheta = 0;
  std::vector<Vec2> nodes;
  VecX velocity;        // 2 per node
  VecX pressure_nodes;  // sampled at every velocity node
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  double angle = 0.0;
  Vec2 lin_vel = Vec2::Zero();
  double ang_vel = 0.0;
};

/// `FSIFLD 1` text format: dims, node coordinates, per-node velocity pairs,
/// per-node pressure, rigid state line. Round-trips bit-exactly.
void dump_field(const std::string& path, const ReferenceMesh& mesh,
                const FluidField& field, const RigidState& state);
FieldDumpData load_field(const std::string& path);

/// Restores the pressure dof vector from the per-node samples of a dump.
VecX pressure_dofs_from_nodes(const ReferenceMesh& mesh,
                              const VecX& pressure_nodes);

/// Per-node samples of a pressure dof vector (bilinear at mid nodes).
VecX pressure_nodes_from_dofs(const ReferenceMesh& mesh, const VecX& pdofs);

}  // namespace rigidflow
