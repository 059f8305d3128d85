#include "rigidflow/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace rigidflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos;
    const double d = std::stod(v, &pos);
    require(pos == v.size(), "config: malformed number for key '" + key + "'");
    return d;
  } catch (const InvalidArgument&) {
    throw;
  } catch (...) {
    throw InvalidArgument("config: malformed number for key '" + key + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  const int i = static_cast<int>(d);
  require(d == i, "config: key '" + key + "' must be an integer");
  return i;
}

}  // namespace

DiskGeometry RunConfig::geometry() const {
  DiskGeometry g;
  g.outer_radius = outer_radius;
  g.body_radius = body_radius;
  g.body_center = body_center;
  return g;
}

double RunConfig::effective_delta_safe() const {
  if (delta_safe > 0.0) return delta_safe;
  return 0.25 * geometry().gap();
}

MaterialParams RunConfig::material() const {
  return inertia_from_density(body_radius, rho_s, alpha);
}

SolverParams RunConfig::solver() const {
  SolverParams p;
  p.dt = dt;
  p.picard_tol = picard_tol;
  p.picard_max = picard_max;
  p.substeps = ode_substeps;
  p.collision_threshold = 0.5 * effective_delta_safe();
  return p;
}

InitialData RunConfig::initial() const {
  InitialData d;
  d.lin_vel = l0;
  d.ang_vel = r0;
  if (fluid_ic == "zero") {
    d.fluid_ic = InitialData::FluidIc::Zero;
  } else if (fluid_ic == "rigid-extension") {
    d.fluid_ic = InitialData::FluidIc::RigidExtension;
  } else if (fluid_ic.rfind("stream:", 0) == 0) {
    d.fluid_ic = InitialData::FluidIc::Stream;
    const std::string rest = fluid_ic.substr(7);
    const auto comma = rest.find(',');
    require(comma != std::string::npos,
            "config: fluid_ic stream wants 'stream:<amp>,<mode>'");
    d.stream_amp = to_double("fluid_ic", trim(rest.substr(0, comma)));
    d.stream_mode = to_int("fluid_ic", trim(rest.substr(comma + 1)));
  } else {
    throw InvalidArgument("config: fluid_ic must be zero, rigid-extension or "
                          "stream:<amp>,<mode>");
  }
  return d;
}

std::uint64_t RunConfig::hash() const {
  const std::string s = serialize(*this);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config: expected 'key = value' at line " +
                                         std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    require(!val.empty(),
            "config: empty value for key '" + key + "' at line " +
                std::to_string(lineno));
    seen[key] = true;
    if (key == "outer_radius") cfg.outer_radius = to_double(key, val);
    else if (key == "body_radius") cfg.body_radius = to_double(key, val);
    else if (key == "body_center_x") cfg.body_center.x() = to_double(key, val);
    else if (key == "body_center_y") cfg.body_center.y() = to_double(key, val);
    else if (key == "rho_s") cfg.rho_s = to_double(key, val);
    else if (key == "alpha") cfg.alpha = to_double(key, val);
    else if (key == "l0_x") cfg.l0.x() = to_double(key, val);
    else if (key == "l0_y") cfg.l0.y() = to_double(key, val);
    else if (key == "r0") cfg.r0 = to_double(key, val);
    else if (key == "fluid_ic") cfg.fluid_ic = val;
    else if (key == "nr") cfg.nr = to_int(key, val);
    else if (key == "ntheta") cfg.ntheta = to_int(key, val);
    else if (key == "dt") cfg.dt = to_double(key, val);
    else if (key == "t_final") cfg.t_final = to_double(key, val);
    else if (key == "picard_tol") cfg.picard_tol = to_double(key, val);
    else if (key == "picard_max") cfg.picard_max = to_int(key, val);
    else if (key == "ode_substeps") cfg.ode_substeps = to_int(key, val);
    else if (key == "delta_safe") cfg.delta_safe = to_double(key, val);
    else if (key == "csv_path") cfg.csv_path = val;
    else if (key == "dump_stride") cfg.dump_stride = to_int(key, val);
    else
      throw InvalidArgument("config: unknown key '" + key + "' at line " +
                            std::to_string(lineno));
  }
  for (const char* req : {"outer_radius", "body_radius", "dt", "t_final"})
    require(seen.count(req), std::string("config: missing required key '") +
                                 req + "'");

  require(cfg.outer_radius > 0.0, "config: outer_radius must be positive");
  require(cfg.body_radius > 0.0, "config: body_radius must be positive");
  require(cfg.body_radius < cfg.outer_radius,
          "config: body_radius must be smaller than outer_radius");
  require(cfg.geometry().gap() > 0.0,
          "config: body_center places the body outside the container");
  require(cfg.rho_s > 0.0, "config: rho_s must be positive");
  require(cfg.alpha >= 0.0, "config: alpha must be nonnegative");
  require(cfg.dt > 0.0, "config: dt must be positive");
  require(cfg.t_final >= 0.0, "config: t_final must be nonnegative");
  require(cfg.nr >= 4 && cfg.ntheta >= 4,
          "config: nr and ntheta must be at least 4");
  require(cfg.picard_tol > 0.0, "config: picard_tol must be positive");
  require(cfg.picard_max >= 1, "config: picard_max must be at least 1");
  require(cfg.ode_substeps >= 1, "config: ode_substeps must be at least 1");
  require(cfg.dump_stride >= 0, "config: dump_stride must be nonnegative");
  require(cfg.geometry().gap() >= 2.0 * cfg.effective_delta_safe(),
          "config: delta_safe too large for the initial clearance");
  cfg.initial();  // validates fluid_ic
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "outer_radius = " << c.outer_radius << "\n"
    << "body_radius = " << c.body_radius << "\n"
    << "body_center_x = " << c.body_center.x() << "\n"
    << "body_center_y = " << c.body_center.y() << "\n"
    << "rho_s = " << c.rho_s << "\n"
    << "alpha = " << c.alpha << "\n"
    << "l0_x = " << c.l0.x() << "\n"
    << "l0_y = " << c.l0.y() << "\n"
    << "r0 = " << c.r0 << "\n"
    << "fluid_ic = " << c.fluid_ic << "\n"
    << "nr = " << c.nr << "\n"
    << "ntheta = " << c.ntheta << "\n"
    << "dt = " << c.dt << "\n"
    << "t_final = " << c.t_final << "\n"
    << "picard_tol = " << c.picard_tol << "\n"
    << "picard_max = " << c.picard_max << "\n"
    << "ode_substeps = " << c.ode_substeps << "\n"
    << "delta_safe = " << c.delta_safe << "\n"
    << "csv_path = " << c.csv_path << "\n"
    << "dump_stride = " << c.dump_stride << "\n";
  return o.str();
}

}  // namespace rigidflow
