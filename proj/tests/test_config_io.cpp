#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rigidflow/cli.hpp"
#include "rigidflow/config.hpp"
#include "rigidflow/io.hpp"

using namespace rigidflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    "outer_radius = 1.0\n"
    "body_radius = 0.2\n"
    "dt = 1e-3\n"
    "t_final = 0.01\n";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempDir {
  fs::path path;
  TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("rigidflow_test_") + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("minimal config fills documented defaults") {
  const RunConfig cfg = parse_config(kMinimal);
  CHECK(cfg.picard_tol == 1e-10);
  CHECK(cfg.picard_max == 50);
  CHECK(cfg.ode_substeps == 4);
  CHECK(cfg.nr == 8);
  CHECK(cfg.ntheta == 32);
  CHECK(cfg.fluid_ic == "rigid-extension");
  CHECK(cfg.effective_delta_safe() == doctest::Approx(0.2));  // gap / 4
  CHECK(cfg.dump_stride == 0);
}

TEST_CASE("config validation names the offending key") {
  CHECK_THROWS_WITH_AS(
      parse_config("outer_radius = 1\nbody_radius = 2\ndt = 1e-3\n"
                   "t_final = 1\n"),
      doctest::Contains("body_radius"), InvalidArgument);
  CHECK_THROWS_WITH_AS(parse_config("outer_radius = 1\nbody_radius = 0.2\n"
                                    "dt = 1e-3\n"),
                       doctest::Contains("t_final"), InvalidArgument);
  CHECK_THROWS_WITH_AS(
      parse_config(std::string(kMinimal) + "windspeed = 3\n"),
      doctest::Contains("windspeed"), InvalidArgument);
  CHECK_THROWS_WITH_AS(
      parse_config(std::string(kMinimal) + "delta_safe = 0.6\n"),
      doctest::Contains("delta_safe"), InvalidArgument);
  CHECK_THROWS_WITH_AS(
      parse_config(std::string(kMinimal) + "fluid_ic = vortex\n"),
      doctest::Contains("fluid_ic"), InvalidArgument);
}

TEST_CASE("config roundtrip through serialize") {
  RunConfig cfg = parse_config(kMinimal);
  cfg.l0 = Vec2(0.125, -0.0625);
  cfg.r0 = 0.33333333333333331;
  cfg.alpha = 0.7;
  cfg.fluid_ic = "stream:0.25,3";
  const RunConfig again = parse_config(serialize(cfg));
  CHECK(serialize(again) == serialize(cfg));
  CHECK(again.hash() == cfg.hash());
  const InitialData id = again.initial();
  CHECK(id.fluid_ic == InitialData::FluidIc::Stream);
  CHECK(id.stream_amp == 0.25);
  CHECK(id.stream_mode == 3);
}

TEST_CASE("comments and blank lines are ignored") {
  const RunConfig cfg = parse_config(
      "# geometry\nouter_radius = 1.0  # container\n\nbody_radius = 0.2\n"
      "dt = 1e-3\nt_final = 0\n");
  CHECK(cfg.outer_radius == 1.0);
  CHECK(cfg.t_final == 0.0);
}

TEST_CASE("number formatting is bit-exact at 17 digits") {
  for (double v : {0.1, -1.0 / 3.0, 2.5e-17, M_PI, 6.02e23, -0.0, 1234.5678}) {
    const std::string s = format_number(v);
    CHECK(std::stod(s) == v);
  }
  CHECK_THROWS_AS(format_number(std::nan("")), NumericalError);
  CHECK_THROWS_AS(format_number(INFINITY), NumericalError);
}

TEST_CASE("timeseries CSV") {
  TempDir dir("csv");
  const std::string path = dir.file("t.csv");
  write_timeseries(path, {"a", "b"}, {});
  CHECK(slurp(path) == "a,b\n");

  write_timeseries(path, {"a", "b"}, {{1.0, 0.5}, {2.0, -0.25}});
  CHECK(slurp(path) == "a,b\n1,0.5\n2,-0.25\n");

  CHECK_THROWS_AS(
      write_timeseries(path, {"a"}, {{std::nan("")}}), NumericalError);
}

TEST_CASE("field dump roundtrip") {
  TempDir dir("dump");
  const ReferenceMesh mesh = build_annular_mesh(
      DiskGeometry{1.0, 0.2, Vec2::Zero()}, 4, 16, 0.2);
  FluidField f;
  f.time = 0.125;
  f.velocity.resize(2 * mesh.n_vnodes);
  for (int i = 0; i < f.velocity.size(); ++i)
    f.velocity[i] = std::sin(0.7 * i) / 3.0;
  f.pressure.resize(mesh.n_pnodes);
  for (int i = 0; i < f.pressure.size(); ++i)
    f.pressure[i] = std::cos(1.3 * i) / 7.0;
  f.lin_vel = Vec2(1.0 / 3.0, -2.0 / 7.0);
  f.ang_vel = 0.123456789012345678;
  RigidState s;
  s.position = Vec2(0.01, -0.02);
  s.angle = 0.5;

  const std::string path = dir.file("f.fld");
  dump_field(path, mesh, f, s);
  const FieldDumpData d = load_field(path);
  CHECK(d.nr == 4);
  CHECK(d.ntheta == 16);
  CHECK((d.velocity - f.velocity).cwiseAbs().maxCoeff() == 0.0);
  CHECK((pressure_dofs_from_nodes(mesh, d.pressure_nodes) - f.pressure)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(d.time == f.time);
  CHECK(d.position == s.position);
  CHECK(d.angle == s.angle);
  CHECK(d.lin_vel == f.lin_vel);
  CHECK(d.ang_vel == f.ang_vel);

  // a second dump of the loaded data is byte-identical
  FluidField f2 = f;
  f2.pressure = pressure_dofs_from_nodes(mesh, d.pressure_nodes);
  const std::string path2 = dir.file("f2.fld");
  dump_field(path2, mesh, f2, s);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("truncated or corrupt dumps are reported with a location") {
  TempDir dir("corrupt");
  const ReferenceMesh mesh = build_annular_mesh(
      DiskGeometry{1.0, 0.2, Vec2::Zero()}, 4, 16, 0.2);
  FluidField f;
  f.time = 0.0;
  f.velocity = VecX::Zero(2 * mesh.n_vnodes);
  f.pressure = VecX::Zero(mesh.n_pnodes);
  const std::string path = dir.file("f.fld");
  dump_field(path, mesh, f, RigidState{});

  const std::string full = slurp(path);
  {
    // cut at a line boundary: reading past the end reports the byte offset
    std::ofstream out(dir.file("trunc.fld"), std::ios::binary);
    size_t cut = 0;
    for (int nl = 0; nl < 5; ++nl) cut = full.find('\n', cut) + 1;
    out << full.substr(0, cut);
  }
  CHECK_THROWS_WITH_AS(load_field(dir.file("trunc.fld")),
                       doctest::Contains("byte offset"), InvalidArgument);
  {
    // cut mid-line: reported as a malformed line
    std::ofstream out(dir.file("trunc2.fld"), std::ios::binary);
    out << full.substr(0, full.size() / 2);
  }
  CHECK_THROWS_AS(load_field(dir.file("trunc2.fld")), InvalidArgument);
  {
    std::ofstream out(dir.file("bad.fld"), std::ios::binary);
    out << "NOTFLD 9\n" << full.substr(9);
  }
  CHECK_THROWS_WITH_AS(load_field(dir.file("bad.fld")),
                       doctest::Contains("line 1"), InvalidArgument);
}

TEST_CASE("cli dispatch") {
  TempDir dir("cli");
  {
    std::ofstream out(dir.file("rest.cfg"));
    out << "outer_radius = 1.0\nbody_radius = 0.2\ndt = 1e-2\n"
        << "t_final = 0.05\nfluid_ic = zero\nnr = 4\nntheta = 16\n";
  }

  CHECK(cli_dispatch({}) == 64);
  CHECK(cli_dispatch({"frobnicate"}) == 64);
  CHECK(cli_dispatch({"simulate"}) == 1);  // missing --config
  CHECK(cli_dispatch({"simulate", "--config", dir.file("nope.cfg")}) == 1);

  CHECK(cli_dispatch({"simulate", "--config", dir.file("rest.cfg"), "--out",
                      dir.file("out"), "--quiet"}) == 0);
  const std::string csv = slurp(fs::path(dir.file("out")) / "run.csv");
  CHECK(csv.rfind("t,l_x,l_y,r,h_x,h_y,theta,energy,picard_iters,dist\n", 0) ==
        0);
  // resting run logs exact zeros: 5 steps plus header and initial row
  int rows = 0;
  size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    const size_t end = csv.find('\n', pos);
    const std::string row = csv.substr(pos, end - pos);
    // columns l_x, l_y, r, h_x, h_y, theta, energy are exactly zero
    size_t c = row.find(',');
    CHECK(row.substr(c, 15) == ",0,0,0,0,0,0,0,");
    ++rows;
    pos = end + 1;
  }
  CHECK(rows == 6);

  CHECK(cli_dispatch({"verify-geomap", "--config", dir.file("rest.cfg"),
                      "--quiet"}) == 0);
  CHECK(cli_dispatch({"kirchhoff", "--config", dir.file("rest.cfg"), "--out",
                      dir.file("out"), "--quiet"}) == 0);
  CHECK(cli_dispatch({"added-mass", "--config", dir.file("rest.cfg"), "--out",
                      dir.file("out"), "--quiet"}) == 0);
  CHECK(fs::exists(fs::path(dir.file("out")) / "kirchhoff.csv"));
  CHECK(fs::exists(fs::path(dir.file("out")) / "added_mass.csv"));

  // field dumps at the requested stride
  CHECK(cli_dispatch({"simulate", "--config", dir.file("rest.cfg"), "--out",
                      dir.file("dumps"), "--dump-stride", "2", "--quiet"}) ==
        0);
  CHECK(fs::exists(fs::path(dir.file("dumps")) / "field_000000.fld"));
  CHECK(fs::exists(fs::path(dir.file("dumps")) / "field_000004.fld"));
}

TEST_CASE("collision exit code still writes outputs") {
  TempDir dir("coll");
  {
    std::ofstream out(dir.file("wall.cfg"));
    out << "outer_radius = 1.0\nbody_radius = 0.2\ndt = 2e-3\n"
        << "t_final = 3.0\nrho_s = 50\nalpha = 0.5\nl0_y = -2.0\n"
        << "nr = 4\nntheta = 16\n";
  }
  CHECK(cli_dispatch({"simulate", "--config", dir.file("wall.cfg"), "--out",
                      dir.file("out"), "--quiet"}) == 3);
  CHECK(fs::exists(fs::path(dir.file("out")) / "run.csv"));
}
