#include "rigidflow/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rigidflow {

std::string format_number(double v) {
  check_numeric(std::isfinite(v), "refusing to write non-finite value");
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_timeseries(const std::string& path,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open output file: " + path);
  for (size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    require(row.size() == columns.size(), "CSV row width mismatch");
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
  check_numeric(out.good(), "I/O failure writing " + path);
}

VecX pressure_nodes_from_dofs(const ReferenceMesh& mesh, const VecX& pdofs) {
  VecX out(mesh.n_vnodes);
  for (int i = 0; i <= 2 * mesh.nr; ++i)
    for (int j = 0; j < 2 * mesh.nt; ++j) {
      const int i0 = i / 2, i1 = (i + 1) / 2;
      const int j0 = j / 2, j1 = (j + 1) / 2;
      // mid nodes sit at parameter midpoints, so bilinear = averaging
      out[mesh.vnode_id(i, j)] =
          0.25 * (pdofs[mesh.pnode_id(i0, j0)] + pdofs[mesh.pnode_id(i0, j1)] +
                  pdofs[mesh.pnode_id(i1, j0)] + pdofs[mesh.pnode_id(i1, j1)]);
    }
  return out;
}

VecX pressure_dofs_from_nodes(const ReferenceMesh& mesh,
                              const VecX& pressure_nodes) {
  VecX out(mesh.n_pnodes);
  for (int i = 0; i <= mesh.nr; ++i)
    for (int j = 0; j < mesh.nt; ++j)
      out[mesh.pnode_id(i, j)] = pressure_nodes[mesh.vnode_id(2 * i, 2 * j)];
  return out;
}

void dump_field(const std::string& path, const ReferenceMesh& mesh,
                const FluidField& field, const RigidState& state) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open output file: " + path);
  const VecX pn = pressure_nodes_from_dofs(mesh, field.pressure);
  out << "FSIFLD 1\n";
  out << mesh.nr << " " << mesh.nt << "\n";
  out << mesh.n_vnodes << "\n";
  for (int i = 0; i < mesh.n_vnodes; ++i)
    out << format_number(mesh.vnode[i].x()) << " "
        << format_number(mesh.vnode[i].y()) << "\n";
  for (int i = 0; i < mesh.n_vnodes; ++i)
    out << format_number(field.velocity[2 * i]) << " "
        << format_number(field.velocity[2 * i + 1]) << "\n";
  for (int i = 0; i < mesh.n_vnodes; ++i) out << format_number(pn[i]) << "\n";
  out << format_number(field.time) << " " << format_number(state.position.x())
      << " " << format_number(state.position.y()) << " "
      << format_number(state.angle) << " " << format_number(field.lin_vel.x())
      << " " << format_number(field.lin_vel.y()) << " "
      << format_number(field.ang_vel) << "\n";
  check_numeric(out.good(), "I/O failure writing " + path);
}

namespace {

struct LineReader {
  std::ifstream in;
  int lineno = 0;
  explicit LineReader(const std::string& path) : in(path, std::ios::binary) {}

  std::string next(const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
      const auto off = static_cast<long>(in.tellg());
      throw InvalidArgument(std::string("field dump truncated while reading ") +
                            what + " (line " + std::to_string(lineno + 1) +
                            ", byte offset " + std::to_string(off) + ")");
    }
    ++lineno;
    return line;
  }

  template <int N>
  std::array<double, N> numbers(const char* what) {
    const std::string line = next(what);
    std::istringstream ss(line);
    std::array<double, N> out;
    for (int i = 0; i < N; ++i)
      if (!(ss >> out[i]))
        throw InvalidArgument(std::string("malformed field dump: expected ") +
                              what + " at line " + std::to_string(lineno));
    return out;
  }
};

}  // namespace

FieldDumpData load_field(const std::string& path) {
  LineReader r(path);
  require(r.in.good(), "cannot open field dump: " + path);
  require(r.next("header") == "FSIFLD 1",
          "malformed field dump: bad header (line 1)");
  const auto dims = r.numbers<2>("mesh dims");
  FieldDumpData d;
  d.nr = static_cast<int>(dims[0]);
  d.ntheta = static_cast<int>(dims[1]);
  const int n = static_cast<int>(r.numbers<1>("node count")[0]);
  require(n > 0 && n == (2 * d.nr + 1) * (2 * d.ntheta),
          "malformed field dump: inconsistent node count (line 3)");
  d.nodes.resize(n);
  d.velocity.resize(2 * n);
  d.pressure_nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto xy = r.numbers<2>("node coordinates");
    d.nodes[i] = Vec2(xy[0], xy[1]);
  }
  for (int i = 0; i < n; ++i) {
    const auto v = r.numbers<2>("velocity pair");
    d.velocity[2 * i] = v[0];
    d.velocity[2 * i + 1] = v[1];
  }
  for (int i = 0; i < n; ++i)
    d.pressure_nodes[i] = r.numbers<1>("pressure value")[0];
  const auto rs = r.numbers<7>("rigid state line");
  d.time = rs[0];
  d.position = Vec2(rs[1], rs[2]);
  d.angle = rs[3];
  d.lin_vel = Vec2(rs[4], rs[5]);
  d.ang_vel = rs[6];
  return d;
}

}  // namespace rigidflow
