#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "text_util.hpp"
#include "vadose/driver.hpp"

namespace vadose {

using text::fmt;

void write_snapshot(const Grid& grid, const std::vector<SnapshotField>& fields,
                    double t, const std::filesystem::path& path) {
  const std::size_t n = std::size_t(grid.cell_count());
  for (const SnapshotField& f : fields) {
    if (f.name.empty() || f.name.find_first_of(" \t\n") != std::string::npos)
      throw InvalidInput("snapshot field names must be non-empty, without "
                         "whitespace");
    if (f.values.size() != n)
      throw InvalidInput("snapshot field '" + f.name + "' carries " +
                         std::to_string(f.values.size()) + " values for " +
                         std::to_string(n) + " cells");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SpecError("cannot write snapshot '" + path.string() + "'");
  out << "# vtk DataFile Version 3.0\n";
  out << "vadose snapshot t=" << fmt(t) << '\n';
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << grid.nx() + 1 << ' ' << grid.ny() + 1 << ' '
      << grid.nz() + 1 << '\n';
  const auto c0 = grid.center(0, 0, 0);
  out << "ORIGIN " << fmt(c0[0] - grid.spacing(0) / 2) << ' '
      << fmt(c0[1] - grid.spacing(1) / 2) << ' '
      << fmt(c0[2] - grid.spacing(2) / 2) << '\n';
  out << "SPACING " << fmt(grid.spacing(0)) << ' ' << fmt(grid.spacing(1))
      << ' ' << fmt(grid.spacing(2)) << '\n';
  out << "CELL_DATA " << n << '\n';
  for (const SnapshotField& f : fields) {
    out << "SCALARS " << f.name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (const double v : f.values) out << fmt(v) << '\n';
  }
  out.flush();
  if (!out) throw SpecError("failed writing snapshot '" + path.string() + "'");
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open snapshot '" + path.string() + "'");
  const auto bad = [&](const std::string& what) {
    return SpecError("snapshot '" + path.string() + "': " + what);
  };
  std::string line;
  if (!std::getline(in, line) || line.rfind("# vtk DataFile", 0) != 0)
    throw bad("missing VTK header line");
  if (!std::getline(in, line)) throw bad("missing title line");
  Snapshot s;
  const auto tp = line.rfind("t=");
  if (tp == std::string::npos ||
      !text::to_double(text::trim(line.substr(tp + 2)), s.t))
    throw bad("title line carries no time");
  if (!std::getline(in, line) || text::trim(line) != "ASCII")
    throw bad("expected ASCII encoding");
  if (!std::getline(in, line) ||
      text::trim(line) != "DATASET STRUCTURED_POINTS")
    throw bad("expected DATASET STRUCTURED_POINTS");
  std::string kw;
  std::array<int, 3> dims{};
  if (!(in >> kw >> dims[0] >> dims[1] >> dims[2]) || kw != "DIMENSIONS")
    throw bad("expected DIMENSIONS");
  for (int a = 0; a < 3; ++a) {
    s.cells[a] = dims[a] - 1;
    if (s.cells[a] < 1) throw bad("each dimension needs at least two points");
  }
  if (!(in >> kw >> s.origin[0] >> s.origin[1] >> s.origin[2]) ||
      kw != "ORIGIN")
    throw bad("expected ORIGIN");
  if (!(in >> kw >> s.spacing[0] >> s.spacing[1] >> s.spacing[2]) ||
      kw != "SPACING")
    throw bad("expected SPACING");
  long long n = 0;
  if (!(in >> kw >> n) || kw != "CELL_DATA") throw bad("expected CELL_DATA");
  if (n != 1LL * s.cells[0] * s.cells[1] * s.cells[2])
    throw bad("CELL_DATA count disagrees with the dimensions");
  while (in >> kw) {
    if (kw != "SCALARS") throw bad("expected SCALARS, got '" + kw + "'");
    std::string name, type;
    int comps = 0;
    if (!(in >> name >> type >> comps) || type != "double" || comps != 1)
      throw bad("unsupported SCALARS declaration");
    std::string lt, table;
    if (!(in >> lt >> table) || lt != "LOOKUP_TABLE")
      throw bad("expected LOOKUP_TABLE");
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (double& v : vals)
      if (!(in >> v)) throw bad("truncated values for field '" + name + "'");
    s.fields.emplace_back(std::move(name), std::move(vals));
  }
  return s;
}

void write_probes(const std::filesystem::path& path,
                  const std::vector<std::array<int, 3>>& probes,
                  const Grid& grid, double t, std::span<const double> theta,
                  std::span<const double> h) {
  if (probes.empty()) throw InvalidInput("probe list is empty");
  const std::size_t n = std::size_t(grid.cell_count());
  if (theta.size() != n || h.size() != n)
    throw InvalidInput("probe fields must cover every cell of the grid");
  for (const auto& c : probes)
    if (c[0] < 0 || c[0] >= grid.nx() || c[1] < 0 || c[1] >= grid.ny() ||
        c[2] < 0 || c[2] >= grid.nz())
      throw InvalidInput("probe cell lies outside the grid");
  std::error_code ec;
  const bool fresh = std::filesystem::file_size(path, ec) == 0 || ec;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw SpecError("cannot write probes '" + path.string() + "'");
  if (fresh) {
    out << 't';
    for (const auto& c : probes)
      out << ",theta(" << c[0] << '_' << c[1] << '_' << c[2] << ')';
    for (const auto& c : probes)
      out << ",h(" << c[0] << '_' << c[1] << '_' << c[2] << ')';
    out << '\n';
  }
  out << fmt(t);
  for (const auto& c : probes)
    out << ',' << fmt(theta[std::size_t(grid.encode(c[0], c[1], c[2]))]);
  for (const auto& c : probes)
    out << ',' << fmt(h[std::size_t(grid.encode(c[0], c[1], c[2]))]);
  out << '\n';
  out.flush();
  if (!out) throw SpecError("failed writing probes '" + path.string() + "'");
}

void write_run_log(const RunStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SpecError("cannot write run log '" + path.string() + "'");
  out << "t,dt,picard_iters,pcg_iters_total,mass_error\n";
  for (const StepRecord& r : stats.log)
    out << fmt(r.t) << ',' << fmt(r.dt) << ',' << r.picard_iters << ','
        << r.pcg_iters << ',' << fmt(r.mass_error) << '\n';
  out.flush();
  if (!out) throw SpecError("failed writing run log '" + path.string() + "'");
}

std::string render_scaling_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream o;
  o << "parts,cells,wall_s,speedup,efficiency\n";
  for (const ScalingRow& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%lld,%.6g,%.6g,%.6g\n", r.parts,
                  static_cast<long long>(r.cells), r.wall_s, r.speedup,
                  r.efficiency);
    o << buf;
  }
  return o.str();
}

}  // namespace vadose
