#include "vadose/assembly.hpp"

#include <cmath>
#include <string>

namespace vadose {

bool patch_covers(const Patch& patch, int dir,
                  const std::array<int, 3>& cell) {
  if (patch.dir != dir) return false;
  const int a = dir / 2;
  const int u = a == 0 ? 1 : 0;
  const int w = a == 2 ? 1 : 2;
  return cell[u] >= patch.lo[0] && cell[u] < patch.hi[0] &&
         cell[w] >= patch.lo[1] && cell[w] < patch.hi[1];
}

double storage_content(const SoilModel& soil, double h) {
  if (const auto* g = std::get_if<Gardner>(&soil)) return g->storativity * h;
  return water_content(soil, h);
}

double storage_capacity(const SoilModel& soil, double h_iter, double h_old) {
  if (const auto* g = std::get_if<Gardner>(&soil)) return g->storativity;
  const auto& vg = std::get<VanGenuchten>(soil);
  return std::max(chord_slope_capacity(soil, h_iter, h_old), vg.storativity);
}

namespace {

std::size_t find_patch(const std::vector<Patch>& patches, int dir,
                       const std::array<int, 3>& cell) {
  for (std::size_t i = 0; i < patches.size(); ++i)
    if (patch_covers(patches[i], dir, cell)) return i;
  throw SpecError("exterior face (" + std::to_string(cell[0]) + "," +
                  std::to_string(cell[1]) + "," + std::to_string(cell[2]) +
                  ") direction " + std::to_string(dir) +
                  " is not covered by any patch");
}

double series_value(std::span<const double> series_flux, int index) {
  if (index < 0 || std::size_t(index) >= series_flux.size())
    throw SpecError("flux series index " + std::to_string(index) +
                    " has no value for this step");
  return series_flux[std::size_t(index)];
}

}  // namespace

void assemble(const Grid& grid, const PartTopology& topo,
              const SoilAtlas& soils, const FieldState& state,
              const std::vector<Patch>& patches,
              std::span<const double> series_flux, double dt,
              StencilMatrix& A) {
  if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
  const int n = topo.n_own;
  A.resize(n);
  const double vol = grid.cell_volume();
  for (int l = 0; l < n; ++l) {
    const SoilModel& soil = soils.of(l);
    const double cap = storage_capacity(soil, state.h_iter[l], state.h_old[l]);
    const double storage = cap * vol / dt;
    double diag = storage;
    double rhs = storage * state.h_old[l];
    const auto cell = grid.decode(topo.owned_global[l]);
    for (int a = 0; a < 3; ++a) {
      const double area = grid.face_area(a);
      const double inv_d = 1.0 / grid.spacing(a);
      const double estep = grid.elevation_step(a);
      for (int side = 0; side < 2; ++side) {
        const int nb = topo.nbr[2 * a + side][l];
        const double zstep = side ? estep : -estep;
        if (nb >= 0) {
          const double tf =
              face_conductivity(state.k_iter[l], state.k_iter[nb]) * area *
              inv_d;
          diag += tf;
          rhs += tf * zstep;
          if (side == 1)
            A.upper[a][l] = -tf;
          else if (nb >= n)
            A.lower_halo[a][l] = -tf;
          continue;
        }
        const Patch& patch = patches[find_patch(patches, 2 * a + side, cell)];
        if (const auto* d = std::get_if<Dirichlet>(&patch.bc)) {
          const double kb = face_conductivity(
              state.k_iter[l], hydraulic_conductivity(soil, d->h_b));
          const double tb = kb * area * (2.0 * inv_d);
          diag += tb;
          rhs += tb * d->h_b + tb * (0.5 * zstep);
        } else if (const auto* nf = std::get_if<NeumannFlux>(&patch.bc)) {
          rhs -= nf->q * area;
        } else if (const auto* sf = std::get_if<SeriesFlux>(&patch.bc)) {
          rhs -= series_value(series_flux, sf->series) * area;
        } else {
          rhs -= state.k_iter[l] * area;
        }
      }
    }
    A.diag[l] = diag;
    A.rhs[l] = rhs;
  }
}

FluxReport darcy_flux(const Grid& grid, const PartTopology& topo,
                      const SoilAtlas& soils, const FieldState& state,
                      const std::vector<Patch>& patches,
                      std::span<const double> series_flux) {
  const int n = topo.n_own;
  FluxReport report;
  for (int a = 0; a < 3; ++a) report.face[a].assign(std::size_t(n), 0.0);
  report.patch_outward.assign(patches.size(), 0.0);
  for (int l = 0; l < n; ++l) {
    const auto cell = grid.decode(topo.owned_global[l]);
    for (int a = 0; a < 3; ++a) {
      const double area = grid.face_area(a);
      const double inv_d = 1.0 / grid.spacing(a);
      const double estep = grid.elevation_step(a);
      for (int side = 0; side < 2; ++side) {
        const int nb = topo.nbr[2 * a + side][l];
        const double zstep = side ? estep : -estep;
        if (nb >= 0) {
          if (side == 0) continue;  // each interior face reported once
          const double tf =
              face_conductivity(state.k_iter[l], state.k_iter[nb]) * area *
              inv_d;
          report.face[a][l] =
              tf * (state.h_iter[l] - state.h_iter[nb]) - tf * zstep;
          continue;
        }
        const std::size_t pi = find_patch(patches, 2 * a + side, cell);
        const Patch& patch = patches[pi];
        double out = 0.0;
        if (const auto* d = std::get_if<Dirichlet>(&patch.bc)) {
          const double kb = face_conductivity(
              state.k_iter[l],
              hydraulic_conductivity(soils.of(l), d->h_b));
          const double tb = kb * area * (2.0 * inv_d);
          out = tb * (state.h_iter[l] - d->h_b) - tb * (0.5 * zstep);
        } else if (const auto* nf = std::get_if<NeumannFlux>(&patch.bc)) {
          out = nf->q * area;
        } else if (const auto* sf = std::get_if<SeriesFlux>(&patch.bc)) {
          out = series_value(series_flux, sf->series) * area;
        } else {
          out = state.k_iter[l] * area;
        }
        report.patch_outward[pi] += out;
      }
    }
  }
  return report;
}

}  // namespace vadose
