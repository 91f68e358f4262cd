#include "vadose/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vadose {

namespace {

std::array<double, 3> vertical_of(const GridSpec& spec) {
  if (spec.gravity_axis < 0 || spec.gravity_axis > 2)
    throw SpecError("gravity_axis must be 0 (x), 1 (y) or 2 (z)");
  const bool sloped = spec.slope_deg != 0 || spec.cross_slope_deg != 0;
  if (sloped && spec.gravity_axis != 2)
    throw SpecError("slope angles require gravity_axis = z");
  if (std::abs(spec.slope_deg) >= 90 || std::abs(spec.cross_slope_deg) >= 90)
    throw SpecError("slope angles must lie strictly inside (-90, 90) degrees");
  if (!sloped) {
    std::array<double, 3> v{0, 0, 0};
    v[spec.gravity_axis] = 1.0;
    return v;
  }
  const double a = spec.slope_deg * std::numbers::pi / 180.0;
  const double b = spec.cross_slope_deg * std::numbers::pi / 180.0;
  // Unit by construction: sin^2(a) + cos^2(a) (sin^2(b) + cos^2(b)) = 1.
  return {std::sin(a), std::cos(a) * std::sin(b), std::cos(a) * std::cos(b)};
}

}  // namespace

Grid::Grid(const GridSpec& spec)
    : n_{spec.nx, spec.ny, spec.nz},
      d_{spec.dx, spec.dy, spec.dz},
      vertical_(vertical_of(spec)),
      gravity_axis_(spec.gravity_axis) {
  for (int a = 0; a < 3; ++a) {
    if (n_[a] < 1) throw SpecError("grid extents must be at least 1 cell");
    if (!(d_[a] > 0) || !std::isfinite(d_[a]))
      throw SpecError("grid spacings must be positive and finite");
  }
  origin_ = spec.origin_set
                ? spec.origin
                : std::array<double, 3>{d_[0] / 2, d_[1] / 2, d_[2] / 2};
  area_ = {d_[1] * d_[2], d_[0] * d_[2], d_[0] * d_[1]};
  volume_ = d_[0] * d_[1] * d_[2];
}

Grid build_grid(const GridSpec& spec) { return Grid(spec); }

std::array<int, 3> PartitionMap::axis_block(int axis, int coord) const {
  const auto& s = starts[axis];
  const auto it = std::upper_bound(s.begin(), s.end(), coord);
  const int b = int(it - s.begin()) - 1;
  return {b, s[b], s[b + 1]};
}

int PartitionMap::part_of(int i, int j, int k) const {
  const int bi = axis_block(0, i)[0];
  const int bj = axis_block(1, j)[0];
  const int bk = axis_block(2, k)[0];
  return bi + cuts[0] * (bj + cuts[1] * bk);
}

PartitionMap partition_simple(const Grid& grid, std::array<int, 3> cuts) {
  for (int a = 0; a < 3; ++a) {
    if (cuts[a] < 1) throw SpecError("partition cuts must be at least 1");
    if (cuts[a] > grid.extent(a))
      throw SpecError("partition cuts exceed the grid extent along an axis");
  }
  PartitionMap map;
  map.cuts = cuts;
  map.parts = cuts[0] * cuts[1] * cuts[2];
  for (int a = 0; a < 3; ++a) {
    map.starts[a].resize(cuts[a] + 1);
    for (int b = 0; b <= cuts[a]; ++b)
      map.starts[a][b] = int(std::int64_t(grid.extent(a)) * b / cuts[a]);
  }
  map.boxes.resize(map.parts);
  std::int64_t cmin = grid.cell_count(), cmax = 0;
  for (int ck = 0; ck < cuts[2]; ++ck)
    for (int cj = 0; cj < cuts[1]; ++cj)
      for (int ci = 0; ci < cuts[0]; ++ci) {
        PartBox box;
        box.lo = {map.starts[0][ci], map.starts[1][cj], map.starts[2][ck]};
        box.hi = {map.starts[0][ci + 1], map.starts[1][cj + 1],
                  map.starts[2][ck + 1]};
        map.boxes[ci + cuts[0] * (cj + std::int64_t(cuts[1]) * ck)] = box;
        cmin = std::min(cmin, box.cells());
        cmax = std::max(cmax, box.cells());
      }
  if (cmax - cmin > 1)
    throw SpecError("partition cuts leave parts imbalanced by more than one "
                    "cell; choose cuts that divide the axis extents");
  return map;
}

std::array<int, 3> choose_cuts(const Grid& grid, int parts) {
  if (parts < 1) throw SpecError("part count must be at least 1");
  std::array<int, 3> best{0, 0, 0};
  double best_area = -1;
  for (int cx = 1; cx <= parts; ++cx) {
    if (parts % cx) continue;
    const int rest = parts / cx;
    for (int cy = 1; cy <= rest; ++cy) {
      if (rest % cy) continue;
      const int cz = rest / cy;
      const std::array<int, 3> cuts{cx, cy, cz};
      try {
        partition_simple(grid, cuts);
      } catch (const SpecError&) {
        continue;
      }
      const double area = (cx - 1) * grid.face_area(0) * grid.ny() * grid.nz() +
                          (cy - 1) * grid.face_area(1) * grid.nx() * grid.nz() +
                          (cz - 1) * grid.face_area(2) * grid.nx() * grid.ny();
      if (best_area < 0 || area < best_area) {
        best_area = area;
        best = cuts;
      }
    }
  }
  if (best_area < 0)
    throw SpecError("no balanced axis-aligned decomposition exists for the "
                    "requested part count on this grid");
  return best;
}

HaloTopology halo_topology(const Grid& grid, const PartitionMap& map) {
  HaloTopology topo;
  topo.parts.resize(map.parts);
  for (int p = 0; p < map.parts; ++p) {
    PartTopology& pt = topo.parts[p];
    pt.box = map.boxes[p];
    pt.n_own = int(pt.box.cells());
    pt.owned_global.resize(pt.n_own);
    for (int k = pt.box.lo[2]; k < pt.box.hi[2]; ++k)
      for (int j = pt.box.lo[1]; j < pt.box.hi[1]; ++j)
        for (int i = pt.box.lo[0]; i < pt.box.hi[0]; ++i)
          pt.owned_global[pt.local_of(i, j, k)] = grid.encode(i, j, k);

    // Halo slots are assigned in face-direction order; within one face, the
    // lower transverse axis varies fastest. Senders enumerate identically,
    // which keeps the paired lists index-aligned.
    std::array<int, kDirs> slot_base;
    std::array<int, kDirs> face_neighbor;
    int slot = pt.n_own;
    for (int d = 0; d < kDirs; ++d) {
      const int a = d / 2;
      const bool high = d % 2;
      slot_base[d] = slot;
      face_neighbor[d] = -1;
      const int edge = high ? pt.box.hi[a] : pt.box.lo[a] - 1;
      if (edge < 0 || edge >= grid.extent(a)) continue;
      const int u = a == 0 ? 1 : 0;
      const int w = a == 2 ? 1 : 2;
      std::array<int, 3> probe = pt.box.lo;
      probe[a] = edge;
      face_neighbor[d] = map.part_of(probe[0], probe[1], probe[2]);
      slot += pt.box.extent(u) * pt.box.extent(w);
    }
    pt.n_halo = slot - pt.n_own;

    for (int d = 0; d < kDirs; ++d) {
      if (face_neighbor[d] < 0) continue;
      const int a = d / 2;
      const bool high = d % 2;
      const int u = a == 0 ? 1 : 0;
      const int w = a == 2 ? 1 : 2;
      HaloLink link;
      link.neighbor = face_neighbor[d];
      const int own_edge = high ? pt.box.hi[a] - 1 : pt.box.lo[a];
      int off = 0;
      for (int cw = pt.box.lo[w]; cw < pt.box.hi[w]; ++cw)
        for (int cu = pt.box.lo[u]; cu < pt.box.hi[u]; ++cu, ++off) {
          std::array<int, 3> c;
          c[a] = own_edge;
          c[u] = cu;
          c[w] = cw;
          link.send_local.push_back(pt.local_of(c[0], c[1], c[2]));
          link.recv_slot.push_back(slot_base[d] + off);
        }
      pt.links.push_back(std::move(link));
    }

    for (int d = 0; d < kDirs; ++d) pt.nbr[d].assign(pt.n_own, -1);
    for (int k = pt.box.lo[2]; k < pt.box.hi[2]; ++k)
      for (int j = pt.box.lo[1]; j < pt.box.hi[1]; ++j)
        for (int i = pt.box.lo[0]; i < pt.box.hi[0]; ++i) {
          const int l = pt.local_of(i, j, k);
          const std::array<int, 3> c{i, j, k};
          for (int d = 0; d < kDirs; ++d) {
            const int a = d / 2;
            std::array<int, 3> nc = c;
            nc[a] += d % 2 ? 1 : -1;
            if (nc[a] < 0 || nc[a] >= grid.extent(a)) continue;
            if (pt.box.contains(nc[0], nc[1], nc[2])) {
              pt.nbr[d][l] = pt.local_of(nc[0], nc[1], nc[2]);
            } else {
              const int u = a == 0 ? 1 : 0;
              const int w = a == 2 ? 1 : 2;
              pt.nbr[d][l] = slot_base[d] + (c[u] - pt.box.lo[u]) +
                             pt.box.extent(u) * (c[w] - pt.box.lo[w]);
            }
          }
        }
  }
  return topo;
}

}  // namespace vadose
