#pragma once

// Uniform structured grids, axis-aligned block partitions, and the halo
// topology that connects partition blocks.
//
// Cells are addressed (i, j, k) with global id i + nx*(j + ny*k). Gravity
// acts along a configurable axis; sloped domains keep the box mesh and tilt
// the vertical direction instead, so every cell's elevation is the dot
// product of its center with a unit vertical vector.

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "vadose/error.hpp"

namespace vadose {

struct GridSpec {
  int nx = 1, ny = 1, nz = 1;
  double dx = 1, dy = 1, dz = 1;
  // Center of cell (0,0,0). Defaults to half a spacing along each axis.
  std::array<double, 3> origin{};
  bool origin_set = false;
  int gravity_axis = 2;  // 0 = x, 1 = y, 2 = z
  // Tilt of the vertical direction, only meaningful for gravity_axis = z:
  // slope_deg rotates within the x-z plane, cross_slope_deg within y-z.
  double slope_deg = 0;
  double cross_slope_deg = 0;

  bool operator==(const GridSpec&) const = default;
};

class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  int nx() const { return n_[0]; }
  int ny() const { return n_[1]; }
  int nz() const { return n_[2]; }
  int extent(int axis) const { return n_[axis]; }
  std::int64_t cell_count() const {
    return std::int64_t(n_[0]) * n_[1] * n_[2];
  }
  double spacing(int axis) const { return d_[axis]; }
  double face_area(int axis) const { return area_[axis]; }
  double cell_volume() const { return volume_; }
  int gravity_axis() const { return gravity_axis_; }

  std::int64_t encode(int i, int j, int k) const {
    return i + std::int64_t(n_[0]) * (j + std::int64_t(n_[1]) * k);
  }
  std::array<int, 3> decode(std::int64_t id) const {
    const int i = int(id % n_[0]);
    const std::int64_t r = id / n_[0];
    return {i, int(r % n_[1]), int(r / n_[1])};
  }

  std::array<double, 3> center(int i, int j, int k) const {
    return {origin_[0] + i * d_[0], origin_[1] + j * d_[1], origin_[2] + k * d_[2]};
  }
  // Unit vector pointing vertically up, expressed in grid coordinates.
  const std::array<double, 3>& vertical() const { return vertical_; }
  double elevation(int i, int j, int k) const {
    const auto c = center(i, j, k);
    return c[0] * vertical_[0] + c[1] * vertical_[1] + c[2] * vertical_[2];
  }
  double elevation(std::int64_t id) const {
    const auto c = decode(id);
    return elevation(c[0], c[1], c[2]);
  }
  // Elevation gained when stepping one cell along +axis; constant per axis.
  double elevation_step(int axis) const { return d_[axis] * vertical_[axis]; }

 private:
  std::array<int, 3> n_;
  std::array<double, 3> d_;
  std::array<double, 3> origin_;
  std::array<double, 3> area_;
  std::array<double, 3> vertical_;
  double volume_;
  int gravity_axis_;
};

Grid build_grid(const GridSpec& spec);

// Half-open index box [lo, hi) per axis.
struct PartBox {
  std::array<int, 3> lo{}, hi{};
  int extent(int axis) const { return hi[axis] - lo[axis]; }
  std::int64_t cells() const {
    return std::int64_t(extent(0)) * extent(1) * extent(2);
  }
  bool contains(int i, int j, int k) const {
    return i >= lo[0] && i < hi[0] && j >= lo[1] && j < hi[1] && k >= lo[2] &&
           k < hi[2];
  }
};

// Axis-aligned block decomposition. Part p = ci + cuts_x*(cj + cuts_y*ck)
// owns the box spanned by balanced per-axis splits.
struct PartitionMap {
  std::array<int, 3> cuts{1, 1, 1};
  int parts = 1;
  std::vector<PartBox> boxes;
  int part_of(int i, int j, int k) const;
  std::array<int, 3> axis_block(int axis, int coord) const;  // internal helper

  // Balanced split positions per axis; block b of axis a covers
  // [starts[a][b], starts[a][b+1]).
  std::array<std::vector<int>, 3> starts;
};

// Splits the grid into cuts[0]*cuts[1]*cuts[2] boxes with per-axis balanced
// block sizes. Fails unless the resulting per-part cell counts differ by at
// most one (choose cuts that divide, or nearly divide, the axis extents).
PartitionMap partition_simple(const Grid& grid, std::array<int, 3> cuts);

// Picks cuts for the given part count: among factorizations with admissible
// balance, minimizes total interface area.
std::array<int, 3> choose_cuts(const Grid& grid, int parts);

// Cross-part coupling for one part, one neighbor: aligned send/receive
// lists. send_local[i] on this part pairs with recv_slot[i] on the receiving
// side of the reverse link.
struct HaloLink {
  int neighbor = -1;
  std::vector<int> send_local;
  std::vector<int> recv_slot;
};

// Directions index the 7-point stencil: 2*axis is the -axis face,
// 2*axis + 1 the +axis face.
inline constexpr int kDirs = 6;

struct PartTopology {
  PartBox box;
  int n_own = 0;
  int n_halo = 0;
  std::vector<HaloLink> links;  // sorted by neighbor part id
  // Per direction: local index of the face neighbor (owned < n_own, halo
  // otherwise) or -1 on the grid boundary.
  std::array<std::vector<std::int32_t>, kDirs> nbr;
  std::vector<std::int64_t> owned_global;  // local owned index -> global id

  int local_of(int i, int j, int k) const {
    return (i - box.lo[0]) +
           box.extent(0) * ((j - box.lo[1]) + box.extent(1) * (k - box.lo[2]));
  }
};

struct HaloTopology {
  std::vector<PartTopology> parts;
};

HaloTopology halo_topology(const Grid& grid, const PartitionMap& map);

}  // namespace vadose
