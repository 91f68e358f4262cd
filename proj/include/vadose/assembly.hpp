#pragma once

// Finite-volume discretization of one Picard iteration on one part:
// implicit capillary diffusion and storage, explicit gravity flux, and
// boundary conditions, producing the rows of a StencilMatrix. Assembly is
// embarrassingly parallel per part once h_iter and K_iter halos are
// current; it performs no communication and no cross-part writes.

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vadose/grid.hpp"
#include "vadose/linsolve.hpp"
#include "vadose/soil.hpp"

namespace vadose {

struct Dirichlet {
  double h_b = 0.0;  // imposed pressure head [m] at the boundary face
  bool operator==(const Dirichlet&) const = default;
};
struct NeumannFlux {
  double q = 0.0;  // imposed flux density [m/s], positive = outward
  bool operator==(const NeumannFlux&) const = default;
};
// Unit total-head gradient out of the cell: the pressure-gradient part is
// zero and gravity alone drives the flux. The case loader restricts this
// condition to the gravity-low face of the domain.
struct FreeDrainage {
  bool operator==(const FreeDrainage&) const = default;
};
// Time-varying outward flux density; `series` indexes the table of values
// pre-evaluated at the step's target time and passed to assemble.
struct SeriesFlux {
  int series = -1;
  bool operator==(const SeriesFlux&) const = default;
};
using BoundaryCondition =
    std::variant<Dirichlet, NeumannFlux, FreeDrainage, SeriesFlux>;

// A rectangle of exterior faces on one side of the domain. lo/hi are
// half-open cell ranges along the two transverse axes, lower axis first.
// Every exterior face must be covered by exactly one patch.
struct Patch {
  std::string name;
  int dir = 0;  // 2*axis + side, side 1 = high face
  std::array<int, 2> lo{0, 0};
  std::array<int, 2> hi{0, 0};
  BoundaryCondition bc;

  bool operator==(const Patch&) const = default;
};

// True when the patch covers the `dir`-side exterior face of the cell.
bool patch_covers(const Patch& patch, int dir,
                  const std::array<int, 3>& cell);

// Per-owned-cell soil assignment: zone_of maps a local cell index to an
// entry of models. Materialized per part from the case's zone boxes.
struct SoilAtlas {
  std::vector<SoilModel> models;
  std::vector<int> zone_of;
  const SoilModel& of(int local) const { return models[zone_of[local]]; }
};

// Fields carried between Picard iterations and time levels. h_old and
// theta_old are owned-sized; h_iter and k_iter carry halo slots and must
// be exchanged before assembly. theta_old caches storage_content of h_old
// exactly (never recomputed from a drifting source).
struct FieldState {
  std::vector<double> h_old;
  std::vector<double> theta_old;
  std::vector<double> h_iter;
  std::vector<double> k_iter;
};

// Effective conductivity at the face between two cells: arithmetic mean.
inline double face_conductivity(double k_p, double k_n) {
  return 0.5 * (k_p + k_n);
}

// Water volume per unit bulk volume that the mass ledger tracks: the
// retention curve for van Genuchten soils, storativity * h for Gardner
// soils (which have no retention curve; see decisions ledger).
double storage_content(const SoilModel& soil, double h);

// Storage coefficient placed on the diagonal: the chord-slope capacity
// floored at storativity for van Genuchten (the floor keeps saturated
// steady problems non-singular), plain storativity for Gardner.
double storage_capacity(const SoilModel& soil, double h_iter, double h_old);

// Builds one part's rows of the backward-Euler system A h_new = rhs:
//   storage   diag += C*V/dt, rhs += C*V/dt * h_old, C = storage_capacity
//   interior  T_f = face_conductivity(K_P, K_N)*A_f/d; diag += T_f;
//             coupling = -T_f; rhs += T_f * (z_N - z_P)   (explicit gravity)
//   Dirichlet T_b = face_conductivity(K_P, K(h_b))*A_f/(d/2); diag += T_b;
//             rhs += T_b*h_b + T_b*(z_face - z_P)
//   flux      rhs -= q*A_f        (NeumannFlux q, or SeriesFlux via
//                                  series_flux[index] at the target time)
//   drainage  rhs -= K_P*A_f
// Gravity terms reuse the transmissibility product so a hydrostatic field
// (h + z constant) cancels per face to round-off. Throws SpecError for an
// exterior face no patch covers or a series index without a value.
void assemble(const Grid& grid, const PartTopology& topo,
              const SoilAtlas& soils, const FieldState& state,
              const std::vector<Patch>& patches,
              std::span<const double> series_flux, double dt,
              StencilMatrix& A);

// Post-solve Darcy fluxes evaluated with the same discrete expressions as
// assemble, so storage change plus boundary outflow telescopes to the
// linear-solver residual. face[a][l] is the outward volumetric flux
// [m^3/s] from owned cell l through its +axis-a face (interior and
// part-boundary faces; domain-boundary faces report 0 there and integrate
// into patch_outward instead). patch_outward[i] sums this part's outward
// flux over patch i; callers reduce across parts.
struct FluxReport {
  std::array<std::vector<double>, 3> face;
  std::vector<double> patch_outward;
};

FluxReport darcy_flux(const Grid& grid, const PartTopology& topo,
                      const SoilAtlas& soils, const FieldState& state,
                      const std::vector<Patch>& patches,
                      std::span<const double> series_flux);

}  // namespace vadose
