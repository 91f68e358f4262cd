#pragma once

// Closed-form unsaturated soil models: water retention, capillary capacity,
// and hydraulic conductivity as functions of pressure head.
//
// Pressure head h is in meters of water and is negative in the unsaturated
// range. Every function falls back to the saturated branch for h >= 0 and
// rejects non-finite input.

#include <variant>

#include "vadose/error.hpp"

namespace vadose {

// Curved retention model with Mualem conductivity.
// Units: Ks [m/s], alpha [1/m], n [-] (n > 1), theta_s/theta_r [-],
// storativity [1/m] (specific storage, used as the saturated capacity).
struct VanGenuchten {
  double Ks = 0;
  double alpha = 0;
  double n = 0;
  double theta_s = 0;
  double theta_r = 0;
  double storativity = 1e-5;

  bool operator==(const VanGenuchten&) const = default;
};

// Exponential conductivity model K = Ks * exp(alpha * h) for h < 0.
// Carries no retention curve; storage uses the storativity alone.
struct Gardner {
  double Ks = 0;
  double alpha = 0;
  double storativity = 1e-5;

  bool operator==(const Gardner&) const = default;
};

using SoilModel = std::variant<VanGenuchten, Gardner>;

// Secant capacities degenerate below this head difference [m].
inline constexpr double kChordEps = 1e-9;

// Volumetric water content theta(h). Requires a VanGenuchten model.
double water_content(const SoilModel& soil, double h);

// Analytic capacity C(h) = d theta / d h; storativity when saturated.
// Requires a VanGenuchten model.
double capillary_capacity(const SoilModel& soil, double h);

// Conductivity K(h); defined for both models.
double hydraulic_conductivity(const SoilModel& soil, double h);

// Secant slope of the retention curve between two iteration states:
//   (theta(h_iter) - theta(h_old)) / (h_iter - h_old).
// Falls back to capillary_capacity(h_iter) when |h_iter - h_old| <= kChordEps.
// Both states saturated: returns the storativity. A chord that crosses h = 0
// returns the raw secant (including the saturated plateau) plus the
// storativity, so saturating cells keep a positive storage coefficient.
// Requires a VanGenuchten model.
double chord_slope_capacity(const SoilModel& soil, double h_iter, double h_old);

}  // namespace vadose
