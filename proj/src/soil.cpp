#include "vadose/soil.hpp"

#include <cmath>

namespace vadose {

namespace {

void check_head(double h) {
  if (!std::isfinite(h)) throw InvalidInput("pressure head must be finite");
}

void check_params(const VanGenuchten& s) {
  if (!(s.Ks > 0) || !(s.alpha > 0) || !(s.n > 1) || !(s.theta_s > s.theta_r) ||
      !(s.storativity >= 0))
    throw InvalidInput("van Genuchten parameters violate Ks>0, alpha>0, n>1, "
                       "theta_s>theta_r, storativity>=0");
}

void check_params(const Gardner& s) {
  if (!(s.Ks > 0) || !(s.alpha > 0) || !(s.storativity >= 0))
    throw InvalidInput("Gardner parameters violate Ks>0, alpha>0, storativity>=0");
}

const VanGenuchten& as_vg(const SoilModel& soil, const char* op) {
  const auto* vg = std::get_if<VanGenuchten>(&soil);
  if (!vg) throw InvalidInput(std::string(op) + " requires a van Genuchten model");
  check_params(*vg);
  return *vg;
}

double vg_theta(const VanGenuchten& s, double h) {
  if (h >= 0) return s.theta_s;
  const double m = 1.0 - 1.0 / s.n;
  const double an = std::pow(-s.alpha * h, s.n);
  return (s.theta_s - s.theta_r) * std::pow(1.0 + an, -m) + s.theta_r;
}

double vg_capacity(const VanGenuchten& s, double h) {
  if (h >= 0) return s.storativity;
  const double m = 1.0 - 1.0 / s.n;
  const double a = -s.alpha * h;
  const double an = std::pow(a, s.n);
  return (s.theta_s - s.theta_r) * s.alpha * s.n * m * std::pow(a, s.n - 1.0) *
         std::pow(1.0 + an, -(2.0 - 1.0 / s.n));
}

}  // namespace

double water_content(const SoilModel& soil, double h) {
  check_head(h);
  return vg_theta(as_vg(soil, "water_content"), h);
}

double capillary_capacity(const SoilModel& soil, double h) {
  check_head(h);
  return vg_capacity(as_vg(soil, "capillary_capacity"), h);
}

double hydraulic_conductivity(const SoilModel& soil, double h) {
  check_head(h);
  if (const auto* g = std::get_if<Gardner>(&soil)) {
    check_params(*g);
    return h >= 0 ? g->Ks : g->Ks * std::exp(g->alpha * h);
  }
  const auto& s = std::get<VanGenuchten>(soil);
  check_params(s);
  if (h >= 0) return s.Ks;
  const double m = 1.0 - 1.0 / s.n;
  const double an = std::pow(-s.alpha * h, s.n);
  const double se = std::pow(1.0 + an, -m);  // effective saturation in (0,1)
  const double inner = 1.0 - std::pow(1.0 - std::pow(se, 1.0 / m), m);
  return s.Ks * std::sqrt(se) * inner * inner;
}

double chord_slope_capacity(const SoilModel& soil, double h_iter, double h_old) {
  check_head(h_iter);
  check_head(h_old);
  const auto& s = as_vg(soil, "chord_slope_capacity");
  if (h_iter >= 0 && h_old >= 0) return s.storativity;
  if (std::abs(h_iter - h_old) <= kChordEps) return vg_capacity(s, h_iter);
  const double chord = (vg_theta(s, h_iter) - vg_theta(s, h_old)) / (h_iter - h_old);
  const bool crosses = (h_iter >= 0) != (h_old >= 0);
  return crosses ? chord + s.storativity : chord;
}

}  // namespace vadose
