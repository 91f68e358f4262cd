// Python face of the solver. Exposes the constitutive curves, the
// steady-profile oracle, conductivity-field draws, flux-series tables,
// case parsing and rendering, whole-case runs, and the analytic
// validation sweep. Long-running calls release the GIL; the in-process
// workers never touch Python state.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "vadose/driver.hpp"
#include "vadose/error.hpp"
#include "vadose/soil.hpp"

namespace py = pybind11;

namespace vadose {
namespace {

// Hands the vector's storage to numpy without a copy; the capsule owns it.
py::array_t<double> take(std::vector<double>&& v) {
  auto* held = new std::vector<double>(std::move(v));
  py::capsule owner(held, [](void* p) {
    delete static_cast<std::vector<double>*>(p);
  });
  return py::array_t<double>({py::ssize_t(held->size())},
                             {py::ssize_t(sizeof(double))}, held->data(),
                             owner);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open case file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

py::dict run_file(const std::filesystem::path& case_path, int parts,
                  bool write_outputs, bool return_final_head,
                  double timeout_s) {
  const CaseSpec spec = parse_case(slurp(case_path));
  RunOptions opt;
  opt.parts = parts;
  opt.write_outputs = write_outputs;
  opt.spmd_timeout_s = timeout_s;
  std::vector<double> final_head;
  if (return_final_head) opt.final_head = &final_head;
  RunStats stats;
  {
    py::gil_scoped_release release;
    const CaseSetup setup = materialize_case(spec, case_path);
    stats = run_case(setup, opt);
  }
  std::vector<double> t(stats.log.size());
  std::vector<double> dt(stats.log.size());
  for (std::size_t i = 0; i < stats.log.size(); ++i) {
    t[i] = stats.log[i].t;
    dt[i] = stats.log[i].dt;
  }
  py::dict out;
  out["accepted_steps"] = py::int_(stats.log.size());
  out["rejected_steps"] = stats.rejected_steps;
  out["total_picard_iters"] = stats.total_picard_iters;
  out["total_pcg_iters"] = stats.total_pcg_iters;
  out["initial_storage"] = stats.ledger.initial_storage;
  out["final_storage"] = stats.ledger.storage;
  out["mass_error"] = stats.ledger.cumulative_error;
  out["cumulative_boundary"] = stats.ledger.cumulative_boundary;
  out["step_t"] = take(std::move(t));
  out["step_dt"] = take(std::move(dt));
  if (return_final_head) out["final_head"] = take(std::move(final_head));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Parallel finite-volume solver for variably saturated flow in porous "
      "media: constitutive curves, case runs, and validation oracles.";

  const auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidInput>(m, "InvalidInput", base);
  py::register_exception<SpecError>(m, "SpecError", base);
  py::register_exception<FactorError>(m, "FactorError", base);
  py::register_exception<SyncError>(m, "SyncError", base);
  py::register_exception<NoConvergence>(m, "NoConvergence", base);
  py::register_exception<BlowupError>(m, "BlowupError", base);
  py::register_exception<StepFloorError>(m, "StepFloorError", base);

  py::class_<VanGenuchten>(m, "VanGenuchten",
                           "Curved retention model with Mualem conductivity. "
                           "Units: Ks [m/s], alpha [1/m], n > 1, "
                           "theta_s/theta_r [-], storativity [1/m].")
      .def(py::init([](double Ks, double alpha, double n, double theta_s,
                       double theta_r, double storativity) {
             return VanGenuchten{Ks, alpha, n, theta_s, theta_r, storativity};
           }),
           py::arg("Ks"), py::arg("alpha"), py::arg("n"), py::arg("theta_s"),
           py::arg("theta_r"), py::arg("storativity") = 1e-5)
      .def_readwrite("Ks", &VanGenuchten::Ks)
      .def_readwrite("alpha", &VanGenuchten::alpha)
      .def_readwrite("n", &VanGenuchten::n)
      .def_readwrite("theta_s", &VanGenuchten::theta_s)
      .def_readwrite("theta_r", &VanGenuchten::theta_r)
      .def_readwrite("storativity", &VanGenuchten::storativity)
      .def("__eq__",
           [](const VanGenuchten& a, const VanGenuchten& b) { return a == b; },
           py::is_operator())
      .def("__repr__", [](const VanGenuchten& s) {
        std::ostringstream o;
        o << "VanGenuchten(Ks=" << s.Ks << ", alpha=" << s.alpha
          << ", n=" << s.n << ", theta_s=" << s.theta_s
          << ", theta_r=" << s.theta_r << ", storativity=" << s.storativity
          << ")";
        return o.str();
      });

  py::class_<Gardner>(m, "Gardner",
                      "Exponential conductivity model K = Ks exp(alpha h) for "
                      "h < 0; no retention curve, storage uses storativity "
                      "alone.")
      .def(py::init([](double Ks, double alpha, double storativity) {
             return Gardner{Ks, alpha, storativity};
           }),
           py::arg("Ks"), py::arg("alpha"), py::arg("storativity") = 1e-5)
      .def_readwrite("Ks", &Gardner::Ks)
      .def_readwrite("alpha", &Gardner::alpha)
      .def_readwrite("storativity", &Gardner::storativity)
      .def("__eq__", [](const Gardner& a, const Gardner& b) { return a == b; },
           py::is_operator())
      .def("__repr__", [](const Gardner& s) {
        std::ostringstream o;
        o << "Gardner(Ks=" << s.Ks << ", alpha=" << s.alpha
          << ", storativity=" << s.storativity << ")";
        return o.str();
      });

  m.def("water_content", &water_content, py::arg("soil"), py::arg("h"),
        "Volumetric water content theta(h). Requires a VanGenuchten model.");
  m.def("capillary_capacity", &capillary_capacity, py::arg("soil"),
        py::arg("h"),
        "Analytic capacity d theta / d h; storativity when saturated. "
        "Requires a VanGenuchten model.");
  m.def("hydraulic_conductivity", &hydraulic_conductivity, py::arg("soil"),
        py::arg("h"), "Conductivity K(h); defined for both models.");
  m.def("chord_slope_capacity", &chord_slope_capacity, py::arg("soil"),
        py::arg("h_iter"), py::arg("h_old"),
        "Secant slope of the retention curve between two iteration states. "
        "Requires a VanGenuchten model.");

  m.def("gardner_analytic_h", &gardner_analytic_h, py::arg("Ks"),
        py::arg("alpha"), py::arg("q"), py::arg("z"),
        "Steady head profile of the exponential-conductivity model over a "
        "column with a water table at z = 0 and flux density q (positive = "
        "downward infiltration). Raises InvalidInput when the log argument "
        "is not positive.");
  m.def("gardner_flux_bound", &gardner_flux_bound, py::arg("Ks"),
        py::arg("alpha"), py::arg("column_height"),
        "Most negative admissible q for the steady profile over a column of "
        "the given height; -inf when alpha = 0.");

  m.def(
      "lognormal_ks_field",
      [](std::array<int, 3> shape, std::array<double, 3> spacing,
         double geo_mean, double sigma_log10, std::pair<double, double> clamp,
         std::uint64_t seed) {
        GridSpec gs;
        gs.nx = shape[0];
        gs.ny = shape[1];
        gs.nz = shape[2];
        gs.dx = spacing[0];
        gs.dy = spacing[1];
        gs.dz = spacing[2];
        const Grid grid(gs);
        std::vector<double> draws;
        {
          py::gil_scoped_release release;
          draws = lognormal_ks_field(grid, geo_mean, sigma_log10, clamp, seed);
        }
        return take(std::move(draws));
      },
      py::arg("shape"), py::arg("spacing") = std::array<double, 3>{1, 1, 1},
      py::arg("geo_mean") = 1e-6, py::arg("sigma_log10") = 1.17,
      py::arg("clamp") = std::pair<double, double>(1e-10, 1e-3),
      py::arg("seed") = 0,
      "Per-cell saturated-conductivity draws, x fastest (reshape with "
      "order (nz, ny, nx)). Deterministic per seed and independent of "
      "partitioning.");

  py::class_<CaseSpec>(m, "CaseSpec",
                       "Parsed case description; render_case gives back the "
                       "canonical text form.")
      .def_property_readonly("cells",
                             [](const CaseSpec& s) {
                               return py::make_tuple(s.grid.nx, s.grid.ny,
                                                     s.grid.nz);
                             })
      .def_property_readonly("cell_count",
                             [](const CaseSpec& s) {
                               return std::int64_t(s.grid.nx) * s.grid.ny *
                                      s.grid.nz;
                             })
      .def_property_readonly(
          "zone_count", [](const CaseSpec& s) { return s.zones.size(); })
      .def_property_readonly(
          "patch_count", [](const CaseSpec& s) { return s.patches.size(); })
      .def_readonly("t_end", &CaseSpec::t_end)
      .def("__eq__",
           [](const CaseSpec& a, const CaseSpec& b) { return a == b; },
           py::is_operator());

  m.def("parse_case", &parse_case, py::arg("text"),
        "Parses the line-oriented `section.key = value` case format (see "
        "docs/case_format.md). Raises SpecError listing every violated "
        "constraint with its line number.");
  m.def("render_case", &render_case, py::arg("spec"),
        "Canonical text form; parse_case(render_case(spec)) == spec.");

  py::class_<FluxSeries>(m, "FluxSeries",
                         "Piecewise-constant boundary forcing: value i "
                         "applies on [t_start[i], t_start[i+1]), the last "
                         "record until coverage_end.")
      .def_readonly("t_start", &FluxSeries::t_start)
      .def_readonly("flux", &FluxSeries::flux)
      .def_readonly("coverage_end", &FluxSeries::coverage_end);

  m.def("parse_flux_series", &parse_flux_series, py::arg("text"),
        "CSV with header `t_start_seconds,flux_m_per_s`, at least two "
        "records, strictly increasing t_start beginning at 0.");
  m.def("flux_at", &flux_at, py::arg("series"), py::arg("t"),
        "Value whose interval contains t (left-closed). Raises InvalidInput "
        "outside [0, coverage_end].");
  m.def("render_daily_forcing", &render_daily_forcing, py::arg("days"),
        py::arg("seed"),
        "Synthetic daily forcing CSV: wet-season rain squares against "
        "dry-season evaporation with seeded per-day noise.");

  m.def("run", &run_file, py::arg("case_path"), py::arg("parts") = 1,
        py::arg("write_outputs") = true, py::arg("return_final_head") = false,
        py::arg("timeout_s") = 600.0,
        "Runs a case file over `parts` in-process workers; outputs go under "
        "the case's output directory. Returns run statistics as a dict; "
        "with return_final_head=True the dict carries the final head per "
        "global cell.");

  py::class_<GardnerPoint>(m, "GardnerPoint",
                           "One flux of the steady-profile validation sweep.")
      .def_readonly("patch_flux", &GardnerPoint::patch_flux)
      .def_readonly("valid", &GardnerPoint::valid)
      .def_readonly("max_err", &GardnerPoint::max_err)
      .def_readonly("tolerance", &GardnerPoint::tolerance)
      .def("__repr__", [](const GardnerPoint& p) {
        std::ostringstream o;
        o << "GardnerPoint(patch_flux=" << p.patch_flux
          << ", valid=" << (p.valid ? "True" : "False")
          << ", max_err=" << p.max_err << ", tolerance=" << p.tolerance
          << ")";
        return o.str();
      });

  m.def(
      "validate_gardner",
      [](int cells, const std::vector<double>& fluxes) {
        std::vector<GardnerPoint> pts;
        {
          py::gil_scoped_release release;
          pts = validate_gardner(cells, fluxes);
        }
        return pts;
      },
      py::arg("cells"), py::arg("patch_fluxes"),
      "Steady-state validation against the analytic profile over a 1 m "
      "column: each patch flux is imposed on top and the numerical steady "
      "state is compared with the closed form.");

  m.attr("__version__") = "0.1.0";
}

}  // namespace vadose
