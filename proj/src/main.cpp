// Command-line front end: run, validate, partition-check, scaling, forcing.
// Exit codes: 0 success, 1 solver/case/validation failure, 2 usage error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "text_util.hpp"
#include "vadose/driver.hpp"

namespace {

using vadose::text::fmt;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw vadose::SpecError("cannot open case file '" + p.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

vadose::CaseSetup load_case(const std::string& path) {
  const vadose::CaseSpec spec = vadose::parse_case(read_file(path));
  return vadose::materialize_case(spec, path);
}

void print_run_summary(const vadose::CaseSetup& setup, int parts,
                       const vadose::RunStats& stats) {
  const vadose::CaseSpec& spec = setup.spec;
  std::cout << setup.grid.cell_count() << " cells, " << parts
            << (parts == 1 ? " worker\n" : " workers\n");
  std::cout << "reached t = " << fmt(spec.t_end) << " s in "
            << stats.log.size() << " accepted steps (" << stats.rejected_steps
            << " rejected), " << stats.total_picard_iters
            << " nonlinear iterations, " << stats.total_pcg_iters
            << " linear iterations\n";
  std::cout << "mass balance error " << fmt(stats.ledger.cumulative_error)
            << " m^3";
  if (stats.ledger.initial_storage > 0)
    std::cout << " ("
              << fmt(100.0 * stats.ledger.cumulative_error /
                     stats.ledger.initial_storage)
              << " % of initial storage)";
  std::cout << '\n';
  for (std::size_t i = 0; i < spec.patches.size(); ++i) {
    const vadose::Patch& p = spec.patches[i];
    const double area = double(p.hi[0] - p.lo[0]) *
                        double(p.hi[1] - p.lo[1]) *
                        setup.grid.face_area(p.dir / 2);
    const double rate = stats.ledger.last_boundary_rate[i];
    const std::string label =
        p.name.empty() ? "patch " + std::to_string(i) : "patch " + p.name;
    std::cout << label << ": final outward " << fmt(rate) << " m^3/s ("
              << fmt(rate / area) << " m/s over " << fmt(area) << " m^2)\n";
  }
  std::cout << "outputs in " << setup.out_dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-volume solver for variably saturated subsurface flow"};
  app.require_subcommand(1);

  std::string run_path;
  int run_parts = 1, run_threads = 0;
  auto* run = app.add_subcommand("run", "march a case to t_end");
  run->add_option("case", run_path, "case file")->required();
  run->add_option("--parts", run_parts, "worker count (default 1)");
  run->add_option("--threads", run_threads, "alias for --parts");
  run->callback([&] {
    if (run_threads > 0) {
      if (run->count("--parts") && run_parts != run_threads)
        throw CLI::ValidationError("--parts and --threads disagree");
      run_parts = run_threads;
    }
    if (run_parts < 1)
      throw CLI::ValidationError("--parts must be at least 1");
    const vadose::CaseSetup setup = load_case(run_path);
    vadose::RunOptions opt;
    opt.parts = run_parts;
    const vadose::RunStats stats = vadose::run_case(setup, opt);
    print_run_summary(setup, run_parts, stats);
  });

  auto* val = app.add_subcommand("validate",
                                 "check the solver against analytic results");
  val->require_subcommand(1);
  int vg_cells = 100;
  std::vector<double> vg_fluxes;
  auto* vg = val->add_subcommand(
      "gardner", "steady exponential-model column against the closed form");
  vg->add_option("--cells", vg_cells, "column resolution (default 100)");
  vg->add_option("--fluxes", vg_fluxes,
                 "top-patch fluxes [m/s], positive outward")
      ->delimiter(',');
  vg->callback([&] {
    if (vg_cells < 2) throw CLI::ValidationError("--cells must be at least 2");
    const std::vector<double> fluxes =
        vg_fluxes.empty()
            ? std::vector<double>{0.0, -3e-7, -7e-7, 2e-6, 5e-6}
            : vg_fluxes;
    bool ok = true;
    for (const vadose::GardnerPoint& pt :
         vadose::validate_gardner(vg_cells, fluxes)) {
      if (!pt.valid) {
        std::cout << "flux " << fmt(pt.patch_flux)
                  << " m/s: no admissible steady profile, skipped\n";
        continue;
      }
      const bool pass = pt.max_err <= pt.tolerance;
      ok = ok && pass;
      std::cout << "flux " << fmt(pt.patch_flux) << " m/s: max |h - h_ref| = "
                << fmt(pt.max_err) << " m (tolerance " << fmt(pt.tolerance)
                << ") " << (pass ? "PASS" : "FAIL") << '\n';
    }
    if (!ok) throw vadose::Error("gardner validation failed");
  });

  std::string pc_path;
  std::vector<int> pc_parts;
  auto* pc = app.add_subcommand(
      "partition-check", "verify results do not depend on the partitioning");
  pc->add_option("case", pc_path, "case file")->required();
  pc->add_option("--parts", pc_parts, "worker counts; first is the reference")
      ->required()
      ->delimiter(',');
  pc->callback([&] {
    const vadose::CaseSetup setup = load_case(pc_path);
    const double tol = 10.0 * setup.spec.picard.pcg_tol;
    bool ok = true;
    const auto rows = vadose::partition_check(setup, pc_parts);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const vadose::PartitionCheckRow& r = rows[i];
      if (i == 0) {
        std::cout << "parts " << r.parts << ": reference\n";
        continue;
      }
      const bool pass = r.sequence_match && r.max_head_diff <= tol;
      ok = ok && pass;
      std::cout << "parts " << r.parts << ": step sequence "
                << (r.sequence_match ? "identical" : "DIVERGED")
                << ", max head difference " << fmt(r.max_head_diff)
                << " m (tolerance " << fmt(tol) << ") "
                << (pass ? "PASS" : "FAIL") << '\n';
    }
    if (!ok) throw vadose::Error("partition check failed");
  });

  std::string sc_path, sc_mode = "strong";
  std::vector<int> sc_parts;
  auto* sc = app.add_subcommand("scaling",
                                "time a case across worker counts (CSV)");
  sc->add_option("case", sc_path, "case file")->required();
  sc->add_option("--parts", sc_parts, "worker counts; first is the reference")
      ->required()
      ->delimiter(',');
  sc->add_option("--mode", sc_mode, "strong (default) or weak")
      ->check(CLI::IsMember({"strong", "weak"}));
  sc->callback([&] {
    const vadose::CaseSpec spec = vadose::parse_case(read_file(sc_path));
    std::cout << vadose::render_scaling_csv(
        vadose::scaling_study(spec, sc_path, sc_parts, sc_mode == "weak"));
  });

  std::string fo_path;
  int fo_days = 365;
  std::uint64_t fo_seed = 1;
  auto* fo = app.add_subcommand("forcing",
                                "write a synthetic daily forcing series");
  fo->add_option("out", fo_path, "output CSV path")->required();
  fo->add_option("--days", fo_days, "series length (default 365)");
  fo->add_option("--seed", fo_seed, "random seed (default 1)");
  fo->callback([&] {
    std::ofstream out(fo_path, std::ios::binary | std::ios::trunc);
    if (!out) throw vadose::SpecError("cannot write '" + fo_path + "'");
    out << vadose::render_daily_forcing(fo_days, fo_seed);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
