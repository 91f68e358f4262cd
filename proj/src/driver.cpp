#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <utility>
#include <variant>

#include "case_detail.hpp"
#include "text_util.hpp"
#include "vadose/driver.hpp"

namespace vadose {

using text::fmt;

std::vector<double> lognormal_ks_field(const Grid& grid, double geo_mean,
                                       double sigma_log10,
                                       std::pair<double, double> clamp,
                                       std::uint64_t seed) {
  if (!(geo_mean > 0)) throw InvalidInput("geometric mean must be positive");
  if (!(sigma_log10 >= 0))
    throw InvalidInput("log10 standard deviation must be nonnegative");
  if (!(clamp.first > 0) || !(clamp.second >= clamp.first))
    throw InvalidInput("clamp range must satisfy 0 < min <= max");
  std::mt19937_64 eng(seed);
  const double mu = std::log10(geo_mean);
  std::vector<double> ks(std::size_t(grid.cell_count()));
  // Pinned Box-Muller, exactly two engine draws per cell in global
  // lexicographic order, so a field is reproducible from (seed, grid) alone.
  for (double& v : ks) {
    const std::uint64_t x = eng();
    const std::uint64_t y = eng();
    const double u1 = double((x >> 11) + 1) * 0x1p-53;  // (0, 1]
    const double u2 = double(y >> 11) * 0x1p-53;        // [0, 1)
    const double z = std::sqrt(-2.0 * std::log(u1)) *
                     std::cos(2.0 * std::numbers::pi * u2);
    v = std::clamp(std::pow(10.0, mu + sigma_log10 * z), clamp.first,
                   clamp.second);
  }
  return ks;
}

double gardner_analytic_h(double Ks, double alpha, double q, double z) {
  if (!(Ks > 0) || !(alpha > 0))
    throw InvalidInput("exponential-model parameters must be positive");
  if (z == 0) return 0.0;
  if (q == 0) return -z;
  const double arg = (q + (Ks - q) * std::exp(-alpha * z)) / Ks;
  if (!(arg > 0))
    throw InvalidInput(
        "no steady profile: the head expression's log argument is not "
        "positive at z = " +
        fmt(z));
  return std::log(arg) / alpha;
}

double gardner_flux_bound(double Ks, double alpha, double column_height) {
  if (!(Ks > 0) || !(column_height > 0) || !(alpha >= 0))
    throw InvalidInput(
        "flux bound needs Ks > 0, height > 0 and alpha >= 0");
  if (alpha == 0) return -std::numeric_limits<double>::infinity();
  return Ks * std::exp(-alpha * column_height) /
         std::expm1(-alpha * column_height);
}

namespace {

std::vector<double> load_initial_heads(const std::filesystem::path& file,
                                       const Grid& grid) {
  const std::size_t n = std::size_t(grid.cell_count());
  if (file.extension() == ".vtk") {
    const Snapshot snap = read_snapshot(file);
    if (snap.cells != std::array<int, 3>{grid.nx(), grid.ny(), grid.nz()})
      throw SpecError("initial-head snapshot '" + file.string() +
                      "' was written for a different grid");
    for (const auto& [name, values] : snap.fields)
      if (name == "h") return values;
    throw SpecError("initial-head snapshot '" + file.string() +
                    "' lacks an 'h' field");
  }
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw SpecError("cannot open initial-head file '" + file.string() + "'");
  std::vector<double> h;
  h.reserve(n);
  std::string tok;
  while (in >> tok) {
    double v = 0;
    if (!text::to_double(tok, v))
      throw SpecError("initial-head file '" + file.string() +
                      "': bad value '" + tok + "'");
    h.push_back(v);
  }
  if (h.size() != n)
    throw SpecError("initial-head file '" + file.string() + "' carries " +
                    std::to_string(h.size()) + " values for " +
                    std::to_string(n) + " cells");
  return h;
}

}  // namespace

CaseSetup materialize_case(const CaseSpec& spec,
                           const std::filesystem::path& case_path) {
  std::vector<std::string> errs;
  std::vector<int> zone_of;
  for (std::string& m : detail_case::zone_errors(spec.grid, spec.zones,
                                                 &zone_of))
    errs.push_back(std::move(m));
  for (std::string& m : detail_case::patch_errors(spec.grid, spec.patches,
                                                  spec.series_files.size()))
    errs.push_back(std::move(m));
  spec.picard.validate();
  if (!(spec.t_end > 0)) errs.push_back("t_end must be positive");
  if (!errs.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < errs.size(); ++i) {
      if (i) joined += '\n';
      joined += errs[i];
    }
    throw SpecError(joined);
  }

  CaseSetup setup{spec, build_grid(spec.grid), std::move(zone_of),
                  {},   {},                    {},
                  {}};
  const std::filesystem::path parent = case_path.parent_path();
  if (spec.random_field.enabled) {
    const RandomFieldSpec& rf = spec.random_field;
    setup.cell_ks =
        lognormal_ks_field(setup.grid, rf.geo_mean, rf.sigma_log10,
                           {rf.clamp_min, rf.clamp_max}, rf.seed);
  }
  if (spec.init_mode == InitMode::File)
    setup.init_h = load_initial_heads(parent / spec.init_file, setup.grid);
  for (const std::string& sf : spec.series_files) {
    FluxSeries fs = load_flux_series(parent / sf);
    if (spec.t_end > fs.coverage_end)
      throw SpecError("flux series '" + sf + "' covers " +
                      fmt(fs.coverage_end) + " s but t_end is " +
                      fmt(spec.t_end) + " s");
    setup.series.push_back(std::move(fs));
  }
  std::string stem = case_path.stem().string();
  if (stem.empty()) stem = "case";
  setup.out_dir = spec.output_dir.empty() ? parent / (stem + "_out")
                                          : parent / spec.output_dir;
  return setup;
}

SoilAtlas part_atlas(const CaseSetup& setup, const PartTopology& topo) {
  SoilAtlas atlas;
  const int n_own = topo.n_own;
  atlas.zone_of.resize(std::size_t(n_own));
  if (setup.cell_ks.empty()) {
    atlas.models.reserve(setup.spec.zones.size());
    for (const ZoneSpec& z : setup.spec.zones) atlas.models.push_back(z.model);
    for (int l = 0; l < n_own; ++l)
      atlas.zone_of[std::size_t(l)] =
          setup.zone_of[std::size_t(topo.owned_global[std::size_t(l)])];
    return atlas;
  }
  // Random field: the draw acts as a multiplier draw/geo_mean on the zone's
  // Ks, so zone contrasts survive under heterogeneity.
  const double geo = setup.spec.random_field.geo_mean;
  atlas.models.resize(std::size_t(n_own));
  for (int l = 0; l < n_own; ++l) {
    const std::size_t g = std::size_t(topo.owned_global[std::size_t(l)]);
    SoilModel m = setup.spec.zones[std::size_t(setup.zone_of[g])].model;
    const double scale = setup.cell_ks[g] / geo;
    std::visit([scale](auto& soil) { soil.Ks *= scale; }, m);
    atlas.models[std::size_t(l)] = std::move(m);
    atlas.zone_of[std::size_t(l)] = l;
  }
  return atlas;
}

std::vector<double> part_initial_head(const CaseSetup& setup,
                                      const PartTopology& topo) {
  std::vector<double> h(std::size_t(topo.n_own));
  switch (setup.spec.init_mode) {
    case InitMode::Uniform:
      std::fill(h.begin(), h.end(), setup.spec.init_value);
      break;
    case InitMode::Hydrostatic:
      for (int l = 0; l < topo.n_own; ++l)
        h[std::size_t(l)] =
            setup.spec.init_value -
            setup.grid.elevation(topo.owned_global[std::size_t(l)]);
      break;
    case InitMode::File:
      for (int l = 0; l < topo.n_own; ++l)
        h[std::size_t(l)] =
            setup.init_h[std::size_t(topo.owned_global[std::size_t(l)])];
      break;
  }
  return h;
}

RunStats run_case(const CaseSetup& setup, const RunOptions& opt) {
  if (opt.parts < 1) throw InvalidInput("part count must be at least 1");
  const Grid& grid = setup.grid;
  const CaseSpec& spec = setup.spec;
  const PartitionMap map = partition_simple(grid, choose_cuts(grid, opt.parts));
  const HaloTopology topo = halo_topology(grid, map);
  const std::size_t n = std::size_t(grid.cell_count());

  const bool snaps = opt.write_outputs && spec.snapshot_interval > 0;
  const bool probing =
      opt.write_outputs && spec.probe_interval > 0 && !spec.probes.empty();
  const std::filesystem::path probe_path = setup.out_dir / "probes.csv";
  if (opt.write_outputs) {
    std::filesystem::create_directories(setup.out_dir);
    std::filesystem::remove(probe_path);  // the probe writer appends
  }

  // Collective gathers deposit into buffers shared by every worker; they are
  // sized here, on the spawning thread, before any worker runs.
  std::vector<double> g_h, g_theta, g_k;
  if (snaps || probing || opt.final_head) g_h.resize(n);
  if (snaps || probing) g_theta.resize(n);
  if (snaps) g_k.resize(n);
  if (opt.final_head) opt.final_head->resize(n);

  RunStats shared;
  const SeriesEval series_at = [&setup](double t) {
    std::vector<double> v(setup.series.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = flux_at(setup.series[i], t);
    return v;
  };

  const auto worker = [&](Comm& comm) {
    const PartTopology& part = topo.parts[std::size_t(comm.part())];
    const SoilAtlas atlas = part_atlas(setup, part);
    const std::vector<double> h0 = part_initial_head(setup, part);
    PartWork work;
    work.state = prepare_state(atlas, h0, part.n_halo);
    RunStats local;
    RunStats& stats = comm.part() == 0 ? shared : local;
    const std::span<const double> own_h{work.state.h_iter.data(),
                                        std::size_t(part.n_own)};

    std::vector<TimedObserver> observers;
    if (snaps) {
      observers.push_back(
          {spec.snapshot_interval,
           [&, snap_idx = 0](double t, const FieldState& st,
                             const MassLedger&) mutable {
             // K is recomputed from the written heads so the fields agree.
             std::vector<double> k(std::size_t(part.n_own));
             for (int l = 0; l < part.n_own; ++l)
               k[std::size_t(l)] = hydraulic_conductivity(
                   atlas.of(l), st.h_iter[std::size_t(l)]);
             comm.gather(own_h, part, g_h);
             comm.gather({st.theta_old.data(), std::size_t(part.n_own)}, part,
                         g_theta);
             comm.gather(k, part, g_k);
             if (comm.part() == 0) {
               char name[32];
               std::snprintf(name, sizeof name, "snap_%04d.vtk", snap_idx);
               write_snapshot(grid,
                              {{"h", g_h}, {"theta", g_theta}, {"K", g_k}}, t,
                              setup.out_dir / name);
             }
             ++snap_idx;
           }});
    }
    if (probing) {
      observers.push_back(
          {spec.probe_interval,
           [&](double t, const FieldState& st, const MassLedger&) {
             comm.gather(own_h, part, g_h);
             comm.gather({st.theta_old.data(), std::size_t(part.n_own)}, part,
                         g_theta);
             if (comm.part() == 0)
               write_probes(probe_path, spec.probes, grid, t, g_theta, g_h);
           }});
    }

    run_transient(grid, part, atlas, spec.patches, series_at, spec.picard,
                  spec.time, spec.t_end, observers, comm, work, stats);
    if (opt.final_head) comm.gather(own_h, part, *opt.final_head);
  };

  try {
    run_spmd(opt.parts, worker, opt.spmd_timeout_s);
  } catch (...) {
    // The joined worker 0 already filled `shared` up to the failure.
    if (opt.write_outputs) write_run_log(shared, setup.out_dir / "run_log.csv");
    throw;
  }
  if (opt.write_outputs) write_run_log(shared, setup.out_dir / "run_log.csv");
  return shared;
}

std::vector<PartitionCheckRow> partition_check(
    const CaseSetup& setup, const std::vector<int>& parts_list) {
  if (parts_list.empty()) throw InvalidInput("parts list is empty");
  std::vector<PartitionCheckRow> rows;
  std::vector<double> ref_head;
  RunStats ref;
  for (std::size_t i = 0; i < parts_list.size(); ++i) {
    std::vector<double> head;
    RunOptions opt;
    opt.parts = parts_list[i];
    opt.write_outputs = false;
    opt.final_head = &head;
    const RunStats stats = run_case(setup, opt);
    PartitionCheckRow row;
    row.parts = parts_list[i];
    if (i == 0) {
      ref = stats;
      ref_head = std::move(head);
      row.sequence_match = true;
    } else {
      row.sequence_match = stats.log.size() == ref.log.size();
      if (row.sequence_match)
        for (std::size_t r = 0; r < stats.log.size(); ++r) {
          const StepRecord& a = stats.log[r];
          const StepRecord& b = ref.log[r];
          // Bitwise agreement is the claim: t and dt come from the same
          // reduction-driven decisions on every worker count.
          if (a.t != b.t || a.dt != b.dt ||
              a.picard_iters != b.picard_iters) {
            row.sequence_match = false;
            break;
          }
        }
      for (std::size_t c = 0; c < head.size(); ++c)
        row.max_head_diff =
            std::max(row.max_head_diff, std::abs(head[c] - ref_head[c]));
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

// Weak-mode scaling stretches the domain along x so cells per worker stay
// constant; zones and lateral patches must span the full x extent to remain
// meaningful after stretching.
CaseSpec scale_x(const CaseSpec& base, int factor) {
  CaseSpec s = base;
  const int nx0 = base.grid.nx;
  s.grid.nx = nx0 * factor;
  for (ZoneSpec& z : s.zones) {
    if (z.lo[0] != 0 || z.hi[0] != nx0)
      throw SpecError(
          "weak scaling requires zones spanning the full x extent");
    z.hi[0] = s.grid.nx;
  }
  for (Patch& p : s.patches) {
    if (p.dir / 2 == 0) continue;  // x faces keep their (y, z) ranges
    // For y and z faces the first transverse axis is x.
    if (p.lo[0] != 0 || p.hi[0] != nx0)
      throw SpecError(
          "weak scaling requires side patches spanning the full x extent");
    p.hi[0] = s.grid.nx;
  }
  return s;
}

}  // namespace

std::vector<ScalingRow> scaling_study(const CaseSpec& spec,
                                      const std::filesystem::path& case_path,
                                      const std::vector<int>& parts_list,
                                      bool weak) {
  if (parts_list.empty()) throw InvalidInput("parts list is empty");
  for (const int p : parts_list)
    if (p < 1) throw InvalidInput("part counts must be at least 1");
  std::optional<CaseSetup> strong;
  if (!weak) strong.emplace(materialize_case(spec, case_path));
  std::vector<ScalingRow> rows;
  double wall0 = 0;
  std::int64_t cells0 = 0;
  for (std::size_t i = 0; i < parts_list.size(); ++i) {
    const int p = parts_list[i];
    std::optional<CaseSetup> scaled;
    if (weak) scaled.emplace(materialize_case(scale_x(spec, p), case_path));
    const CaseSetup& setup = weak ? *scaled : *strong;
    RunOptions opt;
    opt.parts = p;
    opt.write_outputs = false;
    const auto t0 = std::chrono::steady_clock::now();
    (void)run_case(setup, opt);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    ScalingRow row;
    row.parts = p;
    row.cells = setup.grid.cell_count();
    row.wall_s = wall;
    if (i == 0) {
      wall0 = wall;
      cells0 = row.cells;
    }
    row.speedup = wall > 0 ? double(row.cells) / double(cells0) * wall0 / wall
                           : 0.0;
    row.efficiency = row.speedup * double(parts_list[0]) / double(p);
    rows.push_back(row);
  }
  return rows;
}

std::vector<GardnerPoint> validate_gardner(
    int cells, std::span<const double> patch_fluxes) {
  if (cells < 2)
    throw InvalidInput("the validation column needs at least 2 cells");
  constexpr double kKs = 1e-6;     // [m/s]
  constexpr double kAlpha = 0.06;  // [1/m]
  constexpr double kHeight = 1.0;  // [m]
  GridSpec gs;
  gs.nx = gs.ny = 1;
  gs.nz = cells;
  gs.dz = kHeight / cells;
  const Grid grid = build_grid(gs);
  const PartitionMap map = partition_simple(grid, {1, 1, 1});
  const HaloTopology topo = halo_topology(grid, map);
  const SoilAtlas atlas{{SoilModel{Gardner{kKs, kAlpha, 1e-5}}},
                        std::vector<int>(std::size_t(cells), 0)};
  const double bound = gardner_flux_bound(kKs, kAlpha, kHeight);

  std::vector<GardnerPoint> out;
  for (const double qp : patch_fluxes) {
    GardnerPoint pt;
    pt.patch_flux = qp;
    pt.tolerance = qp == 0 ? 1e-6 : 5e-3;
    const double qf = -qp;  // formula convention: positive means downward
    // Admissible and fully unsaturated: the log argument stays positive up
    // the column (its minimum sits at an end; it is 1 at the water table)
    // and the head stays nonpositive, which for infiltration means qf <= Ks.
    bool valid = qf > bound && qf <= kKs;
    if (valid) {
      try {
        (void)gardner_analytic_h(kKs, kAlpha, qf, kHeight);
      } catch (const InvalidInput&) {
        valid = false;
      }
    }
    pt.valid = valid;
    if (!valid) {
      out.push_back(pt);
      continue;
    }

    std::vector<Patch> patches;
    patches.push_back({"water_table", 4, {0, 0}, {1, 1}, Dirichlet{0.0}});
    patches.push_back({"surface", 5, {0, 0}, {1, 1}, NeumannFlux{qp}});
    patches.push_back({"wall_x0", 0, {0, 0}, {1, cells}, NeumannFlux{0.0}});
    patches.push_back({"wall_x1", 1, {0, 0}, {1, cells}, NeumannFlux{0.0}});
    patches.push_back({"wall_y0", 2, {0, 0}, {1, cells}, NeumannFlux{0.0}});
    patches.push_back({"wall_y1", 3, {0, 0}, {1, cells}, NeumannFlux{0.0}});
    PicardConfig cfg;
    cfg.tol_picard = 1e-8;
    cfg.max_picard_iters = 12;
    cfg.pcg_tol = 1e-10;
    cfg.pcg_max_iter = 5000;
    TimeController ctrl;
    ctrl.dt_init = 1.0;
    ctrl.dt_max = 3600.0;

    run_spmd(1, [&](Comm& comm) {
      const PartTopology& part = topo.parts[0];
      std::vector<double> h0(static_cast<std::size_t>(cells));
      for (int k = 0; k < cells; ++k)
        h0[std::size_t(k)] = -grid.elevation(0, 0, k);  // hydrostatic start
      PartWork work;
      work.state = prepare_state(atlas, h0, part.n_halo);
      RunStats stats;
      run_transient(grid, part, atlas, patches, {}, cfg, ctrl, 43200.0, {},
                    comm, work, stats);
      for (int k = 0; k < cells; ++k) {
        const double z = (k + 0.5) * gs.dz;
        const double ref = gardner_analytic_h(kKs, kAlpha, qf, z);
        pt.max_err = std::max(
            pt.max_err, std::abs(work.state.h_iter[std::size_t(k)] - ref));
      }
    });
    out.push_back(pt);
  }
  return out;
}

}  // namespace vadose
