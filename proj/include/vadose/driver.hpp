#pragma once

// Case-driven front end: the human-editable case-file format and its
// renderer, flux-series tables, lognormal conductivity fields, the
// exponential-conductivity analytic oracle, snapshot/probe/log writers,
// and the SPMD orchestration behind the command-line tool.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vadose/assembly.hpp"
#include "vadose/grid.hpp"
#include "vadose/stepper.hpp"

namespace vadose {

// One soil assignment over a half-open cell-index box. Together the zones
// of a case cover every cell exactly once.
struct ZoneSpec {
  SoilModel model;
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};
  bool operator==(const ZoneSpec&) const = default;
};

enum class InitMode { Uniform, Hydrostatic, File };

// Per-cell lognormal saturated-conductivity draws: log10 Ks is normal with
// mean log10(geo_mean) and standard deviation sigma_log10, clamped to
// [clamp_min, clamp_max]. Cells are spatially uncorrelated. Applied as a
// multiplier draw/geo_mean on each cell's zone Ks.
struct RandomFieldSpec {
  bool enabled = false;
  double geo_mean = 1e-6;
  double sigma_log10 = 1.17;
  double clamp_min = 1e-10;
  double clamp_max = 1e-3;
  std::uint64_t seed = 0;
  bool operator==(const RandomFieldSpec&) const = default;
};

// Everything a run needs, as read from one case file. A SeriesFlux patch
// indexes series_files; the tables themselves, like the initial-head file,
// stay relative paths until materialize_case resolves them against the
// case file's directory.
struct CaseSpec {
  GridSpec grid;
  std::vector<ZoneSpec> zones;
  InitMode init_mode = InitMode::Uniform;
  double init_value = 0.0;  // Uniform: head; Hydrostatic: water-table elevation
  std::string init_file;
  std::vector<Patch> patches;
  std::vector<std::string> series_files;
  PicardConfig picard;
  TimeController time;
  double t_end = 0.0;
  double snapshot_interval = 0.0;  // <= 0: no snapshots
  double probe_interval = 0.0;     // <= 0: no probe rows
  std::string output_dir;          // empty: "<case stem>_out"
  std::vector<std::array<int, 3>> probes;
  RandomFieldSpec random_field;
  bool operator==(const CaseSpec&) const = default;
};

// Parses the line-oriented `section.key = value` format (see
// docs/case_format.md). Throws SpecError listing every violated
// constraint with its line number.
CaseSpec parse_case(const std::string& text);

// Canonical text form; parse_case(render_case(spec)) == spec for every
// valid spec.
std::string render_case(const CaseSpec& spec);

// Piecewise-constant boundary forcing: value i applies on
// [t_start[i], t_start[i+1]), the last record until coverage_end.
struct FluxSeries {
  std::vector<double> t_start;
  std::vector<double> flux;
  double coverage_end = 0.0;
};

// CSV with mandatory header `t_start_seconds,flux_m_per_s`, at least two
// records, strictly increasing t_start beginning at 0. The last record's
// coverage inherits the previous record spacing. Throws SpecError with
// line numbers.
FluxSeries parse_flux_series(const std::string& text);
FluxSeries load_flux_series(const std::filesystem::path& path);

// Value whose interval contains t (left-closed). Throws InvalidInput
// outside [0, coverage_end]: a run must never silently extrapolate.
double flux_at(const FluxSeries& series, double t);

// Synthetic daily forcing CSV: a wet-season square wave (rain, negative =
// into the soil) against dry-season evaporation, with seeded per-day
// noise. Deterministic per seed.
std::string render_daily_forcing(int days, std::uint64_t seed);

// Per-cell Ks draws in global lexicographic cell order. Uses a pinned
// Box-Muller transform over mt19937_64 output (exactly two engine draws
// per cell) so the field is identical for every partitioning and does not
// depend on library distribution internals.
std::vector<double> lognormal_ks_field(const Grid& grid, double geo_mean,
                                       double sigma_log10,
                                       std::pair<double, double> clamp,
                                       std::uint64_t seed);

// Steady head profile of the exponential-conductivity model over a column
// with a water table at z = 0 and flux density q (positive = downward
// infiltration in this formula's convention):
//   h(z) = ln[(q + (Ks - q) e^(-alpha z)) / Ks] / alpha.
// Throws InvalidInput when the log argument is not positive.
double gardner_analytic_h(double Ks, double alpha, double q, double z);

// Most negative admissible q for the profile above over a column of the
// given height: Ks e^(-alpha H) / (e^(-alpha H) - 1), always negative.
// alpha = 0 returns -infinity: every flux is admissible in that limit.
double gardner_flux_bound(double Ks, double alpha, double column_height);

struct SnapshotField {
  std::string name;
  std::span<const double> values;  // per global cell, lexicographic
};

// Legacy VTK ASCII STRUCTURED_POINTS cell-data snapshot, one SCALARS block
// per field in declaration order, 17 significant digits, one value per
// line. The title line carries the simulation time.
void write_snapshot(const Grid& grid, const std::vector<SnapshotField>& fields,
                    double t, const std::filesystem::path& path);

struct Snapshot {
  std::array<int, 3> cells{};
  std::array<double, 3> origin{};
  std::array<double, 3> spacing{};
  double t = 0.0;
  std::vector<std::pair<std::string, std::vector<double>>> fields;
};

Snapshot read_snapshot(const std::filesystem::path& path);

// Appends one probe row `t,theta(i_j_k)...,h(i_j_k)...`, writing the header
// first when the file does not exist yet. theta and h are per global cell
// in lexicographic order; for zones without a retention curve the theta
// column carries the ledger's storage content instead.
void write_probes(const std::filesystem::path& path,
                  const std::vector<std::array<int, 3>>& probes,
                  const Grid& grid, double t, std::span<const double> theta,
                  std::span<const double> h);

// Accepted-step log: `t,dt,picard_iters,pcg_iters_total,mass_error`.
void write_run_log(const RunStats& stats, const std::filesystem::path& path);

// A case resolved against its file location: grid built, zones painted,
// random field drawn, series and initial-head files loaded, patches with
// series indexes bound. case_path names the case file; it need not exist
// when the spec was built programmatically, but relative file references
// resolve against its parent directory.
struct CaseSetup {
  CaseSpec spec;
  Grid grid;
  std::vector<int> zone_of;     // per global cell
  std::vector<double> cell_ks;  // per global cell; empty without random field
  std::vector<double> init_h;   // per global cell; File mode only
  std::vector<FluxSeries> series;
  std::filesystem::path out_dir;
};

CaseSetup materialize_case(const CaseSpec& spec,
                           const std::filesystem::path& case_path);

// Per-part views used by the workers (and by bespoke harnesses that need
// custom observers).
SoilAtlas part_atlas(const CaseSetup& setup, const PartTopology& topo);
std::vector<double> part_initial_head(const CaseSetup& setup,
                                      const PartTopology& topo);

struct RunOptions {
  int parts = 1;
  bool write_outputs = true;
  double spmd_timeout_s = 600.0;
  // When set, receives the final head per global cell (resized here).
  std::vector<double>* final_head = nullptr;
};

// Runs the case over `parts` in-process workers; snapshot/probe/log files
// go under setup.out_dir, written by worker 0 only. Returns the run
// statistics (identical on every worker). On solver failure the partial
// run log is still written before the error propagates.
RunStats run_case(const CaseSetup& setup, const RunOptions& opt);

struct PartitionCheckRow {
  int parts = 0;
  bool sequence_match = false;  // t, dt, Picard counts identical to reference
  double max_head_diff = 0.0;   // sup-norm against the reference run
};

// Runs the case once per entry of parts_list (first entry = reference,
// outputs disabled) and compares accepted-step sequences and final heads.
std::vector<PartitionCheckRow> partition_check(const CaseSetup& setup,
                                               const std::vector<int>& parts_list);

struct ScalingRow {
  int parts = 0;
  std::int64_t cells = 0;
  double wall_s = 0.0;
  double speedup = 0.0;
  double efficiency = 0.0;
};

// Strong mode: the same case at every worker count, speedup relative to
// the first entry. Weak mode: the x extent scales with the worker count
// so cells per worker stay constant (requires zones and y/z patches to
// span the full x extent); speedup = reference wall time / wall time.
// Outputs are disabled in both modes; timings cover solve plus partition
// setup.
std::vector<ScalingRow> scaling_study(const CaseSpec& spec,
                                      const std::filesystem::path& case_path,
                                      const std::vector<int>& parts_list,
                                      bool weak);

std::string render_scaling_csv(const std::vector<ScalingRow>& rows);

struct GardnerPoint {
  double patch_flux = 0.0;  // positive = outward (evaporation)
  bool valid = false;       // profile exists and stays nonpositive (h <= 0)
  double max_err = 0.0;     // sup over cells |h_num - h_analytic| [m]
  double tolerance = 0.0;   // acceptance threshold for this flux
};

// Steady-state validation against the analytic profile: a 1 m column of
// `cells` cells, water table at the bottom, each patch flux imposed on
// top, marched to steady state with the tolerances this validation
// prescribes (linear 1e-10 m, nonlinear 1e-8 m). Fluxes failing the
// validity check are reported with valid = false and not judged.
std::vector<GardnerPoint> validate_gardner(int cells,
                                           std::span<const double> patch_fluxes);

}  // namespace vadose
