#pragma once

// Nonlinear transient driver: Picard linearization with a globally reduced
// exit criterion, stabilized adaptive time stepping, failed-step rerun at
// the same target time, and a global mass ledger. Every decision that
// steers control flow (convergence, acceptance, abort) derives from a
// global reduction, so all workers take identical branches and collective
// calls stay matched.

#include <functional>
#include <span>
#include <vector>

#include "vadose/assembly.hpp"
#include "vadose/error.hpp"
#include "vadose/exchange.hpp"
#include "vadose/grid.hpp"
#include "vadose/linsolve.hpp"

namespace vadose {

struct PicardConfig {
  double tol_picard = 1e-3;  // head-change tolerance [m]
  int max_picard_iters = 8;
  double pcg_tol = 1e-4;  // linear tolerance [m]; must stay below tol_picard
  int pcg_max_iter = 5000;
  void validate() const;
  bool operator==(const PicardConfig&) const = default;
};

// Adaptive time-step state: after `streak_needed` consecutive accepted
// steps that each converged within `quick_iters_threshold` Picard
// iterations, dt grows by grow_factor (clamped to dt_max); any failure
// shrinks the attempted dt by grow_factor (clamped to dt_min) and the same
// target is rerun. The streak resets on every slow step, failure, or dt
// change.
struct TimeController {
  double dt = 0.0;
  double dt_init = 0.0;
  double dt_max = 0.0;
  double dt_min = 1e-3;
  double grow_factor = 1.3;
  int quick_iters_threshold = 3;
  int streak_needed = 10;
  int good_streak = 0;

  void validate() const;
  // Digests one attempt at `attempted_dt` (<= dt when the step was clipped
  // to land on an output boundary or t_end). Returns whether the step was
  // accepted, mutating dt and good_streak. Throws StepFloorError when a
  // failed attempt cannot shrink any further.
  bool advance(bool success, int picard_iters, double attempted_dt);

  bool operator==(const TimeController&) const = default;
};

// Global water bookkeeping, identical on every worker. storage is the
// domain total of storage_content times cell volume; cumulative_boundary
// holds per-patch outward volume; cumulative_error is the conservation
// identity defect |storage - initial_storage + total outward volume|.
struct MassLedger {
  double storage = 0.0;
  double initial_storage = 0.0;
  std::vector<double> cumulative_boundary;
  std::vector<double> last_boundary_rate;  // [m^3/s], last accepted step
  double cumulative_error = 0.0;
};

// Per-part working storage reused across iterations and steps.
struct PartWork {
  FieldState state;
  StencilMatrix A;
  PcgWorkspace ws;
  std::vector<double> h_next;
};

// Builds a FieldState from the owned initial head: h_iter = h_old = h0,
// theta_old = storage_content(h0), k_iter = K(h0); halo slots allocated
// and zeroed (a halo exchange precedes any use).
FieldState prepare_state(const SoilAtlas& soils, std::span<const double> h0,
                         int n_halo);

struct PicardOutcome {
  bool converged = false;
  int iters = 0;       // Picard iterations performed
  long pcg_iters = 0;  // linear iterations spent, including a capped solve
};

// One attempt at advancing the fields by dt. Starts from h_iter = h_old;
// each iteration exchanges h_iter and k_iter halos, assembles, solves, and
// measures the global head change delta = max over all cells of
// |h_next - h_iter|. Returns success once delta <= tol_picard; returns
// failure (caller shrinks dt and reruns) after max_picard_iters or when
// the linear solver hits its cap. On success, state.h_iter holds h_new
// with fresh halos and state.k_iter the conductivities of the final
// assembly, exactly what darcy_flux needs for a closing ledger. Throws
// BlowupError when non-finite heads appear (uniformly on all workers).
PicardOutcome picard_step(const Grid& grid, const PartTopology& topo,
                          const SoilAtlas& soils,
                          const std::vector<Patch>& patches,
                          std::span<const double> series_flux, double dt,
                          const PicardConfig& cfg, Comm& comm, PartWork& w);

// Evaluates every referenced flux series at a target time; returns one
// value per series index. Called once per step attempt so rejected reruns
// of the same target see identical boundary data.
using SeriesEval = std::function<std::vector<double>(double t)>;

// Fires when an accepted step lands on a multiple of `interval` (steps are
// clipped to land exactly) and at t = 0 and t = t_end. The state carries
// current heads (h_iter, halos fresh) and theta_old equal to the current
// water content.
struct TimedObserver {
  double interval = 0.0;  // <= 0: fire only at t = 0 and t_end
  std::function<void(double t, const FieldState& state,
                     const MassLedger& ledger)>
      fn;
};

struct StepRecord {
  double t = 0.0;   // end-of-step time [s]
  double dt = 0.0;  // accepted step size [s]
  int picard_iters = 0;
  long pcg_iters = 0;  // linear iterations of the accepted attempt
  double mass_error = 0.0;
};

struct RunStats {
  std::vector<StepRecord> log;  // accepted steps only
  long total_pcg_iters = 0;     // includes rejected attempts
  long total_picard_iters = 0;  // includes rejected attempts
  int rejected_steps = 0;
  MassLedger ledger;
};

// Marches state from t = 0 to exactly t_end (the last step is clipped),
// filling stats in place so the log survives a propagated failure.
// ctrl is taken by value; dt starts at dt_init. state must come from
// prepare_state. All workers call this collectively and return identical
// stats.
void run_transient(const Grid& grid, const PartTopology& topo,
                   const SoilAtlas& soils, const std::vector<Patch>& patches,
                   const SeriesEval& series_at, const PicardConfig& cfg,
                   TimeController ctrl, double t_end,
                   const std::vector<TimedObserver>& observers, Comm& comm,
                   PartWork& w, RunStats& stats);

}  // namespace vadose
