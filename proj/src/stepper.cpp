#include "vadose/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vadose/soil.hpp"

namespace vadose {

void PicardConfig::validate() const {
  if (!(tol_picard > 0.0) || !(pcg_tol > 0.0)) {
    throw InvalidInput("nonlinear and linear tolerances must be positive");
  }
  if (!(tol_picard > pcg_tol)) {
    throw InvalidInput(
        "nonlinear tolerance must exceed the linear tolerance, got " +
        std::to_string(tol_picard) + " vs " + std::to_string(pcg_tol));
  }
  if (max_picard_iters < 1 || pcg_max_iter < 1) {
    throw InvalidInput("iteration caps must be at least 1");
  }
}

void TimeController::validate() const {
  if (!(dt_min > 0.0) || !(dt_init >= dt_min) || !(dt_max >= dt_init)) {
    throw InvalidInput("time-step bounds must satisfy 0 < dt_min <= dt_init <= dt_max");
  }
  if (!(grow_factor > 1.0)) {
    throw InvalidInput("step scaling factor must exceed 1");
  }
  if (quick_iters_threshold < 1 || streak_needed < 1) {
    throw InvalidInput("streak parameters must be at least 1");
  }
}

bool TimeController::advance(bool success, int picard_iters,
                             double attempted_dt) {
  if (!success) {
    if (attempted_dt <= dt_min) {
      throw StepFloorError("step failed at the minimum size " +
                           std::to_string(attempted_dt) + " s");
    }
    dt = std::max(attempted_dt / grow_factor, dt_min);
    good_streak = 0;
    return false;
  }
  if (picard_iters <= quick_iters_threshold) {
    if (++good_streak >= streak_needed) {
      dt = std::min(dt * grow_factor, dt_max);
      good_streak = 0;
    }
  } else {
    good_streak = 0;
  }
  return true;
}

FieldState prepare_state(const SoilAtlas& soils, std::span<const double> h0,
                         int n_halo) {
  const std::size_t n = h0.size();
  FieldState st;
  st.h_old.assign(h0.begin(), h0.end());
  st.theta_old.resize(n);
  st.h_iter.assign(n + std::size_t(n_halo), 0.0);
  st.k_iter.assign(n + std::size_t(n_halo), 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    const SoilModel& soil = soils.of(int(l));
    st.theta_old[l] = storage_content(soil, h0[l]);
    st.h_iter[l] = h0[l];
    st.k_iter[l] = hydraulic_conductivity(soil, h0[l]);
  }
  return st;
}

PicardOutcome picard_step(const Grid& grid, const PartTopology& topo,
                          const SoilAtlas& soils,
                          const std::vector<Patch>& patches,
                          std::span<const double> series_flux, double dt,
                          const PicardConfig& cfg, Comm& comm, PartWork& w) {
  const int n = topo.n_own;
  FieldState& st = w.state;
  std::copy(st.h_old.begin(), st.h_old.end(), st.h_iter.begin());
  for (int l = 0; l < n; ++l) {
    st.k_iter[l] = hydraulic_conductivity(soils.of(l), st.h_iter[l]);
  }

  PicardOutcome out;
  for (int it = 1; it <= cfg.max_picard_iters; ++it) {
    out.iters = it;
    comm.exchange(st.h_iter, topo);
    comm.exchange(st.k_iter, topo);
    assemble(grid, topo, soils, st, patches, series_flux, dt, w.A);
    w.h_next.assign(st.h_iter.begin(), st.h_iter.end());
    try {
      const PcgResult res = pcg_solve(w.A, w.h_next, cfg.pcg_tol,
                                      cfg.pcg_max_iter, comm, topo, w.ws);
      out.pcg_iters += res.iters;
    } catch (const NoConvergence&) {
      // Thrown on every worker alike (the verdict comes from a global
      // reduction); the controller shrinks dt and reruns.
      out.pcg_iters += cfg.pcg_max_iter;
      return out;
    }
    // Head change, NaN mapped to +infinity so max() cannot mask it and the
    // reduced value gives every worker the same verdict.
    double local = 0.0;
    for (int l = 0; l < n; ++l) {
      const double d = std::abs(w.h_next[l] - st.h_iter[l]);
      if (std::isnan(d)) {
        local = std::numeric_limits<double>::infinity();
        break;
      }
      local = std::max(local, d);
    }
    const double delta = comm.reduce(Reduce::Max, local);
    if (!std::isfinite(delta)) {
      throw BlowupError("non-finite head change in nonlinear iteration");
    }
    std::copy(w.h_next.begin(), w.h_next.begin() + n, st.h_iter.begin());
    if (delta <= cfg.tol_picard) {
      // Fresh halos for flux evaluation; k_iter keeps the conductivities
      // of the final assembly so the ledger closes against the residual.
      comm.exchange(st.h_iter, topo);
      out.converged = true;
      return out;
    }
    for (int l = 0; l < n; ++l) {
      st.k_iter[l] = hydraulic_conductivity(soils.of(l), st.h_iter[l]);
    }
  }
  return out;
}

namespace {

double global_storage(const Grid& grid, const PartTopology& topo,
                      const SoilAtlas& soils, const double* h, Comm& comm) {
  double local = 0.0;
  for (int l = 0; l < topo.n_own; ++l) {
    local += storage_content(soils.of(l), h[l]) * grid.cell_volume();
  }
  return comm.reduce(Reduce::Sum, local);
}

}  // namespace

void run_transient(const Grid& grid, const PartTopology& topo,
                   const SoilAtlas& soils, const std::vector<Patch>& patches,
                   const SeriesEval& series_at, const PicardConfig& cfg,
                   TimeController ctrl, double t_end,
                   const std::vector<TimedObserver>& observers, Comm& comm,
                   PartWork& w, RunStats& stats) {
  cfg.validate();
  ctrl.validate();
  if (!(t_end > 0.0)) {
    throw InvalidInput("end time must be positive");
  }
  ctrl.dt = ctrl.dt_init;
  ctrl.good_streak = 0;

  FieldState& st = w.state;
  MassLedger& ledger = stats.ledger;
  ledger.storage = global_storage(grid, topo, soils, st.h_old.data(), comm);
  ledger.initial_storage = ledger.storage;
  ledger.cumulative_boundary.assign(patches.size(), 0.0);
  ledger.last_boundary_rate.assign(patches.size(), 0.0);
  ledger.cumulative_error = 0.0;

  const double never = std::numeric_limits<double>::infinity();
  std::vector<double> next_due(observers.size(), never);
  std::vector<double> last_fired(observers.size(), 0.0);
  for (std::size_t i = 0; i < observers.size(); ++i) {
    if (observers[i].interval > 0.0) next_due[i] = observers[i].interval;
    if (observers[i].fn) observers[i].fn(0.0, st, ledger);
  }

  double t = 0.0;
  while (t < t_end) {
    double next_stop = t_end;
    for (double due : next_due) next_stop = std::min(next_stop, due);
    // Whenever the next output boundary is within reach the attempt is
    // clipped to land on it exactly; t is then set to the boundary rather
    // than accumulated, so boundaries and t_end are hit bit-exactly.
    const bool clipped = (next_stop - t) <= ctrl.dt;
    const double attempt = clipped ? (next_stop - t) : ctrl.dt;
    const std::vector<double> series =
        series_at ? series_at(t + attempt) : std::vector<double>{};
    const PicardOutcome out = picard_step(grid, topo, soils, patches, series,
                                          attempt, cfg, comm, w);
    stats.total_picard_iters += out.iters;
    stats.total_pcg_iters += out.pcg_iters;
    if (!ctrl.advance(out.converged, out.iters, attempt)) {
      ++stats.rejected_steps;
      continue;
    }

    const FluxReport rep =
        darcy_flux(grid, topo, soils, st, patches, series);
    double outward_total = 0.0;
    for (std::size_t p = 0; p < patches.size(); ++p) {
      const double rate = comm.reduce(Reduce::Sum, rep.patch_outward[p]);
      ledger.last_boundary_rate[p] = rate;
      ledger.cumulative_boundary[p] += rate * attempt;
      outward_total += ledger.cumulative_boundary[p];
    }
    ledger.storage = global_storage(grid, topo, soils, st.h_iter.data(), comm);
    ledger.cumulative_error =
        std::abs(ledger.storage - ledger.initial_storage + outward_total);

    for (int l = 0; l < topo.n_own; ++l) {
      st.h_old[l] = st.h_iter[l];
      st.theta_old[l] = storage_content(soils.of(l), st.h_iter[l]);
    }
    t = clipped ? next_stop : t + attempt;
    stats.log.push_back({t, attempt, out.iters, out.pcg_iters,
                         ledger.cumulative_error});

    for (std::size_t i = 0; i < observers.size(); ++i) {
      if (next_due[i] <= t) {
        if (observers[i].fn) observers[i].fn(t, st, ledger);
        last_fired[i] = t;
        next_due[i] += observers[i].interval;
      }
    }
  }
  for (std::size_t i = 0; i < observers.size(); ++i) {
    if (last_fired[i] != t_end && observers[i].fn) {
      observers[i].fn(t_end, st, ledger);
    }
  }
}

}  // namespace vadose
