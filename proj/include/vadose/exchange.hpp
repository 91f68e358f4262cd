#pragma once

// In-process SPMD execution: a fixed group of workers (one per part) runs the
// same code and synchronizes only through the collectives declared here.
//
// Collectives follow a message-passing discipline even though workers share
// an address space: halo exchanges move owned values into neighbor halo
// slots through per-link mailboxes, and reductions combine per-part values in
// a fixed binary-tree order so every worker observes the identical result
// bit for bit, independent of thread scheduling.
//
// Every worker must issue the same sequence of collective calls. Mismatched
// calls are detected by operation tags; a worker that stops participating
// trips a deadline and poisons the group, so the others fail fast instead of
// hanging.

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vadose/error.hpp"
#include "vadose/grid.hpp"

namespace vadose {

enum class Reduce { Max, Sum };

class WorkerGroup;

class Comm {
 public:
  Comm(WorkerGroup* group, int part) : group_(group), part_(part) {}

  int part() const { return part_; }
  int parts() const;

  // Combines one value per part in fixed tree order; identical on all parts.
  double reduce(Reduce op, double local);

  // Fills the halo slots of `field` (laid out per `topo`: owned then halo)
  // with the current owned values of the neighboring parts.
  void exchange(std::span<double> field, const PartTopology& topo);

  // Deposits every part's owned values into a shared global buffer indexed
  // by global cell id. All workers must pass views of the same buffer; it is
  // safe to read on any worker after the call returns, until the next gather.
  void gather(std::span<const double> owned, const PartTopology& topo,
              std::span<double> global);

  long reduce_count() const { return reduces_; }
  long exchange_count() const { return exchanges_; }
  long gather_count() const { return gathers_; }

  // Collective: verifies every worker has issued the same number of
  // collectives so far. Throws SyncError on drift.
  void check_uniform_collectives();

 private:
  WorkerGroup* group_;
  int part_;
  std::uint64_t seq_ = 0;
  long reduces_ = 0, exchanges_ = 0, gathers_ = 0;
  std::vector<double> scratch_;
};

// Runs fn as an SPMD program over `parts` workers. parts == 1 executes
// inline on the calling thread. Worker exceptions poison the group and the
// first (lowest-part) non-sync exception is rethrown here. The timeout
// bounds how long any worker waits at one collective before declaring the
// group deadlocked.
void run_spmd(int parts, const std::function<void(Comm&)>& fn,
              double timeout_s = 120.0);

namespace detail {

// Reference combination order for tests: the exact tree reduce() performs.
double tree_combine(Reduce op, std::span<const double> slots);

}  // namespace detail

}  // namespace vadose
