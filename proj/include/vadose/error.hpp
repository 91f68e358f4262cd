#pragma once

#include <stdexcept>
#include <string>

namespace vadose {

// Base class for all solver errors. what() carries an actionable message.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain scalar arguments, invalid model parameters.
struct InvalidInput : Error {
  using Error::Error;
};

// Structural problems in a case description: zone gaps or overlaps,
// uncovered exterior faces, malformed files, bad partition cuts.
struct SpecError : Error {
  using Error::Error;
};

// Incomplete-Cholesky pivot loss (modified diagonal became non-positive).
struct FactorError : Error {
  using Error::Error;
};

// Collective misuse: mismatched collective calls across workers, or a
// worker that stopped participating (detected by timeout).
struct SyncError : Error {
  using Error::Error;
};

// Linear solve hit its iteration cap; carries the last scaled residual so
// the caller can log it before shrinking the time step.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Non-finite field values produced during iteration.
struct BlowupError : Error {
  using Error::Error;
};

// The time step failed at the configured floor and cannot shrink further.
struct StepFloorError : Error {
  using Error::Error;
};

}  // namespace vadose
