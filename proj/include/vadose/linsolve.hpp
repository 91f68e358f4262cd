#pragma once

// Symmetric 7-point-stencil linear algebra for one part: matrix storage,
// diagonal incomplete Cholesky factorization, and a distributed
// preconditioned conjugate gradient. All cross-part coupling goes through
// Comm (halo exchange before matrix-vector products, reductions for dot
// products and the convergence norm); the preconditioner itself never
// crosses a part boundary (block-Jacobi across parts).

#include <array>
#include <span>
#include <vector>

#include "vadose/error.hpp"
#include "vadose/exchange.hpp"
#include "vadose/grid.hpp"

namespace vadose {

// One part's rows of a symmetric 7-point-stencil system A h = rhs.
// upper[a][l] couples owned cell l to its +axis-a neighbor (owned or halo);
// zero where that face is absent. lower_halo[a][l] couples l to its
// -axis-a neighbor only when that neighbor is a halo cell; part-interior
// faces are stored once, in upper of the lower-indexed cell, and symmetry
// supplies the transpose term. diag and rhs have one entry per owned cell.
// Invariants: diag > 0, off-diagonal couplings <= 0 (M-matrix).
struct StencilMatrix {
  std::array<std::vector<double>, 3> upper;
  std::array<std::vector<double>, 3> lower_halo;
  std::vector<double> diag;
  std::vector<double> rhs;

  // Zero-fills every array at n_own entries.
  void resize(int n_own);
};

// y = A x on owned cells; x must be halo-sized with current halo values.
void stencil_matvec(const StencilMatrix& A, const PartTopology& topo,
                    std::span<const double> x, std::span<double> y);

// Modified diagonal of the IC(0) factorization that keeps A's off-diagonal
// pattern untouched: dtilde(i) = diag(i) - sum over already-factored
// stencil neighbors j < i of coupling(i,j)^2 / dtilde(j), in local cell
// order (lexicographic within the part; minus-axis neighbors precede).
// Cross-part couplings are ignored. Throws FactorError when any
// dtilde(i) <= 0, which signals a non-SPD assembly.
std::vector<double> dic_factor(const StencilMatrix& A,
                               const PartTopology& topo);

// z = M^-1 r with M = (D + L) D^-1 (D + L^T), D = diag(dtilde), L = strict
// lower triangle of A restricted to this part: forward sweep, diagonal
// scale, backward sweep. r and z are owned-sized; z may alias r.
void dic_apply(const StencilMatrix& A, const PartTopology& topo,
               std::span<const double> dtilde, std::span<const double> r,
               std::span<double> z);

// Scratch buffers reused across solves to avoid per-call allocation.
struct PcgWorkspace {
  std::vector<double> dtilde;
  std::vector<double> r;
  std::vector<double> z;
  std::vector<double> q;
  std::vector<double> p;  // halo-sized: exchanged before each matvec
};

struct PcgResult {
  int iters = 0;
  double residual = 0.0;  // scaled max-norm max_i |r_i| / diag_i at exit
};

// Distributed preconditioned conjugate gradient on the part-partitioned
// system. x is halo-sized and holds the initial guess on entry, the
// solution on exit. Convergence: max over all cells of |r_i| / diag(i)
// <= tol, evaluated before each update, so an exact initial guess returns
// untouched with iters = 0. Every worker in the group must call this with
// the same tol and max_iter. Throws NoConvergence at max_iter (uniformly
// on all workers: the decision comes from a global reduction) and
// propagates FactorError from the factorization.
PcgResult pcg_solve(const StencilMatrix& A, std::span<double> x, double tol,
                    int max_iter, Comm& comm, const PartTopology& topo,
                    PcgWorkspace& ws);

}  // namespace vadose
