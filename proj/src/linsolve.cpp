#include "vadose/linsolve.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace vadose {

void StencilMatrix::resize(int n_own) {
  const auto n = std::size_t(n_own);
  for (int a = 0; a < 3; ++a) {
    upper[a].assign(n, 0.0);
    lower_halo[a].assign(n, 0.0);
  }
  diag.assign(n, 0.0);
  rhs.assign(n, 0.0);
}

void stencil_matvec(const StencilMatrix& A, const PartTopology& topo,
                    std::span<const double> x, std::span<double> y) {
  const int n = topo.n_own;
  for (int l = 0; l < n; ++l) {
    double acc = A.diag[l] * x[l];
    for (int a = 0; a < 3; ++a) {
      const int p = topo.nbr[2 * a + 1][l];
      if (p >= 0) acc += A.upper[a][l] * x[p];
      const int m = topo.nbr[2 * a][l];
      if (m >= 0)
        acc += (m < n ? A.upper[a][m] : A.lower_halo[a][l]) * x[m];
    }
    y[l] = acc;
  }
}

std::vector<double> dic_factor(const StencilMatrix& A,
                               const PartTopology& topo) {
  const int n = topo.n_own;
  std::vector<double> dtilde(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double d = A.diag[i];
    for (int a = 0; a < 3; ++a) {
      const int m = topo.nbr[2 * a][i];
      if (m >= 0 && m < n) {
        const double c = A.upper[a][m];
        d -= c * c / dtilde[m];
      }
    }
    if (!(d > 0.0))
      throw FactorError("incomplete factorization lost positivity at cell " +
                        std::to_string(i) + ": modified diagonal " +
                        std::to_string(d));
    dtilde[i] = d;
  }
  return dtilde;
}

void dic_apply(const StencilMatrix& A, const PartTopology& topo,
               std::span<const double> dtilde, std::span<const double> r,
               std::span<double> z) {
  const int n = topo.n_own;
  for (int i = 0; i < n; ++i) {
    double s = r[i];
    for (int a = 0; a < 3; ++a) {
      const int m = topo.nbr[2 * a][i];
      if (m >= 0 && m < n) s -= A.upper[a][m] * z[m];
    }
    z[i] = s / dtilde[i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = dtilde[i] * z[i];
    for (int a = 0; a < 3; ++a) {
      const int p = topo.nbr[2 * a + 1][i];
      if (p >= 0 && p < n) s -= A.upper[a][i] * z[p];
    }
    z[i] = s / dtilde[i];
  }
}

namespace {

double dot_owned(std::span<const double> a, std::span<const double> b,
                 int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// NaN entries map to +infinity so a blown-up residual is never masked by
// max() ordering and every worker sees the same verdict after reduction.
double scaled_max_residual(const StencilMatrix& A,
                           std::span<const double> r, int n) {
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = std::abs(r[i]) / A.diag[i];
    if (std::isnan(t)) return std::numeric_limits<double>::infinity();
    if (t > m) m = t;
  }
  return m;
}

}  // namespace

PcgResult pcg_solve(const StencilMatrix& A, std::span<double> x, double tol,
                    int max_iter, Comm& comm, const PartTopology& topo,
                    PcgWorkspace& ws) {
  if (!(tol > 0.0)) throw InvalidInput("linear tolerance must be positive");
  if (max_iter < 1) throw InvalidInput("iteration cap must be at least 1");
  const int n = topo.n_own;
  const auto total = std::size_t(n + topo.n_halo);
  ws.r.resize(std::size_t(n));
  ws.z.resize(std::size_t(n));
  ws.q.resize(std::size_t(n));
  ws.p.assign(total, 0.0);
  ws.dtilde = dic_factor(A, topo);

  comm.exchange(x, topo);
  stencil_matvec(A, topo, x, ws.q);
  for (int i = 0; i < n; ++i) ws.r[i] = A.rhs[i] - ws.q[i];
  dic_apply(A, topo, ws.dtilde, ws.r, ws.z);
  for (int i = 0; i < n; ++i) ws.p[i] = ws.z[i];
  double rho = comm.reduce(Reduce::Sum, dot_owned(ws.r, ws.z, n));

  for (int it = 0;; ++it) {
    const double res =
        comm.reduce(Reduce::Max, scaled_max_residual(A, ws.r, n));
    if (res <= tol) return {it, res};
    if (it >= max_iter || !std::isfinite(res))
      throw NoConvergence("linear solver stalled after " +
                              std::to_string(it) +
                              " iterations at scaled residual " +
                              std::to_string(res),
                          res);
    comm.exchange(ws.p, topo);
    stencil_matvec(A, topo, ws.p, ws.q);
    const double pq = comm.reduce(Reduce::Sum, dot_owned(ws.p, ws.q, n));
    const double alpha = rho / pq;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * ws.p[i];
      ws.r[i] -= alpha * ws.q[i];
    }
    dic_apply(A, topo, ws.dtilde, ws.r, ws.z);
    const double rho_next =
        comm.reduce(Reduce::Sum, dot_owned(ws.r, ws.z, n));
    const double beta = rho_next / rho;
    rho = rho_next;
    for (int i = 0; i < n; ++i) ws.p[i] = ws.z[i] + beta * ws.p[i];
  }
}

}  // namespace vadose
