#include "scatlab/kernels.hpp"

#include <cmath>
#include <exception>
#include <numbers>

#include "scatlab/special.hpp"

namespace scatlab::kernels {

namespace {

cplx self_term(double k0, double omega, double h) {
  const double a = h / std::sqrt(std::numbers::pi);
  return kJ * omega * kVacuum.mu0 * disk_self_integral(k0, a);
}

}  // namespace

CMat domain_operator(const ImagingGrid& grid, double omega, Execution exec) {
  const int n = grid.size();
  const double k0 = omega * std::sqrt(kVacuum.mu0 * kVacuum.eps0);
  const double h = grid.cell_size();
  const cplx pref = kJ * omega * kVacuum.mu0 * grid.cell_area();
  const cplx diag = self_term(k0, omega, h);
  CMat g(n, n);

  if (exec == Execution::serial) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        g(i, j) = i == j ? diag
                         : pref * radiation_kernel(k0, distance(grid.cell_center(i), grid.cell_center(j)));
      }
    }
    return g;
  }

  const int nx = grid.nx();
  const int ny = grid.ny();
  std::vector<cplx> table(std::size_t(nx) * ny);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < nx * ny; ++t) {
    const int dx = t % nx;
    const int dy = t / nx;
    table[std::size_t(t)] =
        t == 0 ? diag : pref * radiation_kernel(k0, h * std::hypot(double(dx), double(dy)));
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const int jx = j % nx;
    const int jy = j / nx;
    for (int i = 0; i < n; ++i) {
      const int dx = std::abs(i % nx - jx);
      const int dy = std::abs(i / nx - jy);
      g(i, j) = table[std::size_t(dy) * nx + dx];
    }
  }
  return g;
}

CMat receiver_operator(const ImagingGrid& grid, const std::vector<Point>& rx, double omega,
                       Execution exec) {
  const int n = grid.size();
  const int q = int(rx.size());
  const double k0 = omega * std::sqrt(kVacuum.mu0 * kVacuum.eps0);
  const cplx pref = kJ * omega * kVacuum.mu0 * grid.cell_area();
  CMat g(q, n);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (int j = 0; j < n; ++j)
    for (int r = 0; r < q; ++r)
      g(r, j) = pref * radiation_kernel(k0, distance(rx[std::size_t(r)], grid.cell_center(j)));
  return g;
}

KPArray<ForwardSolution> solve_all(const ContrastMap& chi, const KPArray<cplx>& lambda,
                                   const GreensOperators& greens, const KPArray<CVec>& inc_domain,
                                   const SolverOptions& options, Execution exec) {
  const int K = greens.frequencies();
  const int P = greens.transmitters();
  KPArray<ForwardSolution> out(K, P);
  if (exec == Execution::serial) {
    for (int k = 0; k < K; ++k)
      for (int p = 0; p < P; ++p) out(k, p) = forward_solve(chi, lambda(k, p), greens, k, inc_domain(k, p), options);
    return out;
  }
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < K; ++k) {
    try {
      CMat inc(greens.cells(), P);
      CVec lam(P);
      for (int p = 0; p < P; ++p) {
        inc.col(p) = inc_domain(k, p);
        lam[p] = lambda(k, p);
      }
      auto sols = forward_solve_columns(chi, lam, greens, k, inc, options);
      for (int p = 0; p < P; ++p) out(k, p) = std::move(sols[std::size_t(p)]);
    } catch (...) {
#pragma omp critical(scatlab_solve_all_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace scatlab::kernels
