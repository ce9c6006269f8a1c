#include "scatlab/forward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "scatlab/kernels.hpp"
#include "scatlab/special.hpp"

namespace scatlab {

cplx GreensOperators::current_scale(int k) const { return kJ * freqs.omega(k) * kVacuum.eps0; }

GreensOperators build_greens(const ImagingGrid& grid, const SensorArray& sensors, const FrequencySet& freqs,
                             Execution exec) {
  sensors.validate(grid);
  GreensOperators g{grid, sensors, freqs, {}, {}};
  g.domain.reserve(std::size_t(freqs.size()));
  g.receiver.reserve(std::size_t(freqs.size()));
  for (int k = 0; k < freqs.size(); ++k) {
    g.domain.push_back(kernels::domain_operator(grid, freqs.omega(k), exec));
    g.receiver.push_back(kernels::receiver_operator(grid, sensors.rx, freqs.omega(k), exec));
  }
  return g;
}

std::uint64_t geometry_hash(const ImagingGrid& grid, const SensorArray& sensors, const FrequencySet& freqs) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    feed(buf);
  };
  feed("grid:");
  num(grid.nx());
  num(grid.ny());
  num(grid.extent_x());
  num(grid.extent_y());
  num(grid.center().x);
  num(grid.center().y);
  feed("tx:");
  for (const Point& p : sensors.tx) num(p.x), num(p.y);
  feed("rx:");
  for (const Point& p : sensors.rx) num(p.x), num(p.y);
  if (!sensors.shared()) {
    feed("listens:");
    for (const auto& list : sensors.listens)
      for (int q : list) num(q);
  }
  feed("f:");
  for (double f : freqs.values()) num(f);
  feed(kConventionTag);
  return h;
}

FieldSet incident_field(const SensorArray& sensors, const ImagingGrid& grid, const FrequencySet& freqs) {
  const int K = freqs.size();
  const int P = sensors.transmitters();
  FieldSet f;
  f.inc_domain = KPArray<CVec>(K, P);
  f.inc_rx = KPArray<CVec>(K, P);
  for (int k = 0; k < K; ++k) {
    const double k0 = freqs.wavenumber(k);
    for (int p = 0; p < P; ++p) {
      const Point src = sensors.tx[std::size_t(p)];
      CVec dom(grid.size());
      for (int i = 0; i < grid.size(); ++i) dom[i] = line_source_field(k0, distance(src, grid.cell_center(i)));
      const std::vector<int> listens = sensors.receivers_of(p);
      CVec rx(Eigen::Index(listens.size()));
      for (std::size_t q = 0; q < listens.size(); ++q) {
        const double rho = distance(src, sensors.rx[std::size_t(listens[q])]);
        // A receiver co-located with the source has no finite incident field.
        rx[Eigen::Index(q)] = rho > 0.0 ? line_source_field(k0, rho) : cplx(std::nan(""), std::nan(""));
      }
      f.inc_domain(k, p) = std::move(dom);
      f.inc_rx(k, p) = std::move(rx);
    }
  }
  return f;
}

namespace {

std::vector<int> active_cells(const ContrastMap& chi) {
  std::vector<int> idx;
  for (int i = 0; i < chi.size(); ++i)
    if (std::abs(chi[i]) > kActiveContrast) idx.push_back(i);
  return idx;
}

}  // namespace

CVec apply_state_operator(const CVec& current, const ContrastMap& chi, const GreensOperators& greens, int k) {
  if (current.size() != greens.cells() || chi.size() != greens.cells())
    throw DomainError("apply_state_operator: dimension mismatch");
  const cplx scale = greens.current_scale(k);
  for (int i = 0; i < chi.size(); ++i) {
    if (std::abs(chi[i]) <= kActiveContrast && current[i] != cplx(0.0)) {
      std::ostringstream os;
      os << "state operator: nonzero current on cell " << i << " where chi = 0";
      throw DomainError(os.str());
    }
  }
  const CVec radiated = greens.domain[std::size_t(k)] * current;
  CVec out = CVec::Zero(current.size());
  for (int i = 0; i < chi.size(); ++i)
    if (std::abs(chi[i]) > kActiveContrast) out[i] = current[i] / (scale * chi[i]) - radiated[i];
  return out;
}

std::vector<ForwardSolution> forward_solve_columns(const ContrastMap& chi, const CVec& lambda,
                                                   const GreensOperators& greens, int k, const CMat& inc_domain,
                                                   const SolverOptions& options) {
  const int n = greens.cells();
  const Eigen::Index cols = inc_domain.cols();
  if (chi.size() != n || inc_domain.rows() != n || lambda.size() != cols)
    throw DomainError("forward_solve: dimension mismatch");
  if (!chi.values().allFinite()) throw DomainError("forward_solve: contrast is not finite");

  std::vector<ForwardSolution> out{std::size_t(cols)};
  const std::vector<int> act = active_cells(chi);
  const Eigen::Index m = Eigen::Index(act.size());
  for (int i : act) {
    if (chi[i].real() < 0.0) {
      warn("forward_solve: contrast has eps_r < 1 on some cells; solving anyway");
      break;
    }
  }

  // Rows scaled by j omega eps0 chi: W - X G_D W = X lambda E_inc on the
  // active set, X = diag(j omega eps0 chi). Same solution as M[W] = lambda
  // E_inc, but bounded away from the 1/chi blow-up of weak cells.
  const cplx scale = greens.current_scale(k);
  const CMat& gd = greens.domain[std::size_t(k)];
  CVec x_diag(m);
  for (Eigen::Index r = 0; r < m; ++r) x_diag[r] = scale * chi[act[std::size_t(r)]];
  CMat a(m, m);
  for (Eigen::Index c = 0; c < m; ++c)
    for (Eigen::Index r = 0; r < m; ++r) a(r, c) = -x_diag[r] * gd(act[std::size_t(r)], act[std::size_t(c)]);
  a.diagonal().array() += 1.0;

  CMat b(m, cols);
  for (Eigen::Index r = 0; r < m; ++r) b.row(r) = x_diag[r] * inc_domain.row(act[std::size_t(r)]);
  b *= lambda.asDiagonal();
  RVec bnorm(cols);
  for (Eigen::Index c = 0; c < cols; ++c) bnorm[c] = b.col(c).norm();

  // CGNR per column, batched so the operator products are matrix-matrix.
  CMat x = CMat::Zero(m, cols);
  CMat r = b;
  CMat z = a.adjoint() * r;
  CMat dir = z;
  RVec zz = z.colwise().squaredNorm().transpose();
  std::vector<char> active(std::size_t(cols), 1);
  std::vector<int> iters(std::size_t(cols), 0);
  auto still_running = [&](Eigen::Index c) {
    return bnorm[c] > 0.0 && zz[c] > 0.0 && r.col(c).norm() > options.tolerance * bnorm[c] &&
           iters[std::size_t(c)] < options.max_iterations;
  };
  for (Eigen::Index c = 0; c < cols; ++c) active[std::size_t(c)] = still_running(c);
  while (std::any_of(active.begin(), active.end(), [](char v) { return v != 0; })) {
    const CMat w = a * dir;
    CVec alpha = CVec::Zero(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!active[std::size_t(c)]) continue;
      const double ww = w.col(c).squaredNorm();
      if (ww == 0.0) {
        active[std::size_t(c)] = 0;
        continue;
      }
      alpha[c] = zz[c] / ww;
    }
    x += dir * alpha.asDiagonal();
    r -= w * alpha.asDiagonal();
    z.noalias() = a.adjoint() * r;
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!active[std::size_t(c)]) continue;
      const double zz_new = z.col(c).squaredNorm();
      dir.col(c) = z.col(c) + (zz_new / zz[c]) * dir.col(c);
      zz[c] = zz_new;
      ++iters[std::size_t(c)];
      active[std::size_t(c)] = still_running(c);
    }
  }

  const CMat res = b - a * x;
  CMat current = CMat::Zero(n, cols);
  for (Eigen::Index i = 0; i < m; ++i) current.row(act[std::size_t(i)]) = x.row(i);
  const CMat scattered = greens.receiver[std::size_t(k)] * current;
  for (Eigen::Index c = 0; c < cols; ++c) {
    ForwardSolution& s = out[std::size_t(c)];
    s.current = current.col(c);
    s.scattered_rx = scattered.col(c);
    const double rel = bnorm[c] > 0.0 ? res.col(c).norm() / bnorm[c] : 0.0;
    s.report = {iters[std::size_t(c)], rel, rel <= options.tolerance};
  }
  return out;
}

ForwardSolution forward_solve(const ContrastMap& chi, cplx lambda, const GreensOperators& greens, int k,
                              const CVec& inc_domain, const SolverOptions& options) {
  if (inc_domain.size() != greens.cells()) throw DomainError("forward_solve: dimension mismatch");
  return std::move(forward_solve_columns(chi, CVec::Constant(1, lambda), greens, k, inc_domain, options).front());
}

CVec radiate(const CVec& current, const GreensOperators& greens, int k, RadiationTarget target) {
  const CMat& g = target == RadiationTarget::domain ? greens.domain[std::size_t(k)] : greens.receiver[std::size_t(k)];
  if (current.size() != g.cols()) throw DomainError("radiate: dimension mismatch");
  return g * current;
}

}  // namespace scatlab
