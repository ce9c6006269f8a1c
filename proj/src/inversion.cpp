#include "scatlab/inversion.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "scatlab/kernels.hpp"
#include "scatlab/surrogate.hpp"

namespace scatlab {

void InversionConfig::validate() const {
  if (!(termination_tol > 0.0)) throw ConfigError("termination tolerance T must be positive");
  if (!(beta >= 0.0)) throw ConfigError("beta must be nonnegative");
  if (max_outer_iters < 1) throw ConfigError("max_outer_iters must be at least 1");
  if (w_iterations < 0 || chi_iterations < 0 || calibration_passes < 0)
    throw ConfigError("iteration counts must be nonnegative");
  if (!(divergence_factor > 1.0)) throw ConfigError("divergence factor must exceed 1");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::running: return "running";
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max_iterations";
    case Termination::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

CMat to_columns(const KPArray<CVec>& table, int k, Eigen::Index rows) {
  const int P = table.transmitters();
  CMat m(rows, P);
  for (int p = 0; p < P; ++p) {
    if (table(k, p).size() != rows) throw DataError("field vector length does not match geometry");
    m.col(p) = table(k, p);
  }
  return m;
}

CVec lambdas_at(const CalibrationState& c, int k, int P) {
  CVec l(P);
  for (int p = 0; p < P; ++p) l[p] = c.lambda(k, p);
  return l;
}

// W - chi (lambda E_inc + E_d), column-wise.
CMat state_residual(const InversionState& s, const InversionProblem& prob, int k) {
  const CVec lam = lambdas_at(s.calibration, k, prob.transmitters());
  CMat total = prob.inc_domain(k) * lam.asDiagonal();
  total += s.domain_field[std::size_t(k)];
  return s.current[std::size_t(k)] - s.chi.values().asDiagonal() * total;
}

}  // namespace

InversionProblem::InversionProblem(const GreensOperators& greens, const KPArray<CVec>& inc_domain,
                                   const KPArray<CVec>& measured, const CutoffRule& cutoff, Execution exec)
    : greens_(&greens) {
  const int K = greens.frequencies();
  const int P = greens.transmitters();
  if (inc_domain.frequencies() != K || inc_domain.transmitters() != P || measured.frequencies() != K ||
      measured.transmitters() != P)
    throw DataError("field tables do not match the (frequency, transmitter) layout of the geometry");
  subspace_ = decompose(greens, cutoff, exec);
  meas_norm2_ = KPArray<double>(K, P);
  wplus_norm2_ = KPArray<double>(K, P);
  for (int k = 0; k < K; ++k) {
    inc_.push_back(to_columns(inc_domain, k, greens.cells()));
    meas_.push_back(to_columns(measured, k, greens.receivers()));
    CMat wp(greens.cells(), P);
    const cplx scale = greens.current_scale(k);
    for (int p = 0; p < P; ++p) {
      const double e2 = meas_.back().col(p).squaredNorm();
      if (!(e2 > 0.0) || !std::isfinite(e2)) {
        std::ostringstream os;
        os << "measured field for (k=" << k << ", p=" << p << ") has zero or non-finite norm";
        throw DataError(os.str());
      }
      meas_norm2_(k, p) = e2;
      // Physical dominant current converted to contrast-source units.
      wp.col(p) = scatlab::dominant_current(subspace_.at(k, p), meas_.back().col(p)) / scale;
      wplus_norm2_(k, p) = wp.col(p).squaredNorm();
      if (!(wplus_norm2_(k, p) > 0.0)) throw DataError("dominant current vanishes for a nonzero data vector");
    }
    wplus_.push_back(std::move(wp));
  }
}

CMat InversionProblem::domain_apply(int k, const CMat& w) const {
  CMat out = greens_->domain[std::size_t(k)] * w;
  out *= greens_->current_scale(k);
  return out;
}

CMat InversionProblem::domain_adjoint(int k, const CMat& v) const {
  CMat out = greens_->domain[std::size_t(k)].adjoint() * v;
  out *= std::conj(greens_->current_scale(k));
  return out;
}

CMat InversionProblem::receiver_apply(int k, const CMat& w) const {
  const SensorArray& sensors = greens_->sensors;
  CMat all = greens_->receiver[std::size_t(k)] * w;
  all *= greens_->current_scale(k);
  if (sensors.shared()) return all;
  CMat out(receivers(), w.cols());
  for (Eigen::Index p = 0; p < w.cols(); ++p) out.col(p) = sensors.recorded(int(p), all.col(p));
  return out;
}

CMat InversionProblem::receiver_adjoint(int k, const CMat& v) const {
  const SensorArray& sensors = greens_->sensors;
  CMat spread;
  if (sensors.shared()) {
    spread = v;
  } else {
    spread = CMat::Zero(sensors.positions(), v.cols());
    for (Eigen::Index p = 0; p < v.cols(); ++p) {
      const std::vector<int>& rows = sensors.listens[std::size_t(p)];
      for (std::size_t i = 0; i < rows.size(); ++i) spread(rows[i], p) = v(Eigen::Index(i), p);
    }
  }
  CMat out = greens_->receiver[std::size_t(k)].adjoint() * spread;
  out *= std::conj(greens_->current_scale(k));
  return out;
}

CostBreakdown cost(const InversionState& s, const InversionProblem& prob, double beta) {
  CostBreakdown c;
  const int K = prob.frequencies();
  const int P = prob.transmitters();
  for (int k = 0; k < K; ++k) {
    const CMat r1 = prob.measured(k) - s.receiver_field[std::size_t(k)];
    const CMat r2 = state_residual(s, prob, k);
    for (int p = 0; p < P; ++p) {
      const double ne = prob.measured_norm2(k, p);
      const cplx lam = s.calibration.lambda(k, p);
      c.data += 0.5 * r1.col(p).squaredNorm() / ne;
      c.state += 0.5 * r2.col(p).squaredNorm() / prob.dominant_norm2(k, p);
      c.calib += 0.5 * (lam * s.simulated[std::size_t(k)].col(p) - prob.measured(k).col(p)).squaredNorm() / ne;
      c.reg += 0.5 * beta * std::norm(lam);
    }
  }
  c.total = c.data + c.state + c.calib + c.reg;
  return c;
}

double update_W(InversionState& s, const InversionProblem& prob, const InversionConfig& config) {
  const int K = prob.frequencies();
  const int P = prob.transmitters();
  const CVec& chi = s.chi.values();
  const CVec chi_conj = chi.conjugate();
  std::vector<double> final_norm(std::size_t(K), 0.0);

#pragma omp parallel for schedule(dynamic) if (config.execution == Execution::parallel)
  for (int k = 0; k < K; ++k) {
    CMat& W = s.current[std::size_t(k)];
    CMat& gd = s.domain_field[std::size_t(k)];
    CMat& gs = s.receiver_field[std::size_t(k)];
    RVec inv_ne(P), inv_np(P);
    for (int p = 0; p < P; ++p) {
      inv_ne[p] = 1.0 / prob.measured_norm2(k, p);
      inv_np[p] = 1.0 / prob.dominant_norm2(k, p);
    }
    // (I - X G_D)^H applied column-wise, X = diag(chi).
    auto state_adjoint = [&](const CMat& v) -> CMat {
      return v - prob.domain_adjoint(k, chi_conj.asDiagonal() * v);
    };

    // Gradient (2 dJ/d conj W) of the data and state terms.
    CMat g = -prob.receiver_adjoint(k, prob.measured(k) - gs) * inv_ne.asDiagonal();
    g += state_adjoint(state_residual(s, prob, k)) * inv_np.asDiagonal();

    CMat d = CMat::Zero(W.rows(), P);
    CMat g_prev = g;
    for (int it = 0; it < config.w_iterations; ++it) {
      for (int p = 0; p < P; ++p) {
        const double gp2 = g_prev.col(p).squaredNorm();
        double pr = 0.0;
        if (it > 0 && gp2 > 0.0) pr = std::max(0.0, g.col(p).dot(g.col(p) - g_prev.col(p)).real() / gp2);
        d.col(p) = -g.col(p) + pr * d.col(p);
        if (d.col(p).dot(g.col(p)).real() >= 0.0) d.col(p) = -g.col(p);
      }
      const CMat gs_d = prob.receiver_apply(k, d);
      const CMat gd_d = prob.domain_apply(k, d);
      const CMat q = d - chi.asDiagonal() * gd_d;
      CMat hd = prob.receiver_adjoint(k, gs_d) * inv_ne.asDiagonal();
      hd += state_adjoint(q) * inv_np.asDiagonal();

      CVec alpha = CVec::Zero(P);
      for (int p = 0; p < P; ++p) {
        const double curv = d.col(p).dot(hd.col(p)).real();
        if (curv > 0.0) alpha[p] = -d.col(p).dot(g.col(p)) / curv;
      }
      W += d * alpha.asDiagonal();
      gs += gs_d * alpha.asDiagonal();
      gd += gd_d * alpha.asDiagonal();
      g_prev = g;
      g += hd * alpha.asDiagonal();
    }
    double worst = 0.0;
    for (int p = 0; p < P; ++p) worst = std::max(worst, g.col(p).norm());
    final_norm[std::size_t(k)] = worst;
  }
  double worst = 0.0;
  for (double v : final_norm) {
    if (!std::isfinite(v)) throw NumericalError("update_W: non-finite gradient");
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

cplx project_contrast(cplx v, bool lossless) {
  const double re = std::max(0.0, v.real());
  const double im = lossless ? 0.0 : std::min(0.0, v.imag());
  return {re, im};
}

}  // namespace

void update_chi(InversionState& s, const InversionProblem& prob, const InversionConfig& config) {
  const int K = prob.frequencies();
  const int P = prob.transmitters();
  const int n = prob.cells();
  // Per cell: state term = sum_kp |W_l - chi_l E_l|^2 / n+, E = lambda E_inc + E_d.
  CVec num = CVec::Zero(n);
  RVec den = RVec::Zero(n);
  for (int k = 0; k < K; ++k) {
    const CVec lam = lambdas_at(s.calibration, k, P);
    CMat total = prob.inc_domain(k) * lam.asDiagonal();
    total += s.domain_field[std::size_t(k)];
    for (int p = 0; p < P; ++p) {
      const double w = 1.0 / prob.dominant_norm2(k, p);
      num += w * total.col(p).conjugate().cwiseProduct(s.current[std::size_t(k)].col(p));
      den += w * total.col(p).cwiseAbs2();
    }
  }
  CVec& chi = s.chi.values();
  if (config.chi_step == ChiStep::closed_form) {
    for (int l = 0; l < n; ++l)
      if (den[l] > 0.0) chi[l] = project_contrast(num[l] / den[l], config.lossless);
    return;
  }

  // CGD on f(chi) = 1/2 sum_l (den_l |chi_l|^2 - 2 Re(conj(chi_l) num_l)) + const.
  auto objective = [&](const CVec& x) {
    double f = 0.0;
    for (int l = 0; l < n; ++l) f += 0.5 * (den[l] * std::norm(x[l]) - 2.0 * (std::conj(x[l]) * num[l]).real());
    return f;
  };
  const CVec start = chi;
  CVec x = chi;
  CVec g = den.cast<cplx>().cwiseProduct(x) - num;
  CVec d = -g;
  for (int it = 0; it < config.chi_iterations; ++it) {
    const CVec hd = den.cast<cplx>().cwiseProduct(d);
    const double curv = d.dot(hd).real();
    if (!(curv > 0.0)) break;
    const cplx alpha = -d.dot(g) / curv;
    x += alpha * d;
    const CVec g_new = g + alpha * hd;
    const double gg = g.squaredNorm();
    const double pr = gg > 0.0 ? std::max(0.0, g_new.dot(g_new - g).real() / gg) : 0.0;
    g = g_new;
    d = -g + pr * d;
    if (d.dot(g).real() >= 0.0) d = -g;
  }
  for (int l = 0; l < n; ++l)
    if (den[l] > 0.0) x[l] = project_contrast(x[l], config.lossless);
  if (objective(x) <= objective(start)) chi = x;
}

void refresh_simulated(InversionState& s, const InversionProblem& prob, const InversionConfig& config,
                       const Surrogate* surrogate) {
  const int K = prob.frequencies();
  const int P = prob.transmitters();
  KPArray<CVec> fields;
  if (config.surrogate_mode == SurrogateMode::neural) {
    if (!surrogate) throw ConfigError("surrogate_mode = neural requires a trained surrogate");
    surrogate->check_geometry(prob.greens());
    fields = surrogate->predict(s.chi);
  } else {
    KPArray<CVec> inc(K, P);
    for (int k = 0; k < K; ++k)
      for (int p = 0; p < P; ++p) inc(k, p) = prob.inc_domain(k).col(p);
    const auto sols = kernels::solve_all(s.chi, KPArray<cplx>(K, P, cplx(1.0)), prob.greens(), inc,
                                         config.forward_solver, config.execution);
    fields = KPArray<CVec>(K, P);
    for (std::size_t i = 0; i < sols.size(); ++i) {
      if (!sols.flat(i).report.converged)
        warn("refresh_simulated: forward solve did not reach the requested tolerance");
      fields.flat(i) = prob.greens().sensors.recorded(int(i) % P, sols.flat(i).scattered_rx);
    }
  }
  s.simulated.assign(std::size_t(K), CMat());
  for (int k = 0; k < K; ++k) s.simulated[std::size_t(k)] = to_columns(fields, k, prob.receivers());
}

KPArray<LambdaQuadratic> lambda_quadratics(const InversionState& s, const InversionProblem& prob) {
  const int K = prob.frequencies();
  const int P = prob.transmitters();
  KPArray<LambdaQuadratic> q(K, P);
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p)
      q(k, p) = lambda_quadratic(s.chi.values(), s.current[std::size_t(k)].col(p),
                                 s.domain_field[std::size_t(k)].col(p), prob.inc_domain(k).col(p),
                                 s.simulated[std::size_t(k)].col(p), prob.measured(k).col(p),
                                 prob.dominant_norm2(k, p));
  return q;
}

int update_lambda(InversionState& s, const InversionProblem& prob, const InversionConfig& config) {
  if (config.calibration_mode == CalibrationMode::none) return 0;
  return update(s.calibration, lambda_quadratics(s, prob), config.beta, config.calibration_passes);
}

InversionState initialize(const InversionProblem& prob, const InversionConfig& config, const Surrogate* surrogate) {
  const int K = prob.frequencies();
  const int P = prob.transmitters();
  InversionState s;
  s.chi = ContrastMap(prob.greens().grid);
  s.calibration = CalibrationState::initial(K, P, config.calibration_mode, config.lambda_domain);
  for (int k = 0; k < K; ++k) {
    s.current.push_back(prob.dominant_current(k));
    s.domain_field.push_back(prob.domain_apply(k, s.current.back()));
    s.receiver_field.push_back(prob.receiver_apply(k, s.current.back()));
  }
  InversionConfig closed = config;
  closed.chi_step = ChiStep::closed_form;
  update_chi(s, prob, closed);
  refresh_simulated(s, prob, config, surrogate);
  return s;
}

InversionState run(const InversionProblem& prob, const InversionConfig& config, const RunOptions& options) {
  config.validate();
  using clock = std::chrono::steady_clock;
  InversionState s = initialize(prob, config, options.surrogate);
  double best = std::numeric_limits<double>::infinity();
  double previous = std::numeric_limits<double>::infinity();

  for (int n = 1; n <= config.max_outer_iters; ++n) {
    const auto t0 = clock::now();
    previous = s.history.empty() ? cost(s, prob, config.beta).total : s.history.back().total;
    update_W(s, prob, config);
    update_chi(s, prob, config);
    refresh_simulated(s, prob, config, options.surrogate);
    update_lambda(s, prob, config);
    s.iteration = n;

    const CostBreakdown c = cost(s, prob, config.beta);
    s.iteration_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    s.history.push_back(c);
    s.lambda_trace.push_back(s.calibration.lambda);
    if (options.truth) s.nse_trace.push_back(nse(s.chi, *options.truth).nse);
    if (options.on_iteration) options.on_iteration(s);

    if (!std::isfinite(c.total)) {
      s.termination = Termination::diverged;
      s.diagnostic = "cost became non-finite at iteration " + std::to_string(n);
      return s;
    }
    best = std::min(best, c.total);
    if (c.total > config.divergence_factor * best) {
      std::ostringstream os;
      os << "cost " << c.total << " exceeds " << config.divergence_factor << "x the minimum " << best
         << " at iteration " << n;
      s.termination = Termination::diverged;
      s.diagnostic = os.str();
      return s;
    }
    if (std::abs(c.total - previous) <= config.termination_tol) {
      s.termination = Termination::converged;
      return s;
    }
  }
  s.termination = Termination::max_iterations;
  return s;
}

NseReport nse(const ContrastMap& estimate, const ContrastMap& truth) {
  if (estimate.nx() != truth.nx() || estimate.ny() != truth.ny())
    throw DomainError("nse: estimate and truth grids differ");
  NseReport r;
  r.per_pixel.resize(truth.size());
  for (int l = 0; l < truth.size(); ++l) {
    const cplx eps = 1.0 + truth[l];
    const cplx eps_hat = 1.0 + estimate[l];
    const double e2 = std::norm(eps);
    if (e2 == 0.0) throw DomainError("nse: ground truth permittivity is zero");
    r.per_pixel[l] = std::norm(eps_hat - eps) / e2;
  }
  r.total = r.per_pixel.sum();
  r.nse = r.total / double(truth.size());
  return r;
}

}  // namespace scatlab
