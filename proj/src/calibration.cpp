#include "scatlab/calibration.hpp"

#include <cmath>

namespace scatlab {

LambdaQuadratic lambda_quadratic(const CVec& chi, const CVec& current, const CVec& domain_field,
                                 const CVec& inc_domain, const CVec& simulated, const CVec& measured,
                                 double n_plus) {
  const CVec b = chi.cwiseProduct(inc_domain);
  const CVec c = current - chi.cwiseProduct(domain_field);
  LambdaQuadratic q;
  q.bb = b.squaredNorm();
  q.bc = b.dot(c);  // Eigen's dot conjugates the left operand
  q.cc = c.squaredNorm();
  q.ss = simulated.squaredNorm();
  q.se = simulated.dot(measured);
  q.ee = measured.squaredNorm();
  q.n_plus = n_plus;
  q.n_meas = q.ee;
  return q;
}

double lambda_cost(const LambdaQuadratic& q, cplx lambda, double beta) {
  const double l2 = std::norm(lambda);
  const double state = q.cc - 2.0 * (std::conj(lambda) * q.bc).real() + l2 * q.bb;
  const double calib = l2 * q.ss - 2.0 * (std::conj(lambda) * q.se).real() + q.ee;
  return 0.5 * (state / q.n_plus + calib / q.n_meas + beta * l2);
}

cplx gradient(const LambdaQuadratic& q, cplx lambda, double beta) {
  return (lambda * q.bb - q.bc) / q.n_plus + (lambda * q.ss - q.se) / q.n_meas + beta * lambda;
}

double curvature(const LambdaQuadratic& q, double beta) { return q.bb / q.n_plus + q.ss / q.n_meas + beta; }

cplx direction(cplx g, cplx g_prev, cplx d_prev, bool has_memory) {
  const double gp2 = std::norm(g_prev);
  if (!has_memory || gp2 == 0.0) return -g;
  const double pr = std::max(0.0, (std::conj(g) * (g - g_prev)).real() / gp2);
  const cplx d = -g + pr * d_prev;
  if ((std::conj(d) * g).real() >= 0.0) return -g;
  return d;
}

namespace {

cplx exact_step(double h, cplx d, cplx g) {
  const double dd = std::norm(d);
  if (dd == 0.0) return 0.0;
  if (h <= 0.0) {
    warn("calibration line search: zero curvature, step set to 0");
    return 0.0;
  }
  return -std::conj(d) * g / (h * dd);
}

}  // namespace

cplx step_size(const LambdaQuadratic& q, cplx lambda, cplx d, double beta) {
  return exact_step(curvature(q, beta), d, gradient(q, lambda, beta));
}

CalibrationState CalibrationState::initial(int K, int P, CalibrationMode mode, LambdaDomain domain) {
  CalibrationState s;
  s.lambda = KPArray<cplx>(K, P, cplx(1.0));
  s.prev_gradient = KPArray<cplx>(K, P);
  s.prev_direction = KPArray<cplx>(K, P);
  s.has_memory = KPArray<char>(K, P, 0);
  s.mode = mode;
  s.domain = domain;
  return s;
}

void CalibrationState::reset_memory() {
  for (auto& m : has_memory) m = 0;
}

int update(CalibrationState& state, const KPArray<LambdaQuadratic>& quadratics, double beta, int passes) {
  if (state.mode == CalibrationMode::none) return 0;
  const int K = quadratics.frequencies();
  const int P = quadratics.transmitters();
  const bool real_only = state.domain == LambdaDomain::real;
  int rejected = 0;

  // One CGD step on a group of (k, p) entries sharing a single lambda.
  auto step_group = [&](int k, int p_begin, int p_end) {
    const cplx lambda = state.lambda(k, p_begin);
    cplx g = 0.0;
    double h = 0.0;
    double before = 0.0;
    for (int p = p_begin; p < p_end; ++p) {
      g += gradient(quadratics(k, p), lambda, beta);
      h += curvature(quadratics(k, p), beta);
      before += lambda_cost(quadratics(k, p), lambda, beta);
    }
    if (real_only) g = g.real();
    const cplx d = direction(g, state.prev_gradient(k, p_begin), state.prev_direction(k, p_begin),
                             state.has_memory(k, p_begin) != 0);
    cplx alpha = exact_step(h, d, g);
    if (real_only) alpha = alpha.real();
    cplx next = lambda + alpha * d;
    if (real_only) next = next.real();

    double after = 0.0;
    for (int p = p_begin; p < p_end; ++p) after += lambda_cost(quadratics(k, p), next, beta);
    const bool reject = after > before + 1e-12 * std::max(1.0, std::abs(before));
    for (int p = p_begin; p < p_end; ++p) {
      if (reject) {
        state.has_memory(k, p) = 0;
      } else {
        state.lambda(k, p) = next;
        state.prev_gradient(k, p) = g;
        state.prev_direction(k, p) = d;
        state.has_memory(k, p) = 1;
      }
    }
    return reject ? 1 : 0;
  };

  for (int pass = 0; pass < passes; ++pass) {
    if (state.mode == CalibrationMode::joint) {
      for (int k = 0; k < K; ++k) rejected += step_group(k, 0, P);
    } else {
#pragma omp parallel for collapse(2) reduction(+ : rejected) schedule(static)
      for (int k = 0; k < K; ++k)
        for (int p = 0; p < P; ++p) rejected += step_group(k, p, p + 1);
    }
  }
  return rejected;
}

}  // namespace scatlab
