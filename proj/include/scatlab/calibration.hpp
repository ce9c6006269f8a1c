#ifndef SCATLAB_CALIBRATION_HPP
#define SCATLAB_CALIBRATION_HPP

#include "scatlab/common.hpp"

namespace scatlab {

enum class CalibrationMode { none, joint, per_tx };
enum class LambdaDomain { real, complex };

/// The calibration-dependent part of the augmented cost for one (k, p):
///
///   f(lambda) = 1/2 ( ||c - lambda b||^2 / n_plus
///                   + ||lambda s - e||^2 / n_meas
///                   + beta |lambda|^2 )
///
/// with b = chi E_inc, c = W - chi E_d, s = simulated and e = measured
/// receiver fields. f is a real quadratic in lambda, so six inner products
/// describe it completely.
///
/// Derivation (Wirtinger calculus, gradient taken as 2 df/d(conj lambda),
/// which equals df/dRe + j df/dIm):
///
///   g(lambda) = (lambda <b,b> - <b,c>) / n_plus
///             + (lambda <s,s> - <s,e>) / n_meas + beta lambda
///
/// and along lambda + alpha d with complex alpha
///
///   f(lambda + alpha d) = f(lambda) + Re(conj(alpha d) g) + 1/2 H |alpha d|^2,
///   H = <b,b> / n_plus + <s,s> / n_meas + beta,
///
/// whose minimizer is alpha = -conj(d) g / (H |d|^2). Both the state term and
/// the calibration term contribute to H.
struct LambdaQuadratic {
  double bb = 0.0;
  cplx bc = 0.0;
  double cc = 0.0;
  double ss = 0.0;
  cplx se = 0.0;
  double ee = 0.0;
  double n_plus = 1.0;
  double n_meas = 1.0;
};

/// Gathers the inner products from field vectors; `domain_field` is E_d = G_D W
/// (contrast-source units, same as `current`).
LambdaQuadratic lambda_quadratic(const CVec& chi, const CVec& current, const CVec& domain_field,
                                 const CVec& inc_domain, const CVec& simulated, const CVec& measured,
                                 double n_plus);

double lambda_cost(const LambdaQuadratic& q, cplx lambda, double beta);
cplx gradient(const LambdaQuadratic& q, cplx lambda, double beta);
double curvature(const LambdaQuadratic& q, double beta);

/// Polak-Ribiere+ direction: d = -g + max(0, Re<g, g - g_prev> / |g_prev|^2) d_prev,
/// reset to -g without memory or when the result is not a descent direction.
cplx direction(cplx g, cplx g_prev, cplx d_prev, bool has_memory);

/// Exact minimizer of f(lambda + alpha d) over complex alpha. Returns 0 (with a
/// warning) when the curvature vanishes.
cplx step_size(const LambdaQuadratic& q, cplx lambda, cplx d, double beta);

struct CalibrationState {
  KPArray<cplx> lambda;
  KPArray<cplx> prev_gradient;
  KPArray<cplx> prev_direction;
  KPArray<char> has_memory;
  CalibrationMode mode = CalibrationMode::joint;
  LambdaDomain domain = LambdaDomain::complex;

  static CalibrationState initial(int K, int P, CalibrationMode mode, LambdaDomain domain);
  void reset_memory();
};

/// Runs `passes` CGD passes. per_tx updates every (k, p) independently; joint
/// sums gradients and curvatures over p and moves one lambda per k; real
/// domain restricts gradient, direction and step to the real axis. A step that
/// raises the cost is rejected and the memory reset. Returns rejected steps.
int update(CalibrationState& state, const KPArray<LambdaQuadratic>& quadratics, double beta, int passes = 1);

}  // namespace scatlab

#endif  // SCATLAB_CALIBRATION_HPP
