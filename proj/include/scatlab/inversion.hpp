#ifndef SCATLAB_INVERSION_HPP
#define SCATLAB_INVERSION_HPP

#include <functional>
#include <memory>
#include <string>

#include "scatlab/calibration.hpp"
#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"
#include "scatlab/forward.hpp"
#include "scatlab/subspace.hpp"

namespace scatlab {

class Surrogate;

enum class SurrogateMode { exact_forward, neural };
enum class ChiStep { closed_form, cgd };

struct InversionConfig {
  double beta = 0.0;
  double termination_tol = 5e-4;
  int max_outer_iters = 200;
  int w_iterations = 20;
  ChiStep chi_step = ChiStep::closed_form;
  int chi_iterations = 50;
  CalibrationMode calibration_mode = CalibrationMode::joint;
  LambdaDomain lambda_domain = LambdaDomain::complex;
  SurrogateMode surrogate_mode = SurrogateMode::exact_forward;
  int calibration_passes = 1;
  bool lossless = false;  // clamp Im(chi) to 0 instead of Im(chi) <= 0
  double divergence_factor = 10.0;
  SolverOptions forward_solver{};
  CutoffRule cutoff{};
  Execution execution = Execution::parallel;

  void validate() const;
};

struct CostBreakdown {
  double data = 0.0;
  double state = 0.0;
  double calib = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

/// Measured data plus everything derived from it that stays fixed during an
/// inversion: the subspace decomposition and the dominant currents.
///
/// Internally the unknown W is the contrast source chi*E (V/m), so the radiation
/// operators are applied as j omega eps0 * G. The greens operators are held by
/// reference and must outlive the problem.
class InversionProblem {
 public:
  InversionProblem(const GreensOperators& greens, const KPArray<CVec>& inc_domain,
                   const KPArray<CVec>& measured, const CutoffRule& cutoff = {},
                   Execution exec = Execution::parallel);

  const GreensOperators& greens() const { return *greens_; }
  int frequencies() const { return greens_->frequencies(); }
  int transmitters() const { return greens_->transmitters(); }
  int cells() const { return greens_->cells(); }
  int receivers() const { return greens_->receivers(); }

  /// Columns are transmitters.
  const CMat& inc_domain(int k) const { return inc_[std::size_t(k)]; }
  const CMat& measured(int k) const { return meas_[std::size_t(k)]; }
  const CMat& dominant_current(int k) const { return wplus_[std::size_t(k)]; }
  double measured_norm2(int k, int p) const { return meas_norm2_(k, p); }
  double dominant_norm2(int k, int p) const { return wplus_norm2_(k, p); }
  const SubspaceDecomposition& subspace() const { return subspace_; }

  CMat domain_apply(int k, const CMat& w) const;
  CMat domain_adjoint(int k, const CMat& v) const;
  CMat receiver_apply(int k, const CMat& w) const;
  CMat receiver_adjoint(int k, const CMat& v) const;

 private:
  const GreensOperators* greens_;
  std::vector<CMat> inc_;
  std::vector<CMat> meas_;
  std::vector<CMat> wplus_;
  KPArray<double> meas_norm2_;
  KPArray<double> wplus_norm2_;
  SubspaceDecomposition subspace_;
};

enum class Termination { running, converged, max_iterations, diverged };
std::string to_string(Termination t);

struct InversionState {
  ContrastMap chi;
  std::vector<CMat> current;         // W per k, N x P (contrast-source units)
  std::vector<CMat> domain_field;    // E_d = G_D W per k
  std::vector<CMat> receiver_field;  // G_S W per k
  std::vector<CMat> simulated;       // E_s^sim per k, Q x P (unit calibration)
  CalibrationState calibration;
  int iteration = 0;
  std::vector<CostBreakdown> history;
  std::vector<KPArray<cplx>> lambda_trace;
  std::vector<double> nse_trace;
  std::vector<double> iteration_seconds;
  Termination termination = Termination::running;
  std::string diagnostic;
};

CostBreakdown cost(const InversionState& state, const InversionProblem& problem, double beta);

/// Fixed-count Polak-Ribiere CGD on the data and state terms (the only terms
/// that depend on W). Returns the largest final gradient norm.
double update_W(InversionState& state, const InversionProblem& problem, const InversionConfig& config);

/// Minimizes the state term over chi (closed form per cell, or CGD), then
/// projects onto Re(chi) >= 0, Im(chi) <= 0. Cells with zero total field keep
/// their value.
void update_chi(InversionState& state, const InversionProblem& problem, const InversionConfig& config);

/// Recomputes E_s^sim from the current chi by exact forward solves (lambda = 1)
/// or the surrogate.
void refresh_simulated(InversionState& state, const InversionProblem& problem, const InversionConfig& config,
                       const Surrogate* surrogate);

/// One calibration update (no-op when calibration is off).
int update_lambda(InversionState& state, const InversionProblem& problem, const InversionConfig& config);

/// Calibration quadratics of the current state, one per (k, p).
KPArray<LambdaQuadratic> lambda_quadratics(const InversionState& state, const InversionProblem& problem);

/// W = W+, chi from one closed-form chi step on W+, lambda = 1, E_s^sim from chi.
InversionState initialize(const InversionProblem& problem, const InversionConfig& config,
                          const Surrogate* surrogate = nullptr);

struct RunOptions {
  const Surrogate* surrogate = nullptr;
  const ContrastMap* truth = nullptr;  // enables the NSE trace
  std::function<void(const InversionState&)> on_iteration;
};

InversionState run(const InversionProblem& problem, const InversionConfig& config, const RunOptions& options = {});

struct NseReport {
  double nse = 0.0;    // total / pixels
  double total = 0.0;  // unnormalized sum
  RVec per_pixel;
};

/// Per-pixel |eps_hat - eps|^2 / |eps|^2 with eps = 1 + chi, summed into
/// `total` and averaged over the pixels into `nse`.
NseReport nse(const ContrastMap& estimate, const ContrastMap& truth);

}  // namespace scatlab

#endif  // SCATLAB_INVERSION_HPP
