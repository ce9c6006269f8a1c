#ifndef SCATLAB_FORWARD_HPP
#define SCATLAB_FORWARD_HPP

#include <cstdint>
#include <string>

#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"

namespace scatlab {

/// Tag recorded in every dataset and model file so mixed conventions are caught.
inline constexpr const char* kConventionTag = "TM/exp(+jwt)/H0(2)";

/// Method-of-moments radiation operators per frequency.
///
/// `domain[k]` (N x N) maps a physical current density W (A/m^2) in D to the
/// scattered field at the cell centres, `receiver[k]` (M x N) to the field at
/// every receiver position; SensorArray::recorded picks the Q rows one
/// transmitter records. Both include the j omega mu0 factor, so E_d = G_D W and
/// E_s = G_S W. Off-diagonal entries use midpoint quadrature over the cell;
/// the diagonal integrates the kernel analytically over the equal-area disk.
struct GreensOperators {
  ImagingGrid grid;
  SensorArray sensors;
  FrequencySet freqs;
  std::vector<CMat> domain;
  std::vector<CMat> receiver;

  int frequencies() const { return freqs.size(); }
  int cells() const { return grid.size(); }
  int receivers() const { return sensors.receivers(); }
  int positions() const { return sensors.positions(); }
  int transmitters() const { return sensors.transmitters(); }

  /// j omega eps0: converts a contrast source chi*E into a physical current.
  cplx current_scale(int k) const;
};

GreensOperators build_greens(const ImagingGrid& grid, const SensorArray& sensors,
                             const FrequencySet& freqs, Execution exec = Execution::parallel);

/// FNV-1a hash over grid, sensor positions, frequencies and convention tag.
std::uint64_t geometry_hash(const ImagingGrid& grid, const SensorArray& sensors,
                            const FrequencySet& freqs);
inline std::uint64_t geometry_hash(const GreensOperators& g) {
  return geometry_hash(g.grid, g.sensors, g.freqs);
}

/// Fields indexed by (k, p). Only the members a producer fills are non-empty.
struct FieldSet {
  KPArray<CVec> inc_domain;      // E_inc at cell centres
  KPArray<CVec> inc_rx;          // E_inc at the receivers transmitter p records
  KPArray<CVec> scattered_rx;    // E_s at the receivers transmitter p records
  KPArray<CVec> domain_scattered;  // E_d = G_D W
  KPArray<CVec> current;         // W
};

/// Unit line-source incident field at the cell centres and receivers.
FieldSet incident_field(const SensorArray& sensors, const ImagingGrid& grid, const FrequencySet& freqs);

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 2000;
};

struct SolverReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct ForwardSolution {
  CVec current;       // W over all N cells (zero outside the active set)
  CVec scattered_rx;  // G_S W at every receiver position
  SolverReport report;
};

/// Cells with |chi| above this are part of the active set of the state equation.
inline constexpr double kActiveContrast = 1e-12;

/// M[W] = W / (j omega eps0 chi) - G_D W on the active set; zero elsewhere.
/// Throws DomainError when W is nonzero on a cell with chi = 0.
CVec apply_state_operator(const CVec& current, const ContrastMap& chi, const GreensOperators& greens,
                          int k);

/// Solves M[W] = lambda * E_inc by conjugate gradients on the normal equations
/// of the row-scaled system W - X G_D W = X lambda E_inc, X = diag(j omega eps0
/// chi), restricted to the active set. The reported residual is that of the
/// scaled system.
ForwardSolution forward_solve(const ContrastMap& chi, cplx lambda, const GreensOperators& greens, int k,
                              const CVec& inc_domain, const SolverOptions& options = {});

/// forward_solve for several right-hand sides at once: column c of
/// `inc_domain` with factor lambda[c].
std::vector<ForwardSolution> forward_solve_columns(const ContrastMap& chi, const CVec& lambda,
                                                   const GreensOperators& greens, int k, const CMat& inc_domain,
                                                   const SolverOptions& options = {});

enum class RadiationTarget { domain, receivers };

CVec radiate(const CVec& current, const GreensOperators& greens, int k, RadiationTarget target);

}  // namespace scatlab

#endif  // SCATLAB_FORWARD_HPP
