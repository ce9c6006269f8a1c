#ifndef SCATLAB_KERNELS_HPP
#define SCATLAB_KERNELS_HPP

// Data-parallel kernels. Each has an OpenMP path and a serial reference path
// selected by Execution; tests hold the two to agreement and the benchmark
// target times them against each other.

#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"
#include "scatlab/forward.hpp"

namespace scatlab::kernels {

/// Domain operator for one frequency. The serial path evaluates the kernel for
/// every cell pair; the parallel path tabulates it once per lattice offset.
CMat domain_operator(const ImagingGrid& grid, double omega, Execution exec);

CMat receiver_operator(const ImagingGrid& grid, const std::vector<Point>& rx, double omega,
                       Execution exec);

/// Forward solves for every (k, p) with per-(k, p) calibration factors.
KPArray<ForwardSolution> solve_all(const ContrastMap& chi, const KPArray<cplx>& lambda,
                                   const GreensOperators& greens, const KPArray<CVec>& inc_domain,
                                   const SolverOptions& options, Execution exec);

}  // namespace scatlab::kernels

#endif  // SCATLAB_KERNELS_HPP
