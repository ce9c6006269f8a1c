#ifndef SCATLAB_SPECIAL_HPP
#define SCATLAB_SPECIAL_HPP

#include "scatlab/common.hpp"

namespace scatlab {

/// Hankel function of the second kind, H_n^(2)(x) = J_n(x) - j Y_n(x), x > 0.
cplx hankel2(int n, double x);

/// 2D kernel used for the radiation operators, (j/4) H_0^(2)(k0 rho).
///
/// With the exp(+j omega t) convention the scattered field of a current
/// density J is E_s = j omega mu0 * integral(kernel * J), which fixes the
/// sign relative to the textbook Green's function (1/(4j)) H_0^(2).
cplx radiation_kernel(double k0, double rho);

/// Integral of radiation_kernel over a disk of radius a centred on the
/// observation point (analytic; the logarithmic singularity is integrable).
cplx disk_self_integral(double k0, double a);

/// Unit line-source field (1/(4j)) H_0^(2)(k0 rho).
cplx line_source_field(double k0, double rho);

}  // namespace scatlab

#endif  // SCATLAB_SPECIAL_HPP
