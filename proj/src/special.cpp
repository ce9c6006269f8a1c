#include "scatlab/special.hpp"

#include <cmath>
#include <numbers>

namespace scatlab {

cplx hankel2(int n, double x) {
  const double nu = std::abs(n);
  cplx h(std::cyl_bessel_j(nu, x), -std::cyl_neumann(nu, x));
  // H_{-n} = (-1)^n H_n
  if (n < 0 && (std::abs(n) % 2) == 1) h = -h;
  return h;
}

cplx radiation_kernel(double k0, double rho) { return 0.25 * kJ * hankel2(0, k0 * rho); }

cplx disk_self_integral(double k0, double a) {
  // int_0^a H0(k0 r) 2 pi r dr = (2 pi / k0^2) [x H1(x)]_0^{k0 a},  x H1^(2)(x) -> 2j/pi as x -> 0
  const double x = k0 * a;
  const cplx bracket = x * hankel2(1, x) - 2.0 * kJ / std::numbers::pi;
  return 0.25 * kJ * (2.0 * std::numbers::pi / (k0 * k0)) * bracket;
}

cplx line_source_field(double k0, double rho) { return hankel2(0, k0 * rho) / (4.0 * kJ); }

}  // namespace scatlab
