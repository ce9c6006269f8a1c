#ifndef SCATLAB_TESTS_CYLINDER_SERIES_HPP
#define SCATLAB_TESTS_CYLINDER_SERIES_HPP

// Analytic TM scattering of a line source by a homogeneous dielectric circular
// cylinder centred at the origin (exp(+jwt), outgoing H^(2)). Written from the
// cylindrical-harmonic expansion only; shares no code with the library.

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

inline cd h2(int n, double x) { return {std::cyl_bessel_j(double(n), x), -std::cyl_neumann(double(n), x)}; }
inline double jn(int n, double x) { return std::cyl_bessel_j(double(n), x); }
inline double jn_prime(int n, double x) {
  return n == 0 ? -jn(1, x) : 0.5 * (jn(n - 1, x) - jn(n + 1, x));
}
inline cd h2_prime(int n, double x) { return n == 0 ? -h2(1, x) : 0.5 * (h2(n - 1, x) - h2(n + 1, x)); }

/// Scattered field at receivers (polar rho_r, phi_r) for a unit line source
/// (1/(4j)) H0^(2)(k0 |r - r_s|) placed at polar (rho_s, phi_s), rho_s > radius.
inline std::vector<cd> cylinder_scattered_field(double k0, double eps_r, double radius, double rho_s,
                                                double phi_s, const std::vector<double>& rho_r,
                                                const std::vector<double>& phi_r) {
  const double k1 = k0 * std::sqrt(eps_r);
  const double x0 = k0 * radius;
  const double x1 = k1 * radius;
  const int nmax = int(std::ceil(x1 + 4.0 * std::cbrt(x1) + 12.0));
  const cd inv4j = 1.0 / cd(0.0, 4.0);

  std::vector<cd> coeff(std::size_t(nmax) + 1);
  for (int n = 0; n <= nmax; ++n) {
    const cd num = k1 * jn_prime(n, x1) * jn(n, x0) - k0 * jn(n, x1) * jn_prime(n, x0);
    const cd den = k0 * jn(n, x1) * h2_prime(n, x0) - k1 * jn_prime(n, x1) * h2(n, x0);
    coeff[std::size_t(n)] = inv4j * h2(n, k0 * rho_s) * num / den;
  }
  std::vector<cd> out(rho_r.size());
  for (std::size_t q = 0; q < rho_r.size(); ++q) {
    cd sum = 0.0;
    for (int n = 0; n <= nmax; ++n) {
      const double weight = n == 0 ? 1.0 : 2.0 * std::cos(n * (phi_r[q] - phi_s));
      sum += weight * coeff[std::size_t(n)] * h2(n, k0 * rho_r[q]);
    }
    out[q] = sum;
  }
  return out;
}

}  // namespace oracle

#endif
