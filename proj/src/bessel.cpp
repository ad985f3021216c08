#include "twistdn/bessel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace twistdn {

double bessel_I(int k, double x) {
  if (k < 0) throw std::invalid_argument("bessel_I: order must be >= 0");
  if (!(x >= 0.0) || x > 50.0)
    throw std::invalid_argument("bessel_I: x out of supported range [0, 50], got " +
                                std::to_string(x));
  if (x == 0.0) return k == 0 ? 1.0 : 0.0;

  // term_0 = (x/2)^k / k!, term_{m+1} = term_m * (x/2)^2 / ((m+1)(m+k+1)).
  const double half = 0.5 * x;
  double term = 1.0;
  for (int j = 1; j <= k; ++j) term *= half / j;
  double sum = term;
  double comp = 0.0;  // Kahan compensation
  const double q = half * half;
  for (int m = 0; m < 200; ++m) {
    term *= q / ((m + 1.0) * (m + k + 1.0));
    const double y = term - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    if (term <= 1e-17 * sum) break;
  }
  return sum;
}

double bessel_I_prime(int k, double x) {
  if (k == 0) return bessel_I(1, x);
  return 0.5 * (bessel_I(k - 1, x) + bessel_I(k + 1, x));
}

double disc_dn_eigenvalue(double a, double xi, int k) {
  if (!(std::abs(a) < 1.0))
    throw std::invalid_argument("disc_dn_eigenvalue: requires |a| < 1 on the unit disc");
  const int n = std::abs(k);
  const double mu = std::abs(xi + a * k);
  if (mu < 1e-6) {
    // mu I'_n(mu)/I_n(mu) = n + mu^2/(2(n+1)) + O(mu^4): removable limit.
    return n + mu * mu / (2.0 * (n + 1.0));
  }
  return mu * bessel_I_prime(n, mu) / bessel_I(n, mu);
}

}  // namespace twistdn
