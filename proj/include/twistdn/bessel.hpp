#pragma once

namespace twistdn {

// Modified Bessel function of the first kind, I_k(x), by its power series
// with compensated summation. Supported for k >= 0 and 0 <= x <= 50 at a
// relative accuracy of about 1e-14 (the series has positive terms, so there
// is no cancellation). Throws std::invalid_argument outside that range.
double bessel_I(int k, double x);

// Derivative I_k'(x); I_0' = I_1 and I_k' = (I_{k-1} + I_{k+1})/2.
double bessel_I_prime(int k, double x);

// Exact Dirichlet-to-Neumann eigenvalue of the mode problem on the unit
// disc for boundary datum e^{ik theta} at twist rate a and frequency xi:
//   mu I'_{|k|}(mu) / I_{|k|}(mu)  with  mu = |xi + a k|.
// The sign convention inside mu is the one of the forward transform with
// kernel e^{-i xi x3} acting on e^{+ik theta} data. At mu = 0 the harmonic
// limit |k| is returned. Requires |a| < 1.
double disc_dn_eigenvalue(double a, double xi, int k);

}  // namespace twistdn
