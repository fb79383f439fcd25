#pragma once

// Distribution functions needed by the analytic tests. Incomplete beta and
// gamma are evaluated with series / continued fractions to ~1e-14.

namespace hypolab::stats {

double normal_cdf(double x);
/// P(|Z| >= |z|) for a standard normal Z.
double normal_two_sided_p(double z);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);
/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Student-t CDF; df may be fractional (Welch).
double student_t_cdf(double t, double df);
/// P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

double chi_square_cdf(double x, double df);
/// Upper tail P(X >= x).
double chi_square_sf(double x, double df);

}  // namespace hypolab::stats
