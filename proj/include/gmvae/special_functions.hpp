#pragma once

namespace gmvae::sf {

/// Digamma psi(x) for x > 0. Recurrence to x >= 8 plus the Bernoulli
/// asymptotic series; relative accuracy better than 1e-13 on (0, 1e8].
double digamma(double x);

/// Trigamma psi'(x) for x > 0, same scheme as digamma.
double trigamma(double x);

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
/// a > 0, x >= 0. Series for x < a + 1, continued fraction otherwise.
double reg_lower_gamma(double a, double x);

/// Inverse of reg_lower_gamma in x: returns x with P(a, x) = p, p in (0, 1).
double gamma_quantile(double a, double p);

/// acosh(b) / sqrt(b^2 - 1) for b >= 1, with a series branch near b = 1.
/// This is r / sinh(r) evaluated at r = acosh(b).
double acosh_ratio(double b);
/// d/db of acosh_ratio.
double acosh_ratio_deriv(double b);

/// cosh(sqrt(s)) for s >= 0 (smooth in s through s = 0).
double cosh_sqrt(double s);
/// d/ds cosh(sqrt(s)) = sinh(sqrt(s)) / (2 sqrt(s)).
double cosh_sqrt_deriv(double s);

/// sinh(sqrt(s)) / sqrt(s) for s >= 0, series branch near 0.
double sinhc_sqrt(double s);
/// d/ds of sinhc_sqrt.
double sinhc_sqrt_deriv(double s);

}  // namespace gmvae::sf
