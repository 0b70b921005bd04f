#pragma once

namespace countpo {

// The count model's local approximation replaces the exact log-Gamma law of
// the linear predictor xi (shape y, scale 1) by N(log y, 1/y).  The
// functions below quantify that substitution.

// Density of xi = log G with G ~ Gamma(shape, scale), evaluated anywhere on
// the real line.  Computed in log space so large shapes do not overflow.
double log_gamma_density(double xi, double shape, double scale);

// KL( N(log y, 1/y) || logGamma(y, 1) ), evaluated in closed form:
//
//   KL(y) = log( Gamma(y) / sqrt(2 pi / y) ) - y log y + y e^{1/(2y)} - 1/2.
//
// Rearranged as  J(y) + y (e^{1/(2y)} - 1) - 1/2  with J the Stirling
// remainder of log Gamma, which avoids the catastrophic cancellation the
// printed form suffers for large y; J switches to its asymptotic series
// above y = 30.  Requires y > 0.
double kl_exact(double y);

// Leading term 5 / (24 y) of the KL expansion.
double kl_leading(double y);

// Everything the diagnostics table needs for one y.  tv_bound dominates the
// total variation distance for any pair of laws (sqrt of the KL); tv_leading
// is its large-y form sqrt(5 / (24 y)).
struct DivergenceReport {
  double y = 0.0;
  double kl_exact = 0.0;
  double kl_leading = 0.0;
  double tv_bound = 0.0;
  double tv_leading = 0.0;
};

DivergenceReport divergence_report(double y);

// Total variation distance (half L1) between N(log y, 1/y) and
// logGamma(y, 1) by adaptive quadrature on [log y - 12/sqrt(y),
// log y + 12/sqrt(y)], widened until the omitted tail mass is below 1e-12.
double empirical_tv(double y);

}  // namespace countpo
