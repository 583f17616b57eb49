#pragma once

// Distribution CDFs needed by the variance tests, built on the classic
// continued-fraction / series evaluations of the regularized incomplete beta
// and gamma functions (absolute accuracy ~1e-10; no statistical tables).
namespace ladderflux {

double regularized_incomplete_beta(double a, double b, double x);
double regularized_gamma_p(double a, double x);

// P(F <= x) for the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double x, double d1, double d2);

// P(X <= x) for the chi-square distribution with k degrees of freedom.
double chi2_cdf(double x, double k);

}  // namespace ladderflux
