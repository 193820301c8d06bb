#pragma once

namespace waistkit {

// Standard normal CDF and its inverse.  norminv is Wichura's PPND16
// (algorithm AS 241), accurate to about 1e-15 over (0,1).
double normcdf(double x);
double norminv(double p);

// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a), a > 0.
double regularized_gamma_p(double a, double x);

// Surface measure of the unit m-sphere S^m embedded in R^{m+1};
// sphere_area(0) = 2.  Also the volume of the unit ball in R^n.
double sphere_area(int m);
double ball_volume(int n);

}  // namespace waistkit
