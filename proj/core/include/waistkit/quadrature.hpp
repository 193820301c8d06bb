#pragma once

#include <functional>
#include <vector>

namespace waistkit {

// Adaptive Gauss-Kronrod (7,15) quadrature on a finite interval.
// Splits the worst panel until the summed Kronrod error estimate drops
// below abs_tol.  Throws std::runtime_error if the panel budget runs out
// before the target is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_panels = 4000);

// Same, with explicit initial breakpoints (kinks, corners).  Breakpoints
// outside (a,b) are ignored.
double integrate_split(const std::function<double(double)>& f, double a,
                       double b, const std::vector<double>& breakpoints,
                       double abs_tol, int max_panels = 4000);

// Integral over [a, +inf) of a decaying integrand, via the substitution
// x = a + u/(1-u) on u in [0,1).
double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abs_tol, int max_panels = 4000);

}  // namespace waistkit
