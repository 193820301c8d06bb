#pragma once

#include <Eigen/Dense>
#include <vector>

#include "waistkit/measures.hpp"

namespace waistkit {

// Mass fraction of the centered Euclidean t-ball under the density
// proportional to exp(-sum_i scales[i] * y_i^2) on R^k:
//
//   integral over {|y| <= t} of prod exp(-b_i y_i^2)  /  integral over R^k.
//
// k = 0 (empty scales) returns 1.  Routes: k = 1 closed form, k in {2,3}
// nested slice quadrature, k >= 4 radial reduction when isotropic and
// characteristic function inversion otherwise.  abs_tol applies to the
// returned fraction.
double gaussian_subspace_tube(const Eigen::VectorXd& scales, double t,
                              double abs_tol = 1e-8);

// Fraction of the unit sphere S^n within geodesic distance t of a standardly
// embedded great subsphere S^k (k = 0 means an antipodal point pair).
// Every point of S^n is within pi/2 of S^k, so the value clamps to 1 there.
double spherical_tube_fraction(int n, int k, double t, double abs_tol = 1e-10);

// Fraction of CP^n (Fubini-Study, distance scaled so diam = pi/2) within
// distance t of a standardly embedded CP^k.  Equals the great subsphere
// fraction of S^{2k+1} in S^{2n+1} through the unit circle fibration.
double cp_tube_fraction(int n, int k, double t, double abs_tol = 1e-10);

// Measure of the Euclidean t-neighborhood of a core linear subspace
// R^{core_dim} under a rotation invariant measure on R^n.  Atoms at the
// origin always count; a shell of radius r > t contributes the fraction of
// the sphere within angle arcsin(t/r) of the core.
double radial_subspace_tube(const MeasureSpec& spec, int core_dim, double t,
                            double abs_tol = 1e-8);

// P(sum_i lambda_i Z_i^2 <= x) for independent standard normal Z_i,
// lambda_i > 0, by numerical inversion of the characteristic function.
// Reliable for 4 or more terms (integrand decays like u^{-1-k/2}).
double weighted_chi_square_cdf(const std::vector<double>& lambda, double x,
                               double abs_tol = 1e-9);

}  // namespace waistkit
