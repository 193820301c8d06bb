#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace waistkit {

// A map R^n -> R^k together with distance evaluators for its fibers
// f^{-1}(y).  `fiber_distance` is the exact Euclidean distance where a
// formula exists; it returns NaN for y outside the formula's coverage and
// +infinity for empty fibers.  Maps without formulas leave it empty and
// the harness falls back to optimization_fiber_distance, whose result is
// an upper bound, so measured neighborhoods only ever shrink.
struct TestMap {
  std::string name;
  int n = 0;
  int k = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> evaluate;
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& y)>
      fiber_distance;
  // Exact geodesic distance on the centered radius-r sphere from a point of
  // that sphere to f^{-1}(y) intersected with it; NaN when not covered.
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       double radius)>
      sphere_fiber_geodesic;
  bool odd = false;
  std::optional<double> homogeneity_degree;
};

// f(x) = (x_{n-k+1}, ..., x_n): fibers are affine subspaces.  On a gaussian
// with scales sorted in decreasing order the dropped k coordinates are the
// widest, the equality case of the gaussian bound.
TestMap linear_map(int n, int k);

// f(x) = |x|: fibers are centered spheres (empty for y < 0).
TestMap radial_map(int n);

// Odd coordinate map x -> x_1.
TestMap coordinate_map(int n);

// Odd polynomial x -> x_1 + eps x_2^3 (no closed fiber distance).
TestMap odd_cubic_map(int n, double eps = 0.1);

// Odd non-polynomial x -> x_1 + eps sin(x_2), the equalization demo's
// stock nonlinear functional.
TestMap sine_perturbed_map(int n, double eps = 0.3);

// The k = 1 small-fiber construction: f = min(g, h) with g = |x - p|,
// h = |x - 2p| - sqrt(3) + 1 and p = e_1.  Level sets of both pieces are
// spheres centered on the p-axis; the level-1 spheres meet the unit sphere
// in the same circle x.p = 1/2, where the corrector sphere (radius sqrt(3)
// around 2p) is orthogonal to it, so fibers near level 1 cross the unit
// sphere cleanly instead of hugging it.  Fibers are empty below 1 - sqrt(3).
TestMap sphere_corrector_map(int n);

// The 2 <= k < n small-fiber construction: f_i = x_i for i < k, and on the
// remaining block z = (x_k..x_n) the last component |z| max(0, theta - t0)
// with theta the angle of z from +e_n.  Its zero set is the solid cone of
// half-angle `half_angle` around the radius segment direction +e_n, a thin
// sliver of the ball for small angles.
TestMap cone_map(int n, int k, double half_angle = 0.2);

// (z_1, z_2) -> z_1 z_2 on C^2 = R^4, coordinates (re z_1, im z_1, re z_2,
// im z_2); homogeneous of degree 2, zero set = union of the two coordinate
// planes.
TestMap holomorphic_product_map();

// (z_1, z_2) -> z_1^2 + z_2^2 on C^2; zero set = the two complex lines
// z_2 = +- i z_1.
TestMap fermat_quadric_map();

// Stock instances at desk dimensions, one per construction above.
std::vector<TestMap> builtin_maps();

// Lookup by TestMap::name among builtin_maps(); throws on unknown names.
TestMap find_map(const std::string& name);

// Max over gaussian probe points of |f(-x) + f(x)| (declared-odd maps) or
// of |f(s x) - s^d f(x)| over a few s > 0 (declared-homogeneous maps).
// Maps without the declaration return 0.
double oddness_defect(const TestMap& map, int probes, std::uint64_t seed);
double homogeneity_defect(const TestMap& map, int probes, std::uint64_t seed);

struct FiberDistanceOptions {
  int starts = 8;
  int iterations = 100;
  double constraint_tol = 1e-9;
  std::uint64_t seed = 1;
};

// Upper bound on dist(x, f^{-1}(y)): multi-start projected Gauss-Newton
// alternating constraint restoration with tangential moves toward x.
// Returns +infinity and clears *converged when no start lands on the fiber.
double optimization_fiber_distance(const TestMap& map, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y,
                                   const FiberDistanceOptions& opt = {},
                                   bool* converged = nullptr);

// The fiber point realizing optimization_fiber_distance (x itself, with
// *converged cleared, when no start lands on the fiber).
Eigen::VectorXd optimization_fiber_point(const TestMap& map,
                                         const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y,
                                         const FiberDistanceOptions& opt = {},
                                         bool* converged = nullptr);

// Same solver with the extra constraint |s| = radius; returns the geodesic
// distance on that sphere from x (which must lie on it) to the constrained
// fiber, again an upper bound.
double sphere_fiber_distance(const TestMap& map, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, double radius,
                             const FiberDistanceOptions& opt = {},
                             bool* converged = nullptr);

}  // namespace waistkit
