#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "waistkit/rng.hpp"

namespace waistkit {

// Where a submanifold lives.  Points are unit vectors: R^{n+1} for S^n,
// and for CP^n a lift representative on S^{2n+1} stored as (re, im) pairs
// in R^{2n+2}.  The Fubini-Study metric is scaled so diam CP^n = pi/2,
// which makes it the quotient metric of the unit round S^{2n+1}.
enum class AmbientKind { kSphere, kComplexProjective };

// Smooth parametrization patch: an axis box in R^m mapped onto the ambient.
struct Chart {
  Eigen::MatrixXd box;  // m x 2, column 0 = lower, column 1 = upper bound
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map;
};

// coeff * prod_i z_i^{powers[i]} over C^{n+1}.
struct Monomial {
  std::complex<double> coeff;
  Eigen::VectorXi powers;
};

// Sparse polynomial over C^{n+1}.  The algebraic manifolds below are
// simultaneous zero sets of homogeneous ones.
struct Polynomial {
  std::vector<Monomial> terms;

  std::complex<double> evaluate(const Eigen::VectorXcd& z) const;
  Eigen::VectorXcd gradient(const Eigen::VectorXcd& z) const;
  int total_degree() const;
};

// Submanifold of S^n or CP^n, represented by parametrization charts or by
// homogeneous polynomials.  dim is the real dimension on the chart route
// and the complex dimension on the algebraic route; degree is the
// algebraic total degree (0 when unknown or chart-based).
struct EmbeddedManifold {
  std::string name;
  AmbientKind ambient = AmbientKind::kSphere;
  int ambient_n = 2;  // the n of S^n or CP^n
  int dim = 1;
  int degree = 0;
  std::vector<Chart> charts;
  std::vector<Polynomial> polys;
  bool circle_invariant = false;  // Hopf preimage on the odd sphere

  bool algebraic() const { return !polys.empty(); }
  int ambient_real_dim() const {
    return ambient == AmbientKind::kSphere ? ambient_n + 1
                                           : 2 * (ambient_n + 1);
  }
};

// Great S^k in S^n spanned by the first k + 1 coordinates (k in [1, 2]
// charts); volume-critical, the equality case of the critical lower bound.
EmbeddedManifold great_subsphere(int n, int k);

// Latitude circle in S^2.  Not volume-critical: its tube fraction drops
// below the great-circle bound, the probe's negative control.
EmbeddedManifold small_circle(double latitude);

// Minimal Clifford torus |u| = |v| = 1/sqrt(2) in S^3; its t-tube fraction
// is exactly sin 2t for t <= pi/4.
EmbeddedManifold clifford_torus();

// CP^k inside CP^n cut out by the n - k trailing coordinates; degree 1,
// the equality case of both the algebraic lower and the degree upper bound.
EmbeddedManifold projective_subspace(int n, int k);

// Smooth conic z0 z2 = z1^2 in CP^2, degree 2.
EmbeddedManifold conic_curve();

// Fermat hypersurface z0^d + z1^d + z2^d = 0 in CP^2 (smooth for d >= 1).
EmbeddedManifold fermat_curve(int degree);

// The same polynomial system read as a zero set on the unit sphere of
// C^{n+1}: the unit circle bundle over X, with the real dimension and the
// degree carried over.  Tube fractions upstairs and downstairs agree
// because the fibration is a Riemannian submersion with circle fibers.
EmbeddedManifold hopf_lift(const EmbeddedManifold& x);

// Uniform ambient point (unit vector; CP^n yields a lift representative).
Eigen::VectorXd sample_ambient(const EmbeddedManifold& m, CounterRng& rng);

// Geodesic distance between ambient points: arccos x.y on the sphere,
// arccos |<z, w>| on CP^n.
double ambient_distance(const EmbeddedManifold& m, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y);

// Exact variety points: roots of the system restricted to random
// projective lines (companion-matrix roots for hypersurfaces, a null-space
// basis for linear systems), normalized to the unit sphere.
std::vector<Eigen::VectorXd> variety_cloud(const EmbeddedManifold& m,
                                           int count, std::uint64_t seed);

struct GeodesicOptions {
  int starts = 16;             // variety solver starts (nearest cloud points)
  int iterations = 60;         // projection/pull rounds per start
  double constraint_tol = 1e-9;
  int cloud = 256;             // start cloud size for one-shot queries
  std::uint64_t seed = 1;
  int grid = 48;               // chart scan resolution per axis
  int refine = 60;             // chart refinement evaluations
};

struct GeodesicResult {
  double distance = 0.0;  // upper bound on the true distance
  bool converged = false;
  Eigen::VectorXd point;  // nearest manifold point found
};

// Upper bound on the geodesic distance from q to the manifold: chart grid
// scan plus local refinement, or constrained projection onto the variety
// started from the nearest cloud points.  Unconverged variety queries
// return +inf with converged = false.
GeodesicResult geodesic_distance_to(const EmbeddedManifold& m,
                                    const Eigen::VectorXd& q,
                                    const GeodesicOptions& opt = {});

// Same, reusing a precomputed start cloud (the batch estimators below
// build one cloud and share it across all samples).
GeodesicResult geodesic_distance_to(const EmbeddedManifold& m,
                                    const Eigen::VectorXd& q,
                                    const std::vector<Eigen::VectorXd>& cloud,
                                    const GeodesicOptions& opt);

struct TubeEstimate {
  double t = 0.0;
  double estimate = 0.0;     // lower-bounds the true fraction (see below)
  double stderr_value = 0.0;
  double lower = 0.0;        // critical / algebraic model bound
  double upper = 1.0;        // degree x projective tube when degree known
  double failure_fraction = 0.0;
  std::string verdict;  // consistent | below_lower | above_upper | inconclusive
};

// Fraction of the ambient within distance t of the manifold, by uniform
// sampling.  Distances are upper bounds, so the estimate lower-bounds the
// true fraction: checking estimate >= lower - 3 stderr is sound as is,
// while the upper verdict adds the failure fraction to the budget and
// demands it stay below 1e-3.  The grid overload solves one distance per
// sample and thresholds it against every t.
TubeEstimate tube_fraction_mc(const EmbeddedManifold& m, double t,
                              std::size_t count, std::uint64_t seed,
                              const GeodesicOptions& opt = {});
std::vector<TubeEstimate> tube_fraction_mc(const EmbeddedManifold& m,
                                           const Eigen::VectorXd& t_grid,
                                           std::size_t count,
                                           std::uint64_t seed,
                                           const GeodesicOptions& opt = {});

// Sandwich check lower <= fraction <= degree x projective tube for a
// smooth algebraic manifold; throws if the gradient-rank probe at cloud
// points flags a singular variety.
std::vector<TubeEstimate> degree_bound_check(const EmbeddedManifold& m,
                                             const Eigen::VectorXd& t_grid,
                                             std::size_t count,
                                             std::uint64_t seed,
                                             const GeodesicOptions& opt = {});

struct VoronoiReport {
  int sites = 0;                  // after any halving
  std::vector<double> cell_mass;  // ambient fraction per site
  std::vector<int> cell_count;
  Eigen::VectorXd histogram;  // signed normal displacement, odd bin count
  int mode_bin = -1;
  bool mode_central = false;
};

// Nearest-site decomposition along a one-chart curve in S^2: sites are
// equispaced in the chart parameter (seeded phase), ambient samples are
// classified by geodesic nearest site, and the signed normal displacement
// histogram should peak at the central bin exactly for volume-critical
// curves.  Site count halves until every cell holds >= 1000 samples.
VoronoiReport voronoi_disintegration_probe(const EmbeddedManifold& m,
                                           int site_count, std::size_t count,
                                           std::uint64_t seed);

// Average number of verified intersection points of the hypersurface with
// random projective lines; equals the degree for smooth curves, so it
// doubles as a chart-free volume probe (volume = mean x vol CP^k).
double crofton_degree_probe(const EmbeddedManifold& m, int lines,
                            std::uint64_t seed);

// max | |chart(u)| - 1 | over random box points: chart images must lie on
// the ambient sphere or lift sphere.
double chart_defect(const EmbeddedManifold& m, int probes, std::uint64_t seed);

// max |P(lambda z) - lambda^d P(z)| over random complex probes, scaled by
// the coefficient mass: homogeneity of the defining polynomials.
double homogeneity_defect(const EmbeddedManifold& m, int probes,
                          std::uint64_t seed);

// max |dist(q) - dist(e^{i theta} q)| over random probes: all lifted
// quantities must be invariant under the circle action.
double circle_invariance_defect(const EmbeddedManifold& m, int probes,
                                std::uint64_t seed,
                                const GeodesicOptions& opt = {});

}  // namespace waistkit
