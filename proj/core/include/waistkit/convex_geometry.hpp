#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "waistkit/convex_body.hpp"
#include "waistkit/measures.hpp"

namespace waistkit {

// How body measures are evaluated by the cut machinery.
//  - dims 1 and 2 with a Lebesgue density use deterministic quadrature
//    (relative accuracy ~ tol);
//  - dims >= 3 and singular laws use a fixed stratified sample cloud shared
//    by every evaluation, so the cut is an exact empirical quantile.
// kAuto picks per the rule above; the explicit routes force one engine
// (kQuadrature rejects laws it cannot integrate).
enum class CutRoute { kAuto, kQuadrature, kCloud };

struct CutOptions {
  double tol = 1e-6;          // relative measure tolerance of the cut
  int max_steps = 200;        // bisection budget
  std::size_t mc_count = 200000;
  std::uint64_t mc_seed = 0x5eed;
  CutRoute route = CutRoute::kAuto;
};

// Integral of f over body ∩ {<u,x> <= cut} for a 2-d body, by slicing
// orthogonally to u with breakpoints at region vertices.  `cut` may be
// +inf for the whole body.
double integrate_over_body_2d(
    const ConvexBody& body,
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& u, double cut, double abs_tol);

// Measure of body ∩ {<u,x> <= cut} under the spec (quadrature route,
// dims 1-2 only).
double body_measure_quadrature(const ConvexBody& body, const MeasureSpec& spec,
                               const Eigen::VectorXd& u, double cut,
                               double abs_tol);

// Offset c with  mu(body ∩ {<u,x> <= c}) = fraction * mu(body), found by
// bisection over the support interval.  Throws "degenerate" if the body
// carries no measure and reports the best bracket if the budget runs out.
double equal_measure_cut(const ConvexBody& body, const MeasureSpec& spec,
                         const Eigen::VectorXd& u, double fraction,
                         const CutOptions& opt = {});

// Maximum volume inscribed ellipsoid {center + shape s : |s| <= 1}.
struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;  // symmetric positive definite for full bodies

  Eigen::VectorXd semiaxes() const;  // singular values, descending
  Eigen::MatrixXd axes() const;      // matching directions as columns
};

// Affine flat {base + basis y : y in R^k}, basis columns orthonormal.
struct AffineFlat {
  Eigen::VectorXd base;
  Eigen::MatrixXd basis;  // n x k

  double distance(const Eigen::VectorXd& x) const;
};

// Log-volume barrier solver; rel_gap bounds the relative volume
// suboptimality.  Throws "degenerate" when the body has empty interior.
Ellipsoid john_ellipsoid(const ConvexBody& body, double rel_gap = 1e-6);

// Support-function audit of body ⊆ center + dim * (E - center) over the
// facet normals, the ellipsoid axes, and random probe directions.
// Returns the worst violation (<= 0 means the sandwich held everywhere
// probed).
double john_sandwich_gap(const ConvexBody& body, const Ellipsoid& e,
                         int random_probes = 256, std::uint64_t seed = 1);

// Pancake data: the k-flat spanned by the top John axes, the bound
// delta = dim * (k+1)-th semiaxis, and an independent per-direction
// support certificate for the max distance of the body from the flat
// (one-sided Hausdorff: every body point within that distance of the flat).
struct PancakeDeficiency {
  double delta = 0.0;
  AffineFlat flat;
  double certified_max_distance = 0.0;
  Eigen::VectorXd john_semiaxes;
  Eigen::MatrixXd john_axes;  // all n axes, matching john_semiaxes order
};
PancakeDeficiency pancake_deficiency(const ConvexBody& body, int k);

}  // namespace waistkit
