#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "waistkit/convex_body.hpp"
#include "waistkit/measures.hpp"
#include "waistkit/test_maps.hpp"

namespace waistkit {

// Model curve compared against the measured fiber neighborhoods.  kAuto
// resolves from the measure: gaussian laws compare against the coordinate
// subspace spanned by the k smallest scales, rotation-invariant laws
// against the Euclidean neighborhood of R^{n-k}, and uniform sphere laws
// against great subspheres under geodesic (intrinsic) distance.
enum class RhsModel {
  kAuto,
  kGaussianSubspace,
  kRadialSubspace,
  kSphericalIntrinsic,
};

// Monte Carlo curve of mu(f^{-1}(y) + t) against the model bound.  Atom
// masses enter exactly, so stderr covers the diffuse part only; lhs is
// nondecreasing in t by construction (one distance per sample, shared
// across the grid).  `analytic` records that every distance came from a
// formula; violation certificates require it.
struct WaistCurve {
  Eigen::VectorXd t;
  Eigen::VectorXd lhs;
  Eigen::VectorXd lhs_stderr;
  Eigen::VectorXd rhs;
  Eigen::VectorXd margin;  // lhs - rhs
  Eigen::VectorXd y;
  std::size_t count = 0;
  std::size_t solver_failures = 0;
  bool flagged = false;  // solver failure rate above 1e-3
  bool analytic = true;
};

struct FiberTubeEstimate {
  double estimate = 0.0;
  double stderr_value = 0.0;
  std::size_t count = 0;
  std::size_t solver_failures = 0;
  bool flagged = false;
  bool analytic = true;
};

// mu(f^{-1}(y) + t) by sampling: per-sample distance to the fiber against
// t.  Optimization-based distances are upper bounds, making the estimate a
// lower bound on the true measure.
FiberTubeEstimate fiber_tube_measure(const MeasureSpec& spec, const TestMap& f,
                                     const Eigen::VectorXd& y, double t,
                                     std::size_t count, std::uint64_t seed,
                                     RhsModel model = RhsModel::kAuto);

WaistCurve waist_curve(const MeasureSpec& spec, const TestMap& f,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& t_grid,
                       std::size_t count, std::uint64_t seed,
                       RhsModel model = RhsModel::kAuto);

// Certification that a map beats the model bound at every candidate y.
// status "violated": every y has some t where rhs exceeds lhs by at least
// 3 stderr (or by a closed-form positive amount when stderr is 0), with
// analytic distances throughout.  status "satisfied": some y has margins
// >= -3 stderr at every t, i.e. the bound held where the theorem only
// needs one good y.  Anything else is "inconclusive"; apparent violations
// measured through optimization distances land here, never in "violated",
// because those distances only shrink lhs.
struct YWitness {
  Eigen::VectorXd y;
  double t = 0.0;
  double deficit = 0.0;        // rhs - lhs at the witness t
  double deficit_sigma = 0.0;  // deficit / stderr; +inf for closed forms
  bool closed_form = false;
  bool certified = false;
};

struct Verdict {
  std::string status;  // satisfied | violated | inconclusive
  std::vector<YWitness> witnesses;
  std::vector<WaistCurve> curves;
};

Verdict counterexample_certify(const MeasureSpec& spec, const TestMap& f,
                               const Eigen::VectorXd& t_grid,
                               const std::vector<Eigen::VectorXd>& y_candidates,
                               std::size_t count, std::uint64_t seed,
                               RhsModel model = RhsModel::kAuto);

// End-to-end demonstration for gaussian measures and k = 1: equalize
// F(leaf) = f(center(transport to leaf)) over a depth-I cut hierarchy of
// B(R), take the common value as y, and measure the waist curve there.
// Equalization runs twice: a coarse-grid simplex search, then a polish on
// a finer grid (per-node secant sweeps in the plane, a warm-started
// simplex otherwise).
struct DemoOptions {
  int depth = 2;
  double R = 6.0;
  std::size_t count = 1000000;
  std::uint64_t seed = 1;
  Eigen::VectorXd t_grid;
  int coarse_resolution = 24;
  int final_resolution = 48;
  double coarse_tv = 0.08;
  double final_tv = 0.05;
  int budget = 400;         // coarse-phase partition evaluations
  int polish_budget = 100;  // warm-started fine-phase evaluations
  int starts = 2;
  double spread_target = 2e-3;
  std::size_t cut_cloud = 40000;
  // Transport boundary smoothing in grid cells.  Without it F is piecewise
  // constant in the cut angles (the rasterized leaf is unchanged under
  // small rotations) and the equalizer stalls on plateaus.
  double transport_smoothing = 0.75;
};

struct DemoResult {
  double y_found = 0.0;
  double spread = 0.0;
  bool equalized = false;  // spread target met (curve is produced anyway)
  int evaluations = 0;
  WaistCurve curve;
};

DemoResult equalized_waist_demo(const Eigen::VectorXd& scales, const TestMap& f,
                                const DemoOptions& opt);

// Gauge-distance neighborhood check for odd maps on a centrally symmetric
// body K with uniform measure: lhs(t) = fraction of K within gauge
// distance t of f^{-1}(0), rhs(t) = t^{n-k}.  Gauge displacements are
// measured to the Euclidean-nearest fiber point, an upper bound on the
// gauge distance, so lhs is again a lower bound.
WaistCurve norm_neighborhood_check(const ConvexBody& K, const TestMap& f,
                                   const Eigen::VectorXd& t_grid,
                                   std::size_t count, std::uint64_t seed);

// Minkowski functional of K at v: max over facets of <normal,v>/offset and
// |v|/R.  Requires 0 in the interior (all offsets positive).
double gauge(const ConvexBody& K, const Eigen::VectorXd& v);

}  // namespace waistkit
