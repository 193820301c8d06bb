#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "waistkit/convex_body.hpp"
#include "waistkit/measures.hpp"

namespace waistkit {

// Convex potential of a monotone map.  Grid form: values of U at the cell
// centers of box [box_lo, box_hi], row major, convexified; product form:
// per-axis tables U_i with U(x) = sum_i U_i(x_i).
struct Potential {
  int dim = 0;
  Eigen::VectorXd box_lo, box_hi;
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<Eigen::VectorXd> axis_points;
  std::vector<Eigen::VectorXd> axis_values;

  bool product() const { return values.empty(); }
  double value(const Eigen::VectorXd& x) const;
};

struct TransportDiagnostics {
  std::string route;            // "product" or "grid"
  // max of the 2^n-cell dyadic pushforward discrepancy and the per-axis
  // 8-bin histogram discrepancy (the dyadic check alone is blind on
  // symmetric bodies)
  double tv_discrepancy = 0.0;
  double tv_target = 0.0;
  double epsilon_final = 0.0;   // grid route regularization at acceptance
  int resolution = 0;
  double body_mass = 0.0;       // source-Gaussian mass of the target region
};

struct TransportOptions {
  int resolution = 64;      // grid points per axis (grid route)
  double tv_target = -1.0;  // <0: 1e-6 on the product route, 0.02 on grids
  bool force_grid = false;  // bypass the product shortcut (solver audits)
  // Grid route only.  0 rasterizes the body by a cell-center test, which
  // makes the solved map piecewise constant in the body's halfspace data.
  // A positive value (in cells) replaces the test with a logistic ramp of
  // that width across the boundary, so outer optimizers that move the body
  // see a smooth objective.  Costs a little boundary blur.
  double boundary_smoothing = 0.0;
};

// Monotone map T = grad U pushing the centered Gaussian with the given
// axis scales to its normalized restriction to the body.  Product bodies
// (axis-aligned boxes, ball slack negligible) are solved per axis by CDF
// inversion; otherwise an entropic grid solver (dim <= 3) is annealed
// until the pushforward target is met and the map is the barycentric
// projection of the resulting plan.
class TransportMap {
 public:
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    return evaluate(x);
  }

  // Central-difference Jacobian of the map; step <= 0 picks the grid
  // spacing (grid route) or 1e-4 of the smallest axis sigma (product).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, double step = 0.0) const;

  const Eigen::VectorXd& scales() const { return scales_; }
  const ConvexBody& body() const { return body_; }
  const Potential& potential() const { return potential_; }
  const TransportDiagnostics& diagnostics() const { return diag_; }
  double default_step() const;

 private:
  friend TransportMap solve_monotone_transport(const Eigen::VectorXd&,
                                               const ConvexBody&,
                                               const TransportOptions&);
  TransportMap(const ConvexBody& body) : body_(body) {}

  // product route: closed-form per-axis maps
  struct Axis {
    double sigma = 1.0;
    double lo = 0.0, hi = 0.0;  // restriction interval
    double flo = 0.0, fhi = 1.0;  // source CDF at lo/hi
    double forward(double x) const;
    double inverse(double y) const;
  };
  std::vector<Axis> axes_;

  // grid route: map values per coordinate on the source grid
  Eigen::VectorXd grid_lo_, grid_hi_;
  std::vector<int> grid_shape_;
  std::vector<Eigen::VectorXd> map_values_;  // one tensor per coordinate

  Eigen::VectorXd scales_;
  ConvexBody body_;
  Potential potential_;
  TransportDiagnostics diag_;
};

// Errors: "degenerate" when the body carries source mass below 1e-9;
// "not converged" when the annealed grid solver cannot meet the target at
// the given resolution (the achieved discrepancy is reported).
TransportMap solve_monotone_transport(const Eigen::VectorXd& scales,
                                      const ConvexBody& body,
                                      const TransportOptions& opt = {});

// Caffarelli center T(0); lies in the closed body.
Eigen::VectorXd center(const TransportMap& map);

struct LipschitzAudit {
  double max_ratio = 0.0;        // max |T(x)-T(y)| / |x-y|
  double min_inner_product = 0.0;  // min <T(x)-T(y), x-y>, monotonicity
};
LipschitzAudit lipschitz_audit(const TransportMap& map, int pair_count,
                               std::uint64_t seed);

// Per-point residual  ln det DT_sym(x) - P(T(x)) + Q(x)  of the transport
// equation, with Q, P the normalized source and target log densities and
// DT by central differences.  Points mapping within one step of the body
// boundary (or with non-PD difference Jacobian) are excluded and counted.
struct MaStats {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  int used = 0;
  int excluded = 0;
};
MaStats ma_residual(const TransportMap& map, const Eigen::MatrixXd& points,
                    double step = 0.0);

// Second-order coefficient of t -> ln det(D0 + D1 t + D2 t^2): fourth-order
// finite differences vs the closed form tr B - tr(A^2)/2 with
// A = D0^{-1/2} D1 D0^{-1/2}, B = D0^{-1/2} D2 D0^{-1/2}.  The formula
// value never exceeds tr B.
struct LogdetCoeffs {
  double fd_coeff = 0.0;
  double formula_coeff = 0.0;
  double trace_bound = 0.0;  // tr B
};
LogdetCoeffs logdet_expansion_check(const Eigen::MatrixXd& D0,
                                    const Eigen::MatrixXd& D1,
                                    const Eigen::MatrixXd& D2);

// |c(P) - c(P')| with P' the body with every halfspace offset relaxed by
// eps; a continuity regression along eps -> 0.
double center_stability(const Eigen::VectorXd& scales, const ConvexBody& body,
                        double eps, const TransportOptions& opt = {});

// Pancake parameter eps^2 / (4 (R + eps)) used to pick partition depth.
double pancake_parameter(double eps, double R);

}  // namespace waistkit
