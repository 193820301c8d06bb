#pragma once

#include <Eigen/Dense>

namespace waistkit {

// Dense two-phase tableau simplex for
//     max c'x   subject to   A x <= b,   x free.
// Intended for the small instances that arise here (tens of rows).  Bland's
// rule keeps it from cycling; the caller must supply constraints that make
// the problem bounded.
struct LpResult {
  enum Status { kOptimal, kInfeasible, kUnbounded } status = kInfeasible;
  Eigen::VectorXd x;
  double value = 0.0;
};

LpResult solve_lp_max(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b);

}  // namespace waistkit
