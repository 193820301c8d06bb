#include "waistkit/linprog.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace waistkit {

namespace {

constexpr double kTol = 1e-10;

// Tableau rows: one per constraint, last column is the rhs.  `cost` is the
// reduced-cost row of the phase being solved, kept in sync by pivoting.
struct Tableau {
  Eigen::MatrixXd t;          // m x (nv + 1)
  Eigen::VectorXd cost;       // nv + 1 (last entry = -objective value)
  std::vector<int> basis;     // basic variable per row
  std::vector<bool> banned;   // columns barred from entering

  int rows() const { return static_cast<int>(t.rows()); }
  int vars() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int row, int col) {
    t.row(row) /= t(row, col);
    for (int i = 0; i < rows(); ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f != 0.0) t.row(i) -= f * t.row(row);
    }
    const double f = cost[col];
    if (f != 0.0)
      cost -= f * t.row(row).transpose();
    basis[static_cast<std::size_t>(row)] = col;
  }

  // Bland's rule; returns false when optimal, throws when unbounded.
  bool step() {
    int enter = -1;
    for (int j = 0; j < vars(); ++j) {
      if (banned[static_cast<std::size_t>(j)]) continue;
      if (cost[j] < -kTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return false;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows(); ++i) {
      if (t(i, enter) > kTol) {
        const double ratio = t(i, vars()) / t(i, enter);
        if (ratio < best - kTol ||
            (ratio < best + kTol &&
             (leave < 0 || basis[static_cast<std::size_t>(i)] <
                               basis[static_cast<std::size_t>(leave)]))) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw std::runtime_error("lp: unbounded direction");
    pivot(leave, enter);
    return true;
  }

  void run(int max_iters) {
    for (int it = 0; it < max_iters; ++it)
      if (!step()) return;
    throw std::runtime_error("lp: iteration budget exhausted");
  }
};

}  // namespace

LpResult solve_lp_max(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  if (A.cols() != n || b.size() != m)
    throw std::invalid_argument("lp: shape mismatch");

  // columns: x+ (n) | x- (n) | slack (m) | artificial (na)
  int na = 0;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0.0) ++na;
  const int nv = 2 * n + m + na;

  Tableau tab;
  tab.t.setZero(m, nv + 1);
  tab.basis.assign(static_cast<std::size_t>(m), -1);
  tab.banned.assign(static_cast<std::size_t>(nv), false);

  int art = 2 * n + m;
  for (int i = 0; i < m; ++i) {
    const double sign = (b[i] < 0.0) ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      tab.t(i, j) = sign * A(i, j);
      tab.t(i, n + j) = -sign * A(i, j);
    }
    tab.t(i, 2 * n + i) = sign;  // slack
    tab.t(i, nv) = sign * b[i];
    if (sign < 0.0) {
      tab.t(i, art) = 1.0;
      tab.basis[static_cast<std::size_t>(i)] = art;
      ++art;
    } else {
      tab.basis[static_cast<std::size_t>(i)] = 2 * n + i;
    }
  }

  LpResult res;

  if (na > 0) {
    // phase 1: minimize the sum of artificials
    tab.cost.setZero(nv + 1);
    for (int j = 2 * n + m; j < nv; ++j) tab.cost[j] = 1.0;
    for (int i = 0; i < m; ++i)
      if (tab.basis[static_cast<std::size_t>(i)] >= 2 * n + m)
        tab.cost -= tab.t.row(i).transpose();
    tab.run(20000);
    if (-tab.cost[nv] > 1e-7) {
      res.status = LpResult::kInfeasible;
      return res;
    }
    for (int j = 2 * n + m; j < nv; ++j)
      tab.banned[static_cast<std::size_t>(j)] = true;
    // pivot any artificial stuck in the basis out along a real column
    for (int i = 0; i < m; ++i) {
      if (tab.basis[static_cast<std::size_t>(i)] < 2 * n + m) continue;
      for (int j = 0; j < 2 * n + m; ++j) {
        if (std::fabs(tab.t(i, j)) > 1e-8) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  // phase 2: minimize -c'x
  tab.cost.setZero(nv + 1);
  for (int j = 0; j < n; ++j) {
    tab.cost[j] = -c[j];
    tab.cost[n + j] = c[j];
  }
  for (int i = 0; i < m; ++i) {
    const int bj = tab.basis[static_cast<std::size_t>(i)];
    const double f = tab.cost[bj];
    if (f != 0.0) tab.cost -= f * tab.t.row(i).transpose();
  }
  try {
    tab.run(20000);
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).find("unbounded") != std::string::npos) {
      res.status = LpResult::kUnbounded;
      return res;
    }
    throw;
  }

  res.status = LpResult::kOptimal;
  res.x.setZero(n);
  for (int i = 0; i < m; ++i) {
    const int bj = tab.basis[static_cast<std::size_t>(i)];
    const double v = tab.t(i, nv);
    if (bj < n)
      res.x[bj] += v;
    else if (bj < 2 * n)
      res.x[bj - n] -= v;
  }
  res.value = c.dot(res.x);
  return res;
}

}  // namespace waistkit
