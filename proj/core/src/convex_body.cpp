#include "waistkit/convex_body.hpp"

#include <cmath>
#include <stdexcept>

#include "waistkit/linprog.hpp"
#include "waistkit/rng.hpp"
#include "waistkit/special.hpp"

namespace waistkit {

ConvexBody::ConvexBody(int dim, double bounding_radius)
    : dim_(dim), radius_(bounding_radius) {
  if (dim < 1) throw std::invalid_argument("body: dim must be >= 1");
  if (!(bounding_radius > 0.0))
    throw std::invalid_argument("body: bounding radius <= 0");
}

void ConvexBody::add_halfspace(const Eigen::VectorXd& normal, double offset) {
  if (normal.size() != dim_)
    throw std::invalid_argument("body: halfspace dimension mismatch");
  const double len = normal.norm();
  if (!(len > 1e-14))
    throw std::invalid_argument("body: zero halfspace normal");
  halfspaces_.push_back({normal / len, offset / len});
}

bool ConvexBody::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.norm() > radius_ + tol) return false;
  for (const Halfspace& h : halfspaces_)
    if (h.normal.dot(x) > h.offset + tol) return false;
  return true;
}

namespace {

// Linear rows a_i^T x <= b_i of the body plus its bounding box; the ball
// itself enters the support solver through the barrier term.
void linear_rows(const ConvexBody& body, Eigen::MatrixXd& A,
                 Eigen::VectorXd& b) {
  const int n = body.dim();
  const int m0 = static_cast<int>(body.halfspaces().size());
  A.setZero(m0 + 2 * n, n);
  b.setZero(m0 + 2 * n);
  int r = 0;
  for (const Halfspace& h : body.halfspaces()) {
    A.row(r) = h.normal.transpose();
    b[r++] = h.offset;
  }
  for (int i = 0; i < n; ++i) {
    A(r, i) = 1.0;
    b[r++] = body.bounding_radius();
    A(r, i) = -1.0;
    b[r++] = body.bounding_radius();
  }
}

}  // namespace

SupportPoint support(const ConvexBody& body, const Eigen::VectorXd& u) {
  const int n = body.dim();
  if (u.size() != n) throw std::invalid_argument("support: dim mismatch");
  if (!(u.norm() > 1e-14))
    throw std::invalid_argument("support: zero direction");
  const double R = body.bounding_radius();

  const InnerBall ib = chebyshev_ball(body);
  if (!(ib.margin > 1e-12 * (1.0 + R)))
    throw std::runtime_error("support: empty body");

  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  linear_rows(body, A, b);
  const double m_tot = static_cast<double>(A.rows()) + 1.0;
  const double gap = 1e-10 * (1.0 + R) * std::max(1.0, u.norm());
  const double t_final = m_tot / gap;

  // Central path of max <u,x> over {Ax <= b} ∩ ball(0,R); the duality gap
  // at parameter t is (rows+1)/t.
  auto barrier = [&](const Eigen::VectorXd& z, double t, double& f) {
    const Eigen::VectorXd s = b - A * z;
    const double q = R * R - z.squaredNorm();
    if (s.minCoeff() <= 0.0 || q <= 0.0) return false;
    f = -t * u.dot(z) - s.array().log().sum() - std::log(q);
    return true;
  };

  Eigen::VectorXd x = ib.center;
  for (double t = 1.0;; t = std::min(10.0 * t, t_final)) {
    for (int it = 0; it < 60; ++it) {
      const Eigen::VectorXd s = b - A * x;
      const double q = R * R - x.squaredNorm();
      const Eigen::VectorXd g =
          -t * u + A.transpose() * s.cwiseInverse() + (2.0 / q) * x;
      const Eigen::MatrixXd As = s.cwiseInverse().asDiagonal() * A;
      Eigen::MatrixXd H = As.transpose() * As;
      H += (2.0 / q) * Eigen::MatrixXd::Identity(n, n);
      H += (4.0 / (q * q)) * (x * x.transpose());
      Eigen::LLT<Eigen::MatrixXd> llt(H);
      if (llt.info() != Eigen::Success) break;
      const Eigen::VectorXd p = -llt.solve(g);
      const double dec = -g.dot(p);  // squared Newton decrement
      if (!(dec > 1e-9)) break;
      double f0 = 0.0, f1 = 0.0;
      barrier(x, t, f0);
      double step = 1.0;
      while (step > 1e-16 &&
             (!barrier(x + step * p, t, f1) || f1 > f0 - 0.25 * step * dec))
        step *= 0.5;
      if (step <= 1e-16) break;
      x += step * p;
    }
    if (t >= t_final) break;
  }
  SupportPoint sp;
  sp.value = u.dot(x);
  sp.point = x;
  return sp;
}

double directional_width(const ConvexBody& body, const Eigen::VectorXd& u) {
  const Eigen::VectorXd un = u / u.norm();
  return support(body, un).value + support(body, -un).value;
}

InnerBall chebyshev_ball(const ConvexBody& body) {
  const int n = body.dim();
  const double R = body.bounding_radius();

  // variables (x, eps): max eps s.t. <a_i,x> + eps <= c_i and |x| + eps <= R
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  const int m0 = static_cast<int>(body.halfspaces().size());
  int cap = m0 + 2 * n + 1 + 600;
  a.setZero(cap, n + 1);
  b.setZero(cap);
  int rows = 0;
  auto push = [&](const Eigen::VectorXd& nr, double rhs, double ec) {
    a.row(rows).head(n) = nr.transpose();
    a(rows, n) = ec;
    b[rows] = rhs;
    ++rows;
  };
  for (const Halfspace& h : body.halfspaces()) push(h.normal, h.offset, 1.0);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[i] = 1.0;
    push(e, R, 1.0);
    push(-e, R, 1.0);
  }
  push(Eigen::VectorXd::Zero(n), R, 1.0);  // eps <= R
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(n + 1);
  obj[n] = 1.0;

  InnerBall ball;
  ball.center = Eigen::VectorXd::Zero(n);
  for (int iter = 0; iter < 500; ++iter) {
    const LpResult res = solve_lp_max(obj, a.topRows(rows), b.head(rows));
    if (res.status != LpResult::kOptimal) {
      ball.margin = -1.0;
      return ball;
    }
    const Eigen::VectorXd x = res.x.head(n);
    const double eps = res.x[n];
    if (x.norm() + eps <= R * (1.0 + 1e-9) + 1e-12) {
      ball.center = x;
      ball.margin = eps;
      return ball;
    }
    if (rows == cap) break;
    push(x / x.norm(), R, 1.0);
  }
  throw std::runtime_error("chebyshev_ball: ball cuts did not converge");
}

ConvexBody voronoi_cell(const Eigen::VectorXd& site,
                        const std::vector<Eigen::VectorXd>& sites,
                        const ConvexBody& ambient) {
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      if ((sites[i] - sites[j]).norm() < 1e-12)
        throw std::invalid_argument("voronoi_cell: duplicate sites");
  ConvexBody cell = ambient;
  for (const Eigen::VectorXd& other : sites) {
    const Eigen::VectorXd d = other - site;
    if (d.norm() < 1e-12) continue;  // the site itself
    // bisector: <d, x> <= (|other|^2 - |site|^2) / 2
    cell.add_halfspace(d, 0.5 * (other.squaredNorm() - site.squaredNorm()));
  }
  return cell;
}

ConvexBody random_polytope(int dim, int facets, double R, std::uint64_t seed) {
  if (facets < 1) throw std::invalid_argument("random_polytope: no facets");
  ConvexBody body(dim, R);
  CounterRng rng(seed, 0x9001);
  for (int f = 0; f < facets; ++f) {
    Eigen::VectorXd normal(dim);
    double norm2 = 0.0;
    do {
      for (int i = 0; i < dim; ++i) normal[i] = norminv(rng.next_unit());
      norm2 = normal.squaredNorm();
    } while (!(norm2 > 0.0));
    normal /= std::sqrt(norm2);
    const double offset = R * (0.35 + 0.4 * rng.next_unit());
    body.add_halfspace(normal, offset);
  }
  return body;
}

}  // namespace waistkit
