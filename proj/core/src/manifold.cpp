#include "waistkit/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "waistkit/special.hpp"
#include "waistkit/tube_volumes.hpp"

namespace waistkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXcd complexify(const Eigen::VectorXd& x) {
  Eigen::VectorXcd z(x.size() / 2);
  for (int a = 0; a < z.size(); ++a) z[a] = {x[2 * a], x[2 * a + 1]};
  return z;
}

Eigen::VectorXd realify(const Eigen::VectorXcd& z) {
  Eigen::VectorXd x(2 * z.size());
  for (int a = 0; a < z.size(); ++a) {
    x[2 * a] = z[a].real();
    x[2 * a + 1] = z[a].imag();
  }
  return x;
}

std::complex<double> ipow(std::complex<double> z, int p) {
  std::complex<double> out = 1.0;
  for (int i = 0; i < p; ++i) out *= z;
  return out;
}

// Total coefficient mass, the natural residual scale at unit arguments.
double coeff_mass(const Polynomial& p) {
  double s = 0.0;
  for (const Monomial& t : p.terms) s += std::abs(t.coeff);
  return s;
}

double gaussian(CounterRng& rng) { return norminv(rng.next_unit()); }

// Phase-align a complex-represented point so its real dot with q equals
// |<z, q>|: the canonical circle representative nearest to q.
Eigen::VectorXd phase_align(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& q) {
  const Eigen::VectorXcd z = complexify(x), w = complexify(q);
  std::complex<double> ip = 0.0;
  for (int a = 0; a < z.size(); ++a) ip += z[a] * std::conj(w[a]);
  const double mag = std::abs(ip);
  if (mag < 1e-15) return x;
  return realify(std::conj(ip) / mag * z.array());
}

}  // namespace

std::complex<double> Polynomial::evaluate(const Eigen::VectorXcd& z) const {
  std::complex<double> out = 0.0;
  for (const Monomial& t : terms) {
    std::complex<double> v = t.coeff;
    for (int i = 0; i < t.powers.size(); ++i) v *= ipow(z[i], t.powers[i]);
    out += v;
  }
  return out;
}

Eigen::VectorXcd Polynomial::gradient(const Eigen::VectorXcd& z) const {
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(z.size());
  for (const Monomial& t : terms)
    for (int i = 0; i < t.powers.size(); ++i) {
      if (t.powers[i] == 0) continue;
      std::complex<double> v = t.coeff * static_cast<double>(t.powers[i]) *
                               ipow(z[i], t.powers[i] - 1);
      for (int j = 0; j < t.powers.size(); ++j)
        if (j != i) v *= ipow(z[j], t.powers[j]);
      g[i] += v;
    }
  return g;
}

int Polynomial::total_degree() const {
  int d = 0;
  for (const Monomial& t : terms) d = std::max(d, int(t.powers.sum()));
  return d;
}

// ---------------------------------------------------------------------
// factories
// ---------------------------------------------------------------------

EmbeddedManifold great_subsphere(int n, int k) {
  if (n < 2 || k < 1 || k >= n)
    throw std::invalid_argument("great_subsphere: need 1 <= k < n, n >= 2");
  if (k > 2)
    throw std::invalid_argument("great_subsphere: charts provided for k <= 2");
  EmbeddedManifold m;
  m.name = "great_s" + std::to_string(k) + "_in_s" + std::to_string(n);
  m.ambient_n = n;
  m.dim = k;
  Chart c;
  const int amb = n + 1;
  if (k == 1) {
    c.box.resize(1, 2);
    c.box << 0.0, 2.0 * M_PI;
    c.map = [amb](const Eigen::VectorXd& u) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(amb);
      p[0] = std::cos(u[0]);
      p[1] = std::sin(u[0]);
      return p;
    };
  } else {
    c.box.resize(2, 2);
    c.box << 0.0, M_PI, 0.0, 2.0 * M_PI;
    c.map = [amb](const Eigen::VectorXd& u) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(amb);
      p[0] = std::sin(u[0]) * std::cos(u[1]);
      p[1] = std::sin(u[0]) * std::sin(u[1]);
      p[2] = std::cos(u[0]);
      return p;
    };
  }
  m.charts.push_back(std::move(c));
  return m;
}

EmbeddedManifold small_circle(double latitude) {
  if (std::abs(latitude) >= M_PI / 2)
    throw std::invalid_argument("small_circle: |latitude| < pi/2");
  EmbeddedManifold m;
  m.name = "small_circle";
  m.ambient_n = 2;
  m.dim = 1;
  Chart c;
  c.box.resize(1, 2);
  c.box << 0.0, 2.0 * M_PI;
  c.map = [latitude](const Eigen::VectorXd& u) {
    Eigen::VectorXd p(3);
    p << std::cos(latitude) * std::cos(u[0]),
        std::cos(latitude) * std::sin(u[0]), std::sin(latitude);
    return p;
  };
  m.charts.push_back(std::move(c));
  return m;
}

EmbeddedManifold clifford_torus() {
  EmbeddedManifold m;
  m.name = "clifford_torus";
  m.ambient_n = 3;
  m.dim = 2;
  Chart c;
  c.box.resize(2, 2);
  c.box << 0.0, 2.0 * M_PI, 0.0, 2.0 * M_PI;
  const double r = 1.0 / std::sqrt(2.0);
  c.map = [r](const Eigen::VectorXd& u) {
    Eigen::VectorXd p(4);
    p << r * std::cos(u[0]), r * std::sin(u[0]), r * std::cos(u[1]),
        r * std::sin(u[1]);
    return p;
  };
  m.charts.push_back(std::move(c));
  return m;
}

EmbeddedManifold projective_subspace(int n, int k) {
  if (n < 1 || k < 0 || k > n)
    throw std::invalid_argument("projective_subspace: need 0 <= k <= n");
  EmbeddedManifold m;
  m.name = "cp" + std::to_string(k) + "_in_cp" + std::to_string(n);
  m.ambient = AmbientKind::kComplexProjective;
  m.ambient_n = n;
  m.dim = k;
  m.degree = 1;
  for (int j = k + 1; j <= n; ++j) {
    Polynomial p;
    Monomial t;
    t.coeff = 1.0;
    t.powers = Eigen::VectorXi::Zero(n + 1);
    t.powers[j] = 1;
    p.terms.push_back(std::move(t));
    m.polys.push_back(std::move(p));
  }
  return m;
}

EmbeddedManifold conic_curve() {
  EmbeddedManifold m;
  m.name = "conic";
  m.ambient = AmbientKind::kComplexProjective;
  m.ambient_n = 2;
  m.dim = 1;
  m.degree = 2;
  Polynomial p;
  Monomial a, b;
  a.coeff = 1.0;
  a.powers = Eigen::VectorXi::Zero(3);
  a.powers[0] = 1;
  a.powers[2] = 1;
  b.coeff = -1.0;
  b.powers = Eigen::VectorXi::Zero(3);
  b.powers[1] = 2;
  p.terms = {a, b};
  m.polys.push_back(std::move(p));
  return m;
}

EmbeddedManifold fermat_curve(int degree) {
  if (degree < 1) throw std::invalid_argument("fermat_curve: degree >= 1");
  EmbeddedManifold m;
  m.name = "fermat_d" + std::to_string(degree);
  m.ambient = AmbientKind::kComplexProjective;
  m.ambient_n = 2;
  m.dim = 1;
  m.degree = degree;
  Polynomial p;
  for (int i = 0; i < 3; ++i) {
    Monomial t;
    t.coeff = 1.0;
    t.powers = Eigen::VectorXi::Zero(3);
    t.powers[i] = degree;
    p.terms.push_back(std::move(t));
  }
  m.polys.push_back(std::move(p));
  return m;
}

EmbeddedManifold hopf_lift(const EmbeddedManifold& x) {
  if (!x.charts.empty() || x.ambient != AmbientKind::kComplexProjective)
    throw std::invalid_argument("hopf_lift: algebraic CP^n manifold required");
  EmbeddedManifold y = x;
  y.name = "hopf_" + x.name;
  y.ambient = AmbientKind::kSphere;
  y.ambient_n = 2 * x.ambient_n + 1;
  y.dim = 2 * x.dim + 1;
  y.circle_invariant = true;
  return y;
}

// ---------------------------------------------------------------------
// ambient helpers
// ---------------------------------------------------------------------

Eigen::VectorXd sample_ambient(const EmbeddedManifold& m, CounterRng& rng) {
  const int d = m.ambient_real_dim();
  Eigen::VectorXd x(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) x[i] = gaussian(rng);
    norm = x.norm();
  } while (norm < 1e-12);
  return x / norm;
}

double ambient_distance(const EmbeddedManifold& m, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) {
  if (m.ambient == AmbientKind::kSphere)
    return std::acos(std::clamp(x.dot(y), -1.0, 1.0));
  const Eigen::VectorXcd z = complexify(x), w = complexify(y);
  std::complex<double> ip = 0.0;
  for (int a = 0; a < z.size(); ++a) ip += z[a] * std::conj(w[a]);
  return std::acos(std::clamp(std::abs(ip), 0.0, 1.0));
}

// ---------------------------------------------------------------------
// variety plumbing
// ---------------------------------------------------------------------

namespace {

bool all_linear(const EmbeddedManifold& m) {
  for (const Polynomial& p : m.polys)
    if (p.total_degree() != 1) return false;
  return !m.polys.empty();
}

// Orthonormal basis of the common complex null space of the linear system.
Eigen::MatrixXcd linear_kernel(const EmbeddedManifold& m) {
  const int mc = m.ambient_real_dim() / 2;
  const int rows = static_cast<int>(m.polys.size());
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(rows, mc);
  for (int j = 0; j < rows; ++j)
    for (const Monomial& t : m.polys[j].terms)
      for (int i = 0; i < mc; ++i)
        if (t.powers[i] == 1) A(j, i) += t.coeff;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullV);
  const int rank = static_cast<int>(svd.rank());
  if (rank >= mc)
    throw std::invalid_argument("variety is empty: full-rank linear system");
  return svd.matrixV().rightCols(mc - rank);
}

// Coefficients of P(a + t b) as a univariate polynomial in t, low to high.
Eigen::VectorXcd line_restriction(const Polynomial& p,
                                  const Eigen::VectorXcd& a,
                                  const Eigen::VectorXcd& b) {
  const int d = p.total_degree();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(d + 1);
  for (const Monomial& t : p.terms) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(1);
    acc[0] = t.coeff;
    for (int i = 0; i < t.powers.size(); ++i)
      for (int rep = 0; rep < t.powers[i]; ++rep) {
        Eigen::VectorXcd nxt = Eigen::VectorXcd::Zero(acc.size() + 1);
        for (int c = 0; c < acc.size(); ++c) {
          nxt[c] += acc[c] * a[i];
          nxt[c + 1] += acc[c] * b[i];
        }
        acc.swap(nxt);
      }
    for (int c = 0; c < acc.size(); ++c) out[c] += acc[c];
  }
  return out;
}

// Roots by companion matrix plus two Newton polish steps.
std::vector<std::complex<double>> poly_roots(const Eigen::VectorXcd& coeffs) {
  int deg = static_cast<int>(coeffs.size()) - 1;
  while (deg > 0 && std::abs(coeffs[deg]) == 0.0) --deg;
  std::vector<std::complex<double>> roots;
  if (deg < 1) return roots;
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) C(i, deg - 1) = -coeffs[i] / coeffs[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
  for (int r = 0; r < deg; ++r) {
    std::complex<double> t = es.eigenvalues()[r];
    for (int it = 0; it < 2; ++it) {
      std::complex<double> v = 0.0, dv = 0.0;
      for (int c = deg; c >= 0; --c) {
        dv = dv * t + v;
        v = v * t + coeffs[c];
      }
      if (std::abs(dv) > 1e-300) t -= v / dv;
    }
    if (std::isfinite(t.real()) && std::isfinite(t.imag())) roots.push_back(t);
  }
  return roots;
}

}  // namespace

std::vector<Eigen::VectorXd> variety_cloud(const EmbeddedManifold& m,
                                           int count, std::uint64_t seed) {
  if (!m.algebraic())
    throw std::invalid_argument("variety_cloud: algebraic manifold required");
  const int mc = m.ambient_real_dim() / 2;
  CounterRng rng(seed, 0xc10cdull);
  std::vector<Eigen::VectorXd> cloud;
  cloud.reserve(count);
  if (all_linear(m)) {
    const Eigen::MatrixXcd K = linear_kernel(m);
    while (static_cast<int>(cloud.size()) < count) {
      Eigen::VectorXcd g(K.cols());
      for (int i = 0; i < g.size(); ++i) g[i] = {gaussian(rng), gaussian(rng)};
      Eigen::VectorXcd z = K * g;
      const double n = z.norm();
      if (n < 1e-12) continue;
      cloud.push_back(realify(z / n));
    }
    return cloud;
  }
  if (m.polys.size() != 1)
    throw std::invalid_argument(
        "variety_cloud: nonlinear systems supported for hypersurfaces only");
  const Polynomial& p = m.polys[0];
  const double scale = coeff_mass(p);
  int attempts = 0;
  while (static_cast<int>(cloud.size()) < count && attempts < 200 * count) {
    ++attempts;
    Eigen::VectorXcd a(mc), b(mc);
    for (int i = 0; i < mc; ++i) {
      a[i] = {gaussian(rng), gaussian(rng)};
      b[i] = {gaussian(rng), gaussian(rng)};
    }
    const Eigen::VectorXcd coeffs = line_restriction(p, a, b);
    if (std::abs(coeffs[coeffs.size() - 1]) <
        1e-10 * coeffs.cwiseAbs().maxCoeff())
      continue;
    for (const std::complex<double>& t : poly_roots(coeffs)) {
      Eigen::VectorXcd z = a + t * b;
      const double n = z.norm();
      if (n < 1e-12) continue;
      z /= n;
      if (std::abs(p.evaluate(z)) > 1e-8 * scale) continue;
      cloud.push_back(realify(z));
      if (static_cast<int>(cloud.size()) == count) break;
    }
  }
  if (static_cast<int>(cloud.size()) < count)
    throw std::runtime_error("variety_cloud: sampling starved");
  return cloud;
}

// ---------------------------------------------------------------------
// distance: constrained projection onto a variety
// ---------------------------------------------------------------------

namespace {

// Real constraint vector (Re P_j, Im P_j, (|x|^2 - 1) / 2) and its Jacobian
// from the holomorphic gradients.
void variety_constraints(const EmbeddedManifold& m, const Eigen::VectorXd& x,
                         Eigen::VectorXd& c, Eigen::MatrixXd& J) {
  const int mc = static_cast<int>(x.size()) / 2;
  const int rows = 2 * static_cast<int>(m.polys.size()) + 1;
  const Eigen::VectorXcd z = complexify(x);
  c.resize(rows);
  J.resize(rows, x.size());
  for (std::size_t j = 0; j < m.polys.size(); ++j) {
    const std::complex<double> v = m.polys[j].evaluate(z);
    const Eigen::VectorXcd g = m.polys[j].gradient(z);
    c[2 * j] = v.real();
    c[2 * j + 1] = v.imag();
    for (int a = 0; a < mc; ++a) {
      J(2 * j, 2 * a) = g[a].real();
      J(2 * j, 2 * a + 1) = -g[a].imag();
      J(2 * j + 1, 2 * a) = g[a].imag();
      J(2 * j + 1, 2 * a + 1) = g[a].real();
    }
  }
  c[rows - 1] = 0.5 * (x.squaredNorm() - 1.0);
  J.row(rows - 1) = x.transpose();
}

// Least-norm Gauss-Newton restoration onto the constraint set.
bool restore(const EmbeddedManifold& m, Eigen::VectorXd& x, double tol,
             double cap, int max_rounds) {
  Eigen::VectorXd c;
  Eigen::MatrixXd J;
  for (int r = 0; r < max_rounds; ++r) {
    variety_constraints(m, x, c, J);
    if (c.norm() <= tol) return true;
    Eigen::MatrixXd JJt = J * J.transpose();
    JJt.diagonal().array() += 1e-12;
    Eigen::VectorXd dx = J.transpose() * JJt.ldlt().solve(c);
    const double n = dx.norm();
    if (n > cap) dx *= cap / n;
    x -= dx;
  }
  variety_constraints(m, x, c, J);
  return c.norm() <= tol;
}

// Projected descent of |x - q| over the variety from one start.
bool pull_to_point(const EmbeddedManifold& m, const Eigen::VectorXd& q,
                   Eigen::VectorXd& x, const GeodesicOptions& opt) {
  const double tol = opt.constraint_tol;
  Eigen::VectorXd c;
  Eigen::MatrixXd J;
  for (int it = 0; it < opt.iterations; ++it) {
    if (!restore(m, x, tol, 1.0 + 0.5 * (x - q).norm(), 40)) return false;
    variety_constraints(m, x, c, J);
    Eigen::MatrixXd JJt = J * J.transpose();
    JJt.diagonal().array() += 1e-12;
    const Eigen::VectorXd v = q - x;
    Eigen::VectorXd g = v - J.transpose() * JJt.ldlt().solve(J * v);
    const double cap = 0.25 * (1.0 + v.norm());
    const double n = g.norm();
    if (n > cap) g *= cap / n;
    if (n <= 1e-10 * (1.0 + x.norm())) return true;
    x += g;
  }
  return restore(m, x, tol, 1.0, 10);
}

// Exact distance to the unit sphere of a complex linear subspace: the
// chordal-nearest point is the normalized projection.
GeodesicResult linear_distance(const Eigen::MatrixXcd& kernel,
                               const Eigen::VectorXd& q) {
  const Eigen::VectorXcd w = complexify(q);
  const Eigen::VectorXcd proj = kernel * (kernel.adjoint() * w);
  GeodesicResult out;
  out.converged = true;
  const double n = proj.norm();
  if (n < 1e-14) {
    out.distance = M_PI / 2.0;
    Eigen::VectorXcd e = kernel.col(0);
    out.point = realify(e / e.norm());
    return out;
  }
  out.point = realify(proj / n);
  out.distance = std::acos(std::clamp(n, 0.0, 1.0));
  return out;
}

// Golden-section minimization over [a, b].
double golden(const std::function<double(double)>& f, double a, double b,
              int iters, double* xmin) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  *xmin = f1 <= f2 ? x1 : x2;
  return std::min(f1, f2);
}

// Chart route: per-axis grid scan for the best cell, then coordinatewise
// golden-section refinement of the dot product.
GeodesicResult chart_distance(const EmbeddedManifold& m,
                              const Eigen::VectorXd& q,
                              const GeodesicOptions& opt) {
  double best = -2.0;
  Eigen::VectorXd best_u;
  const Chart* best_chart = nullptr;
  for (const Chart& chart : m.charts) {
    const int cd = static_cast<int>(chart.box.rows());
    if (cd > 3)
      throw std::invalid_argument("geodesic_distance_to: chart dim <= 3");
    const int g = std::max(8, cd == 1 ? opt.grid : opt.grid / 2);
    Eigen::VectorXd u(cd);
    const long total = static_cast<long>(std::pow(double(g), cd));
    for (long cell = 0; cell < total; ++cell) {
      long rem = cell;
      for (int d = 0; d < cd; ++d) {
        const int j = rem % g;
        rem /= g;
        u[d] = chart.box(d, 0) +
               (chart.box(d, 1) - chart.box(d, 0)) * (j + 0.5) / g;
      }
      const double v = chart.map(u).dot(q);
      if (v > best) {
        best = v;
        best_u = u;
        best_chart = &chart;
      }
    }
  }
  // refine around the best cell, axis by axis
  const Chart& chart = *best_chart;
  const int cd = static_cast<int>(chart.box.rows());
  const int g = std::max(8, cd == 1 ? opt.grid : opt.grid / 2);
  Eigen::VectorXd u = best_u;
  const int sweeps = cd == 1 ? 1 : 3;
  const int iters = std::max(15, opt.refine / (sweeps * cd));
  for (int s = 0; s < sweeps; ++s)
    for (int d = 0; d < cd; ++d) {
      const double cell = (chart.box(d, 1) - chart.box(d, 0)) / g;
      const double lo = std::max(chart.box(d, 0), u[d] - cell);
      const double hi = std::min(chart.box(d, 1), u[d] + cell);
      double xm = u[d];
      golden(
          [&](double t) {
            Eigen::VectorXd w = u;
            w[d] = t;
            return -chart.map(w).dot(q);
          },
          lo, hi, iters, &xm);
      u[d] = xm;
    }
  GeodesicResult out;
  out.converged = true;
  out.point = chart.map(u);
  const double dot = std::max(best, out.point.dot(q));
  out.distance = std::acos(std::clamp(dot, -1.0, 1.0));
  return out;
}

GeodesicResult variety_distance(const EmbeddedManifold& m,
                                const Eigen::VectorXd& q,
                                const std::vector<Eigen::VectorXd>& cloud,
                                const GeodesicOptions& opt) {
  // rank the cloud by chordal distance after phase alignment
  std::vector<std::pair<double, int>> order;
  order.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::VectorXd s = phase_align(cloud[i], q);
    order.emplace_back((s - q).squaredNorm(), static_cast<int>(i));
  }
  const int starts = std::min<int>(opt.starts, static_cast<int>(order.size()));
  std::partial_sort(order.begin(), order.begin() + starts, order.end());
  GeodesicResult out;
  out.distance = kInf;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd x = phase_align(cloud[order[s].second], q);
    if (!pull_to_point(m, q, x, opt)) continue;
    const double d = std::acos(std::clamp(x.dot(q), -1.0, 1.0));
    if (d < out.distance) {
      out.distance = d;
      out.point = x;
      out.converged = true;
    }
  }
  return out;
}

}  // namespace

GeodesicResult geodesic_distance_to(const EmbeddedManifold& m,
                                    const Eigen::VectorXd& q,
                                    const std::vector<Eigen::VectorXd>& cloud,
                                    const GeodesicOptions& opt) {
  if (q.size() != m.ambient_real_dim())
    throw std::invalid_argument("geodesic_distance_to: wrong point dimension");
  if (std::abs(q.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("geodesic_distance_to: point off the ambient");
  if (m.polys.empty() && m.charts.empty()) {
    // the whole ambient: every point is on the manifold
    GeodesicResult out;
    out.converged = true;
    out.point = q;
    return out;
  }
  if (!m.algebraic()) {
    if (m.ambient != AmbientKind::kSphere)
      throw std::invalid_argument(
          "geodesic_distance_to: charts supported on sphere ambients");
    return chart_distance(m, q, opt);
  }
  if (all_linear(m)) return linear_distance(linear_kernel(m), q);
  return variety_distance(m, q, cloud, opt);
}

GeodesicResult geodesic_distance_to(const EmbeddedManifold& m,
                                    const Eigen::VectorXd& q,
                                    const GeodesicOptions& opt) {
  std::vector<Eigen::VectorXd> cloud;
  if (m.algebraic() && !all_linear(m))
    cloud = variety_cloud(m, opt.cloud, opt.seed);
  return geodesic_distance_to(m, q, cloud, opt);
}

// ---------------------------------------------------------------------
// tube estimates
// ---------------------------------------------------------------------

namespace {

// Model tube fraction of the standard core with this manifold's dimension:
// great S^dim in S^n, or CP^dim in CP^n (equivalently its lift circle
// bundle, through the fibration).
double model_fraction(const EmbeddedManifold& m, double t) {
  if (m.ambient == AmbientKind::kSphere)
    return spherical_tube_fraction(m.ambient_n, m.dim, t);
  return cp_tube_fraction(m.ambient_n, m.dim, t);
}

}  // namespace

std::vector<TubeEstimate> tube_fraction_mc(const EmbeddedManifold& m,
                                           const Eigen::VectorXd& t_grid,
                                           std::size_t count,
                                           std::uint64_t seed,
                                           const GeodesicOptions& opt) {
  if (t_grid.size() == 0)
    throw std::invalid_argument("tube_fraction_mc: empty t grid");
  for (int j = 0; j < t_grid.size(); ++j)
    if (!(t_grid[j] > 0.0 && t_grid[j] <= M_PI / 2.0 + 1e-12))
      throw std::invalid_argument("tube_fraction_mc: t in (0, pi/2]");
  if (count == 0) throw std::invalid_argument("tube_fraction_mc: count > 0");
  std::vector<Eigen::VectorXd> cloud;
  if (m.algebraic() && !all_linear(m))
    cloud = variety_cloud(m, opt.cloud, seed ^ 0xc10cdull);
  CounterRng rng(seed, 0x70be5ull);
  std::vector<std::size_t> hits(t_grid.size(), 0);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::VectorXd x = sample_ambient(m, rng);
    const GeodesicResult r = geodesic_distance_to(m, x, cloud, opt);
    if (!r.converged) {
      ++failures;
      continue;
    }
    for (int j = 0; j < t_grid.size(); ++j)
      if (r.distance <= t_grid[j]) ++hits[j];
  }
  const double fail = static_cast<double>(failures) / count;
  std::vector<TubeEstimate> out(t_grid.size());
  for (int j = 0; j < t_grid.size(); ++j) {
    TubeEstimate& e = out[j];
    e.t = t_grid[j];
    e.estimate = static_cast<double>(hits[j]) / count;
    e.stderr_value =
        std::sqrt(e.estimate * (1.0 - e.estimate) / count);
    e.failure_fraction = fail;
    e.lower = model_fraction(m, e.t);
    e.upper = m.degree > 0
                  ? std::min(1.0, m.degree * model_fraction(m, e.t))
                  : 1.0;
    if (fail > 1e-3)
      e.verdict = "inconclusive";
    else if (e.estimate < e.lower - 3.0 * e.stderr_value)
      e.verdict = "below_lower";
    else if (e.estimate > e.upper + 3.0 * e.stderr_value + fail)
      e.verdict = "above_upper";
    else
      e.verdict = "consistent";
  }
  return out;
}

TubeEstimate tube_fraction_mc(const EmbeddedManifold& m, double t,
                              std::size_t count, std::uint64_t seed,
                              const GeodesicOptions& opt) {
  Eigen::VectorXd grid(1);
  grid[0] = t;
  return tube_fraction_mc(m, grid, count, seed, opt)[0];
}

std::vector<TubeEstimate> degree_bound_check(const EmbeddedManifold& m,
                                             const Eigen::VectorXd& t_grid,
                                             std::size_t count,
                                             std::uint64_t seed,
                                             const GeodesicOptions& opt) {
  if (!m.algebraic() || m.degree < 1)
    throw std::invalid_argument(
        "degree_bound_check: algebraic manifold with known degree required");
  // smoothness probe: full gradient rank at sampled variety points
  const auto probes = variety_cloud(m, 64, seed ^ 0x5a00743ull);
  double scale = 0.0;
  for (const Polynomial& p : m.polys) scale = std::max(scale, coeff_mass(p));
  for (const Eigen::VectorXd& x : probes) {
    const Eigen::VectorXcd z = complexify(x);
    Eigen::MatrixXcd G(m.polys.size(), z.size());
    for (std::size_t j = 0; j < m.polys.size(); ++j)
      G.row(j) = m.polys[j].gradient(z).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
    if (svd.singularValues().minCoeff() < 1e-6 * scale)
      throw std::invalid_argument(
          "degree_bound_check: gradient rank probe flags a singular variety");
  }
  return tube_fraction_mc(m, t_grid, count, seed, opt);
}

// ---------------------------------------------------------------------
// Voronoi disintegration probe
// ---------------------------------------------------------------------

VoronoiReport voronoi_disintegration_probe(const EmbeddedManifold& m,
                                           int site_count, std::size_t count,
                                           std::uint64_t seed) {
  if (m.algebraic() || m.ambient != AmbientKind::kSphere ||
      m.ambient_n != 2 || m.charts.size() != 1 || m.charts[0].box.rows() != 1)
    throw std::invalid_argument(
        "voronoi_disintegration_probe: one-chart curve in S^2 required");
  if (site_count < 1 || count == 0)
    throw std::invalid_argument("voronoi_disintegration_probe: bad sizes");
  const Chart& chart = m.charts[0];
  const double lo = chart.box(0, 0), span = chart.box(0, 1) - chart.box(0, 0);
  CounterRng rng(seed, 0x517e5ull);
  const double phase = rng.next_unit();
  std::vector<Eigen::VectorXd> samples(count);
  for (std::size_t i = 0; i < count; ++i) samples[i] = sample_ambient(m, rng);

  VoronoiReport rep;
  int sites = site_count;
  for (;;) {
    std::vector<Eigen::VectorXd> site_pts(sites);
    for (int s = 0; s < sites; ++s) {
      Eigen::VectorXd u(1);
      u[0] = lo + span * std::fmod(phase + double(s) / sites, 1.0);
      site_pts[s] = chart.map(u);
    }
    rep.cell_count.assign(sites, 0);
    for (std::size_t i = 0; i < count; ++i) {
      int arg = 0;
      double best = -2.0;
      for (int s = 0; s < sites; ++s) {
        const double v = site_pts[s].dot(samples[i]);
        if (v > best) {
          best = v;
          arg = s;
        }
      }
      ++rep.cell_count[arg];
    }
    const int least =
        *std::min_element(rep.cell_count.begin(), rep.cell_count.end());
    if (least >= 1000 || sites == 1) break;
    sites = std::max(1, sites / 2);  // widen the cells and retry
  }
  rep.sites = sites;
  rep.cell_mass.resize(sites);
  for (int s = 0; s < sites; ++s)
    rep.cell_mass[s] = static_cast<double>(rep.cell_count[s]) / count;

  // signed normal displacement: distance to the curve, signed by the
  // vertical offset from the nearest curve point
  const int bins = 21;
  rep.histogram = Eigen::VectorXd::Zero(bins);
  GeodesicOptions gopt;
  for (std::size_t i = 0; i < count; ++i) {
    const GeodesicResult r = chart_distance(m, samples[i], gopt);
    const double s = samples[i][2] >= r.point[2] ? r.distance : -r.distance;
    const int b = std::clamp(
        static_cast<int>(std::floor((s + M_PI / 2) / M_PI * bins)), 0,
        bins - 1);
    rep.histogram[b] += 1.0 / count;
  }
  rep.histogram.maxCoeff(&rep.mode_bin);
  rep.mode_central = rep.mode_bin == bins / 2;
  return rep;
}

// ---------------------------------------------------------------------
// Crofton degree probe
// ---------------------------------------------------------------------

double crofton_degree_probe(const EmbeddedManifold& m, int lines,
                            std::uint64_t seed) {
  if (!m.algebraic() || m.polys.size() != 1)
    throw std::invalid_argument(
        "crofton_degree_probe: single defining polynomial required");
  if (lines < 1) throw std::invalid_argument("crofton_degree_probe: lines");
  const Polynomial& p = m.polys[0];
  const int mc = m.ambient_real_dim() / 2;
  const double scale = coeff_mass(p);
  CounterRng rng(seed, 0xc0f703ull);
  long total = 0;
  int done = 0, attempts = 0;
  while (done < lines && attempts < 100 * lines) {
    ++attempts;
    Eigen::VectorXcd a(mc), b(mc);
    for (int i = 0; i < mc; ++i) {
      a[i] = {gaussian(rng), gaussian(rng)};
      b[i] = {gaussian(rng), gaussian(rng)};
    }
    const Eigen::VectorXcd coeffs = line_restriction(p, a, b);
    if (std::abs(coeffs[coeffs.size() - 1]) <
        1e-10 * coeffs.cwiseAbs().maxCoeff())
      continue;
    auto roots = poly_roots(coeffs);
    // verified, distinct intersection points
    std::vector<std::complex<double>> kept;
    for (const std::complex<double>& t : roots) {
      Eigen::VectorXcd z = a + t * b;
      const double n = z.norm();
      if (n < 1e-12 || std::abs(p.evaluate(z / n)) > 1e-7 * scale) continue;
      bool dup = false;
      for (const std::complex<double>& u : kept)
        if (std::abs(t - u) <= 1e-6 * (1.0 + std::abs(t))) dup = true;
      if (!dup) kept.push_back(t);
    }
    total += static_cast<long>(kept.size());
    ++done;
  }
  if (done < lines)
    throw std::runtime_error("crofton_degree_probe: line sampling starved");
  return static_cast<double>(total) / done;
}

// ---------------------------------------------------------------------
// representation probes
// ---------------------------------------------------------------------

double chart_defect(const EmbeddedManifold& m, int probes,
                    std::uint64_t seed) {
  if (m.charts.empty())
    throw std::invalid_argument("chart_defect: chart manifold required");
  CounterRng rng(seed, 0xc4a7ull);
  double worst = 0.0;
  for (const Chart& chart : m.charts)
    for (int i = 0; i < probes; ++i) {
      Eigen::VectorXd u(chart.box.rows());
      for (int d = 0; d < u.size(); ++d)
        u[d] = chart.box(d, 0) +
               (chart.box(d, 1) - chart.box(d, 0)) * rng.next_unit();
      worst = std::max(worst, std::abs(chart.map(u).norm() - 1.0));
    }
  return worst;
}

double homogeneity_defect(const EmbeddedManifold& m, int probes,
                          std::uint64_t seed) {
  if (!m.algebraic())
    throw std::invalid_argument(
        "homogeneity_defect: algebraic manifold required");
  CounterRng rng(seed, 0x40603ull);
  const int mc = m.ambient_real_dim() / 2;
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    Eigen::VectorXcd z(mc);
    for (int a = 0; a < mc; ++a) z[a] = {gaussian(rng), gaussian(rng)};
    const double lam = 0.5 + rng.next_unit();
    for (const Polynomial& p : m.polys) {
      const int d = p.total_degree();
      const std::complex<double> lhs = p.evaluate(lam * z.array());
      const std::complex<double> rhs = std::pow(lam, d) * p.evaluate(z);
      worst = std::max(
          worst, std::abs(lhs - rhs) /
                     (coeff_mass(p) * std::pow(1.0 + z.norm(), d)));
    }
  }
  return worst;
}

double circle_invariance_defect(const EmbeddedManifold& m, int probes,
                                std::uint64_t seed,
                                const GeodesicOptions& opt) {
  if (!m.algebraic())
    throw std::invalid_argument(
        "circle_invariance_defect: algebraic manifold required");
  std::vector<Eigen::VectorXd> cloud;
  if (!all_linear(m)) cloud = variety_cloud(m, opt.cloud, seed ^ 0xc10cdull);
  CounterRng rng(seed, 0x1a2b3ull);
  const int mc = m.ambient_real_dim() / 2;
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const Eigen::VectorXd q = sample_ambient(m, rng);
    const double theta = 2.0 * M_PI * rng.next_unit();
    Eigen::VectorXd qr(q.size());
    const double cs = std::cos(theta), sn = std::sin(theta);
    for (int a = 0; a < mc; ++a) {
      qr[2 * a] = cs * q[2 * a] - sn * q[2 * a + 1];
      qr[2 * a + 1] = sn * q[2 * a] + cs * q[2 * a + 1];
    }
    const GeodesicResult r1 = geodesic_distance_to(m, q, cloud, opt);
    const GeodesicResult r2 = geodesic_distance_to(m, qr, cloud, opt);
    if (r1.converged != r2.converged) return kInf;
    if (!r1.converged) continue;
    worst = std::max(worst, std::abs(r1.distance - r2.distance));
  }
  return worst;
}

}  // namespace waistkit
