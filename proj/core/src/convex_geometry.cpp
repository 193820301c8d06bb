#include "waistkit/convex_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

#include "waistkit/quadrature.hpp"
#include "waistkit/rng.hpp"
#include "waistkit/special.hpp"

namespace waistkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lebesgue density as a reusable closure, so radial normalization tables are
// built once per call site instead of once per quadrature node.  r_eff is a
// radius beyond which the density is zero or carries negligible mass.
struct DensityModel {
  std::function<double(const Eigen::VectorXd&)> f;
  double r_eff = 0.0;
};

DensityModel density_model(const MeasureSpec& spec) {
  const int n = spec.dim;
  if (const auto* g = std::get_if<GaussianDensity>(&spec.law)) {
    double log_z = 0.0;
    double a_min = g->scales[0];
    for (int i = 0; i < n; ++i) {
      log_z += 0.5 * (std::log(M_PI) - std::log(g->scales[i]));
      a_min = std::min(a_min, g->scales[i]);
    }
    const Eigen::VectorXd a = g->scales;
    DensityModel m;
    m.f = [a, log_z](const Eigen::VectorXd& x) {
      double e = 0.0;
      for (int i = 0; i < a.size(); ++i) e += a[i] * x[i] * x[i];
      return std::exp(-e - log_z);
    };
    m.r_eff = std::sqrt((40.0 + 10.0 * n) / a_min);
    return m;
  }
  if (const auto* b = std::get_if<UniformBall>(&spec.law)) {
    const double R = b->radius;
    const double inv_vol = 1.0 / (ball_volume(n) * std::pow(R, n));
    DensityModel m;
    m.f = [R, inv_vol](const Eigen::VectorXd& x) {
      return x.norm() <= R ? inv_vol : 0.0;
    };
    m.r_eff = R;
    return m;
  }
  if (std::get_if<RadialProfile>(&spec.law)) {
    const RadialParts parts = radial_parts(spec);
    const double area = sphere_area(n - 1);
    const double r_max = parts.r_max;
    const auto pdf = parts.radial_pdf;
    DensityModel m;
    m.f = [pdf, area, n, r_max](const Eigen::VectorXd& x) {
      const double r = std::max(x.norm(), 1e-12);
      if (r > r_max) return 0.0;
      return pdf(r) / (area * std::pow(r, n - 1));
    };
    m.r_eff = r_max;
    return m;
  }
  throw std::invalid_argument(
      "measure quadrature: law has no Lebesgue density");
}

bool has_lebesgue_density(const MeasureSpec& spec) {
  return std::holds_alternative<GaussianDensity>(spec.law) ||
         std::holds_alternative<UniformBall>(spec.law) ||
         std::holds_alternative<RadialProfile>(spec.law);
}

Eigen::VectorXd unit_or_throw(const Eigen::VectorXd& u, const char* where) {
  const double nu = u.norm();
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw std::invalid_argument(std::string(where) + ": zero direction");
  return u / nu;
}

// ---------------------------------------------------------------------
// 2-d slicing
// ---------------------------------------------------------------------

// Region {x : A x <= b} in the rotated frame x = s u + t v, together with
// the s-breakpoints of its slice geometry (polygon vertices and the points
// where a constraint line crosses the clip circle).
struct SliceGeometry {
  std::vector<double> cu, cv, off;
  double s_lo = 0.0, s_hi = 0.0;
  std::vector<double> breaks;
  bool empty = true;
};

SliceGeometry slice_geometry(const ConvexBody& body, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& v, double cut,
                             double clip) {
  const double R = body.bounding_radius();
  SliceGeometry g;
  auto push = [&](const Eigen::VectorXd& a, double b) {
    g.cu.push_back(a.dot(u));
    g.cv.push_back(a.dot(v));
    g.off.push_back(b);
  };
  for (const Halfspace& h : body.halfspaces()) push(h.normal, h.offset);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
    e[i] = 1.0;
    push(e, R);
    push(-e, R);
  }
  if (std::isfinite(cut)) push(u, cut);

  const std::size_t m = g.off.size();
  const double feas_tol = 1e-8 * (1.0 + R);
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double det = g.cu[i] * g.cv[j] - g.cu[j] * g.cv[i];
      if (std::abs(det) < 1e-12) continue;
      const double s = (g.off[i] * g.cv[j] - g.off[j] * g.cv[i]) / det;
      const double t = (g.cu[i] * g.off[j] - g.cu[j] * g.off[i]) / det;
      bool ok = true;
      for (std::size_t k = 0; k < m && ok; ++k)
        ok = g.cu[k] * s + g.cv[k] * t <= g.off[k] + feas_tol;
      if (!ok) continue;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      g.breaks.push_back(s);
    }
  }
  if (!(lo < hi)) return g;  // empty or lower dimensional: measure zero

  // Kinks where a constraint line enters or leaves the clip circle.
  for (std::size_t i = 0; i < m; ++i) {
    const double d = g.off[i];  // (cu, cv) is unit since |a| = |u| = 1
    if (std::abs(d) >= clip) continue;
    const double h = std::sqrt(clip * clip - d * d);
    g.breaks.push_back(d * g.cu[i] - h * g.cv[i]);
    g.breaks.push_back(d * g.cu[i] + h * g.cv[i]);
  }
  g.s_lo = std::max(lo, -clip);
  g.s_hi = std::min(hi, clip);
  g.empty = !(g.s_lo < g.s_hi);
  return g;
}

double region_integral_2d(const ConvexBody& body,
                          const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& u_in, double cut,
                          double abs_tol, double clip) {
  if (body.dim() != 2)
    throw std::invalid_argument("integrate_over_body_2d: body must be 2-d");
  const Eigen::VectorXd u = unit_or_throw(u_in, "integrate_over_body_2d");
  Eigen::VectorXd v(2);
  v << -u[1], u[0];
  clip = std::min(clip, body.bounding_radius());

  const SliceGeometry g = slice_geometry(body, u, v, cut, clip);
  if (g.empty) return 0.0;
  const double span = g.s_hi - g.s_lo;
  const double inner_tol = 0.05 * abs_tol / span;

  auto slice = [&](double s) {
    double t_lo = -kInf, t_hi = kInf;
    for (std::size_t k = 0; k < g.off.size(); ++k) {
      if (std::abs(g.cv[k]) <= 1e-12) {
        if (g.cu[k] * s > g.off[k] + 1e-9 * (1.0 + std::abs(g.off[k])))
          return 0.0;
        continue;
      }
      const double bound = (g.off[k] - g.cu[k] * s) / g.cv[k];
      if (g.cv[k] > 0.0)
        t_hi = std::min(t_hi, bound);
      else
        t_lo = std::max(t_lo, bound);
    }
    const double disc = clip * clip - s * s;
    if (disc <= 0.0) return 0.0;
    const double w = std::sqrt(disc);
    t_lo = std::max(t_lo, -w);
    t_hi = std::min(t_hi, w);
    if (!(t_lo < t_hi)) return 0.0;
    return integrate([&](double t) { return f(s * u + t * v); }, t_lo, t_hi,
                     inner_tol);
  };
  return integrate_split(slice, g.s_lo, g.s_hi, g.breaks, abs_tol);
}

double interval_measure_1d(const ConvexBody& body, const DensityModel& model,
                           const Eigen::VectorXd& u, double cut,
                           double abs_tol) {
  double lo = -body.bounding_radius();
  double hi = body.bounding_radius();
  auto tighten = [&](double a, double b) {
    if (a > 0.0)
      hi = std::min(hi, b / a);
    else
      lo = std::max(lo, b / a);
  };
  for (const Halfspace& h : body.halfspaces()) tighten(h.normal[0], h.offset);
  if (std::isfinite(cut)) tighten(u[0], cut);
  lo = std::max(lo, -model.r_eff);
  hi = std::min(hi, model.r_eff);
  if (!(lo < hi)) return 0.0;
  return integrate([&](double x) { return model.f(Eigen::VectorXd::Constant(1, x)); },
                   lo, hi, abs_tol);
}

}  // namespace

double integrate_over_body_2d(
    const ConvexBody& body,
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& u, double cut, double abs_tol) {
  return region_integral_2d(body, f, u, cut, abs_tol, body.bounding_radius());
}

double body_measure_quadrature(const ConvexBody& body, const MeasureSpec& spec,
                               const Eigen::VectorXd& u, double cut,
                               double abs_tol) {
  spec.validate();
  if (spec.dim != body.dim())
    throw std::invalid_argument("body_measure_quadrature: dim mismatch");
  if (body.dim() > 2)
    throw std::invalid_argument("body_measure_quadrature: dims 1 and 2 only");
  const DensityModel model = density_model(spec);
  const Eigen::VectorXd un = unit_or_throw(u, "body_measure_quadrature");
  if (body.dim() == 1)
    return interval_measure_1d(body, model, un, cut, abs_tol);
  return region_integral_2d(body, model.f, un, cut, abs_tol, model.r_eff);
}

double equal_measure_cut(const ConvexBody& body, const MeasureSpec& spec,
                         const Eigen::VectorXd& u, double fraction,
                         const CutOptions& opt) {
  spec.validate();
  if (spec.dim != body.dim())
    throw std::invalid_argument("equal_measure_cut: dim mismatch");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("equal_measure_cut: fraction outside (0,1)");
  const Eigen::VectorXd un = unit_or_throw(u, "equal_measure_cut");

  const bool quad_capable = body.dim() <= 2 && has_lebesgue_density(spec);
  if (opt.route == CutRoute::kQuadrature && !quad_capable)
    throw std::invalid_argument(
        "equal_measure_cut: quadrature route needs dim <= 2 and a Lebesgue "
        "density");
  const bool use_quadrature =
      opt.route == CutRoute::kQuadrature ||
      (opt.route == CutRoute::kAuto && quad_capable);

  if (use_quadrature) {
    const double total =
        body_measure_quadrature(body, spec, un, kInf, 0.1 * opt.tol);
    if (total <= 1e-12)
      throw std::runtime_error(
          "equal_measure_cut: degenerate (body carries no measure)");
    const double target = fraction * total;
    const double eval_tol = 0.2 * opt.tol * total;
    double lo = -support(body, -un).value;
    double hi = support(body, un).value;
    for (int step = 0; step < opt.max_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      const double fm = body_measure_quadrature(body, spec, un, mid, eval_tol);
      if (std::abs(fm - target) <= opt.tol * total) return mid;
      if (fm < target)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-13 * (1.0 + std::abs(lo) + std::abs(hi)))
        return 0.5 * (lo + hi);
    }
    std::ostringstream msg;
    msg << "equal_measure_cut: bisection budget exhausted, best bracket ["
        << lo << ", " << hi << "]";
    throw std::runtime_error(msg.str());
  }

  // Fixed stratified cloud; the cut is its exact empirical quantile, so
  // repeated cuts against the same options are mutually consistent.
  const SampleBatch cloud = stratified_cloud(spec, opt.mc_count, opt.mc_seed);
  std::vector<double> proj;
  proj.reserve(static_cast<std::size_t>(cloud.points.cols()));
  for (Eigen::Index i = 0; i < cloud.points.cols(); ++i) {
    if (body.contains(cloud.points.col(i)))
      proj.push_back(un.dot(cloud.points.col(i)));
  }
  if (proj.size() < 32)
    throw std::runtime_error(
        "equal_measure_cut: degenerate (body carries almost no measure)");
  std::sort(proj.begin(), proj.end());
  const double pos = fraction * static_cast<double>(proj.size() - 1);
  const std::size_t i0 = static_cast<std::size_t>(pos);
  const std::size_t i1 = std::min(i0 + 1, proj.size() - 1);
  const double w = pos - static_cast<double>(i0);
  return (1.0 - w) * proj[i0] + w * proj[i1];
}

// ---------------------------------------------------------------------
// inscribed ellipsoid
// ---------------------------------------------------------------------

namespace {

int tri_size(int n) { return n * (n + 1) / 2; }

void unpack_theta(const Eigen::VectorXd& th, int n, Eigen::VectorXd& d,
                  Eigen::MatrixXd& L) {
  d = th.head(n);
  L.setZero(n, n);
  int idx = n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) L(i, j) = th[idx++];
}

Eigen::VectorXd pack_theta(const Eigen::VectorXd& d, const Eigen::MatrixXd& L) {
  const int n = static_cast<int>(d.size());
  Eigen::VectorXd th(n + tri_size(n));
  th.head(n) = d;
  int idx = n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) th[idx++] = L(i, j);
  return th;
}

// Barrier value -sum log L_ii - mu sum log s_j with its gradient; returns
// false outside the domain (nonpositive diagonal or slack).
struct BarrierProblem {
  int n = 0;
  std::vector<Eigen::VectorXd> a;
  std::vector<double> c;

  bool eval(double mu, const Eigen::VectorXd& th, double& val,
            Eigen::VectorXd& grad) const {
    Eigen::VectorXd d;
    Eigen::MatrixXd L;
    unpack_theta(th, n, d, L);
    for (int i = 0; i < n; ++i)
      if (!(L(i, i) > 0.0)) return false;
    val = 0.0;
    Eigen::VectorXd gd = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd gL = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      val -= std::log(L(i, i));
      gL(i, i) -= 1.0 / L(i, i);
    }
    for (std::size_t j = 0; j < a.size(); ++j) {
      const Eigen::VectorXd w = L.transpose() * a[j];
      const double nw = w.norm();
      if (!(nw > 1e-300)) return false;
      const double s = c[j] - a[j].dot(d) - nw;
      if (!(s > 0.0)) return false;
      val -= mu * std::log(s);
      const double coef = mu / s;
      gd += coef * a[j];
      const Eigen::VectorXd wh = w / nw;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q) gL(p, q) += coef * a[j][p] * wh[q];
    }
    grad = pack_theta(gd, gL);
    return std::isfinite(val);
  }
};

// Plain BFGS with Armijo backtracking; domain violations act as +inf.
Eigen::VectorXd bfgs_minimize(
    const std::function<bool(const Eigen::VectorXd&, double&,
                             Eigen::VectorXd&)>& eval,
    Eigen::VectorXd th, double gtol, int max_iter) {
  const int n = static_cast<int>(th.size());
  double f = 0.0;
  Eigen::VectorXd g(n);
  if (!eval(th, f, g))
    throw std::runtime_error("john_ellipsoid: infeasible interior start");
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= gtol) break;
    Eigen::VectorXd p = -(H * g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      p = -g;
      slope = g.dot(p);
    }
    double step = 1.0;
    double f_new = 0.0;
    Eigen::VectorXd th_new, g_new(n);
    bool moved = false;
    while (step >= 1e-14) {
      th_new = th + step * p;
      if (eval(th_new, f_new, g_new) && f_new <= f + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    const Eigen::VectorXd s = th_new - th;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H -= rho * (s * Hy.transpose() + Hy * s.transpose());
      H += rho * rho * (y.dot(Hy)) * (s * s.transpose());
      H += rho * (s * s.transpose());
    }
    th = th_new;
    f = f_new;
    g = g_new;
  }
  return th;
}

// max_{|s| <= 1} |d + L s| via the secular equation of the stationarity
// system (L'L - lambda I) s = -L'd, including the degenerate branch where
// the top eigenspace carries no forcing.
std::pair<double, Eigen::VectorXd> farthest_point(const Eigen::VectorXd& d,
                                                  const Eigen::MatrixXd& L) {
  const int n = static_cast<int>(d.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.transpose() * L);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXd V = es.eigenvectors();
  const Eigen::VectorXd g = V.transpose() * (L.transpose() * d);
  const double lam_max = lam[n - 1];
  const double gnorm = g.norm();

  auto s_of = [&](double x) {
    Eigen::VectorXd s(n);
    for (int i = 0; i < n; ++i) s[i] = g[i] / (x - lam[i]);
    return s;
  };
  auto norm_at = [&](const Eigen::VectorXd& coef) {
    return (d + L * (V * coef)).norm();
  };

  const double lo = lam_max + std::max(1e-13 * (1.0 + lam_max), 1e-300);
  if (s_of(lo).squaredNorm() < 1.0) {
    // No root above lam_max: pad with the top eigendirection.
    Eigen::VectorXd coef = s_of(lo);
    coef[n - 1] = 0.0;
    const double q2 = coef.squaredNorm();
    const double tau = std::sqrt(std::max(0.0, 1.0 - q2));
    Eigen::VectorXd plus = coef, minus = coef;
    plus[n - 1] += tau;
    minus[n - 1] -= tau;
    const Eigen::VectorXd best =
        norm_at(plus) >= norm_at(minus) ? plus : minus;
    return {norm_at(best), V * best};
  }
  double a = lo, b = lam_max + gnorm + 1e-300;
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + b); ++it) {
    const double midv = 0.5 * (a + b);
    (s_of(midv).squaredNorm() > 1.0 ? a : b) = midv;
  }
  Eigen::VectorXd coef = s_of(0.5 * (a + b));
  if (coef.norm() > 0.0) coef /= coef.norm();
  return {norm_at(coef), V * coef};
}

}  // namespace

Eigen::VectorXd Ellipsoid::semiaxes() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(shape);
  return svd.singularValues();
}

Eigen::MatrixXd Ellipsoid::axes() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(shape, Eigen::ComputeFullU);
  return svd.matrixU();
}

double AffineFlat::distance(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = x - base;
  if (basis.cols() == 0) return r.norm();
  return (r - basis * (basis.transpose() * r)).norm();
}

Ellipsoid john_ellipsoid(const ConvexBody& body, double rel_gap) {
  const int n = body.dim();
  if (!(rel_gap > 0.0))
    throw std::invalid_argument("john_ellipsoid: rel_gap must be positive");
  const double R = body.bounding_radius();
  const InnerBall ib = chebyshev_ball(body);
  if (!(ib.margin > 1e-10 * R))
    throw std::runtime_error("john_ellipsoid: degenerate body (empty interior)");

  BarrierProblem prob;
  prob.n = n;
  for (const Halfspace& h : body.halfspaces()) {
    prob.a.push_back(h.normal);
    prob.c.push_back(h.offset);
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[i] = 1.0;
    prob.a.push_back(e);
    prob.c.push_back(R);
    prob.a.push_back(-e);
    prob.c.push_back(R);
  }

  Eigen::VectorXd d = ib.center;
  Eigen::MatrixXd L =
      0.5 * ib.margin * Eigen::MatrixXd::Identity(n, n);

  for (int round = 0; round < 64; ++round) {
    const double mu_final =
        0.5 * std::log1p(rel_gap) / static_cast<double>(prob.a.size());
    double mu = 1.0;
    Eigen::VectorXd th = pack_theta(d, L);
    while (true) {
      auto eval = [&](const Eigen::VectorXd& t, double& v,
                      Eigen::VectorXd& gr) { return prob.eval(mu, t, v, gr); };
      th = bfgs_minimize(eval, th, std::max(1e-11, 1e-7 * mu), 400);
      if (mu <= mu_final) break;
      mu = std::max(mu_final, mu / 8.0);
    }
    unpack_theta(th, n, d, L);

    const auto [r_worst, s_worst] = farthest_point(d, L);
    if (r_worst <= R * (1.0 + 1e-9)) {
      // Same ellipsoid, symmetric representative sqrt(L L^T).
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(
          L, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Ellipsoid e;
      e.center = d;
      e.shape = svd.matrixU() * svd.singularValues().asDiagonal() *
                svd.matrixU().transpose();
      return e;
    }
    // Tangent ball cut through the escaping point, then shrink back inside.
    const Eigen::VectorXd v = (d + L * s_worst) / r_worst;
    prob.a.push_back(v);
    prob.c.push_back(R);
    const double nw = (L.transpose() * v).norm();
    const double room = R * (1.0 - 1e-8) - v.dot(d);
    if (room > 0.0 && nw > 0.0) {
      L *= std::min(1.0, room / nw);
    } else {
      d = ib.center;
      L = 0.5 * ib.margin * Eigen::MatrixXd::Identity(n, n);
    }
  }
  throw std::runtime_error("john_ellipsoid: ball cuts did not converge");
}

double john_sandwich_gap(const ConvexBody& body, const Ellipsoid& e,
                         int random_probes, std::uint64_t seed) {
  const int n = body.dim();
  std::vector<Eigen::VectorXd> dirs;
  for (const Halfspace& h : body.halfspaces()) dirs.push_back(h.normal);
  const Eigen::MatrixXd ax = e.axes();
  for (int j = 0; j < n; ++j) {
    dirs.push_back(ax.col(j));
    dirs.push_back(-ax.col(j));
  }
  CounterRng rng(seed, /*stream=*/0x9a11u);
  for (int p = 0; p < random_probes; ++p) {
    Eigen::VectorXd u(n);
    double nu = 0.0;
    do {
      for (int i = 0; i < n; ++i) u[i] = norminv(rng.next_unit());
      nu = u.norm();
    } while (!(nu > 1e-12));
    dirs.push_back(u / nu);
  }

  double worst = -kInf;
  for (const Eigen::VectorXd& u : dirs) {
    const double hb = support(body, u).value;
    const double he =
        u.dot(e.center) + n * (e.shape.transpose() * u).norm();
    worst = std::max(worst, hb - he);
  }
  return worst;
}

PancakeDeficiency pancake_deficiency(const ConvexBody& body, int k) {
  const int n = body.dim();
  if (k < 0 || k >= n)
    throw std::invalid_argument("pancake_deficiency: need 0 <= k < dim");
  const Ellipsoid e = john_ellipsoid(body);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e.shape, Eigen::ComputeFullU);
  const Eigen::VectorXd sig = svd.singularValues();
  const Eigen::MatrixXd U = svd.matrixU();

  PancakeDeficiency out;
  out.delta = n * sig[k];
  out.flat.base = e.center;
  out.flat.basis = U.leftCols(k);
  out.john_semiaxes = sig;
  out.john_axes = U;

  double ssq = 0.0;
  for (int j = k; j < n; ++j) {
    const Eigen::VectorXd w = U.col(j);
    const double hi = support(body, w).value - w.dot(e.center);
    const double lo = support(body, -w).value + w.dot(e.center);
    const double m = std::max({hi, lo, 0.0});
    ssq += m * m;
  }
  out.certified_max_distance = std::sqrt(ssq);
  return out;
}

}  // namespace waistkit
