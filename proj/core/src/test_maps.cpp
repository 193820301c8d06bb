#include "waistkit/test_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "waistkit/rng.hpp"
#include "waistkit/special.hpp"

namespace waistkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd scalar(double v) {
  Eigen::VectorXd out(1);
  out[0] = v;
  return out;
}

// Geodesic distance on the radius-r sphere from x to the slice
// {s : s.e = y on an orthogonal coordinate block}; `aligned` is the dot
// product of x with y over that block and `off_norm` the norm of x on the
// complementary block.  The slice is the subsphere of radius
// sqrt(r^2 - |y|^2); the nearest point aligns the complementary part of x.
double slice_geodesic(double off_norm, double aligned, double y_norm,
                      double r) {
  if (y_norm > r) return kInf;
  const double q = std::sqrt(std::max(0.0, r * r - y_norm * y_norm));
  const double c = std::clamp((off_norm * q + aligned) / (r * r), -1.0, 1.0);
  return r * std::acos(c);
}

// Distance in the meridian half-plane (z, rho >= 0) from `v` to the arc of
// the circle around (cz, 0) with radius r over polar angles [lo, hi].
double arc_distance(double z, double rho, double cz, double r, double lo,
                    double hi) {
  const double dz = z - cz;
  const double psi = std::atan2(rho, dz);
  if (psi >= lo && psi <= hi) return std::abs(std::hypot(dz, rho) - r);
  double best = kInf;
  for (double a : {lo, hi}) {
    best = std::min(best,
                    std::hypot(dz - r * std::cos(a), rho - r * std::sin(a)));
  }
  return best;
}

Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& s, int k) {
  const int n = static_cast<int>(s.size());
  Eigen::MatrixXd J(k, n);
  Eigen::VectorXd sp = s, sm = s;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(s[j]));
    sp[j] = s[j] + h;
    sm[j] = s[j] - h;
    J.col(j) = (f(sp) - f(sm)) / (2.0 * h);
    sp[j] = s[j];
    sm[j] = s[j];
  }
  return J;
}

// One projected Gauss-Newton descent for min |x - s| s.t. c(s) = 0, from
// `s`.  Alternates a least-norm restoration step with a tangential pull
// toward x.  Returns the best feasible |x - s| seen (+inf if none) and
// stores the minimizer in *best_s.
double pgn_descend(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& c,
                   int m, const Eigen::VectorXd& x, Eigen::VectorXd s,
                   const FiberDistanceOptions& opt, double tol,
                   Eigen::VectorXd* best_s) {
  double best = kInf;
  for (int it = 0; it < opt.iterations; ++it) {
    Eigen::VectorXd r = c(s);
    if (!r.allFinite()) return best;
    Eigen::MatrixXd J = numeric_jacobian(c, s, m);
    Eigen::MatrixXd G = J * J.transpose();
    G.diagonal().array() += 1e-12 * (1.0 + G.diagonal().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> gram(G);
    if (r.norm() > tol) {
      Eigen::VectorXd step = J.transpose() * gram.solve(r);
      const double cap = 1.0 + 0.5 * (x - s).norm();
      const double ns = step.norm();
      if (ns > cap) step *= cap / ns;
      s -= step;
      continue;
    }
    if ((x - s).norm() < best) {
      best = (x - s).norm();
      if (best_s) *best_s = s;
    }
    // tangential pull: project x - s off the constraint normals
    Eigen::VectorXd g = x - s;
    g -= J.transpose() * gram.solve(J * g);
    const double gn = g.norm();
    if (gn < 1e-10 * (1.0 + x.norm())) break;
    const double cap = 0.25 * (1.0 + (x - s).norm());
    s += (gn > cap ? cap / gn : 1.0) * g;
  }
  return best;
}

double multistart_pgn(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& c, int m,
    const Eigen::VectorXd& x, const FiberDistanceOptions& opt,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& project,
    double tol, bool* converged, Eigen::VectorXd* best_point = nullptr) {
  const int n = static_cast<int>(x.size());
  const double spread = 1.0 + x.norm();
  double best = kInf;
  for (int s_idx = 0; s_idx < opt.starts; ++s_idx) {
    Eigen::VectorXd s0 = x;
    if (s_idx > 0) {
      CounterRng rng(opt.seed, 0xf1beull + static_cast<std::uint64_t>(s_idx));
      const double radius = spread * (0.25 * static_cast<double>(1 << ((s_idx - 1) % 4)));
      for (int j = 0; j < n; ++j) s0[j] += radius * norminv(rng.next_unit());
    }
    if (project) s0 = project(s0);
    Eigen::VectorXd sj;
    const double d = pgn_descend(c, m, x, s0, opt, tol, &sj);
    if (d < best) {
      best = d;
      if (best_point) *best_point = sj;
    }
  }
  if (converged) *converged = std::isfinite(best);
  return best;
}

}  // namespace

TestMap linear_map(int n, int k) {
  if (n < 1 || k < 1 || k > n)
    throw std::invalid_argument("linear_map: need 1 <= k <= n");
  TestMap map;
  map.name = "linear";
  map.n = n;
  map.k = k;
  map.evaluate = [k](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return x.tail(k);
  };
  map.fiber_distance = [k](const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y) -> double {
    return (x.tail(k) - y).norm();
  };
  map.sphere_fiber_geodesic = [n, k](const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& y,
                                     double r) -> double {
    return slice_geodesic(x.head(n - k).norm(), x.tail(k).dot(y), y.norm(), r);
  };
  map.odd = true;
  map.homogeneity_degree = 1.0;
  return map;
}

TestMap radial_map(int n) {
  if (n < 1) throw std::invalid_argument("radial_map: need n >= 1");
  TestMap map;
  map.name = "radial";
  map.n = n;
  map.k = 1;
  map.evaluate = [](const Eigen::VectorXd& x) { return scalar(x.norm()); };
  map.fiber_distance = [](const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) -> double {
    if (y[0] < 0.0) return kInf;
    return std::abs(x.norm() - y[0]);
  };
  map.sphere_fiber_geodesic = [](const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, double r) -> double {
    (void)x;
    return std::abs(y[0] - r) <= 1e-12 * r ? 0.0 : kInf;
  };
  map.homogeneity_degree = 1.0;
  return map;
}

TestMap coordinate_map(int n) {
  if (n < 1) throw std::invalid_argument("coordinate_map: need n >= 1");
  TestMap map;
  map.name = "coordinate";
  map.n = n;
  map.k = 1;
  map.evaluate = [](const Eigen::VectorXd& x) { return scalar(x[0]); };
  map.fiber_distance = [](const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) -> double {
    return std::abs(x[0] - y[0]);
  };
  map.sphere_fiber_geodesic = [n](const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y,
                                  double r) -> double {
    return slice_geodesic(x.tail(n - 1).norm(), x[0] * y[0], std::abs(y[0]),
                          r);
  };
  map.odd = true;
  map.homogeneity_degree = 1.0;
  return map;
}

TestMap odd_cubic_map(int n, double eps) {
  if (n < 2) throw std::invalid_argument("odd_cubic_map: need n >= 2");
  TestMap map;
  map.name = "odd-cubic";
  map.n = n;
  map.k = 1;
  map.evaluate = [eps](const Eigen::VectorXd& x) {
    return scalar(x[0] + eps * x[1] * x[1] * x[1]);
  };
  map.odd = true;
  return map;
}

TestMap sine_perturbed_map(int n, double eps) {
  if (n < 2) throw std::invalid_argument("sine_perturbed_map: need n >= 2");
  TestMap map;
  map.name = "sine-perturbed";
  map.n = n;
  map.k = 1;
  map.evaluate = [eps](const Eigen::VectorXd& x) {
    return scalar(x[0] + eps * std::sin(x[1]));
  };
  map.odd = true;
  return map;
}

TestMap sphere_corrector_map(int n) {
  if (n < 2) throw std::invalid_argument("sphere_corrector_map: need n >= 2");
  const double kShift = std::sqrt(3.0) - 1.0;  // h = |x - 2p| - shift
  TestMap map;
  map.name = "sphere-corrector";
  map.n = n;
  map.k = 1;
  map.evaluate = [n, kShift](const Eigen::VectorXd& x) {
    const double rho = x.tail(n - 1).norm();
    const double g = std::hypot(x[0] - 1.0, rho);
    const double h = std::hypot(x[0] - 2.0, rho) - kShift;
    return scalar(std::min(g, h));
  };
  // The fiber at level y is the union of two meridian arcs: the part of the
  // g-sphere (center p, radius y) where h >= y and the part of the h-sphere
  // (center 2p, radius y + shift) where g >= y.  The angular cutoffs follow
  // from the two-center law of cosines; distances are evaluated in the
  // (axis, rho) half-plane, which is isometric on rotationally symmetric
  // sets.
  map.fiber_distance = [n, kShift](const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& yv) -> double {
    const double y = yv[0];
    const double rg = y;
    const double rh = y + kShift;
    if (rg < 0.0 && rh < 0.0) return kInf;
    const double z = x[0];
    const double rho = x.tail(n - 1).norm();
    double best = kInf;
    if (rg == 0.0) {
      // degenerate g-arc: the center point p, valid since h(p) > 0
      best = std::min(best, std::hypot(z - 1.0, rho));
    } else if (rg > 0.0) {
      const double cg = (rg * rg + 1.0 - rh * rh) / (2.0 * rg);
      if (cg >= -1.0) {
        const double lo = std::acos(std::min(cg, 1.0));
        best = std::min(best, arc_distance(z, rho, 1.0, rg, lo, M_PI));
      }
    }
    if (rh == 0.0) {
      const double g_at = 1.0;  // |2p - p|
      if (g_at >= y) best = std::min(best, std::hypot(z - 2.0, rho));
    } else if (rh > 0.0) {
      const double ch = (rg * rg - rh * rh - 1.0) / (2.0 * rh);
      if (ch <= 1.0) {
        const double hi = std::acos(std::max(ch, -1.0));
        best = std::min(best, arc_distance(z, rho, 2.0, rh, 0.0, hi));
      }
    }
    return best;
  };
  return map;
}

TestMap cone_map(int n, int k, double half_angle) {
  if (k < 2 || k >= n) throw std::invalid_argument("cone_map: need 2 <= k < n");
  if (!(half_angle > 0.0 && half_angle < M_PI / 2))
    throw std::invalid_argument("cone_map: half_angle in (0, pi/2)");
  TestMap map;
  map.name = "cone";
  map.n = n;
  map.k = k;
  const int zdim = n - k + 1;
  map.evaluate = [n, k, zdim, half_angle](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(k);
    out.head(k - 1) = x.head(k - 1);
    const auto z = x.tail(zdim);
    const double theta = std::atan2(z.head(zdim - 1).norm(), z[zdim - 1]);
    out[k - 1] = z.norm() * std::max(0.0, theta - half_angle);
    return out;
  };
  map.fiber_distance = [n, k, zdim, half_angle](
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y) -> double {
    const double c = y[k - 1];
    if (c < 0.0) return kInf;  // the sector function is nonnegative
    const auto z = x.tail(zdim);
    const double a = z.head(zdim - 1).norm();  // meridian coordinates
    const double b = z[zdim - 1];
    double zd;
    if (c == 0.0) {
      const double beta = std::max(0.0, std::atan2(a, b) - half_angle);
      zd = beta <= M_PI / 2 ? z.norm() * std::sin(beta) : z.norm();
    } else {
      // level c > 0 is the rotationally symmetric curve r = c/(phi - t0)
      // in meridian polar coordinates; minimize over phi by dense grid
      // plus golden-section refinement
      const double qn = std::hypot(a, b);
      auto dist_at = [&](double phi) {
        const double r = c / (phi - half_angle);
        return std::hypot(a - r * std::sin(phi), b - r * std::cos(phi));
      };
      const double phi_lo = half_angle + c / (qn + 3.0 * (1.0 + c));
      const int grid = 4096;
      double best = kInf, best_phi = M_PI;
      for (int i = 0; i <= grid; ++i) {
        const double phi =
            phi_lo + (M_PI - phi_lo) * static_cast<double>(i) / grid;
        const double d = dist_at(phi);
        if (d < best) {
          best = d;
          best_phi = phi;
        }
      }
      const double step = (M_PI - phi_lo) / grid;
      double lo = std::max(phi_lo, best_phi - step);
      double hi = std::min(M_PI, best_phi + step);
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int it = 0; it < 80; ++it) {
        const double m1 = hi - gr * (hi - lo);
        const double m2 = lo + gr * (hi - lo);
        if (dist_at(m1) < dist_at(m2))
          hi = m2;
        else
          lo = m1;
      }
      zd = std::min(best, dist_at(0.5 * (lo + hi)));
    }
    return std::hypot((x.head(k - 1) - y.head(k - 1)).norm(), zd);
  };
  map.homogeneity_degree = 1.0;
  return map;
}

TestMap holomorphic_product_map() {
  TestMap map;
  map.name = "holomorphic-product";
  map.n = 4;
  map.k = 2;
  map.evaluate = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(2);
    out[0] = x[0] * x[2] - x[1] * x[3];
    out[1] = x[0] * x[3] + x[1] * x[2];
    return out;
  };
  map.fiber_distance = [](const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) -> double {
    if (y.norm() > 1e-15) return kNaN;
    return std::min(std::hypot(x[0], x[1]), std::hypot(x[2], x[3]));
  };
  map.homogeneity_degree = 2.0;
  return map;
}

TestMap fermat_quadric_map() {
  TestMap map;
  map.name = "fermat-quadric";
  map.n = 4;
  map.k = 2;
  map.evaluate = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(2);
    out[0] = x[0] * x[0] - x[1] * x[1] + x[2] * x[2] - x[3] * x[3];
    out[1] = 2.0 * (x[0] * x[1] + x[2] * x[3]);
    return out;
  };
  // zero set = the two complex lines z2 = +- i z1, each a real 2-plane
  map.fiber_distance = [](const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) -> double {
    if (y.norm() > 1e-15) return kNaN;
    const double dp = std::hypot(x[1] + x[2], x[3] - x[0]);
    const double dm = std::hypot(x[2] - x[1], x[3] + x[0]);
    return std::min(dp, dm) / std::sqrt(2.0);
  };
  map.homogeneity_degree = 2.0;
  return map;
}

std::vector<TestMap> builtin_maps() {
  return {linear_map(3, 1),          radial_map(2),
          coordinate_map(3),         odd_cubic_map(3),
          sine_perturbed_map(2),     sphere_corrector_map(3),
          cone_map(3, 2),            holomorphic_product_map(),
          fermat_quadric_map()};
}

TestMap find_map(const std::string& name) {
  for (TestMap& m : builtin_maps())
    if (m.name == name) return std::move(m);
  throw std::invalid_argument("find_map: unknown map \"" + name + "\"");
}

double oddness_defect(const TestMap& map, int probes, std::uint64_t seed) {
  if (!map.odd) return 0.0;
  CounterRng rng(seed, 0x0ddull);
  double worst = 0.0;
  Eigen::VectorXd x(map.n);
  for (int i = 0; i < probes; ++i) {
    for (int j = 0; j < map.n; ++j) x[j] = norminv(rng.next_unit());
    worst = std::max(
        worst, (map.evaluate(-x) + map.evaluate(x)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double homogeneity_defect(const TestMap& map, int probes, std::uint64_t seed) {
  if (!map.homogeneity_degree) return 0.0;
  const double d = *map.homogeneity_degree;
  CounterRng rng(seed, 0x40e0ull);
  double worst = 0.0;
  Eigen::VectorXd x(map.n);
  for (int i = 0; i < probes; ++i) {
    for (int j = 0; j < map.n; ++j) x[j] = norminv(rng.next_unit());
    const Eigen::VectorXd fx = map.evaluate(x);
    for (double s : {0.5, 2.0, 3.7}) {
      worst = std::max(worst, (map.evaluate(s * x) - std::pow(s, d) * fx)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  return worst;
}

double optimization_fiber_distance(const TestMap& map, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y,
                                   const FiberDistanceOptions& opt,
                                   bool* converged) {
  auto c = [&map, &y](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return map.evaluate(s) - y;
  };
  const double tol = opt.constraint_tol * (1.0 + y.cwiseAbs().maxCoeff());
  return multistart_pgn(c, map.k, x, opt, {}, tol, converged);
}

Eigen::VectorXd optimization_fiber_point(const TestMap& map,
                                         const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y,
                                         const FiberDistanceOptions& opt,
                                         bool* converged) {
  auto c = [&map, &y](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return map.evaluate(s) - y;
  };
  const double tol = opt.constraint_tol * (1.0 + y.cwiseAbs().maxCoeff());
  bool ok = false;
  Eigen::VectorXd point = x;
  multistart_pgn(c, map.k, x, opt, {}, tol, &ok, &point);
  if (converged) *converged = ok;
  return ok ? point : x;
}

double sphere_fiber_distance(const TestMap& map, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, double radius,
                             const FiberDistanceOptions& opt,
                             bool* converged) {
  auto c = [&map, &y, radius](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    Eigen::VectorXd out(map.k + 1);
    out.head(map.k) = map.evaluate(s) - y;
    out[map.k] = (s.squaredNorm() - radius * radius) / (2.0 * radius);
    return out;
  };
  auto project = [radius](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    const double ns = s.norm();
    return ns > 1e-12 ? Eigen::VectorXd(radius / ns * s) : s;
  };
  const double tol = opt.constraint_tol * (1.0 + y.cwiseAbs().maxCoeff());
  const double chord = multistart_pgn(c, map.k + 1, x, opt, project, tol,
                                      converged);
  if (!std::isfinite(chord)) return kInf;
  return 2.0 * radius *
         std::asin(std::clamp(chord / (2.0 * radius), 0.0, 1.0));
}

}  // namespace waistkit
