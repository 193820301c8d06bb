#include "waistkit/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "waistkit/rng.hpp"
#include "waistkit/special.hpp"
#include "waistkit/tube_volumes.hpp"

namespace waistkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// ---------------------------------------------------------------------
// row-major tensor lines: element (pre, t, post) of a tensor whose axis
// `axis` has length m sits at pre*m*stride + t*stride + post
// ---------------------------------------------------------------------

int tensor_size(const std::vector<int>& shape) {
  int n = 1;
  for (int m : shape) n *= m;
  return n;
}

void axis_extents(const std::vector<int>& shape, int axis, int& pre,
                  int& stride) {
  pre = 1;
  stride = 1;
  for (int d = 0; d < axis; ++d) pre *= shape[d];
  for (int d = axis + 1; d < static_cast<int>(shape.size()); ++d)
    stride *= shape[d];
}

// out_line[i] = log sum_j exp(in_line[j] + K(i, j)); -inf lines propagate.
void lse_apply_axis(const Eigen::VectorXd& in, const std::vector<int>& shape,
                    int axis, const Eigen::MatrixXd& K, Eigen::VectorXd& out) {
  const int m = shape[axis];
  int pre, stride;
  axis_extents(shape, axis, pre, stride);
  out.resize(in.size());
  Eigen::VectorXd buf(m), arg(m);
  for (int a = 0; a < pre; ++a)
    for (int s = 0; s < stride; ++s) {
      const int base = a * m * stride + s;
      for (int t = 0; t < m; ++t) buf[t] = in[base + t * stride];
      for (int i = 0; i < m; ++i) {
        arg = buf + K.row(i).transpose();
        const double mx = arg.maxCoeff();
        out[base + i * stride] =
            std::isfinite(mx)
                ? mx + std::log((arg.array() - mx).exp().sum())
                : mx;
      }
    }
}

// out_line[i] = max_j (in_line[j] + K(i, j)) — discrete Legendre step.
void maxplus_apply_axis(const Eigen::VectorXd& in,
                        const std::vector<int>& shape, int axis,
                        const Eigen::MatrixXd& K, Eigen::VectorXd& out) {
  const int m = shape[axis];
  int pre, stride;
  axis_extents(shape, axis, pre, stride);
  out.resize(in.size());
  Eigen::VectorXd buf(m);
  for (int a = 0; a < pre; ++a)
    for (int s = 0; s < stride; ++s) {
      const int base = a * m * stride + s;
      for (int t = 0; t < m; ++t) buf[t] = in[base + t * stride];
      for (int i = 0; i < m; ++i)
        out[base + i * stride] = (buf + K.row(i).transpose()).maxCoeff();
    }
}

// out_line[i] = sum_j exp(in_line[j] + K(i, j) - norm_line[i]) * y[j]:
// barycentric coordinate contraction, self-normalized by `norm`.
void weighted_apply_axis(const Eigen::VectorXd& in,
                         const std::vector<int>& shape, int axis,
                         const Eigen::MatrixXd& K,
                         const Eigen::VectorXd& norm,
                         const Eigen::VectorXd& y, Eigen::VectorXd& out) {
  const int m = shape[axis];
  int pre, stride;
  axis_extents(shape, axis, pre, stride);
  out.resize(in.size());
  Eigen::VectorXd buf(m), arg(m);
  for (int a = 0; a < pre; ++a)
    for (int s = 0; s < stride; ++s) {
      const int base = a * m * stride + s;
      for (int t = 0; t < m; ++t) buf[t] = in[base + t * stride];
      for (int i = 0; i < m; ++i) {
        const int pos = base + i * stride;
        arg = buf + K.row(i).transpose();
        double acc = 0.0;
        for (int t = 0; t < m; ++t) {
          const double w = std::exp(arg[t] - norm[pos]);
          acc += w * y[t];
        }
        out[pos] = acc;
      }
    }
}

// Multilinear interpolation stencil over cell centers of [lo, hi].
struct Stencil {
  int corners = 1;
  int idx[8] = {0};
  double w[8] = {1.0};
};

Stencil make_stencil(const std::vector<int>& shape, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(shape.size());
  Stencil st;
  st.corners = 1 << n;
  int base[3] = {0, 0, 0};
  double frac[3] = {0.0, 0.0, 0.0};
  for (int d = 0; d < n; ++d) {
    const double h = (hi[d] - lo[d]) / shape[d];
    double u = (x[d] - lo[d]) / h - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(shape[d] - 1));
    int b = static_cast<int>(u);
    b = std::min(b, shape[d] - 2 >= 0 ? shape[d] - 2 : 0);
    base[d] = b;
    frac[d] = shape[d] > 1 ? u - b : 0.0;
  }
  for (int c = 0; c < st.corners; ++c) {
    int flat = 0;
    double w = 1.0;
    for (int d = 0; d < n; ++d) {
      const int bit = (c >> d) & 1;
      const int j = std::min(base[d] + bit, shape[d] - 1);
      flat = flat * shape[d] + j;
      w *= bit ? frac[d] : 1.0 - frac[d];
    }
    st.idx[c] = flat;
    st.w[c] = w;
  }
  return st;
}

double interp1(const Eigen::VectorXd& xs, const Eigen::VectorXd& vs,
               double x) {
  const int m = static_cast<int>(xs.size());
  if (x <= xs[0]) return vs[0];
  if (x >= xs[m - 1]) return vs[m - 1];
  const auto it = std::upper_bound(xs.data(), xs.data() + m, x);
  const int j = static_cast<int>(it - xs.data());
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return (1.0 - t) * vs[j - 1] + t * vs[j];
}

// Axis-aligned box hull of the halfspaces, clipped to [-R, R] per axis;
// false if any normal is not (up to 1e-12) a signed coordinate vector.
bool axis_box(const ConvexBody& body, Eigen::VectorXd& lo,
              Eigen::VectorXd& hi) {
  const int n = body.dim();
  const double R = body.bounding_radius();
  lo = Eigen::VectorXd::Constant(n, -R);
  hi = Eigen::VectorXd::Constant(n, R);
  for (const Halfspace& h : body.halfspaces()) {
    int ax = 0;
    h.normal.cwiseAbs().maxCoeff(&ax);
    if (std::abs(std::abs(h.normal[ax]) - 1.0) > 1e-12) return false;
    if (h.normal.cwiseAbs().sum() - std::abs(h.normal[ax]) > 1e-12)
      return false;
    if (h.normal[ax] > 0.0)
      hi[ax] = std::min(hi[ax], h.offset);
    else
      lo[ax] = std::max(lo[ax], -h.offset);
  }
  return true;
}

// Distributes a point mass over the 2^n hyper-quadrants of `split` with a
// linear ramp of width `ramp[d]` per axis, so a sub-cell displacement of the
// point moves quadrant mass at second order only.
void add_quadrant_mass(Eigen::VectorXd& acc, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& split,
                       const Eigen::VectorXd& ramp, double mass) {
  const int n = static_cast<int>(y.size());
  for (int c = 0; c < (1 << n); ++c) {
    double w = mass;
    for (int d = 0; d < n && w > 0.0; ++d) {
      const double r = std::clamp(0.5 + (y[d] - split[d]) / ramp[d], 0.0, 1.0);
      w *= ((c >> (n - 1 - d)) & 1) ? r : 1.0 - r;
    }
    acc[c] += w;
  }
}

}  // namespace

// ---------------------------------------------------------------------
// product route
// ---------------------------------------------------------------------

double TransportMap::Axis::forward(double x) const {
  const double m = fhi - flo;
  const double arg =
      std::clamp(flo + m * phi_cdf(x / sigma), 1e-300, 1.0 - 1e-16);
  return sigma * norminv(arg);
}

double TransportMap::Axis::inverse(double y) const {
  const double m = fhi - flo;
  const double arg =
      std::clamp((phi_cdf(y / sigma) - flo) / m, 1e-300, 1.0 - 1e-16);
  return sigma * norminv(arg);
}

// ---------------------------------------------------------------------
// map evaluation
// ---------------------------------------------------------------------

Eigen::VectorXd TransportMap::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != body_.dim())
    throw std::invalid_argument("TransportMap: dimension mismatch");
  Eigen::VectorXd y(x.size());
  if (!axes_.empty()) {
    for (std::size_t d = 0; d < axes_.size(); ++d)
      y[static_cast<int>(d)] = axes_[d].forward(x[static_cast<int>(d)]);
    return y;
  }
  const Stencil st = make_stencil(grid_shape_, grid_lo_, grid_hi_, x);
  for (int d = 0; d < x.size(); ++d) {
    double acc = 0.0;
    for (int c = 0; c < st.corners; ++c)
      acc += st.w[c] * map_values_[d][st.idx[c]];
    y[d] = acc;
  }
  return y;
}

double TransportMap::default_step() const {
  if (!axes_.empty()) {
    double smin = kInf;
    for (const Axis& a : axes_) smin = std::min(smin, a.sigma);
    return 1e-4 * smin;
  }
  double h = 0.0;
  for (std::size_t d = 0; d < grid_shape_.size(); ++d)
    h = std::max(h, (grid_hi_[static_cast<int>(d)] -
                     grid_lo_[static_cast<int>(d)]) /
                        grid_shape_[d]);
  return h;
}

Eigen::MatrixXd TransportMap::jacobian(const Eigen::VectorXd& x,
                                       double step) const {
  const int n = body_.dim();
  const double h = step > 0.0 ? step : default_step();
  Eigen::MatrixXd J(n, n);
  for (int d = 0; d < n; ++d) {
    Eigen::VectorXd xp = x, xm = x;
    xp[d] += h;
    xm[d] -= h;
    J.col(d) = (evaluate(xp) - evaluate(xm)) / (2.0 * h);
  }
  return J;
}

double Potential::value(const Eigen::VectorXd& x) const {
  if (x.size() != dim)
    throw std::invalid_argument("Potential: dimension mismatch");
  if (product()) {
    double acc = 0.0;
    for (int d = 0; d < dim; ++d)
      acc += interp1(axis_points[d], axis_values[d], x[d]);
    return acc;
  }
  const Stencil st = make_stencil(shape, box_lo, box_hi, x);
  double acc = 0.0;
  for (int c = 0; c < st.corners; ++c) acc += st.w[c] * values[st.idx[c]];
  return acc;
}

// ---------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------

TransportMap solve_monotone_transport(const Eigen::VectorXd& scales,
                                      const ConvexBody& body,
                                      const TransportOptions& opt) {
  const int n = body.dim();
  if (scales.size() != n || scales.minCoeff() <= 0.0)
    throw std::invalid_argument(
        "solve_monotone_transport: need positive scales matching the body "
        "dimension");
  const double R = body.bounding_radius();
  const InnerBall inner = chebyshev_ball(body);
  if (inner.margin <= 1e-12 * (1.0 + R))
    throw std::runtime_error("solve_monotone_transport: degenerate body");

  TransportMap map(body);
  map.scales_ = scales;
  Eigen::VectorXd sigma(n);
  for (int d = 0; d < n; ++d) sigma[d] = 1.0 / std::sqrt(2.0 * scales[d]);

  // Product shortcut: axis-aligned box whose ball truncation is below the
  // route tolerance.  Per-axis CDF inversion is then exact.
  Eigen::VectorXd lo, hi;
  if (!opt.force_grid && axis_box(body, lo, hi)) {
    double box_mass = 1.0;
    std::vector<TransportMap::Axis> axes(n);
    bool valid = true;
    for (int d = 0; d < n; ++d) {
      if (lo[d] >= hi[d]) valid = false;
      if (!valid) break;
      axes[d].sigma = sigma[d];
      axes[d].lo = lo[d];
      axes[d].hi = hi[d];
      axes[d].flo = phi_cdf(lo[d] / sigma[d]);
      axes[d].fhi = phi_cdf(hi[d] / sigma[d]);
      box_mass *= axes[d].fhi - axes[d].flo;
    }
    if (!valid || box_mass <= 1e-9)
      throw std::runtime_error("solve_monotone_transport: degenerate body");
    // gaussian mass outside B(R): the box route ignores the ball corners
    const double tail = 1.0 - gaussian_subspace_tube(scales, R, 1e-12);
    const double target = opt.tv_target > 0.0 ? opt.tv_target : 1e-6;
    if (tail <= 0.1 * target * box_mass) {
      map.axes_ = std::move(axes);
      map.diag_.route = "product";
      map.diag_.tv_target = target;
      map.diag_.body_mass = box_mass;
      map.diag_.resolution = 0;

      // dyadic pushforward check in closed form, split at the inner center
      const Eigen::VectorXd split = inner.center;
      double tv = 0.0;
      if (n <= 16) {
        for (int cell = 0; cell < (1 << n); ++cell) {
          double push = 1.0, tgt = 1.0;
          for (int d = 0; d < n; ++d) {
            const TransportMap::Axis& a = map.axes_[d];
            const double c = std::clamp(split[d], a.lo, a.hi);
            const double pl = phi_cdf(a.inverse(c) / a.sigma);
            const double tl =
                (phi_cdf(c / a.sigma) - a.flo) / (a.fhi - a.flo);
            const bool right = (cell >> (n - 1 - d)) & 1;
            push *= right ? 1.0 - pl : pl;
            tgt *= right ? 1.0 - tl : tl;
          }
          tv += std::abs(push - tgt);
        }
        tv *= 0.5;
      }
      map.diag_.tv_discrepancy = tv;

      // per-axis potentials by cumulative trapezoid of the 1-D maps
      map.potential_.dim = n;
      map.potential_.box_lo.resize(n);
      map.potential_.box_hi.resize(n);
      map.potential_.axis_points.resize(n);
      map.potential_.axis_values.resize(n);
      const int mpts = 513;
      for (int d = 0; d < n; ++d) {
        const double L = std::max(6.0 * sigma[d], R);
        map.potential_.box_lo[d] = -L;
        map.potential_.box_hi[d] = L;
        Eigen::VectorXd xs(mpts), us(mpts);
        for (int j = 0; j < mpts; ++j)
          xs[j] = -L + 2.0 * L * j / (mpts - 1);
        us[0] = 0.0;
        for (int j = 1; j < mpts; ++j)
          us[j] = us[j - 1] + 0.5 * (xs[j] - xs[j - 1]) *
                                  (map.axes_[d].forward(xs[j]) +
                                   map.axes_[d].forward(xs[j - 1]));
        map.potential_.axis_points[d] = std::move(xs);
        map.potential_.axis_values[d] = std::move(us);
      }
      return map;
    }
  }

  // entropic grid route
  if (n > 3)
    throw std::invalid_argument(
        "solve_monotone_transport: grid solver supports dim <= 3");
  const double target = opt.tv_target > 0.0 ? opt.tv_target : 0.02;
  const int m = std::max(8, opt.resolution);
  std::vector<int> shape(n, m);
  const int N = tensor_size(shape);

  Eigen::VectorXd box_lo(n), box_hi(n);
  std::vector<Eigen::VectorXd> axis_pts(n);
  for (int d = 0; d < n; ++d) {
    const double L = std::max(6.0 * sigma[d], R);
    box_lo[d] = -L;
    box_hi[d] = L;
    axis_pts[d].resize(m);
    for (int j = 0; j < m; ++j)
      axis_pts[d][j] = -L + (j + 0.5) * 2.0 * L / m;
  }

  // discrete marginals: p from the source density, q from the density
  // restricted to the body.  The sharp cell-center test keeps the
  // barycentric map inside the body by convexity; the smoothed variant
  // trades a boundary band of width eps for continuity in the body data.
  double smooth_eps = 0.0;
  if (opt.boundary_smoothing > 0.0)
    for (int d = 0; d < n; ++d)
      smooth_eps = std::max(
          smooth_eps, opt.boundary_smoothing * (box_hi[d] - box_lo[d]) / m);
  Eigen::VectorXd logp(N), q(N);
  Eigen::VectorXd beta(N);
  {
    double psum = 0.0, qsum = 0.0;
    Eigen::VectorXd y(n);
    for (int i = 0; i < N; ++i) {
      int rem = i;
      double e = 0.0;
      for (int d = n - 1; d >= 0; --d) {
        const int j = rem % m;
        rem /= m;
        y[d] = axis_pts[d][j];
        e += scales[d] * y[d] * y[d];
      }
      const double w = std::exp(-e);
      logp[i] = w;
      if (smooth_eps > 0.0) {
        double sd = y.norm() - body.bounding_radius();
        for (const Halfspace& h : body.halfspaces())
          sd = std::max(sd, h.normal.dot(y) - h.offset);
        q[i] = w / (1.0 + std::exp(std::min(40.0, sd / smooth_eps)));
      } else {
        q[i] = body.contains(y) ? w : 0.0;
      }
      psum += w;
      qsum += q[i];
    }
    if (qsum / psum <= 1e-9)
      throw std::runtime_error("solve_monotone_transport: degenerate body");
    map.diag_.body_mass = qsum / psum;
    for (int i = 0; i < N; ++i) {
      q[i] /= qsum;
      beta[i] = q[i] > 0.0 ? std::log(q[i]) : -kInf;
      logp[i] = std::log(logp[i] / psum);
    }
  }
  const Eigen::VectorXd& alpha = logp;
  Eigen::VectorXd p = alpha.array().exp();

  Eigen::VectorXd f = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd work(N), work2(N);
  std::vector<Eigen::MatrixXd> K(n, Eigen::MatrixXd(m, m));
  const Eigen::VectorXd split = inner.center;

  // axiswise histogram ranges over the target support: the 2^n-cell check
  // alone is blind on symmetric bodies, so annealing also has to match
  // per-axis bin masses
  const int bins = 8;
  Eigen::VectorXd bin_lo(n), bin_w(n);
  {
    Eigen::VectorXd ylo = Eigen::VectorXd::Constant(n, kInf);
    Eigen::VectorXd yhi = Eigen::VectorXd::Constant(n, -kInf);
    for (int i = 0; i < N; ++i) {
      if (q[i] <= 0.0) continue;
      int rem = i;
      for (int d = n - 1; d >= 0; --d) {
        const double y = axis_pts[d][rem % m];
        rem /= m;
        ylo[d] = std::min(ylo[d], y);
        yhi[d] = std::max(yhi[d], y);
      }
    }
    for (int d = 0; d < n; ++d) {
      const double h = (box_hi[d] - box_lo[d]) / m;
      bin_lo[d] = ylo[d] - 0.5 * h;
      bin_w[d] = std::max((yhi[d] - ylo[d] + h) / bins, 1e-12);
    }
  }
  // linear (cloud-in-cell) binning; hard bins would inflict an O(h/bin_w)
  // edge artifact on the pushforward even when the map is exact
  auto add_hist = [&](Eigen::MatrixXd& hist, int d, double y, double mass) {
    const double u = (y - bin_lo[d]) / bin_w[d] - 0.5;
    const int i0 = static_cast<int>(std::floor(u));
    const double fr = u - static_cast<double>(i0);
    hist(d, std::clamp(i0, 0, bins - 1)) += (1.0 - fr) * mass;
    hist(d, std::clamp(i0 + 1, 0, bins - 1)) += fr * mass;
  };
  Eigen::VectorXd ramp(n);
  for (int d = 0; d < n; ++d) ramp[d] = (box_hi[d] - box_lo[d]) / m;

  double eps = 1.0;
  double tv = kInf;
  bool met = false;
  const bool dbg = std::getenv("WK_TRANSPORT_DEBUG") != nullptr;
  for (;; eps *= 0.5) {
    for (int d = 0; d < n; ++d)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const double diff = axis_pts[d][i] - axis_pts[d][j];
          K[d](i, j) = -diff * diff / eps;
        }

    // Sinkhorn mixes at rate ~ 1 - O(eps), so small stages get more passes.
    const int iter_cap =
        eps >= 0.1 ? 100 : (eps >= 0.01 ? 400 : 2000);
    double marg_err = kInf;
    int iters = 0;
    for (int it = 0; it < iter_cap; ++it, ++iters) {
      work = g / eps + beta;
      for (int d = 0; d < n; ++d) {
        lse_apply_axis(work, shape, d, K[d], work2);
        work.swap(work2);
      }
      f = -eps * work;
      work = f / eps + alpha;
      for (int d = 0; d < n; ++d) {
        lse_apply_axis(work, shape, d, K[d], work2);
        work.swap(work2);
      }
      g = -eps * work;
      if (it % 5 == 4) {
        // source-marginal L1 error: the g update pins the target marginal,
        // so convergence shows up in the source marginal only
        work = g / eps + beta;
        for (int d = 0; d < n; ++d) {
          lse_apply_axis(work, shape, d, K[d], work2);
          work.swap(work2);
        }
        double err = 0.0;
        for (int i = 0; i < N; ++i) {
          const double lm = f[i] / eps + alpha[i] + work[i];
          err += std::abs((std::isfinite(lm) ? std::exp(lm) : 0.0) - p[i]);
        }
        marg_err = err;
        if (err < 0.1 * target) break;
      }
    }

    // barycentric map per coordinate, then the dyadic pushforward check
    map.map_values_.assign(n, Eigen::VectorXd(N));
    for (int d = 0; d < n; ++d) {
      work = g / eps + beta;
      for (int e = 0; e < n; ++e) {
        if (e == d) continue;
        lse_apply_axis(work, shape, e, K[e], work2);
        work.swap(work2);
      }
      lse_apply_axis(work, shape, d, K[d], work2);  // log normalizer
      weighted_apply_axis(work, shape, d, K[d], work2, axis_pts[d],
                          map.map_values_[d]);
    }
    Eigen::VectorXd push = Eigen::VectorXd::Zero(1 << n);
    Eigen::VectorXd tgt = Eigen::VectorXd::Zero(1 << n);
    Eigen::MatrixXd hist_push = Eigen::MatrixXd::Zero(n, bins);
    Eigen::MatrixXd hist_tgt = Eigen::MatrixXd::Zero(n, bins);
    Eigen::VectorXd yi(n), yj(n);
    for (int i = 0; i < N; ++i) {
      for (int d = 0; d < n; ++d) yi[d] = map.map_values_[d][i];
      add_quadrant_mass(push, yi, split, ramp, p[i]);
      for (int d = 0; d < n; ++d) add_hist(hist_push, d, yi[d], p[i]);
      if (q[i] > 0.0) {
        int rem = i;
        for (int d = n - 1; d >= 0; --d) {
          yj[d] = axis_pts[d][rem % m];
          rem /= m;
        }
        add_quadrant_mass(tgt, yj, split, ramp, q[i]);
        for (int d = 0; d < n; ++d) add_hist(hist_tgt, d, yj[d], q[i]);
      }
    }
    tv = 0.5 * (push - tgt).cwiseAbs().sum();
    for (int d = 0; d < n; ++d)
      tv = std::max(
          tv, 0.5 * (hist_push.row(d) - hist_tgt.row(d)).cwiseAbs().sum());
    if (dbg)
      std::fprintf(stderr, "  [transport] eps=%.5f iters=%d marg=%.3g tv=%.4f\n",
                   eps, iters, marg_err, tv);
    // require an epsilon small enough that entropic smoothing no longer
    // dominates the map before accepting the discrepancy target
    if (tv <= target && eps < 0.02) {
      met = true;
      break;
    }
    if (0.5 * eps < 1e-3) {
      met = tv <= target;
      break;
    }
  }
  if (!met)
    throw std::runtime_error(
        "solve_monotone_transport: not converged (TV " + std::to_string(tv) +
        " > target " + std::to_string(target) + " at the regularization "
        "floor; refine the resolution)");

  map.grid_lo_ = box_lo;
  map.grid_hi_ = box_hi;
  map.grid_shape_ = shape;
  map.diag_.route = "grid";
  map.diag_.tv_discrepancy = tv;
  map.diag_.tv_target = target;
  map.diag_.epsilon_final = eps;
  map.diag_.resolution = m;

  // potential: path-integrate the map from the box corner, then enforce
  // convexity by a double discrete Legendre transform (axiswise max-plus)
  Eigen::VectorXd U = Eigen::VectorXd::Zero(N);
  for (int d = 0; d < n; ++d) {
    int pre, stride;
    axis_extents(shape, d, pre, stride);
    const double h = (box_hi[d] - box_lo[d]) / m;
    Eigen::VectorXd line(m), cum(m);
    for (int a = 0; a < pre; ++a) {
      const int base = a * m * stride;
      for (int t = 0; t < m; ++t)
        line[t] = map.map_values_[d][base + t * stride];
      cum[0] = 0.0;
      for (int t = 1; t < m; ++t)
        cum[t] = cum[t - 1] + 0.5 * h * (line[t] + line[t - 1]);
      for (int t = 0; t < m; ++t)
        for (int s = 0; s < stride; ++s) U[base + t * stride + s] += cum[t];
    }
  }
  std::vector<Eigen::MatrixXd> XY(n, Eigen::MatrixXd(m, m));
  for (int d = 0; d < n; ++d)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        XY[d](i, j) = axis_pts[d][i] * axis_pts[d][j];
  work = -U;
  for (int d = 0; d < n; ++d) {
    maxplus_apply_axis(work, shape, d, XY[d], work2);
    work.swap(work2);
  }
  work = -work;  // -U*
  for (int d = 0; d < n; ++d) {
    maxplus_apply_axis(work, shape, d, XY[d], work2);
    work.swap(work2);
  }
  map.potential_.dim = n;
  map.potential_.box_lo = box_lo;
  map.potential_.box_hi = box_hi;
  map.potential_.shape = shape;
  map.potential_.values.assign(work.data(), work.data() + N);
  return map;
}

// ---------------------------------------------------------------------
// audits
// ---------------------------------------------------------------------

Eigen::VectorXd center(const TransportMap& map) {
  return map.evaluate(Eigen::VectorXd::Zero(map.body().dim()));
}

LipschitzAudit lipschitz_audit(const TransportMap& map, int pair_count,
                               std::uint64_t seed) {
  if (pair_count < 1)
    throw std::invalid_argument("lipschitz_audit: pair_count must be >= 1");
  const int n = map.body().dim();
  Eigen::VectorXd sigma(n);
  for (int d = 0; d < n; ++d)
    sigma[d] = 1.0 / std::sqrt(2.0 * map.scales()[d]);
  CounterRng rng(seed, 0x11b5u);
  LipschitzAudit out;
  out.min_inner_product = kInf;
  Eigen::VectorXd x(n), y(n);
  for (int p = 0; p < pair_count; ++p) {
    for (int d = 0; d < n; ++d) x[d] = sigma[d] * norminv(rng.next_unit());
    for (int d = 0; d < n; ++d) y[d] = sigma[d] * norminv(rng.next_unit());
    const double dx = (x - y).norm();
    if (dx < 1e-12) continue;
    const Eigen::VectorXd dt = map.evaluate(x) - map.evaluate(y);
    out.max_ratio = std::max(out.max_ratio, dt.norm() / dx);
    out.min_inner_product = std::min(out.min_inner_product, dt.dot(x - y));
  }
  return out;
}

MaStats ma_residual(const TransportMap& map, const Eigen::MatrixXd& points,
                    double step) {
  const int n = map.body().dim();
  if (points.rows() != n)
    throw std::invalid_argument("ma_residual: points must be dim x count");
  const double h = step > 0.0 ? step : map.default_step();
  const double margin_cut = h * std::sqrt(static_cast<double>(n));
  const ConvexBody& body = map.body();
  const double R = body.bounding_radius();
  const double log_mass = std::log(map.diagnostics().body_mass);

  MaStats st;
  double sum = 0.0;
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const Eigen::VectorXd x = points.col(c);
    const Eigen::VectorXd y = map.evaluate(x);
    double margin = R - y.norm();
    for (const Halfspace& hs : body.halfspaces())
      margin = std::min(margin, hs.offset - hs.normal.dot(y));
    if (margin < margin_cut) {
      ++st.excluded;
      continue;
    }
    Eigen::MatrixXd J = map.jacobian(x, h);
    J = 0.5 * (J + J.transpose()).eval();
    const double det = J.determinant();
    if (!(det > 0.0)) {
      ++st.excluded;
      continue;
    }
    double qx = 0.0, py = 0.0;
    for (int d = 0; d < n; ++d) {
      qx += map.scales()[d] * x[d] * x[d];
      py += map.scales()[d] * y[d] * y[d];
    }
    const double r = std::log(det) - (py + log_mass) + qx;
    sum += std::abs(r);
    st.max_abs = std::max(st.max_abs, std::abs(r));
    ++st.used;
  }
  st.mean_abs = st.used > 0 ? sum / st.used : 0.0;
  return st;
}

LogdetCoeffs logdet_expansion_check(const Eigen::MatrixXd& D0,
                                    const Eigen::MatrixXd& D1,
                                    const Eigen::MatrixXd& D2) {
  const int n = static_cast<int>(D0.rows());
  if (D0.cols() != n || D1.rows() != n || D1.cols() != n || D2.rows() != n ||
      D2.cols() != n)
    throw std::invalid_argument("logdet_expansion_check: size mismatch");
  const Eigen::MatrixXd S0 = 0.5 * (D0 + D0.transpose());
  const Eigen::MatrixXd S1 = 0.5 * (D1 + D1.transpose());
  const Eigen::MatrixXd S2 = 0.5 * (D2 + D2.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S0);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument(
        "logdet_expansion_check: D0 must be positive definite");
  const Eigen::MatrixXd root_inv =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  const Eigen::MatrixXd A = root_inv * S1 * root_inv;
  const Eigen::MatrixXd B = root_inv * S2 * root_inv;

  LogdetCoeffs out;
  out.trace_bound = B.trace();
  out.formula_coeff = B.trace() - 0.5 * (A * A).trace();

  const double scale = 1.0 + S1.norm() + S2.norm();
  const double h = 0.01 * es.eigenvalues().minCoeff() / scale;
  auto phi = [&](double t) {
    const Eigen::MatrixXd M = S0 + t * S1 + t * t * S2;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    double ld = 0.0;
    for (int i = 0; i < n; ++i)
      ld += std::log(std::abs(lu.matrixLU()(i, i)));
    return ld;
  };
  out.fd_coeff = (-phi(2.0 * h) + 16.0 * phi(h) - 30.0 * phi(0.0) +
                  16.0 * phi(-h) - phi(-2.0 * h)) /
                 (24.0 * h * h);
  return out;
}

double center_stability(const Eigen::VectorXd& scales, const ConvexBody& body,
                        double eps, const TransportOptions& opt) {
  if (eps < 0.0)
    throw std::invalid_argument("center_stability: eps must be >= 0");
  ConvexBody relaxed(body.dim(), body.bounding_radius());
  for (const Halfspace& h : body.halfspaces())
    relaxed.add_halfspace(h.normal, h.offset + eps);
  const Eigen::VectorXd c0 = center(solve_monotone_transport(scales, body, opt));
  const Eigen::VectorXd c1 =
      center(solve_monotone_transport(scales, relaxed, opt));
  return (c0 - c1).norm();
}

double pancake_parameter(double eps, double R) {
  if (!(eps > 0.0) || !(R > 0.0))
    throw std::invalid_argument("pancake_parameter: need eps > 0 and R > 0");
  return eps * eps / (4.0 * (R + eps));
}

}  // namespace waistkit
