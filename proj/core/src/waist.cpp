#include "waistkit/waist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <variant>

#include "waistkit/pancake.hpp"
#include "waistkit/rng.hpp"
#include "waistkit/transport.hpp"
#include "waistkit/tube_volumes.hpp"

namespace waistkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RhsModel resolve_model(const MeasureSpec& spec, RhsModel model) {
  if (model != RhsModel::kAuto) return model;
  if (std::holds_alternative<GaussianDensity>(spec.law))
    return RhsModel::kGaussianSubspace;
  if (std::holds_alternative<UniformSphere>(spec.law))
    return RhsModel::kSphericalIntrinsic;
  return RhsModel::kRadialSubspace;
}

double rhs_value(const MeasureSpec& spec, int k, RhsModel model, double t) {
  switch (model) {
    case RhsModel::kGaussianSubspace: {
      const auto* g = std::get_if<GaussianDensity>(&spec.law);
      if (!g)
        throw std::invalid_argument(
            "waist_curve: gaussian subspace model needs a gaussian law");
      // tube cross-section over the k widest coordinates: the weakest
      // coordinate-subspace tube, the only one every map can beat
      Eigen::VectorXd s = g->scales;
      std::sort(s.data(), s.data() + s.size());
      return gaussian_subspace_tube(s.head(k), t);
    }
    case RhsModel::kRadialSubspace:
      return radial_subspace_tube(spec, spec.dim - k, t);
    case RhsModel::kSphericalIntrinsic: {
      const auto* u = std::get_if<UniformSphere>(&spec.law);
      if (!u)
        throw std::invalid_argument(
            "waist_curve: intrinsic model needs a uniform sphere law");
      const int s = spec.dim - 1;  // sphere dimension
      return spherical_tube_fraction(s, s - k, t / u->radius);
    }
    default:
      throw std::logic_error("rhs_value: unresolved model");
  }
}

// The absolutely continuous-in-the-right-sense part that sample() may draw
// from once atoms are peeled off: only the atom+sphere mix needs rewriting.
MeasureSpec diffuse_part(const MeasureSpec& spec) {
  if (const auto* m = std::get_if<AtomSphereMix>(&spec.law))
    return uniform_sphere(spec.dim, m->radius);
  return spec;
}

// Per-point distance to f^{-1}(y), analytic when a formula covers the
// query and projected Gauss-Newton otherwise.  Failed solves return +inf,
// so the sample never lands in a neighborhood (conservative).
struct DistanceEngine {
  const TestMap& f;
  const Eigen::VectorXd& y;
  bool spherical = false;
  double radius = 1.0;
  FiberDistanceOptions opt;
  std::size_t failures = 0;
  bool analytic = true;

  double operator()(const Eigen::VectorXd& x) {
    if (spherical) {
      if (f.sphere_fiber_geodesic) {
        const double d = f.sphere_fiber_geodesic(x, y, radius);
        if (!std::isnan(d)) return d;
      }
      analytic = false;
      bool ok = false;
      const double d = sphere_fiber_distance(f, x, y, radius, opt, &ok);
      if (!ok) ++failures;
      return d;
    }
    if (f.fiber_distance) {
      const double d = f.fiber_distance(x, y);
      if (!std::isnan(d)) return d;
    }
    analytic = false;
    bool ok = false;
    const double d = optimization_fiber_distance(f, x, y, opt, &ok);
    if (!ok) ++failures;
    return d;
  }
};

Eigen::VectorXd scalar(double v) {
  Eigen::VectorXd out(1);
  out[0] = v;
  return out;
}

}  // namespace

WaistCurve waist_curve(const MeasureSpec& spec, const TestMap& f,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& t_grid,
                       std::size_t count, std::uint64_t seed, RhsModel model) {
  spec.validate();
  if (f.n != spec.dim)
    throw std::invalid_argument("waist_curve: map/measure dimension mismatch");
  if (static_cast<int>(y.size()) != f.k)
    throw std::invalid_argument("waist_curve: y must have k entries");
  if (t_grid.size() == 0)
    throw std::invalid_argument("waist_curve: empty t grid");
  for (int j = 0; j < t_grid.size(); ++j)
    if (!(t_grid[j] >= 0.0))
      throw std::invalid_argument("waist_curve: t grid must be >= 0");
  if (count == 0) throw std::invalid_argument("waist_curve: count must be > 0");

  const RhsModel resolved = resolve_model(spec, model);
  DistanceEngine engine{f, y, false, 1.0, {}, 0, true};
  engine.opt.seed = seed ^ 0x9e3779b97f4a7c15ull;
  if (resolved == RhsModel::kSphericalIntrinsic) {
    const auto* u = std::get_if<UniformSphere>(&spec.law);
    if (!u)
      throw std::invalid_argument(
          "waist_curve: intrinsic model needs a uniform sphere law");
    engine.spherical = true;
    engine.radius = u->radius;
  }

  // atoms enter exactly; the sampled part carries the remaining weight
  std::vector<std::pair<double, double>> atom_hits;  // (distance, mass)
  for (const Atom& a : atoms(spec)) atom_hits.push_back({engine(a.location), a.mass});
  const double diffuse_weight = 1.0 - atom_total_mass(spec);

  std::vector<double> dist(count);
  if (diffuse_weight > 0.0) {
    const SampleBatch batch = sample(diffuse_part(spec), count, seed);
    for (std::size_t i = 0; i < count; ++i) dist[i] = engine(batch.points.col(i));
  }

  WaistCurve curve;
  curve.t = t_grid;
  curve.y = y;
  curve.count = count;
  const int nt = static_cast<int>(t_grid.size());
  curve.lhs.resize(nt);
  curve.lhs_stderr.resize(nt);
  curve.rhs.resize(nt);
  curve.margin.resize(nt);
  for (int j = 0; j < nt; ++j) {
    const double t = t_grid[j];
    double lhs = 0.0;
    for (const auto& [d, mass] : atom_hits)
      if (d <= t) lhs += mass;
    double se = 0.0;
    if (diffuse_weight > 0.0) {
      std::size_t hits = 0;
      for (double d : dist) hits += d <= t;
      const double p = static_cast<double>(hits) / static_cast<double>(count);
      lhs += diffuse_weight * p;
      se = diffuse_weight *
           std::sqrt(p * (1.0 - p) / static_cast<double>(count));
    }
    curve.lhs[j] = lhs;
    curve.lhs_stderr[j] = se;
    curve.rhs[j] = rhs_value(spec, f.k, resolved, t);
    curve.margin[j] = lhs - curve.rhs[j];
  }
  curve.solver_failures = engine.failures;
  curve.analytic = engine.analytic;
  const double total =
      static_cast<double>(count) + static_cast<double>(atom_hits.size());
  curve.flagged = static_cast<double>(engine.failures) > 1e-3 * total;
  return curve;
}

FiberTubeEstimate fiber_tube_measure(const MeasureSpec& spec, const TestMap& f,
                                     const Eigen::VectorXd& y, double t,
                                     std::size_t count, std::uint64_t seed,
                                     RhsModel model) {
  if (!(t >= 0.0)) throw std::invalid_argument("fiber_tube_measure: t < 0");
  const WaistCurve curve = waist_curve(spec, f, y, scalar(t), count, seed, model);
  FiberTubeEstimate est;
  est.estimate = curve.lhs[0];
  est.stderr_value = curve.lhs_stderr[0];
  est.count = curve.count;
  est.solver_failures = curve.solver_failures;
  est.flagged = curve.flagged;
  est.analytic = curve.analytic;
  return est;
}

Verdict counterexample_certify(const MeasureSpec& spec, const TestMap& f,
                               const Eigen::VectorXd& t_grid,
                               const std::vector<Eigen::VectorXd>& y_candidates,
                               std::size_t count, std::uint64_t seed,
                               RhsModel model) {
  if (y_candidates.empty())
    throw std::invalid_argument("counterexample_certify: no y candidates");
  Verdict verdict;
  bool all_certified = true;
  bool any_clean = false;
  for (std::size_t idx = 0; idx < y_candidates.size(); ++idx) {
    WaistCurve curve = waist_curve(spec, f, y_candidates[idx], t_grid, count,
                                   seed + 101 * idx, model);
    // only formula distances may certify a violation: optimization
    // distances underestimate lhs, which could fake one
    const bool usable = curve.analytic && !curve.flagged;
    YWitness w;
    w.y = y_candidates[idx];
    w.t = curve.t[0];
    w.deficit = -kInf;
    bool clean = true;
    for (int j = 0; j < curve.t.size(); ++j) {
      const double deficit = curve.rhs[j] - curve.lhs[j];
      const double se = curve.lhs_stderr[j];
      if (deficit > 3.0 * se) clean = false;
      const bool certified =
          usable && deficit > 0.0 && (se == 0.0 || deficit >= 3.0 * se);
      const double sigma =
          se > 0.0 ? deficit / se : (deficit > 0.0 ? kInf : 0.0);
      const bool better =
          (certified && !w.certified) ||
          (certified == w.certified &&
           (sigma > w.deficit_sigma ||
            (sigma == w.deficit_sigma && deficit > w.deficit)));
      if (j == 0 || better) {
        w.t = curve.t[j];
        w.deficit = deficit;
        w.deficit_sigma = sigma;
        w.closed_form = se == 0.0;
        w.certified = certified;
      }
    }
    all_certified = all_certified && w.certified;
    any_clean = any_clean || clean;
    verdict.witnesses.push_back(std::move(w));
    verdict.curves.push_back(std::move(curve));
  }
  verdict.status = all_certified ? "violated"
                   : any_clean   ? "satisfied"
                                 : "inconclusive";
  return verdict;
}

namespace {

// FNV-1a over the body's halfspace data rounded to 1e-9, so re-resolved
// cut trees reuse cached transport solves when they reproduce a body.
std::uint64_t body_key(const ConvexBody& body) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto eat = [&h](double v) {
    const auto q = static_cast<std::int64_t>(std::llround(v * 1e9));
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>(q >> (8 * b)) & 0xffull;
      h *= 0x100000001b3ull;
    }
  };
  eat(body.bounding_radius());
  for (const Halfspace& hs : body.halfspaces()) {
    eat(hs.offset);
    for (int i = 0; i < hs.normal.size(); ++i) eat(hs.normal[i]);
  }
  return h;
}

// Planar Gauss-Seidel polish of an equalizing cut tree.  Each node's angle
// steers the F gap between its two subtree halves, so one secant per node,
// swept children first, zeroes all 2^depth - 1 residuals far faster than a
// simplex over the joint angles; untouched leaves hit the transport cache.
void secant_refine(const MeasureSpec& spec, double R, CutTree& tree,
                   const CutOptions& copt,
                   const std::function<Eigen::VectorXd(const ConvexBody&)>& F,
                   int max_evals, double tol, int& used) {
  const auto node_at = [&](int l, int i) -> CutNode& {
    return tree.nodes[(1 << l) - 1 + i];
  };
  const auto residual = [&](int l, int i) {
    const PartitionResult pr = build_partition(spec, R, tree, copt, F);
    ++used;
    const int count = 1 << (tree.depth - l);
    const int lo = i * count;
    double m0 = 0.0, m1 = 0.0;
    for (int j = 0; j < count / 2; ++j) {
      m0 += pr.F_values[lo + j][0];
      m1 += pr.F_values[lo + count / 2 + j][0];
    }
    return (m0 - m1) / (count / 2);
  };
  for (int sweep = 0; sweep < 6 && used < max_evals; ++sweep) {
    bool settled = true;
    for (int l = tree.depth - 1; l >= 0 && used < max_evals; --l)
      for (int i = 0; i < (1 << l) && used < max_evals; ++i) {
        CutNode& node = node_at(l, i);
        double a0 = std::atan2(node.direction[1], node.direction[0]);
        double r0 = residual(l, i);
        if (std::abs(r0) <= tol) continue;
        settled = false;
        double a1 = a0 + 0.02, best_a = a0, best_r = std::abs(r0);
        node.direction << std::cos(a1), std::sin(a1);
        double r1 = residual(l, i);
        for (int it = 0; it < 5 && used < max_evals; ++it) {
          if (std::abs(r1) < best_r) best_a = a1, best_r = std::abs(r1);
          if (std::abs(r1) <= tol || r1 == r0) break;
          double a2 = a1 - r1 * (a1 - a0) / (r1 - r0);
          a2 = std::clamp(a2, a1 - 0.3, a1 + 0.3);
          a0 = a1;
          r0 = r1;
          a1 = a2;
          node.direction << std::cos(a1), std::sin(a1);
          r1 = residual(l, i);
        }
        if (std::abs(r1) < best_r) best_a = a1, best_r = std::abs(r1);
        node.direction << std::cos(best_a), std::sin(best_a);
      }
    if (settled) break;
  }
}

}  // namespace

DemoResult equalized_waist_demo(const Eigen::VectorXd& scales, const TestMap& f,
                                const DemoOptions& opt) {
  const int n = static_cast<int>(scales.size());
  if (f.n != n)
    throw std::invalid_argument("equalized_waist_demo: dimension mismatch");
  if (f.k != 1)
    throw std::invalid_argument("equalized_waist_demo: k = 1 maps only");
  if (opt.depth < 0 || opt.depth > 4)
    throw std::invalid_argument("equalized_waist_demo: depth in [0, 4]");
  if (opt.t_grid.size() == 0)
    throw std::invalid_argument("equalized_waist_demo: t grid required");
  const MeasureSpec spec = gaussian_measure(scales);

  auto make_F = [&](int resolution, double tv) {
    auto cache = std::make_shared<std::unordered_map<std::uint64_t, double>>();
    const double smoothing = opt.transport_smoothing;
    return std::function<Eigen::VectorXd(const ConvexBody&)>(
        [&scales, &f, resolution, tv, smoothing, cache](const ConvexBody& body) {
          const std::uint64_t key = body_key(body);
          if (auto it = cache->find(key); it != cache->end())
            return scalar(it->second);
          TransportOptions topt;
          topt.resolution = resolution;
          topt.tv_target = tv;
          topt.boundary_smoothing = smoothing;
          // Axis-aligned cuts would otherwise hop to the sharp product
          // route, denting the equalizer's landscape; the uncut ball may
          // keep it (exact there).
          topt.force_grid = !body.halfspaces().empty();
          const TransportMap map = solve_monotone_transport(scales, body, topt);
          const double v = f.evaluate(center(map))[0];
          (*cache)[key] = v;
          return scalar(v);
        });
  };

  DemoResult out;
  double y = 0.0;
  if (opt.depth == 0) {
    // single pancake: the whole ball, fiber through its transport center
    const auto F = make_F(opt.final_resolution, opt.final_tv);
    y = F(ConvexBody(n, opt.R))[0];
    out.spread = 0.0;
    out.equalized = true;
  } else {
    const auto frames = subspace_sequence(n, f.k, opt.depth, opt.seed);
    EqualizeOptions eopt;
    eopt.starts = opt.starts;
    eopt.budget = opt.budget;
    eopt.spread_target = opt.spread_target;
    eopt.seed = opt.seed;
    eopt.cut.mc_count = opt.cut_cloud;
    const auto F_coarse = make_F(opt.coarse_resolution, opt.coarse_tv);
    const EqualizeResult coarse =
        equalize_F(spec, opt.R, F_coarse, opt.depth, frames, eopt);

    const auto F_final = make_F(opt.final_resolution, opt.final_tv);
    CutTree tree = coarse.tree;
    int polish_evals = 0;
    if (n == 2) {
      secant_refine(spec, opt.R, tree, eopt.cut, F_final, opt.polish_budget,
                    opt.spread_target / (2.0 * opt.depth), polish_evals);
    } else {
      EqualizeOptions popt = eopt;
      popt.starts = 1;
      popt.budget = opt.polish_budget;
      popt.warm_start = coarse.tree;
      const EqualizeResult polish =
          equalize_F(spec, opt.R, F_final, opt.depth, frames, popt);
      tree = polish.tree;
      polish_evals = polish.evaluations;
    }

    const PartitionResult partition =
        build_partition(spec, opt.R, tree, eopt.cut, F_final);
    double sum = 0.0;
    for (const Eigen::VectorXd& v : partition.F_values) sum += v[0];
    y = sum / static_cast<double>(partition.F_values.size());
    out.spread = partition.spread;
    out.equalized = partition.spread <= opt.spread_target;
    out.evaluations = coarse.evaluations + polish_evals;
  }

  out.y_found = y;
  out.curve = waist_curve(spec, f, scalar(y), opt.t_grid, opt.count,
                          opt.seed ^ 0xdeb06ull, RhsModel::kGaussianSubspace);
  return out;
}

double gauge(const ConvexBody& K, const Eigen::VectorXd& v) {
  if (v.size() != K.dim())
    throw std::invalid_argument("gauge: dimension mismatch");
  double g = v.norm() / K.bounding_radius();
  for (const Halfspace& hs : K.halfspaces()) {
    if (!(hs.offset > 0.0))
      throw std::invalid_argument("gauge: body must contain 0 inside");
    g = std::max(g, hs.normal.dot(v) / hs.offset);
  }
  return g;
}

WaistCurve norm_neighborhood_check(const ConvexBody& K, const TestMap& f,
                                   const Eigen::VectorXd& t_grid,
                                   std::size_t count, std::uint64_t seed) {
  const int n = K.dim();
  if (f.n != n)
    throw std::invalid_argument("norm_neighborhood_check: dimension mismatch");
  if (!f.odd)
    throw std::invalid_argument("norm_neighborhood_check: map must be odd");
  if (t_grid.size() == 0 || count == 0)
    throw std::invalid_argument("norm_neighborhood_check: empty grid or count");
  for (int j = 0; j < t_grid.size(); ++j)
    if (!(t_grid[j] >= 0.0 && t_grid[j] <= 1.0))
      throw std::invalid_argument("norm_neighborhood_check: t in [0, 1]");

  // per-axis support box for rejection sampling
  Eigen::VectorXd lo(n), hi(n);
  for (int d = 0; d < n; ++d) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[d] = 1.0;
    hi[d] = support(K, e).value;
    lo[d] = -support(K, -e).value;
  }

  const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(f.k);
  FiberDistanceOptions fopt;
  fopt.seed = seed ^ 0x6a06eull;

  std::vector<double> gd(count);
  std::size_t failures = 0;
  CounterRng rng(seed, 0xb0d1e5ull);
  Eigen::VectorXd x(n);
  const std::size_t max_attempts = count * 1000;
  std::size_t accepted = 0;
  for (std::size_t attempt = 0; attempt < max_attempts && accepted < count;
       ++attempt) {
    for (int d = 0; d < n; ++d)
      x[d] = lo[d] + (hi[d] - lo[d]) * rng.next_unit();
    if (!K.contains(x)) continue;
    bool ok = false;
    const Eigen::VectorXd s = optimization_fiber_point(f, x, y0, fopt, &ok);
    if (!ok) {
      ++failures;
      gd[accepted++] = kInf;
      continue;
    }
    gd[accepted++] = gauge(K, x - s);
  }
  if (accepted < count)
    throw std::runtime_error(
        "norm_neighborhood_check: rejection sampling starved (body too small "
        "in its box)");

  WaistCurve curve;
  curve.t = t_grid;
  curve.y = y0;
  curve.count = count;
  curve.analytic = false;
  curve.solver_failures = failures;
  curve.flagged = static_cast<double>(failures) > 1e-3 * static_cast<double>(count);
  const int nt = static_cast<int>(t_grid.size());
  curve.lhs.resize(nt);
  curve.lhs_stderr.resize(nt);
  curve.rhs.resize(nt);
  curve.margin.resize(nt);
  for (int j = 0; j < nt; ++j) {
    std::size_t hits = 0;
    for (double d : gd) hits += d <= t_grid[j];
    const double p = static_cast<double>(hits) / static_cast<double>(count);
    curve.lhs[j] = p;
    curve.lhs_stderr[j] = std::sqrt(p * (1.0 - p) / static_cast<double>(count));
    curve.rhs[j] = std::pow(t_grid[j], n - f.k);
    curve.margin[j] = p - curve.rhs[j];
  }
  return curve;
}

}  // namespace waistkit
