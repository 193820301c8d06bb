#include "waistkit/pancake.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <variant>

#include "waistkit/rng.hpp"
#include "waistkit/special.hpp"

namespace waistkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int node_index(int level, int i) { return (1 << level) - 1 + i; }

bool lebesgue_law(const MeasureSpec& spec) {
  return std::holds_alternative<GaussianDensity>(spec.law) ||
         std::holds_alternative<UniformBall>(spec.law) ||
         std::holds_alternative<RadialProfile>(spec.law);
}

// Directions must be unit and orthogonal to their level frame; offsets are
// free (they get resolved by the cut engine).
void check_tree(const CutTree& tree, int n) {
  if (tree.depth < 1 || tree.depth > 20)
    throw std::invalid_argument("pancake: depth must be in [1, 20]");
  if (static_cast<int>(tree.frames.size()) < tree.depth)
    throw std::invalid_argument("pancake: one frame per level required");
  if (static_cast<int>(tree.nodes.size()) != (1 << tree.depth) - 1)
    throw std::invalid_argument("pancake: node count must be 2^depth - 1");
  for (int l = 0; l < tree.depth; ++l) {
    const Eigen::MatrixXd& fr = tree.frames[l];
    if (fr.cols() > 0 && fr.rows() != n)
      throw std::invalid_argument("pancake: frame dimension mismatch");
    for (int i = 0; i < (1 << l); ++i) {
      const Eigen::VectorXd& d = tree.nodes[node_index(l, i)].direction;
      if (d.size() != n)
        throw std::invalid_argument("pancake: direction dimension mismatch");
      if (std::abs(d.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("pancake: directions must be unit");
      if (fr.cols() > 0 &&
          (fr.transpose() * d).cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument(
            "pancake: direction not orthogonal to the level frame");
    }
  }
}

// min/max density ratio over B(R); 0 for singular laws, where the decrease
// constant degenerates and the audit is vacuous.
double density_ratio_on_ball(const MeasureSpec& spec, double R) {
  struct Vis {
    double R;
    double operator()(const GaussianDensity& g) const {
      return std::exp(-g.scales.maxCoeff() * R * R);
    }
    double operator()(const UniformBall&) const { return 1.0; }
    double operator()(const UniformSphere&) const { return 0.0; }
    double operator()(const RadialProfile& p) const {
      const double rm = std::min(R, p.support_radius);
      if (!(rm > 0.0)) return 0.0;
      double lo = kInf, hi = 0.0;
      const int grid = 4096;
      for (int i = 0; i <= grid; ++i) {
        const double v = p.rho(rm * i / grid);
        if (!std::isfinite(v)) return 0.0;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      return hi > 0.0 ? std::max(0.0, lo / hi) : 0.0;
    }
    double operator()(const AtomSphereMix&) const { return 0.0; }
  };
  return std::visit(Vis{R}, spec.law);
}

// Shared cut engine.  The quadrature route resolves each node by bisection;
// the cloud route fixes one stratified sample and takes exact empirical
// medians of nested subsets, so every offset agrees with equal_measure_cut
// run against the same cloud and repeated resolutions are consistent.
struct Engine {
  const MeasureSpec& spec;
  double R;
  CutOptions opt;
  bool use_quadrature;
  Eigen::MatrixXd cloud;  // points of the stratified sample inside B(R)

  Engine(const MeasureSpec& s, double radius, const CutOptions& o)
      : spec(s), R(radius), opt(o) {
    s.validate();
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw std::invalid_argument("build_partition: R must be positive");
    const bool quad_capable = s.dim <= 2 && lebesgue_law(s);
    if (o.route == CutRoute::kQuadrature && !quad_capable)
      throw std::invalid_argument(
          "build_partition: quadrature route needs dim <= 2 and a Lebesgue "
          "density");
    use_quadrature = o.route == CutRoute::kQuadrature ||
                     (o.route == CutRoute::kAuto && quad_capable);
    if (!use_quadrature) {
      const SampleBatch batch = stratified_cloud(s, o.mc_count, o.mc_seed);
      std::vector<Eigen::Index> keep;
      keep.reserve(static_cast<std::size_t>(batch.points.cols()));
      for (Eigen::Index i = 0; i < batch.points.cols(); ++i) {
        if (batch.points.col(i).norm() <= radius + 1e-9) keep.push_back(i);
      }
      cloud.resize(s.dim, static_cast<Eigen::Index>(keep.size()));
      for (std::size_t i = 0; i < keep.size(); ++i)
        cloud.col(static_cast<Eigen::Index>(i)) = batch.points.col(keep[i]);
    }
  }

  static double median_of(std::vector<double>& proj) {
    if (proj.size() < 32)
      throw std::runtime_error(
          "build_partition: degenerate cut (node carries almost no measure)");
    std::sort(proj.begin(), proj.end());
    const double pos = 0.5 * static_cast<double>(proj.size() - 1);
    const std::size_t i0 = static_cast<std::size_t>(pos);
    const std::size_t i1 = std::min(i0 + 1, proj.size() - 1);
    const double w = pos - static_cast<double>(i0);
    return (1.0 - w) * proj[i0] + w * proj[i1];
  }

  PartitionResult resolve(
      CutTree tree,
      const std::function<Eigen::VectorXd(const ConvexBody&)>& F) const {
    check_tree(tree, spec.dim);
    const int depth = tree.depth;
    const int leaf_count = 1 << depth;

    PartitionResult out;
    out.spec = spec;
    out.radius = R;

    std::vector<ConvexBody> level;
    level.reserve(static_cast<std::size_t>(leaf_count));
    level.emplace_back(spec.dim, R);
    std::vector<std::vector<Eigen::Index>> parts;
    if (!use_quadrature) {
      parts.emplace_back();
      parts[0].resize(static_cast<std::size_t>(cloud.cols()));
      for (Eigen::Index i = 0; i < cloud.cols(); ++i)
        parts[0][static_cast<std::size_t>(i)] = i;
    }

    // Each level's cuts tighten toward equal halves; children differ only in
    // the sign of the added halfspace, so leaves tile the ball exactly.
    CutOptions node_opt = opt;
    node_opt.route = CutRoute::kQuadrature;
    node_opt.tol = opt.tol / (2.0 * depth);
    for (int l = 0; l < depth; ++l) {
      std::vector<ConvexBody> next;
      next.reserve(level.size() * 2);
      std::vector<std::vector<Eigen::Index>> next_parts;
      for (std::size_t i = 0; i < level.size(); ++i) {
        CutNode& node = tree.nodes[node_index(l, static_cast<int>(i))];
        const Eigen::VectorXd d = node.direction.normalized();
        double c = 0.0;
        if (use_quadrature) {
          c = equal_measure_cut(level[i], spec, d, 0.5, node_opt);
        } else {
          std::vector<double> proj;
          proj.reserve(parts[i].size());
          for (const Eigen::Index idx : parts[i])
            proj.push_back(d.dot(cloud.col(idx)));
          c = median_of(proj);
          std::vector<Eigen::Index> left, right;
          left.reserve(parts[i].size());
          right.reserve(parts[i].size());
          for (const Eigen::Index idx : parts[i]) {
            if (d.dot(cloud.col(idx)) <= c)
              left.push_back(idx);
            else
              right.push_back(idx);
          }
          next_parts.push_back(std::move(left));
          next_parts.push_back(std::move(right));
        }
        node.offset = c;
        ConvexBody lo = level[i], hi = level[i];
        lo.add_halfspace(d, c);
        hi.add_halfspace(-d, -c);
        next.push_back(std::move(lo));
        next.push_back(std::move(hi));
      }
      level = std::move(next);
      parts = std::move(next_parts);
    }

    out.leaves = std::move(level);
    out.masses.resize(out.leaves.size());
    if (use_quadrature) {
      Eigen::VectorXd u0 = Eigen::VectorXd::Zero(spec.dim);
      u0[0] = 1.0;
      const double total =
          body_measure_quadrature(ConvexBody(spec.dim, R), spec, u0, kInf,
                                  1e-10);
      const double mass_tol =
          std::max(1e-13, 0.1 * opt.tol * total / leaf_count);
      for (std::size_t j = 0; j < out.leaves.size(); ++j)
        out.masses[j] =
            body_measure_quadrature(out.leaves[j], spec, u0, kInf, mass_tol);
    } else {
      for (std::size_t j = 0; j < out.leaves.size(); ++j)
        out.masses[j] = static_cast<double>(parts[j].size()) /
                        static_cast<double>(opt.mc_count);
    }

    if (F) {
      out.F_values.reserve(out.leaves.size());
      for (const ConvexBody& leaf : out.leaves)
        out.F_values.push_back(F(leaf));
      for (std::size_t a = 1; a < out.F_values.size(); ++a) {
        if (out.F_values[a].size() != out.F_values[0].size())
          throw std::invalid_argument(
              "build_partition: F returned inconsistent dimensions");
        for (std::size_t b = 0; b < a; ++b)
          out.spread = std::max(
              out.spread, (out.F_values[a] - out.F_values[b]).norm());
      }
    }
    out.tree = std::move(tree);
    return out;
  }
};

// Orthonormal basis of the orthogonal complement of the frame's span.
Eigen::MatrixXd complement_basis(const Eigen::MatrixXd& frame, int n) {
  if (frame.cols() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - frame.cols());
}

// Nelder-Mead on the block-sphere parameterization.  fn must be cheap to
// call; the budget is enforced by the caller through max_evals.
void nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                 Eigen::VectorXd& x, double& fx, double step, int max_evals,
                 double f_target, int& used) {
  const int d = static_cast<int>(x.size());
  std::vector<std::pair<double, Eigen::VectorXd>> s;
  s.reserve(d + 1);
  s.emplace_back(fx, x);
  for (int i = 0; i < d && used < max_evals; ++i) {
    Eigen::VectorXd v = x;
    v[i] += step;
    ++used;
    s.emplace_back(fn(v), std::move(v));
  }
  auto by_f = [](const auto& a, const auto& b) { return a.first < b.first; };
  while (used < max_evals) {
    std::sort(s.begin(), s.end(), by_f);
    if (s.front().first <= f_target) break;
    if (s.back().first - s.front().first <=
        1e-12 * (1.0 + std::abs(s.front().first)))
      break;
    const int m = static_cast<int>(s.size()) - 1;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < m; ++i) centroid += s[i].second;
    centroid /= static_cast<double>(m);
    const Eigen::VectorXd& worst = s.back().second;
    Eigen::VectorXd xr = centroid + (centroid - worst);
    ++used;
    const double fr = fn(xr);
    if (fr < s.front().first && used < max_evals) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst);
      ++used;
      const double fe = fn(xe);
      s.back() = fe < fr ? std::make_pair(fe, std::move(xe))
                         : std::make_pair(fr, std::move(xr));
      continue;
    }
    if (fr < s[m - 1].first) {
      s.back() = {fr, std::move(xr)};
      continue;
    }
    Eigen::VectorXd xc = centroid + 0.5 * (worst - centroid);
    if (used >= max_evals) break;
    ++used;
    const double fc = fn(xc);
    if (fc < s.back().first) {
      s.back() = {fc, std::move(xc)};
      continue;
    }
    for (std::size_t i = 1; i < s.size() && used < max_evals; ++i) {
      s[i].second = s.front().second + 0.5 * (s[i].second - s.front().second);
      ++used;
      s[i].first = fn(s[i].second);
    }
  }
  std::sort(s.begin(), s.end(), by_f);
  x = s.front().second;
  fx = s.front().first;
}

// Support-sampled projection of body onto the span of the plane's columns,
// as an H-body in plane coordinates: h_proj(v) = h_body(plane v).
double projected_volume_proxy(const ConvexBody& body,
                              const Eigen::MatrixXd& plane, double R) {
  const int p = static_cast<int>(plane.cols());
  ConvexBody proj(p, R);
  for (int i = 0; i < p; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
    e[i] = 1.0;
    proj.add_halfspace(e, support(body, plane.col(i)).value);
    proj.add_halfspace(-e, support(body, -plane.col(i)).value);
  }
  CounterRng rng(0x70a5u, 0x11u);
  for (int t = 0; t < 16 * p; ++t) {
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v[i] = norminv(rng.next_unit());
    const double nv = v.norm();
    if (nv < 1e-12) continue;
    v /= nv;
    proj.add_halfspace(v, support(body, plane * v).value);
  }
  return john_ellipsoid(proj).semiaxes().prod();
}

}  // namespace

std::vector<Eigen::MatrixXd> subspace_sequence(int n, int k, int count,
                                               std::uint64_t seed) {
  if (n < 1 || k < 0 || k >= n)
    throw std::invalid_argument("subspace_sequence: need 0 <= k < n");
  if (count < 0)
    throw std::invalid_argument("subspace_sequence: count must be >= 0");
  const int f = n - k - 1;
  std::vector<Eigen::MatrixXd> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) {
    if (f == 0) {
      frames.emplace_back(n, 0);
      continue;
    }
    // One stream per level, so frames[l] does not depend on count.
    CounterRng rng(seed, 0xf7a0u + static_cast<std::uint64_t>(l));
    Eigen::MatrixXd g(n, f);
    for (int j = 0; j < f; ++j)
      for (int i = 0; i < n; ++i) g(i, j) = norminv(rng.next_unit());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    frames.push_back(qr.householderQ() * Eigen::MatrixXd::Identity(n, f));
  }
  return frames;
}

PartitionResult build_partition(
    const MeasureSpec& spec, double R, CutTree tree, const CutOptions& opt,
    const std::function<Eigen::VectorXd(const ConvexBody&)>& F) {
  return Engine(spec, R, opt).resolve(std::move(tree), F);
}

EqualizeResult equalize_F(
    const MeasureSpec& spec, double R,
    const std::function<Eigen::VectorXd(const ConvexBody&)>& F, int depth,
    const std::vector<Eigen::MatrixXd>& frames, const EqualizeOptions& opt) {
  if (!F) throw std::invalid_argument("equalize_F: functional required");
  if (depth < 1 || depth > 4)
    throw std::invalid_argument(
        "equalize_F: depth must be in [1, 4] (at most 16 leaves)");
  if (static_cast<int>(frames.size()) < depth)
    throw std::invalid_argument("equalize_F: one frame per level required");
  if (opt.budget < 1 || opt.starts < 1)
    throw std::invalid_argument("equalize_F: positive budget and starts");
  const int n = spec.dim;

  std::vector<Eigen::MatrixXd> comp(depth);
  std::vector<int> bdim(depth);
  int total_dim = 0;
  std::vector<int> block_off((1 << depth) - 1);
  for (int l = 0; l < depth; ++l) {
    if (frames[l].cols() >= n)
      throw std::invalid_argument("equalize_F: frame leaves no directions");
    comp[l] = complement_basis(frames[l], n);
    bdim[l] = n - static_cast<int>(frames[l].cols());
  }
  for (int l = 0; l < depth; ++l)
    for (int i = 0; i < (1 << l); ++i) {
      block_off[node_index(l, i)] = total_dim;
      total_dim += bdim[l];
    }

  const Engine engine(spec, R, opt.cut);
  std::vector<Eigen::MatrixXd> tree_frames(frames.begin(),
                                           frames.begin() + depth);

  auto make_tree = [&](const Eigen::VectorXd& theta) {
    CutTree t;
    t.depth = depth;
    t.frames = tree_frames;
    t.nodes.resize(block_off.size());
    for (int l = 0; l < depth; ++l)
      for (int i = 0; i < (1 << l); ++i) {
        const int idx = node_index(l, i);
        Eigen::VectorXd w = theta.segment(block_off[idx], bdim[l]);
        const double nw = w.norm();
        if (nw < 1e-12) {
          w.setZero();
          w[0] = 1.0;
        } else {
          w /= nw;
        }
        t.nodes[idx].direction = (comp[l] * w).normalized();
      }
    return t;
  };

  EqualizeResult result;
  result.spread = kInf;
  int evals = 0;
  auto objective = [&](const Eigen::VectorXd& theta) {
    ++evals;
    try {
      PartitionResult pr = engine.resolve(make_tree(theta), F);
      if (pr.spread < result.spread) {
        result.spread = pr.spread;
        result.tree = std::move(pr.tree);
      }
      return pr.spread;
    } catch (const std::exception&) {
      return 1e6;  // degenerate cut: reject the configuration
    }
  };

  const int per_start = std::max(30, opt.budget / opt.starts);
  for (int s = 0; s < opt.starts && evals < opt.budget; ++s) {
    if (result.spread <= opt.spread_target) break;
    Eigen::VectorXd theta(total_dim);
    double simplex_scale = 0.35;
    if (s == 0 && opt.warm_start) {
      const CutTree& warm = *opt.warm_start;
      if (warm.depth != depth || warm.nodes.size() != block_off.size())
        throw std::invalid_argument("equalize_F: warm start tree mismatch");
      for (int l = 0; l < depth; ++l)
        for (int i = 0; i < (1 << l); ++i) {
          const int idx = node_index(l, i);
          theta.segment(block_off[idx], bdim[l]) =
              comp[l].transpose() * warm.nodes[idx].direction;
        }
      // The warm vertex starts as the incumbent best, so an oversized
      // simplex only contracts back onto it; keep the step near the
      // coarse-to-fine optimum shift.
      simplex_scale = 0.03;
    } else if (s == 0) {
      theta.setZero();
      for (int l = 0; l < depth; ++l)
        for (int i = 0; i < (1 << l); ++i)
          theta[block_off[node_index(l, i)]] = 1.0;
    } else if (s == 1) {
      theta.setZero();
      for (int l = 0; l < depth; ++l)
        for (int i = 0; i < (1 << l); ++i)
          theta[block_off[node_index(l, i)] + (l + 1) % bdim[l]] = 1.0;
    } else {
      CounterRng rng(opt.seed, 0xe9a1u + static_cast<std::uint64_t>(s));
      for (int i = 0; i < total_dim; ++i) theta[i] = norminv(rng.next_unit());
    }
    const int cap = std::min(opt.budget, evals + per_start);
    double f0 = objective(theta);
    nelder_mead(objective, theta, f0, simplex_scale, cap, opt.spread_target,
                evals);
  }

  result.converged = result.spread <= opt.spread_target;
  result.evaluations = evals;
  if (result.tree.nodes.empty())
    throw std::runtime_error("equalize_F: no evaluation completed");
  return result;
}

PancakeReport verify_pancake(const PartitionResult& result, int k,
                             bool audit_chains) {
  const int n = result.spec.dim;
  if (k < 0 || k >= n)
    throw std::invalid_argument("verify_pancake: need 0 <= k < dim");
  check_tree(result.tree, n);
  const int depth = result.tree.depth;
  if (static_cast<int>(result.leaves.size()) != (1 << depth))
    throw std::invalid_argument("verify_pancake: leaf count mismatch");

  PancakeReport rep;
  rep.c_mu = density_ratio_on_ball(result.spec, result.radius) *
             (1.0 - std::pow(2.0, -n));
  const double width_decay = 1.0 - rep.c_mu / 2.0;
  const double volume_decay = 1.0 - std::pow(rep.c_mu / 2.0, k + 1);

  for (std::size_t j = 0; j < result.leaves.size(); ++j) {
    LeafAudit la;
    la.deficiency = pancake_deficiency(result.leaves[j], k);
    rep.max_delta = std::max(rep.max_delta, la.deficiency.delta);

    if (audit_chains) {
      // Candidate disk plane of this leaf and the chain of bodies that
      // produced it, replayed root-down.
      const Eigen::MatrixXd plane = la.deficiency.john_axes.leftCols(k + 1);
      ConvexBody parent(n, result.radius);
      for (int l = 0; l < depth; ++l) {
        const int ancestor = static_cast<int>(j) >> (depth - l);
        const CutNode& node = result.tree.nodes[node_index(l, ancestor)];
        const bool left =
            ((static_cast<int>(j) >> (depth - 1 - l)) & 1) == 0;
        ConvexBody child = parent;
        child.add_halfspace(left ? node.direction : -node.direction,
                            left ? node.offset : -node.offset);

        CutAudit ca;
        ca.level = l;
        const Eigen::VectorXd pa =
            plane * (plane.transpose() * node.direction);
        const double cosang = std::min(1.0, pa.norm());
        ca.alignment_angle = std::acos(cosang);
        ca.qualifying = ca.alignment_angle <= M_PI / 12.0 + 1e-12;
        if (pa.norm() > 1e-8) {
          const Eigen::VectorXd wu = pa / pa.norm();
          ca.width_before = directional_width(parent, wu);
          ca.width_after = directional_width(child, wu);
          if (ca.qualifying) {
            ++rep.qualifying_cuts;
            ca.width_ok = ca.width_after <= width_decay * ca.width_before +
                                                1e-7 * (1.0 + ca.width_before);
            if (!ca.width_ok) ++rep.width_failures;
            ca.volume_before =
                projected_volume_proxy(parent, plane, result.radius);
            ca.volume_after =
                projected_volume_proxy(child, plane, result.radius);
            ca.volume_ok =
                ca.volume_after <= volume_decay * ca.volume_before +
                                       1e-6 * (1.0 + ca.volume_before);
            if (!ca.volume_ok) ++rep.volume_failures;
          }
        }
        la.chain.push_back(ca);
        parent = std::move(child);
      }
    }
    rep.leaves.push_back(std::move(la));
  }
  return rep;
}

}  // namespace waistkit
