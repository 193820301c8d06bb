#include "waistkit/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "waistkit/quadrature.hpp"
#include "waistkit/rng.hpp"
#include "waistkit/special.hpp"

namespace waistkit {

namespace {

constexpr int kStreamChunks = 64;
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------
// monotone cubic interpolation (Fritsch-Carlson slopes, Hermite evaluation)
// ---------------------------------------------------------------------

struct Pchip {
  std::vector<double> x, y, d;

  void build(std::vector<double> xs, std::vector<double> ys) {
    x = std::move(xs);
    y = std::move(ys);
    const std::size_t n = x.size();
    d.assign(n, 0.0);
    if (n < 2) return;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x[i + 1] - x[i];
      delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  }

  double operator()(double t) const {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    const double h = x[i + 1] - x[i];
    const double s = (t - x[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y[i] + (s3 - 2 * s2 + s) * h * d[i] +
           (-2 * s3 + 3 * s2) * y[i + 1] + (s3 - s2) * h * d[i + 1];
  }
};

// ---------------------------------------------------------------------
// radial profile plumbing
// ---------------------------------------------------------------------

double profile_mass_to(const RadialProfile& p, int dim, double r_hi,
                       double tol) {
  const double area = sphere_area(dim - 1);
  return integrate(
      [&](double r) { return p.rho(r) * area * std::pow(r, dim - 1); }, 0.0,
      r_hi, tol);
}

// Effective support bound: either the declared one, or the point past which
// the remaining mass is negligible.  Throws if the mass never settles.
double effective_r_max(const RadialProfile& p, int dim) {
  if (std::isfinite(p.support_radius)) return p.support_radius;
  double r = 1.0;
  double total = profile_mass_to(p, dim, r, 1e-12);
  for (int step = 0; step < 60; ++step) {
    const double next = r * 2.0;
    const double inc = integrate(
        [&](double s) {
          return p.rho(s) * sphere_area(dim - 1) * std::pow(s, dim - 1);
        },
        r, next, 1e-12);
    total += inc;
    r = next;
    if (total > 0.0 && inc < 1e-13 * total) return r;
  }
  throw std::invalid_argument(
      "radial profile: mass does not settle; not normalizable");
}

struct RadialTable {
  double z = 0.0;      // normalizing constant of the pdf part
  double r_max = 0.0;  // effective support bound
  Pchip inverse_cdf;   // radius as a function of the uniform variate

  static RadialTable build(const RadialProfile& p, int dim) {
    RadialTable t;
    t.r_max = effective_r_max(p, dim);
    const double area = sphere_area(dim - 1);
    auto pdf = [&](double r) { return p.rho(r) * area * std::pow(r, dim - 1); };
    constexpr int kNodes = 1024;
    std::vector<double> rs(kNodes), cdf(kNodes);
    rs[0] = 0.0;
    cdf[0] = 0.0;
    for (int j = 1; j < kNodes; ++j) {
      rs[j] = t.r_max * j / (kNodes - 1);
      cdf[j] = cdf[j - 1] + integrate(pdf, rs[j - 1], rs[j], 1e-12);
    }
    t.z = cdf[kNodes - 1];
    if (!(t.z > 0.0) || !std::isfinite(t.z))
      throw std::invalid_argument("radial profile: not normalizable");
    // invert: keep strictly increasing knots only
    std::vector<double> us, vs;
    us.reserve(kNodes);
    vs.reserve(kNodes);
    for (int j = 0; j < kNodes; ++j) {
      const double u = cdf[j] / t.z;
      if (us.empty() || u > us.back() + 1e-15) {
        us.push_back(u);
        vs.push_back(rs[j]);
      }
    }
    us.front() = 0.0;
    us.back() = 1.0;
    t.inverse_cdf.build(std::move(us), std::move(vs));
    return t;
  }
};

double gaussian_log_z(const Eigen::VectorXd& scales) {
  double s = 0.0;
  for (int i = 0; i < scales.size(); ++i)
    s += 0.5 * (std::log(M_PI) - std::log(scales[i]));
  return s;
}

Eigen::VectorXd unit_direction(CounterRng& rng, int dim) {
  Eigen::VectorXd z(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) z[i] = norminv(rng.next_unit());
    norm2 = z.squaredNorm();
  } while (!(norm2 > 0.0));
  return z / std::sqrt(norm2);
}

std::size_t chunk_size(std::size_t count, int c) {
  return count / kStreamChunks + (static_cast<std::size_t>(c) <
                                  count % kStreamChunks);
}

}  // namespace

// -----------------------------------------------------------------------
// construction / validation
// -----------------------------------------------------------------------

void MeasureSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("measure: dim must be >= 1");
  if (const auto* g = std::get_if<GaussianDensity>(&law)) {
    if (g->scales.size() != dim)
      throw std::invalid_argument("gaussian: scales length != dim");
    for (int i = 0; i < g->scales.size(); ++i)
      if (!(g->scales[i] > 0.0) || !std::isfinite(g->scales[i]))
        throw std::invalid_argument("gaussian: scales must be positive");
  } else if (const auto* b = std::get_if<UniformBall>(&law)) {
    if (!(b->radius > 0.0)) throw std::invalid_argument("ball: radius <= 0");
  } else if (const auto* s = std::get_if<UniformSphere>(&law)) {
    if (!(s->radius > 0.0)) throw std::invalid_argument("sphere: radius <= 0");
  } else if (const auto* r = std::get_if<RadialProfile>(&law)) {
    if (!r->rho) throw std::invalid_argument("radial: missing profile curve");
    if (!(r->support_radius > 0.0))
      throw std::invalid_argument("radial: support radius <= 0");
  } else if (const auto* m = std::get_if<AtomSphereMix>(&law)) {
    if (!(m->atom_mass >= 0.0 && m->atom_mass <= 1.0))
      throw std::invalid_argument("atom mix: atom mass outside [0,1]");
    if (!(m->radius > 0.0)) throw std::invalid_argument("atom mix: radius <= 0");
  }
}

MeasureSpec gaussian_measure(const Eigen::VectorXd& scales) {
  MeasureSpec s;
  s.dim = static_cast<int>(scales.size());
  s.law = GaussianDensity{scales};
  s.validate();
  return s;
}

MeasureSpec uniform_ball(int dim, double radius) {
  MeasureSpec s;
  s.dim = dim;
  s.law = UniformBall{radius};
  s.validate();
  return s;
}

MeasureSpec uniform_sphere(int dim, double radius) {
  MeasureSpec s;
  s.dim = dim;
  s.law = UniformSphere{radius};
  s.validate();
  return s;
}

MeasureSpec atom_sphere_mix(int dim, double atom_mass, double radius) {
  MeasureSpec s;
  s.dim = dim;
  s.law = AtomSphereMix{atom_mass, radius};
  s.validate();
  return s;
}

MeasureSpec radial_measure(int dim, const std::string& profile,
                           const std::vector<double>& params,
                           double support_radius) {
  RadialProfile p;
  p.name = profile;
  p.params = params;
  p.support_radius = support_radius;
  if (profile == "constant") {
    if (!std::isfinite(support_radius))
      throw std::invalid_argument("radial constant: needs finite support");
    p.rho = [](double) { return 1.0; };
  } else if (profile == "gaussian") {
    const double a = params.empty() ? 1.0 : params[0];
    if (!(a > 0.0)) throw std::invalid_argument("radial gaussian: scale <= 0");
    p.rho = [a](double r) { return std::exp(-a * r * r); };
  } else if (profile == "shell") {
    if (params.size() < 2)
      throw std::invalid_argument("radial shell: needs center and width");
    const double r0 = params[0], w = params[1];
    if (!(w > 0.0)) throw std::invalid_argument("radial shell: width <= 0");
    p.rho = [r0, w](double r) {
      const double u = (r - r0) / w;
      return std::exp(-u * u);
    };
  } else if (profile == "power") {
    if (!std::isfinite(support_radius))
      throw std::invalid_argument("radial power: needs finite support");
    const double e = params.empty() ? 0.0 : params[0];
    if (e <= -1.0) throw std::invalid_argument("radial power: exponent <= -1");
    p.rho = [e](double r) { return std::pow(r, e); };
  } else {
    throw std::invalid_argument("radial: unknown profile '" + profile + "'");
  }
  MeasureSpec s;
  s.dim = dim;
  s.law = std::move(p);
  s.validate();
  return s;
}

// -----------------------------------------------------------------------
// densities and atoms
// -----------------------------------------------------------------------

double density(const MeasureSpec& spec, const Eigen::VectorXd& x) {
  spec.validate();
  if (x.size() != spec.dim)
    throw std::invalid_argument("density: point dimension mismatch");
  if (const auto* g = std::get_if<GaussianDensity>(&spec.law)) {
    double e = 0.0;
    for (int i = 0; i < spec.dim; ++i) e += g->scales[i] * x[i] * x[i];
    return std::exp(-e - gaussian_log_z(g->scales));
  }
  if (const auto* b = std::get_if<UniformBall>(&spec.law)) {
    const double vol = ball_volume(spec.dim) * std::pow(b->radius, spec.dim);
    return x.norm() <= b->radius ? 1.0 / vol : 0.0;
  }
  if (std::get_if<UniformSphere>(&spec.law) ||
      std::get_if<AtomSphereMix>(&spec.law)) {
    return 0.0;  // purely singular with respect to Lebesgue measure
  }
  const auto& r = std::get<RadialProfile>(spec.law);
  const RadialTable table = RadialTable::build(r, spec.dim);
  const double rad = x.norm();
  if (rad > table.r_max) return 0.0;
  return r.rho(rad) / table.z;
}

std::vector<Atom> atoms(const MeasureSpec& spec) {
  spec.validate();
  std::vector<Atom> out;
  if (const auto* m = std::get_if<AtomSphereMix>(&spec.law)) {
    if (m->atom_mass > 0.0)
      out.push_back({Eigen::VectorXd::Zero(spec.dim), m->atom_mass});
  }
  return out;
}

double atom_total_mass(const MeasureSpec& spec) {
  double s = 0.0;
  for (const Atom& a : atoms(spec)) s += a.mass;
  return s;
}

// -----------------------------------------------------------------------
// radial decomposition
// -----------------------------------------------------------------------

bool is_radial(const MeasureSpec& spec) {
  if (const auto* g = std::get_if<GaussianDensity>(&spec.law)) {
    for (int i = 1; i < g->scales.size(); ++i)
      if (g->scales[i] != g->scales[0]) return false;
    return true;
  }
  return true;  // every other law is rotation invariant by construction
}

RadialParts radial_parts(const MeasureSpec& spec) {
  spec.validate();
  if (!is_radial(spec))
    throw std::invalid_argument("radial_parts: measure is not radial");
  RadialParts parts;
  const int n = spec.dim;
  if (const auto* g = std::get_if<GaussianDensity>(&spec.law)) {
    const double a = g->scales[0];
    parts.pdf_mass = 1.0;
    // |x|^2 * a ~ Gamma(n/2), so the radius pdf is the chi law below
    parts.radial_pdf = [a, n](double r) {
      return 2.0 * std::pow(a, 0.5 * n) * std::pow(r, n - 1) *
             std::exp(-a * r * r - std::lgamma(0.5 * n));
    };
    parts.r_max = std::sqrt((40.0 + 10.0 * n) / a);
  } else if (const auto* b = std::get_if<UniformBall>(&spec.law)) {
    const double R = b->radius;
    parts.pdf_mass = 1.0;
    parts.radial_pdf = [R, n](double r) {
      return (r <= R && r >= 0) ? n * std::pow(r / R, n - 1) / R : 0.0;
    };
    parts.r_max = R;
  } else if (const auto* s = std::get_if<UniformSphere>(&spec.law)) {
    parts.spheres.emplace_back(s->radius, 1.0);
  } else if (const auto* m = std::get_if<AtomSphereMix>(&spec.law)) {
    parts.atom_at_origin = m->atom_mass;
    if (m->atom_mass < 1.0)
      parts.spheres.emplace_back(m->radius, 1.0 - m->atom_mass);
  } else {
    const auto& rp = std::get<RadialProfile>(spec.law);
    const RadialTable table = RadialTable::build(rp, n);
    const double area = sphere_area(n - 1);
    const double z = table.z;
    auto rho = rp.rho;
    parts.pdf_mass = 1.0;
    parts.r_max = table.r_max;
    const double rmax = table.r_max;
    parts.radial_pdf = [rho, area, z, n, rmax](double r) {
      if (r < 0.0 || r > rmax) return 0.0;
      return rho(r) * area * std::pow(r, n - 1) / z;
    };
  }
  return parts;
}

// -----------------------------------------------------------------------
// sampling
// -----------------------------------------------------------------------

namespace {

class PointSampler {
 public:
  PointSampler(const MeasureSpec& spec, bool diffuse_only)
      : spec_(spec), diffuse_only_(diffuse_only) {
    if (const auto* r = std::get_if<RadialProfile>(&spec.law))
      table_ = RadialTable::build(*r, spec.dim);
  }

  // mass of the part this sampler draws from
  double sampled_mass() const {
    return diffuse_only_ ? 1.0 - atom_total_mass(spec_) : 1.0;
  }

  // v, when nonnegative, replaces the primary uniform variate (radius,
  // widest gaussian coordinate, or the atom/sphere pick).
  Eigen::VectorXd draw(CounterRng& rng, double v = -1.0) const {
    const int n = spec_.dim;
    if (const auto* g = std::get_if<GaussianDensity>(&spec_.law)) {
      int widest = 0;
      for (int i = 1; i < n; ++i)
        if (g->scales[i] < g->scales[widest]) widest = i;
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) {
        const double u =
            (v >= 0.0 && i == widest) ? v : rng.next_unit();
        x[i] = norminv(u) / std::sqrt(2.0 * g->scales[i]);
      }
      return x;
    }
    if (const auto* b = std::get_if<UniformBall>(&spec_.law)) {
      const double u = (v >= 0.0) ? v : rng.next_unit();
      const double r = b->radius * std::pow(u, 1.0 / n);
      return r * unit_direction(rng, n);
    }
    if (const auto* s = std::get_if<UniformSphere>(&spec_.law)) {
      return s->radius * unit_direction(rng, n);
    }
    if (const auto* m = std::get_if<AtomSphereMix>(&spec_.law)) {
      if (!diffuse_only_) {
        const double u = (v >= 0.0) ? v : rng.next_unit();
        if (u < m->atom_mass) return Eigen::VectorXd::Zero(n);
        return m->radius * unit_direction(rng, n);
      }
      return m->radius * unit_direction(rng, n);
    }
    const double u = (v >= 0.0) ? v : rng.next_unit();
    const double r = table_.inverse_cdf(u);
    return r * unit_direction(rng, n);
  }

 private:
  const MeasureSpec& spec_;
  bool diffuse_only_;
  RadialTable table_;
};

}  // namespace

SampleBatch sample(const MeasureSpec& spec, std::size_t count,
                   std::uint64_t seed) {
  spec.validate();
  PointSampler sampler(spec, /*diffuse_only=*/false);
  SampleBatch batch;
  batch.points.resize(spec.dim, static_cast<Eigen::Index>(count));
  std::size_t col = 0;
  for (int c = 0; c < kStreamChunks; ++c) {
    CounterRng rng(seed, static_cast<std::uint64_t>(c));
    const std::size_t m = chunk_size(count, c);
    for (std::size_t i = 0; i < m; ++i)
      batch.points.col(static_cast<Eigen::Index>(col++)) = sampler.draw(rng);
  }
  return batch;
}

SampleBatch stratified_cloud(const MeasureSpec& spec, std::size_t count,
                             std::uint64_t seed) {
  spec.validate();
  if (count == 0) throw std::invalid_argument("stratified_cloud: count == 0");
  PointSampler sampler(spec, /*diffuse_only=*/false);
  SampleBatch batch;
  batch.points.resize(spec.dim, static_cast<Eigen::Index>(count));
  CounterRng rng(seed, /*stream=*/0x57f1u);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = (static_cast<double>(i) + rng.next_unit()) /
                     static_cast<double>(count);
    batch.points.col(static_cast<Eigen::Index>(i)) = sampler.draw(rng, v);
  }
  return batch;
}

McEstimate mc_measure(const MeasureSpec& spec,
                      const std::function<bool(const Eigen::VectorXd&)>& pred,
                      std::size_t count, std::uint64_t seed, int threads) {
  spec.validate();
  if (count == 0) throw std::invalid_argument("mc_measure: count == 0");
  double exact = 0.0;
  for (const Atom& a : atoms(spec))
    if (pred(a.location)) exact += a.mass;
  const double diffuse_mass = 1.0 - atom_total_mass(spec);

  McEstimate out;
  out.count = count;
  if (diffuse_mass <= 0.0) {
    out.estimate = exact;
    out.stderr_value = 0.0;
    return out;
  }

  PointSampler sampler(spec, /*diffuse_only=*/true);
  std::vector<std::size_t> hits(kStreamChunks, 0);
  auto run_chunk = [&](int c) {
    CounterRng rng(seed, static_cast<std::uint64_t>(c));
    const std::size_t m = chunk_size(count, c);
    std::size_t h = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (pred(sampler.draw(rng))) ++h;
    hits[static_cast<std::size_t>(c)] = h;
  };

  threads = std::max(1, std::min(threads, kStreamChunks));
  if (threads == 1) {
    for (int c = 0; c < kStreamChunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int c = next.fetch_add(1); c < kStreamChunks;
             c = next.fetch_add(1))
          run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  std::size_t total_hits = 0;
  for (std::size_t h : hits) total_hits += h;
  const double p = static_cast<double>(total_hits) / static_cast<double>(count);
  out.estimate = exact + diffuse_mass * p;
  out.stderr_value =
      diffuse_mass * std::sqrt(p * (1.0 - p) / static_cast<double>(count));
  return out;
}

}  // namespace waistkit
