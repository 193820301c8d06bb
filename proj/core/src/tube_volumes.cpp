#include "waistkit/tube_volumes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "waistkit/quadrature.hpp"
#include "waistkit/special.hpp"

namespace waistkit {

namespace {

// G_k(s) = P(sum_{i<k} y_i^2 <= s) with y_i ~ N(0, 1/(2 b_i)), by slicing
// off the last coordinate.  The substitution y = sqrt(s) sin(theta) keeps
// the integrand smooth at the slice boundary.
double slice_cdf(const Eigen::VectorXd& b, int k, double s, double tol) {
  if (s <= 0.0) return 0.0;
  if (k == 1) return std::erf(std::sqrt(b[0] * s));
  const double bk = b[k - 1];
  const double rs = std::sqrt(s);
  auto f = [&](double theta) {
    const double c = std::cos(theta), sn = std::sin(theta);
    const double inner = slice_cdf(b, k - 1, s * c * c, tol * 0.02);
    return inner * std::sqrt(bk / M_PI) * std::exp(-bk * s * sn * sn) * rs * c;
  };
  return integrate(f, -M_PI_2, M_PI_2, tol * 0.5);
}

bool all_equal(const Eigen::VectorXd& v) {
  for (int i = 1; i < v.size(); ++i)
    if (v[i] != v[0]) return false;
  return true;
}

}  // namespace

double weighted_chi_square_cdf(const std::vector<double>& lambda, double x,
                               double abs_tol) {
  const int k = static_cast<int>(lambda.size());
  if (k == 0) throw std::invalid_argument("weighted_chi_square_cdf: empty");
  for (double l : lambda)
    if (!(l > 0.0))
      throw std::invalid_argument("weighted_chi_square_cdf: lambda <= 0");
  if (x <= 0.0) return 0.0;

  double sum_l = 0.0, log_prod = 0.0;
  for (double l : lambda) {
    sum_l += l;
    log_prod += std::log(l);
  }
  auto theta = [&](double u) {
    double s = 0.0;
    for (double l : lambda) s += std::atan(l * u);
    return 0.5 * s - 0.5 * x * u;
  };
  auto rho = [&](double u) {
    double s = 0.0;
    for (double l : lambda) s += std::log1p(l * l * u * u);
    return std::exp(0.25 * s);
  };
  auto f = [&](double u) {
    if (u == 0.0) return 0.5 * (sum_l - x);
    return std::sin(theta(u)) / (u * rho(u));
  };

  // Tail bound: |f| <= prod(lambda)^{-1/2} u^{-1-k/2}; pick U so the
  // remainder is under half the tolerance.
  const double half_tol = 0.5 * abs_tol * M_PI;
  const double c = std::exp(-0.5 * log_prod);
  double u_max =
      std::pow(2.0 * c / (static_cast<double>(k) * half_tol), 2.0 / k);
  u_max = std::max(u_max, 1.0);

  // at most half an oscillation per chunk
  const double rate = 0.5 * (sum_l + x);
  const double chunk = std::max(M_PI / rate, u_max * 1e-7);
  const double n_chunks = std::ceil(u_max / chunk);
  if (n_chunks > 4e6)
    throw std::runtime_error("weighted_chi_square_cdf: oscillation budget");
  const double tol_chunk = half_tol / n_chunks;

  double integral = 0.0;
  double a = 0.0;
  while (a < u_max) {
    const double b = std::min(a + chunk, u_max);
    integral += integrate(f, a, b, tol_chunk, 400);
    a = b;
  }
  double p = 0.5 - integral / M_PI;
  return std::clamp(p, 0.0, 1.0);
}

double gaussian_subspace_tube(const Eigen::VectorXd& scales, double t,
                              double abs_tol) {
  const int k = static_cast<int>(scales.size());
  if (k == 0) return 1.0;
  for (int i = 0; i < k; ++i)
    if (!(scales[i] > 0.0))
      throw std::invalid_argument("gaussian_subspace_tube: scales <= 0");
  if (!(t >= 0.0))
    throw std::invalid_argument("gaussian_subspace_tube: t < 0");
  if (t == 0.0) return 0.0;

  if (k == 1) return std::erf(std::sqrt(scales[0]) * t);
  if (k <= 3) return std::clamp(slice_cdf(scales, k, t * t, abs_tol), 0.0, 1.0);
  if (all_equal(scales))
    return regularized_gamma_p(0.5 * k, scales[0] * t * t);
  std::vector<double> lambda(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) lambda[static_cast<std::size_t>(i)] =
      0.5 / scales[i];
  return weighted_chi_square_cdf(lambda, t * t, abs_tol);
}

double spherical_tube_fraction(int n, int k, double t, double abs_tol) {
  if (n < 1) throw std::invalid_argument("spherical_tube_fraction: n < 1");
  if (k < 0 || k >= n)
    throw std::invalid_argument("spherical_tube_fraction: need 0 <= k < n");
  if (!(t >= 0.0) || t > M_PI + 1e-12)
    throw std::invalid_argument("spherical_tube_fraction: t outside [0, pi]");
  const double cap = std::min(t, M_PI_2);
  if (cap <= 0.0) return 0.0;
  const int m = n - k - 1;
  auto f = [&](double th) {
    return std::pow(std::cos(th), k) * std::pow(std::sin(th), m);
  };
  const double band = integrate(f, 0.0, cap, abs_tol * 0.1);
  const double frac =
      sphere_area(k) * sphere_area(m) * band / sphere_area(n);
  return std::clamp(frac, 0.0, 1.0);
}

double cp_tube_fraction(int n, int k, double t, double abs_tol) {
  if (n < 1 || k < 0 || k >= n)
    throw std::invalid_argument("cp_tube_fraction: need 0 <= k < n");
  return spherical_tube_fraction(2 * n + 1, 2 * k + 1, t, abs_tol);
}

double radial_subspace_tube(const MeasureSpec& spec, int core_dim, double t,
                            double abs_tol) {
  const int n = spec.dim;
  if (core_dim < 0 || core_dim >= n)
    throw std::invalid_argument(
        "radial_subspace_tube: need 0 <= core_dim < dim");
  if (!(t >= 0.0)) throw std::invalid_argument("radial_subspace_tube: t < 0");
  const RadialParts parts = radial_parts(spec);  // throws if not radial

  auto shell_fraction = [&](double r) {
    if (r <= t) return 1.0;
    if (core_dim == 0) return 0.0;
    return spherical_tube_fraction(n - 1, core_dim - 1, std::asin(t / r),
                                   abs_tol * 0.1);
  };

  double result = parts.atom_at_origin;
  for (const auto& [r, mass] : parts.spheres) result += mass * shell_fraction(r);
  if (parts.radial_pdf && parts.pdf_mass > 0.0) {
    auto f = [&](double r) { return parts.radial_pdf(r) * shell_fraction(r); };
    result += integrate_split(f, 0.0, parts.r_max, {t}, abs_tol * 0.5);
  }
  return std::clamp(result, 0.0, 1.0);
}

}  // namespace waistkit
