#include "waistkit/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace waistkit {

double normcdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norminv(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("norminv: p outside [0,1]");
  }
  static const double a[8] = {
      3.3871328727963666080e+0, 1.3314166789178437745e+2,
      1.9715909503065514427e+3, 1.3731693765509461125e+4,
      4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static const double b[8] = {
      1.0,                      4.2313330701600911252e+1,
      6.8718700749205790830e+2, 5.3941960214247511077e+3,
      2.1213794301586595867e+4, 3.9307895800092710610e+4,
      2.8729085735721942674e+4, 5.2264952788528545610e+3};
  static const double c[8] = {
      1.42343711074968357734e+0, 4.63033784615654529590e+0,
      5.76949722146069140550e+0, 3.64784832476320460504e+0,
      1.27045825245236838258e+0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double d[8] = {
      1.0,                       2.05319162663775882187e+0,
      1.67638483018380384940e+0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static const double e[8] = {
      6.65790464350110377720e+0, 5.46378491116411436990e+0,
      1.78482653991729133580e+0, 2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double f[8] = {
      1.0,                       5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    double num = a[7], den = b[7];
    for (int i = 6; i >= 0; --i) {
      num = num * r + a[i];
      den = den * r + b[i];
    }
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    double num = c[7], den = d[7];
    for (int i = 6; i >= 0; --i) {
      num = num * r + c[i];
      den = den * r + d[i];
    }
    val = num / den;
  } else {
    r -= 5.0;
    double num = e[7], den = f[7];
    for (int i = 6; i >= 0; --i) {
      num = num * r + e[i];
      den = den * r + f[i];
    }
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("regularized_gamma_p: a <= 0");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x < 0");
  if (x == 0.0) return 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  if (x < a + 1.0) {
    // series for P(a,x)
    double ap = a, del = 1.0 / a, sum = del;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * eps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Lentz continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, cc = 1.0 / tiny, dd = 1.0 / b, h = dd;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    dd = an * dd + b;
    if (std::fabs(dd) < tiny) dd = tiny;
    cc = b + an / cc;
    if (std::fabs(cc) < tiny) cc = tiny;
    dd = 1.0 / dd;
    const double delta = dd * cc;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}

double sphere_area(int m) {
  if (m < 0) throw std::invalid_argument("sphere_area: negative dimension");
  const double h = 0.5 * (m + 1);
  return 2.0 * std::exp(h * std::log(M_PI) - std::lgamma(h));
}

double ball_volume(int n) {
  if (n < 0) throw std::invalid_argument("ball_volume: negative dimension");
  return std::exp(0.5 * n * std::log(M_PI) - std::lgamma(0.5 * n + 1.0));
}

}  // namespace waistkit
