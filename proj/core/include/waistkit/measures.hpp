#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace waistkit {

// Density proportional to exp(-sum_i scales[i] * x_i^2), scales[i] > 0.
// Scales are kept in user order; sorted views are derived where a statement
// depends on the nonincreasing convention.
struct GaussianDensity {
  Eigen::VectorXd scales;
};

struct UniformBall {
  double radius = 1.0;
};

struct UniformSphere {
  double radius = 1.0;
};

// Rotation invariant density rho(|x|) (unnormalized), supported on
// [0, support_radius]; support_radius = +inf is allowed when the profile
// decays fast enough to normalize.  `name`/`params` identify the profile
// for serialization; `rho` is the actual curve.
struct RadialProfile {
  std::string name;
  std::vector<double> params;
  double support_radius = 1.0;
  std::function<double(double)> rho;
};

// Point mass at the origin plus the uniform measure on the sphere of the
// given radius carrying the remaining mass.
struct AtomSphereMix {
  double atom_mass = 0.5;
  double radius = 1.0;
};

struct MeasureSpec {
  int dim = 1;
  std::variant<GaussianDensity, UniformBall, UniformSphere, RadialProfile,
               AtomSphereMix>
      law;

  void validate() const;  // throws std::invalid_argument on bad parameters
};

MeasureSpec gaussian_measure(const Eigen::VectorXd& scales);
MeasureSpec uniform_ball(int dim, double radius);
MeasureSpec uniform_sphere(int dim, double radius);
MeasureSpec atom_sphere_mix(int dim, double atom_mass, double radius);
// Known profiles: "constant" (no params), "gaussian" (scale a),
// "shell" (center r0, width w), "power" (exponent p, needs finite support).
MeasureSpec radial_measure(int dim, const std::string& profile,
                           const std::vector<double>& params,
                           double support_radius);

struct Atom {
  Eigen::VectorXd location;
  double mass = 0.0;
};

// Lebesgue density of the absolutely continuous part at x (normalized so the
// whole measure has mass 1).  Singular parts contribute nothing here.
double density(const MeasureSpec& spec, const Eigen::VectorXd& x);

// All point masses of the measure (empty for diffuse laws).
std::vector<Atom> atoms(const MeasureSpec& spec);

// Decomposition of a rotation invariant measure into an atom at the origin,
// singular spheres, and a radial pdf for the diffuse part.  Throws for
// specs that are not rotation invariant.
struct RadialParts {
  double atom_at_origin = 0.0;
  std::vector<std::pair<double, double>> spheres;  // (radius, mass)
  std::function<double(double)> radial_pdf;        // pdf of |x|, or null
  double pdf_mass = 0.0;
  double r_max = 0.0;  // effective support bound of the pdf part
};
bool is_radial(const MeasureSpec& spec);
RadialParts radial_parts(const MeasureSpec& spec);

struct SampleBatch {
  Eigen::MatrixXd points;  // dim x count, one sample per column
};

// Reproducible sampling: the batch depends only on (spec, count, seed), and
// is assembled from 64 independent counter-RNG streams so threaded and
// serial runs agree.
SampleBatch sample(const MeasureSpec& spec, std::size_t count,
                   std::uint64_t seed);

// Like sample(), but the primary variate (radius, widest Gaussian
// coordinate, or atom/sphere choice) is stratified over [0,1).  Used as the
// shared evaluation cloud of the dim >= 3 cut machinery.
SampleBatch stratified_cloud(const MeasureSpec& spec, std::size_t count,
                             std::uint64_t seed);

struct McEstimate {
  double estimate = 0.0;
  double stderr_value = 0.0;
  std::size_t count = 0;
};

// Measure of {x : predicate(x)} by Monte Carlo.  Atoms are evaluated
// exactly and only the diffuse part is sampled; stderr_value is the binomial
// standard error of the sampled part alone.
McEstimate mc_measure(const MeasureSpec& spec,
                      const std::function<bool(const Eigen::VectorXd&)>& pred,
                      std::size_t count, std::uint64_t seed, int threads = 1);

// Total mass of atoms (0 for diffuse laws); the sampled part carries
// 1 - atom_total_mass.
double atom_total_mass(const MeasureSpec& spec);

}  // namespace waistkit
