#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace waistkit {

// Closed halfspace {x : <normal, x> <= offset}, normal of unit length.
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

// Intersection of finitely many halfspaces with the centered ball of radius
// bounding_radius.  The ball keeps every body compact, so support values are
// always finite.
class ConvexBody {
 public:
  ConvexBody(int dim, double bounding_radius);

  // Normalizes the normal; throws on a zero normal.  Offsets below
  // -bounding_radius make the body empty, which is legal.
  void add_halfspace(const Eigen::VectorXd& normal, double offset);

  int dim() const { return dim_; }
  double bounding_radius() const { return radius_; }
  const std::vector<Halfspace>& halfspaces() const { return halfspaces_; }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

 private:
  int dim_;
  double radius_;
  std::vector<Halfspace> halfspaces_;
};

// Support value max{<direction, x> : x in body} together with a maximizer.
// Solved on the central path of the polytope-and-ball barrier, accurate to
// about 1e-9 * bounding_radius.  Throws if the body is empty.
struct SupportPoint {
  double value = 0.0;
  Eigen::VectorXd point;
};
SupportPoint support(const ConvexBody& body, const Eigen::VectorXd& direction);

// h(u) + h(-u): the width of the body along a direction.
double directional_width(const ConvexBody& body,
                         const Eigen::VectorXd& direction);

// Largest ball that fits: margin <= 0 means empty (or lower dimensional)
// interior.
struct InnerBall {
  Eigen::VectorXd center;
  double margin = 0.0;
};
InnerBall chebyshev_ball(const ConvexBody& body);

// Voronoi cell of `site` among `sites` intersected with `ambient`.  Throws
// if two sites coincide (duplicate site tolerance 1e-12).
ConvexBody voronoi_cell(const Eigen::VectorXd& site,
                        const std::vector<Eigen::VectorXd>& sites,
                        const ConvexBody& ambient);

// Random polytope for audits: `facets` tangent-like halfspaces with uniform
// random unit normals and offsets in [0.35, 0.75] * R, inside the ball of
// radius R.  Always contains a ball of radius 0.35 R around the origin.
ConvexBody random_polytope(int dim, int facets, double R, std::uint64_t seed);

}  // namespace waistkit
