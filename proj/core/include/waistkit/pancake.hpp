#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "waistkit/convex_body.hpp"
#include "waistkit/convex_geometry.hpp"
#include "waistkit/measures.hpp"

namespace waistkit {

// One node of the binary cut hierarchy: a unit direction orthogonal to the
// level's retained frame, and the resolved equal-measure offset.
struct CutNode {
  Eigen::VectorXd direction;
  double offset = 0.0;
};

// Binary cut hierarchy of depth I.  frames[l] is the level's retained
// orthonormal frame (n x (n-k-1), possibly zero columns); every node
// direction at level l is orthogonal to it.  Nodes are stored heap-style:
// node i of level l sits at index 2^l - 1 + i.
struct CutTree {
  int depth = 0;
  std::vector<Eigen::MatrixXd> frames;
  std::vector<CutNode> nodes;
};

// Leaves of a resolved partition of B(R), with their measures and, when a
// functional was attached, its per-leaf values and their max pairwise
// distance.  The spec/R/tree are retained so the partition can be audited.
struct PartitionResult {
  MeasureSpec spec;
  double radius = 0.0;
  CutTree tree;
  std::vector<ConvexBody> leaves;
  std::vector<double> masses;
  std::vector<Eigen::VectorXd> F_values;
  double spread = 0.0;
};

// Level frames for cut directions: orthonormalized gaussian matrices, one
// (n-k-1)-frame per level.  k = n-1 yields empty frames, so directions
// range over the whole sphere.
std::vector<Eigen::MatrixXd> subspace_sequence(int n, int k, int count,
                                               std::uint64_t seed);

// Resolves every node offset by an equal-measure half/half cut of its
// node body and returns the leaves.  Leaf masses land within opt.tol of
// mu(B(R)) / 2^depth relative (exact empirical halves on the cloud route).
// An attached functional fills F_values and spread.
PartitionResult build_partition(
    const MeasureSpec& spec, double R, CutTree tree,
    const CutOptions& opt = {},
    const std::function<Eigen::VectorXd(const ConvexBody&)>& F = {});

struct EqualizeOptions {
  int starts = 64;            // random restarts over the direction spheres
  int budget = 10000;         // total partition-objective evaluations
  double spread_target = 1e-3;
  CutOptions cut;
  std::uint64_t seed = 1;
  // Seeds the first start with this tree's directions and a tightened
  // simplex (finer-stage polish of a coarse solve).  Depth and frames must
  // match the call's.
  std::optional<CutTree> warm_start;
};

// Numerical stand-in for the equivariant existence argument: searches the
// product of direction spheres for a cut hierarchy equalizing F across
// leaves.  converged reports whether the spread target was met; the best
// tree found is returned either way.
struct EqualizeResult {
  CutTree tree;
  double spread = 0.0;
  bool converged = false;
  int evaluations = 0;
};
EqualizeResult equalize_F(
    const MeasureSpec& spec, double R,
    const std::function<Eigen::VectorXd(const ConvexBody&)>& F, int depth,
    const std::vector<Eigen::MatrixXd>& frames,
    const EqualizeOptions& opt = {});

// One root-to-leaf cut against the leaf's candidate disk plane A (span of
// its top k+1 John axes).  Widths are directional widths along the cut
// normal projected into A; volume proxies (top-(k+1) John semiaxes product
// of the projected body) are computed for qualifying cuts only.
struct CutAudit {
  int level = 0;
  double alignment_angle = 0.0;  // angle between the cut normal and A
  bool qualifying = false;       // alignment within pi/12
  double width_before = 0.0;
  double width_after = 0.0;
  bool width_ok = true;
  double volume_before = 0.0;
  double volume_after = 0.0;
  bool volume_ok = true;
};

struct LeafAudit {
  PancakeDeficiency deficiency;
  std::vector<CutAudit> chain;
};

struct PancakeReport {
  double c_mu = 0.0;  // (m/M) (1 - 2^-n) from the density range on B(R)
  double max_delta = 0.0;
  int qualifying_cuts = 0;
  int width_failures = 0;
  int volume_failures = 0;
  std::vector<LeafAudit> leaves;
};

// Per-leaf pancake deficiency plus, when audit_chains is set, the
// width/volume decrease audit of every root-to-leaf chain.  Width failures
// are reported, not thrown: the decrease constant is a round-body estimate
// and pointed bodies can violate it legitimately.
PancakeReport verify_pancake(const PartitionResult& result, int k,
                             bool audit_chains = true);

}  // namespace waistkit
