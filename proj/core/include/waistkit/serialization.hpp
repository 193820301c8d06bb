#pragma once

#include <string>

#include "waistkit/convex_body.hpp"
#include "waistkit/measures.hpp"

namespace waistkit {

// JSON text for a measure, {"dim": n, "kind": ..., parameters...}:
//   gaussian      {"scales": [a_1, ...]}          (dim = scales.size())
//   uniform_ball  {"radius": r}
//   uniform_sphere{"radius": r}
//   radial        {"profile": name, "params": [...], "support_radius": r}
//   atom_sphere   {"atom_mass": m, "radius": r}
// Numbers round-trip exactly; parsing validates the result and rejects
// unknown fields.  Parse errors throw std::invalid_argument naming the
// offending field.
std::string to_json(const MeasureSpec& spec);
MeasureSpec measure_from_json(const std::string& text);

// JSON text for a body: {"dim": n, "bounding_radius": R,
// "halfspaces": [{"normal": [...], "offset": b}, ...]}.
std::string to_json(const ConvexBody& body);
ConvexBody body_from_json(const std::string& text);

}  // namespace waistkit
