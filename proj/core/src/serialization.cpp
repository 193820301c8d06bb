#include "waistkit/serialization.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace waistkit {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

// Objects must spell out exactly their schema: a typo'd or extra key is an
// error, not a silent default.
void require_keys(const json& j, const char* where,
                  const std::vector<std::string>& keys) {
  if (!j.is_object()) fail(std::string(where) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const auto& k : keys) known = known || item.key() == k;
    if (!known) fail(std::string(where) + ": unknown field \"" + item.key() + "\"");
  }
  for (const auto& k : keys)
    if (!j.contains(k)) fail(std::string(where) + ": missing field \"" + k + "\"");
}

double number_at(const json& j, const char* where, const char* key) {
  if (!j.at(key).is_number()) fail(std::string(where) + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(std::string(what) + ": malformed JSON");
  return j;
}

std::vector<double> number_array(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) fail(where + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string to_json(const MeasureSpec& spec) {
  json j;
  j["dim"] = spec.dim;
  if (const auto* g = std::get_if<GaussianDensity>(&spec.law)) {
    j["kind"] = "gaussian";
    j["scales"] = std::vector<double>(g->scales.begin(), g->scales.end());
  } else if (const auto* b = std::get_if<UniformBall>(&spec.law)) {
    j["kind"] = "uniform_ball";
    j["radius"] = b->radius;
  } else if (const auto* s = std::get_if<UniformSphere>(&spec.law)) {
    j["kind"] = "uniform_sphere";
    j["radius"] = s->radius;
  } else if (const auto* r = std::get_if<RadialProfile>(&spec.law)) {
    j["kind"] = "radial";
    j["profile"] = r->name;
    j["params"] = r->params;
    j["support_radius"] = r->support_radius;
  } else {
    const auto& m = std::get<AtomSphereMix>(spec.law);
    j["kind"] = "atom_sphere";
    j["atom_mass"] = m.atom_mass;
    j["radius"] = m.radius;
  }
  return j.dump();
}

MeasureSpec measure_from_json(const std::string& text) {
  const json j = parse(text, "measure");
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    fail("measure: missing string field \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();

  const auto dim_of = [&]() {
    const double d = number_at(j, "measure", "dim");
    const int n = static_cast<int>(d);
    if (n != d || n < 1) fail("measure.dim: expected a positive integer");
    return n;
  };

  MeasureSpec spec;
  if (kind == "gaussian") {
    require_keys(j, "measure", {"kind", "dim", "scales"});
    const auto scales = number_array(j.at("scales"), "measure.scales");
    spec = gaussian_measure(Eigen::Map<const Eigen::VectorXd>(
        scales.data(), static_cast<Eigen::Index>(scales.size())));
    if (spec.dim != dim_of()) fail("measure.dim: does not match scales length");
  } else if (kind == "uniform_ball") {
    require_keys(j, "measure", {"kind", "dim", "radius"});
    spec = uniform_ball(dim_of(), number_at(j, "measure", "radius"));
  } else if (kind == "uniform_sphere") {
    require_keys(j, "measure", {"kind", "dim", "radius"});
    spec = uniform_sphere(dim_of(), number_at(j, "measure", "radius"));
  } else if (kind == "radial") {
    require_keys(j, "measure", {"kind", "dim", "profile", "params", "support_radius"});
    if (!j.at("profile").is_string()) fail("measure.profile: expected a string");
    spec = radial_measure(dim_of(), j.at("profile").get<std::string>(),
                          number_array(j.at("params"), "measure.params"),
                          number_at(j, "measure", "support_radius"));
  } else if (kind == "atom_sphere") {
    require_keys(j, "measure", {"kind", "dim", "atom_mass", "radius"});
    spec = atom_sphere_mix(dim_of(), number_at(j, "measure", "atom_mass"),
                           number_at(j, "measure", "radius"));
  } else {
    fail("measure.kind: unknown kind \"" + kind + "\"");
  }
  spec.validate();
  return spec;
}

std::string to_json(const ConvexBody& body) {
  json j;
  j["dim"] = body.dim();
  j["bounding_radius"] = body.bounding_radius();
  j["halfspaces"] = json::array();
  for (const Halfspace& h : body.halfspaces()) {
    json e;
    e["normal"] = std::vector<double>(h.normal.begin(), h.normal.end());
    e["offset"] = h.offset;
    j["halfspaces"].push_back(e);
  }
  return j.dump();
}

ConvexBody body_from_json(const std::string& text) {
  const json j = parse(text, "body");
  require_keys(j, "body", {"dim", "bounding_radius", "halfspaces"});
  const double d = number_at(j, "body", "dim");
  const int n = static_cast<int>(d);
  if (n != d || n < 1) fail("body.dim: expected a positive integer");
  const double R = number_at(j, "body", "bounding_radius");
  if (!(R > 0.0)) fail("body.bounding_radius: expected a positive number");

  ConvexBody body(n, R);
  if (!j.at("halfspaces").is_array()) fail("body.halfspaces: expected an array");
  for (const auto& e : j.at("halfspaces")) {
    require_keys(e, "body.halfspaces[]", {"normal", "offset"});
    const auto normal = number_array(e.at("normal"), "body.halfspaces[].normal");
    if (static_cast<int>(normal.size()) != n)
      fail("body.halfspaces[].normal: wrong length");
    body.add_halfspace(Eigen::Map<const Eigen::VectorXd>(
                           normal.data(), static_cast<Eigen::Index>(normal.size())),
                       number_at(e, "body.halfspaces[]", "offset"));
  }
  return body;
}

}  // namespace waistkit
