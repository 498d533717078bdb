#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tc/point_cloud.hpp"

namespace tc {

class SceneError : public std::runtime_error {
 public:
  explicit SceneError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parallelogram patch: origin + s*edge_u + t*edge_v, s,t in [0,1].
struct PlanePrimitive {
  Vec3 origin{};
  Vec3 edge_u{};
  Vec3 edge_v{};
};

struct SpherePrimitive {
  Vec3 center{};
  double radius = 0.0;
};

// Axis-aligned box; all six faces are sampled.
struct BoxPrimitive {
  Vec3 min_corner{};
  Vec3 size{};
};

struct Primitive {
  std::variant<PlanePrimitive, SpherePrimitive, BoxPrimitive> shape;
  int32_t class_id = 0;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  double density = 1000.0;   // points per square meter
  double noise_sigma = 0.0;  // additive Gaussian noise stddev, meters

  void validate() const;  // throws SceneError on invariant violation
};

double surface_area(const Primitive& prim);

// Deterministic for a fixed seed. Every point carries the class id of its
// generating primitive. Point count per primitive = round(density * area).
PointCloud generate_scene(const SceneSpec& spec, uint64_t seed);

// Key-value scene file, one statement per line:
//   density = <points/m^2>
//   noise_sigma = <meters>
//   plane class=<id> origin=<x,y,z> u=<x,y,z> v=<x,y,z>
//   sphere class=<id> center=<x,y,z> radius=<r>
//   box class=<id> min=<x,y,z> size=<x,y,z>
// '#' starts a comment. Unknown keys are rejected.
SceneSpec parse_scene_spec(const std::string& path);
SceneSpec parse_scene_spec_text(const std::string& text, const std::string& origin_name);

}  // namespace tc
