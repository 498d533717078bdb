#include "tc/scene.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace tc {

void SceneSpec::validate() const {
  if (density <= 0.0) throw SceneError("density must be > 0");
  if (noise_sigma < 0.0) throw SceneError("noise_sigma must be >= 0");
  if (primitives.empty()) throw SceneError("scene has no primitives");
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    if (surface_area(primitives[i]) <= 0.0)
      throw SceneError("degenerate primitive at index " + std::to_string(i));
    if (primitives[i].class_id < 0)
      throw SceneError("negative class id at index " + std::to_string(i));
  }
}

double surface_area(const Primitive& prim) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PlanePrimitive>) {
          return norm(cross(s.edge_u, s.edge_v));
        } else if constexpr (std::is_same_v<T, SpherePrimitive>) {
          return 4.0 * std::numbers::pi * s.radius * s.radius;
        } else {
          const auto& d = s.size;
          return 2.0 * (d[0] * d[1] + d[1] * d[2] + d[0] * d[2]);
        }
      },
      prim.shape);
}

namespace {

Vec3 sample_on_primitive(const Primitive& prim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  return std::visit(
      [&](const auto& s) -> Vec3 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PlanePrimitive>) {
          const double a = uni(rng), b = uni(rng);
          return s.origin + s.edge_u * a + s.edge_v * b;
        } else if constexpr (std::is_same_v<T, SpherePrimitive>) {
          // Uniform direction, scaled onto the sphere.
          std::normal_distribution<double> gauss(0.0, 1.0);
          Vec3 d;
          do {
            d = {gauss(rng), gauss(rng), gauss(rng)};
          } while (norm(d) < 1e-12);
          return s.center + normalized(d) * s.radius;
        } else {
          const auto& d = s.size;
          const double face_area[3] = {d[1] * d[2], d[0] * d[2], d[0] * d[1]};
          const double total = 2.0 * (face_area[0] + face_area[1] + face_area[2]);
          double pick = uni(rng) * total;
          int axis = 2;
          bool far_side = true;
          for (int f = 0; f < 6; ++f) {
            if (pick < face_area[f / 2]) {
              axis = f / 2;
              far_side = (f % 2) == 1;
              break;
            }
            pick -= face_area[f / 2];
          }
          Vec3 p = s.min_corner;
          p[axis] += far_side ? d[axis] : 0.0;
          const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
          p[u_axis] += uni(rng) * d[u_axis];
          p[v_axis] += uni(rng) * d[v_axis];
          return p;
        }
      },
      prim.shape);
}

}  // namespace

PointCloud generate_scene(const SceneSpec& spec, uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  PointCloud cloud;
  for (const auto& prim : spec.primitives) {
    const auto count = static_cast<std::size_t>(std::llround(surface_area(prim) * spec.density));
    for (std::size_t i = 0; i < count; ++i) {
      Vec3 p = sample_on_primitive(prim, rng);
      if (spec.noise_sigma > 0.0) {
        p[0] += noise(rng) * spec.noise_sigma;
        p[1] += noise(rng) * spec.noise_sigma;
        p[2] += noise(rng) * spec.noise_sigma;
      }
      cloud.positions.push_back(p);
      cloud.labels.push_back(prim.class_id);
    }
  }
  cloud.validate();
  return cloud;
}

namespace {

Vec3 parse_vec3(const std::string& s, const std::string& where) {
  Vec3 v{};
  std::istringstream ss(s);
  char comma;
  if (!(ss >> v[0] >> comma >> v[1] >> comma >> v[2]))
    throw SceneError(where + ": expected x,y,z triple, got '" + s + "'");
  return v;
}

// Splits "key=value" tokens of a primitive line into a map.
std::vector<std::pair<std::string, std::string>> parse_kv_tokens(std::istringstream& ss,
                                                                const std::string& where) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw SceneError(where + ": expected key=value, got '" + tok + "'");
    out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return out;
}

}  // namespace

SceneSpec parse_scene_spec_text(const std::string& text, const std::string& origin_name) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin_name + ":" + std::to_string(line_no);
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;

    if (head == "density" || head == "noise_sigma") {
      std::string eq;
      double value;
      if (!(ls >> eq >> value) || eq != "=")
        throw SceneError(where + ": expected '" + head + " = <number>'");
      (head == "density" ? spec.density : spec.noise_sigma) = value;
    } else if (head == "plane" || head == "sphere" || head == "box") {
      Primitive prim;
      PlanePrimitive plane;
      SpherePrimitive sphere;
      BoxPrimitive box;
      bool have_class = false;
      for (const auto& [key, value] : parse_kv_tokens(ls, where)) {
        if (key == "class") {
          prim.class_id = std::stoi(value);
          have_class = true;
        } else if (head == "plane" && key == "origin") plane.origin = parse_vec3(value, where);
        else if (head == "plane" && key == "u") plane.edge_u = parse_vec3(value, where);
        else if (head == "plane" && key == "v") plane.edge_v = parse_vec3(value, where);
        else if (head == "sphere" && key == "center") sphere.center = parse_vec3(value, where);
        else if (head == "sphere" && key == "radius") sphere.radius = std::stod(value);
        else if (head == "box" && key == "min") box.min_corner = parse_vec3(value, where);
        else if (head == "box" && key == "size") box.size = parse_vec3(value, where);
        else throw SceneError(where + ": unknown key '" + key + "' for " + head);
      }
      if (!have_class) throw SceneError(where + ": primitive without class=");
      if (head == "plane") prim.shape = plane;
      else if (head == "sphere") prim.shape = sphere;
      else prim.shape = box;
      spec.primitives.push_back(prim);
    } else {
      throw SceneError(where + ": unknown statement '" + head + "'");
    }
  }
  spec.validate();
  return spec;
}

SceneSpec parse_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open scene file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene_spec_text(buf.str(), path);
}

}  // namespace tc
