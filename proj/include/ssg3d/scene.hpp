#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssg3d/common.hpp"

namespace ssg3d {

/// One detected 3D object with its scene features.
struct Object3D {
  std::string tag;
  double confidence = 0.0;        // detector score mapped to [0, 1]
  Eigen::Vector3d loc{0, 0, 0};   // relative centroid, [0, 1] per axis once normalized
  Eigen::Vector3d size{1, 1, 1};  // length / width / height, strictly positive
  Eigen::Vector3d ori{0, 0, 0};   // rotation per degree of freedom, [-pi, pi)
  Vec vis;                        // flattened RoI feature, scene-wide dimension
};

/// An ordered object list plus the two designated target indices.
struct Scene {
  std::vector<Object3D> objects;
  std::array<int, 2> targets{0, 1};  // (subject, object)
  std::optional<std::string> description;

  int size() const { return static_cast<int>(objects.size()); }
  int subject() const { return targets[0]; }
  int object() const { return targets[1]; }
  int vis_dim() const {
    return objects.empty() ? 0 : static_cast<int>(objects[0].vis.size());
  }
};

/// Throws ValidationError if any Scene or Object3D invariant is violated.
inline void validate_scene(const Scene& scene, int max_objects = kMaxObjects) {
  if (scene.objects.empty()) throw ValidationError("objects must be non-empty");
  if (scene.size() > max_objects)
    throw ValidationError("objects: count " + std::to_string(scene.size()) +
                          " exceeds N_max=" + std::to_string(max_objects));
  if (scene.targets[0] == scene.targets[1])
    throw ValidationError("targets must be distinct");
  for (int t : scene.targets)
    if (t < 0 || t >= scene.size())
      throw ValidationError("targets: index " + std::to_string(t) +
                            " out of range");
  const int dv = scene.vis_dim();
  for (int i = 0; i < scene.size(); ++i) {
    const Object3D& obj = scene.objects[i];
    const std::string path = "objects[" + std::to_string(i) + "]";
    if (obj.tag.empty()) throw ValidationError(path + ".tag: must be non-empty");
    if (!std::isfinite(obj.confidence) || obj.confidence < 0.0 ||
        obj.confidence > 1.0)
      throw ValidationError(path + ".confidence: must lie in [0,1]");
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(obj.loc[a]) || obj.loc[a] < 0.0 || obj.loc[a] > 1.0)
        throw ValidationError(path + ".loc[" + std::to_string(a) +
                              "]: must lie in [0,1]");
      if (!std::isfinite(obj.size[a]) || obj.size[a] <= 0.0)
        throw ValidationError(path + ".size[" + std::to_string(a) +
                              "]: must be positive");
      if (!std::isfinite(obj.ori[a]) || obj.ori[a] < -kPi || obj.ori[a] >= kPi)
        throw ValidationError(path + ".ori[" + std::to_string(a) +
                              "]: must lie in [-pi,pi)");
    }
    if (static_cast<int>(obj.vis.size()) != dv)
      throw ValidationError(path + ".vis: length " +
                            std::to_string(obj.vis.size()) +
                            " mismatches scene dimension " + std::to_string(dv));
    for (Eigen::Index k = 0; k < obj.vis.size(); ++k)
      if (!std::isfinite(obj.vis[k]))
        throw ValidationError(path + ".vis[" + std::to_string(k) +
                              "]: must be finite");
  }
}

/// Per-axis min-max rescaling of centroids into [0,1]. A scene already inside
/// the unit cube is returned unchanged; an axis on which every object shares
/// one coordinate maps to 0.5. Idempotent.
inline Scene normalize_coords(Scene scene) {
  if (scene.objects.empty()) return scene;
  bool in_range = true;
  for (const Object3D& obj : scene.objects)
    for (int a = 0; a < 3; ++a)
      if (obj.loc[a] < 0.0 || obj.loc[a] > 1.0) in_range = false;
  if (in_range) return scene;
  for (int a = 0; a < 3; ++a) {
    double lo = scene.objects[0].loc[a], hi = lo;
    for (const Object3D& obj : scene.objects) {
      lo = std::min(lo, obj.loc[a]);
      hi = std::max(hi, obj.loc[a]);
    }
    for (Object3D& obj : scene.objects)
      obj.loc[a] = (hi > lo) ? (obj.loc[a] - lo) / (hi - lo) : 0.5;
  }
  return scene;
}

namespace detail {

inline const nlohmann::json& json_field(const nlohmann::json& j,
                                        const char* key,
                                        const std::string& path) {
  auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(path + ": missing field \"" + key + "\"");
  return *it;
}

inline double json_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number())
    throw ValidationError(path + ": expected a number");
  return j.get<double>();
}

inline Eigen::Vector3d json_vec3(const nlohmann::json& j,
                                 const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(path + ": expected an array of 3 numbers");
  Eigen::Vector3d v;
  for (int a = 0; a < 3; ++a)
    v[a] = json_number(j[a], path + "[" + std::to_string(a) + "]");
  return v;
}

}  // namespace detail

/// Parses a UTF-8 JSON scene document. Raw centroids outside the unit cube
/// are min-max normalized; orientation angles are wrapped into [-pi, pi).
/// Errors carry the offending field path.
inline Scene parse_scene(const std::string& text,
                         int max_objects = kMaxObjects) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("scene document: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("scene document: expected an object");

  Scene scene;
  const nlohmann::json& objs = detail::json_field(doc, "objects", "scene");
  if (!objs.is_array()) throw ValidationError("objects: expected an array");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string path = "objects[" + std::to_string(i) + "]";
    const nlohmann::json& o = objs[i];
    if (!o.is_object()) throw ValidationError(path + ": expected an object");
    Object3D obj;
    const nlohmann::json& tag = detail::json_field(o, "tag", path);
    if (!tag.is_string()) throw ValidationError(path + ".tag: expected a string");
    obj.tag = tag.get<std::string>();
    obj.confidence = detail::json_number(detail::json_field(o, "confidence", path),
                                         path + ".confidence");
    obj.loc = detail::json_vec3(detail::json_field(o, "loc", path), path + ".loc");
    obj.size = detail::json_vec3(detail::json_field(o, "size", path), path + ".size");
    obj.ori = detail::json_vec3(detail::json_field(o, "ori", path), path + ".ori");
    for (int a = 0; a < 3; ++a) obj.ori[a] = wrap_angle(obj.ori[a]);
    const nlohmann::json& vis = detail::json_field(o, "vis", path);
    if (!vis.is_array()) throw ValidationError(path + ".vis: expected an array");
    obj.vis.resize(static_cast<Eigen::Index>(vis.size()));
    for (std::size_t k = 0; k < vis.size(); ++k)
      obj.vis[static_cast<Eigen::Index>(k)] =
          detail::json_number(vis[k], path + ".vis[" + std::to_string(k) + "]");
    scene.objects.push_back(std::move(obj));
  }

  const nlohmann::json& targets = detail::json_field(doc, "targets", "scene");
  if (!targets.is_array() || targets.size() != 2)
    throw ValidationError("targets: expected an array of 2 indices");
  for (int t = 0; t < 2; ++t) {
    if (!targets[t].is_number_integer())
      throw ValidationError("targets[" + std::to_string(t) +
                            "]: expected an integer");
    scene.targets[t] = targets[t].get<int>();
  }
  if (auto it = doc.find("description"); it != doc.end()) {
    if (!it->is_string())
      throw ValidationError("description: expected a string");
    scene.description = it->get<std::string>();
  }

  scene = normalize_coords(std::move(scene));
  validate_scene(scene, max_objects);
  return scene;
}

/// Serializes a Scene back to the document schema. parse(serialize(s)) == s
/// for every valid scene (doubles round-trip exactly).
inline std::string serialize_scene(const Scene& scene) {
  nlohmann::json doc;
  doc["objects"] = nlohmann::json::array();
  for (const Object3D& obj : scene.objects) {
    nlohmann::json o;
    o["tag"] = obj.tag;
    o["confidence"] = obj.confidence;
    o["loc"] = {obj.loc[0], obj.loc[1], obj.loc[2]};
    o["size"] = {obj.size[0], obj.size[1], obj.size[2]};
    o["ori"] = {obj.ori[0], obj.ori[1], obj.ori[2]};
    o["vis"] = std::vector<double>(obj.vis.data(), obj.vis.data() + obj.vis.size());
    doc["objects"].push_back(std::move(o));
  }
  doc["targets"] = {scene.targets[0], scene.targets[1]};
  if (scene.description) doc["description"] = *scene.description;
  return doc.dump(2);
}

/// Tag vocabulary for synthetic scenes (common indoor object labels).
inline const std::vector<std::string>& synth_vocabulary() {
  static const std::vector<std::string> vocab = {
      "wall",    "floor",   "cabinet", "bed",       "chair",   "sofa",
      "table",   "door",    "window",  "bookshelf", "picture", "counter",
      "blinds",  "desk",    "shelves", "curtain",   "dresser", "pillow",
      "mirror",  "clothes", "ceiling", "books",     "television", "paper",
      "towel",   "box",     "whiteboard", "person", "toilet",  "sink",
      "lamp",    "bathtub", "bag",     "plant"};
  return vocab;
}

/// Deterministic synthetic scene for tests and the toy training loop.
inline Scene synth_scene(std::uint64_t seed, int n_objects, int vis_dim = 8) {
  if (n_objects < 2 || n_objects > kMaxObjects)
    throw ValidationError("n_objects must lie in [2," +
                          std::to_string(kMaxObjects) + "]");
  if (vis_dim < 1) throw ValidationError("vis_dim must be >= 1");
  RandomStream rng(seed);
  const auto& vocab = synth_vocabulary();
  Scene scene;
  for (int i = 0; i < n_objects; ++i) {
    Object3D obj;
    obj.tag = vocab[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(vocab.size()) - 1))];
    obj.confidence = rng.uniform();
    for (int a = 0; a < 3; ++a) obj.loc[a] = rng.uniform();
    for (int a = 0; a < 3; ++a) obj.size[a] = 1.0 - rng.uniform();  // (0, 1]
    for (int a = 0; a < 3; ++a) obj.ori[a] = rng.uniform(-kPi, kPi);
    obj.vis.resize(vis_dim);
    for (int k = 0; k < vis_dim; ++k) obj.vis[k] = rng.uniform(-1.0, 1.0);
    scene.objects.push_back(std::move(obj));
  }
  scene.targets[0] = rng.uniform_int(0, n_objects - 1);
  int second = rng.uniform_int(0, n_objects - 2);
  if (second >= scene.targets[0]) ++second;  // distinct by construction
  scene.targets[1] = second;
  validate_scene(scene);
  return scene;
}

}  // namespace ssg3d
