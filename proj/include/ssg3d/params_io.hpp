#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssg3d/common.hpp"
#include "ssg3d/training.hpp"

namespace ssg3d {

/// JSON tensor bundle: metadata plus one named block per tensor with its
/// declared shape. Doubles round-trip exactly.
inline nlohmann::json model_to_json(const Model& model) {
  Model copy = model;
  nlohmann::json doc;
  doc["format"] = "ssg3d-params";
  doc["version"] = 1;
  doc["meta"] = {{"hidden_dim", model.encoder.hidden_dim},
                 {"layers", model.encoder.layers},
                 {"bins", model.encoder.bins},
                 {"vis_dim", model.encoder.vis_dim}};
  nlohmann::json tensors = nlohmann::json::object();
  for (const TensorRef& t : tensor_refs(copy)) {
    nlohmann::json block;
    block["shape"] = {t.rows, t.cols};
    block["data"] = std::vector<double>(t.data, t.data + t.size);
    tensors[t.name] = std::move(block);
  }
  doc["tensors"] = std::move(tensors);
  return doc;
}

inline Model model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "ssg3d-params")
    throw ValidationError("params: not an ssg3d-params bundle");
  const nlohmann::json& meta = doc.at("meta");
  Model model = init_model(0, meta.at("hidden_dim").get<int>(),
                           meta.at("layers").get<int>(),
                           meta.at("bins").get<int>(),
                           meta.at("vis_dim").get<int>());
  const nlohmann::json& tensors = doc.at("tensors");
  for (TensorRef& t : tensor_refs(model)) {
    auto it = tensors.find(t.name);
    if (it == tensors.end())
      throw ValidationError("params: missing tensor \"" + t.name + "\"");
    const nlohmann::json& shape = it->at("shape");
    if (!shape.is_array() || shape.size() != 2 ||
        shape[0].get<Eigen::Index>() != t.rows ||
        shape[1].get<Eigen::Index>() != t.cols)
      throw ValidationError("params: tensor \"" + t.name +
                            "\" has the wrong shape");
    const nlohmann::json& data = it->at("data");
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != t.size)
      throw ValidationError("params: tensor \"" + t.name +
                            "\" has the wrong length");
    for (Eigen::Index i = 0; i < t.size; ++i)
      t.data[i] = data[static_cast<std::size_t>(i)].get<double>();
  }
  return model;
}

inline void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write \"" + path + "\"");
  out << model_to_json(model).dump();
  out << '\n';
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read \"" + path + "\"");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("params: ") + e.what());
  }
  return model_from_json(doc);
}

}  // namespace ssg3d
