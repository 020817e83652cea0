#pragma once

// JSON weight files:
//   {"dim": d, "activation": "relu"|"sigmoid"|"tanh",
//    "layers": [{"A": [[...]], "W": [[...]], "b": [...]}, ...]}
// Matrices are row-major lists of rows.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "narrow_node/model.hpp"

namespace narrow_node {

namespace detail {

inline double json_number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(where + ": nonfinite value");
  return v;
}

inline Vector json_vector(const nlohmann::json& j, Eigen::Index d,
                          const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  if (static_cast<Eigen::Index>(j.size()) != d)
    throw ParseError(where + ": expected length " + std::to_string(d) +
                     ", got " + std::to_string(j.size()));
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i)
    v[i] = json_number(j[static_cast<std::size_t>(i)],
                       where + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix json_matrix(const nlohmann::json& j, Eigen::Index d,
                          const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of rows");
  if (static_cast<Eigen::Index>(j.size()) != d)
    throw ParseError(where + ": expected " + std::to_string(d) + " rows, got " +
                     std::to_string(j.size()));
  Matrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    m.row(r) = json_vector(j[static_cast<std::size_t>(r)], d, row_where).transpose();
  }
  return m;
}

inline nlohmann::json to_json_rows(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline WideField field_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("weights: top level must be an object");
  for (const char* key : {"dim", "activation", "layers"})
    if (!doc.contains(key)) throw ParseError(std::string("weights: missing \"") + key + "\"");

  const auto& dim_json = doc["dim"];
  if (!dim_json.is_number_integer() || dim_json.get<long long>() < 1)
    throw ParseError("weights: \"dim\" must be a positive integer");
  const auto d = static_cast<Eigen::Index>(dim_json.get<long long>());

  if (!doc["activation"].is_string())
    throw ParseError("weights: \"activation\" must be a string");
  Activation act;
  try {
    act = Activation(parse_activation(doc["activation"].get<std::string>()));
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("weights: ") + e.what());
  }

  const auto& layers_json = doc["layers"];
  if (!layers_json.is_array() || layers_json.empty())
    throw ParseError("weights: \"layers\" must be a nonempty array");

  std::vector<ShallowLayer> layers;
  layers.reserve(layers_json.size());
  for (std::size_t i = 0; i < layers_json.size(); ++i) {
    const auto& lj = layers_json[i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    if (!lj.is_object() || !lj.contains("A") || !lj.contains("W") || !lj.contains("b"))
      throw ParseError(where + ": needs \"A\", \"W\" and \"b\"");
    layers.emplace_back(detail::json_matrix(lj["A"], d, where + ".A"),
                        detail::json_matrix(lj["W"], d, where + ".W"),
                        detail::json_vector(lj["b"], d, where + ".b"));
  }
  return WideField(std::move(layers), act);
}

inline nlohmann::json field_to_json(const WideField& field) {
  nlohmann::json doc;
  doc["dim"] = field.dim();
  doc["activation"] = std::string(to_string(field.activation().kind()));
  auto layers = nlohmann::json::array();
  for (const auto& layer : field.layers()) {
    nlohmann::json lj;
    lj["A"] = detail::to_json_rows(layer.A());
    lj["W"] = detail::to_json_rows(layer.W());
    lj["b"] = std::vector<double>(layer.b().data(), layer.b().data() + layer.b().size());
    layers.push_back(std::move(lj));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

inline WideField parse_weights(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("weights: ") + e.what());
  }
  return field_from_json(doc);
}

inline WideField load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open weights file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_weights(buf.str());
}

}  // namespace narrow_node
