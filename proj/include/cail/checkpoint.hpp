#pragma once

// JSON (de)serialization for networks, normalizers, and optimizer state.
// Doubles are written with enough digits to round-trip bit-exactly, weights in
// row-major order, so a save/load cycle reproduces the model byte for byte.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cail/nn.hpp"

namespace cail {

using Json = nlohmann::json;

inline Json json_from_vector(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Eigen::VectorXd vector_from_json(const Json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

inline Json json_from_matrix_row_major(const Eigen::MatrixXd& m) {
  Json arr = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

inline Eigen::MatrixXd matrix_from_json_row_major(const Json& arr,
                                                  Eigen::Index rows,
                                                  Eigen::Index cols) {
  if (static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw std::invalid_argument("checkpoint: matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[i++].get<double>();
  return m;
}

inline Json json_from_dense(const Dense& layer) {
  Json j;
  j["in"] = layer.in_dim();
  j["out"] = layer.out_dim();
  j["activation"] = activation_name(layer.act);
  j["spectral_norm"] = layer.spectral_norm;
  j["w"] = json_from_matrix_row_major(layer.w);
  j["b"] = json_from_vector(layer.b);
  j["power_u"] = json_from_vector(layer.power_u);
  return j;
}

inline Dense dense_from_json(const Json& j) {
  Dense layer;
  const auto rows = j.at("out").get<Eigen::Index>();
  const auto cols = j.at("in").get<Eigen::Index>();
  layer.w = matrix_from_json_row_major(j.at("w"), rows, cols);
  layer.b = vector_from_json(j.at("b"));
  layer.act = activation_from_name(j.at("activation").get<std::string>());
  layer.spectral_norm = j.at("spectral_norm").get<bool>();
  layer.power_u = vector_from_json(j.at("power_u"));
  if (layer.b.size() != rows || layer.power_u.size() != rows)
    throw std::invalid_argument("checkpoint: dense layer shape mismatch");
  return layer;
}

inline Json json_from_mlp(const Mlp& net) {
  Json j;
  j["layers"] = Json::array();
  for (const Dense& layer : net.layers) j["layers"].push_back(json_from_dense(layer));
  return j;
}

inline Mlp mlp_from_json(const Json& j) {
  Mlp net;
  for (const Json& layer : j.at("layers")) net.layers.push_back(dense_from_json(layer));
  if (net.layers.empty())
    throw std::invalid_argument("checkpoint: empty network");
  return net;
}

inline Json json_from_normalizer(const Normalizer& n) {
  Json j;
  j["count"] = n.count();
  j["clip"] = n.clip();
  j["mean"] = json_from_vector(n.mean());
  j["m2"] = json_from_vector(n.m2());
  return j;
}

inline Normalizer normalizer_from_json(const Json& j) {
  Normalizer n(static_cast<int>(j.at("mean").size()), j.at("clip").get<double>());
  n.set_state(j.at("count").get<double>(), vector_from_json(j.at("mean")),
              vector_from_json(j.at("m2")));
  return n;
}

inline Json json_from_adam(const Adam& opt) {
  Json j;
  j["lr"] = opt.config().lr;
  j["beta1"] = opt.config().beta1;
  j["beta2"] = opt.config().beta2;
  j["eps"] = opt.config().eps;
  j["t"] = opt.step_count();
  j["m"] = Json::array();
  j["v"] = Json::array();
  for (const auto& m : opt.first_moments())
    j["m"].push_back(json_from_vector(m.matrix()));
  for (const auto& v : opt.second_moments())
    j["v"].push_back(json_from_vector(v.matrix()));
  return j;
}

inline Adam adam_from_json(const Json& j) {
  AdamConfig cfg;
  cfg.lr = j.at("lr").get<double>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();
  cfg.eps = j.at("eps").get<double>();
  Adam opt(cfg);
  std::vector<Eigen::ArrayXd> m, v;
  for (const Json& arr : j.at("m")) m.push_back(vector_from_json(arr).array());
  for (const Json& arr : j.at("v")) v.push_back(vector_from_json(arr).array());
  opt.set_state(j.at("t").get<std::int64_t>(), std::move(m), std::move(v));
  return opt;
}

// ---------------------------------------------------------------------------
// Transition model

inline void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  Json j;
  in >> j;
  return j;
}

}  // namespace cail
