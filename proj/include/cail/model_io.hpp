#pragma once

// Checkpoint layer for transition models: config + backbone + heads +
// normalizer (+ optimizer state, so training can resume) in one JSON file.

#include <string>
#include <utility>

#include "cail/checkpoint.hpp"
#include "cail/density.hpp"

namespace cail {

inline Json json_from_model_config(const TransitionModelConfig& cfg) {
  Json j;
  j["state_dim"] = cfg.state_dim;
  j["action_dim"] = cfg.action_dim;
  j["target_dims"] = cfg.target_dims;
  j["target_scale"] = cfg.target_scale;
  j["hidden"] = cfg.hidden;
  j["activation"] = activation_name(cfg.activation);
  j["spectral_norm"] = cfg.spectral_norm;
  j["normalize_input"] = cfg.normalize_input;
  j["var_floor"] = cfg.var_floor;
  j["var_cap"] = cfg.var_cap;
  j["adam"] = {{"lr", cfg.adam.lr},
               {"beta1", cfg.adam.beta1},
               {"beta2", cfg.adam.beta2},
               {"eps", cfg.adam.eps}};
  j["batch_size"] = cfg.batch_size;
  return j;
}

inline TransitionModelConfig model_config_from_json(const Json& j) {
  TransitionModelConfig cfg;
  cfg.state_dim = j.at("state_dim").get<int>();
  cfg.action_dim = j.at("action_dim").get<int>();
  cfg.target_dims = j.at("target_dims").get<std::vector<int>>();
  cfg.target_scale = j.at("target_scale").get<double>();
  cfg.hidden = j.at("hidden").get<std::vector<int>>();
  cfg.activation = activation_from_name(j.at("activation").get<std::string>());
  cfg.spectral_norm = j.at("spectral_norm").get<bool>();
  cfg.normalize_input = j.at("normalize_input").get<bool>();
  cfg.var_floor = j.at("var_floor").get<double>();
  cfg.var_cap = j.at("var_cap").get<double>();
  cfg.adam.lr = j.at("adam").at("lr").get<double>();
  cfg.adam.beta1 = j.at("adam").at("beta1").get<double>();
  cfg.adam.beta2 = j.at("adam").at("beta2").get<double>();
  cfg.adam.eps = j.at("adam").at("eps").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  return cfg;
}

inline Json json_from_transition_model(const TransitionModel& m,
                                       bool include_optimizer = true) {
  Json j;
  j["format"] = "cail-transition-model";
  j["config"] = json_from_model_config(m.cfg);
  j["backbone"] = json_from_mlp(m.backbone);
  j["mean_head"] = json_from_dense(m.mean_head);
  j["var_head"] = json_from_dense(m.var_head);
  j["normalizer"] = json_from_normalizer(m.input_norm);
  if (include_optimizer) j["adam_state"] = json_from_adam(m.opt);
  return j;
}

inline TransitionModel transition_model_from_json(const Json& j) {
  if (j.value("format", "") != "cail-transition-model")
    throw std::invalid_argument("not a transition-model checkpoint");
  TransitionModel m;
  m.cfg = model_config_from_json(j.at("config"));
  m.backbone = mlp_from_json(j.at("backbone"));
  m.mean_head = dense_from_json(j.at("mean_head"));
  m.var_head = dense_from_json(j.at("var_head"));
  m.input_norm = normalizer_from_json(j.at("normalizer"));
  m.opt = j.contains("adam_state") ? adam_from_json(j.at("adam_state"))
                                   : Adam(m.cfg.adam);
  return m;
}

inline void save_transition_model(const std::string& path,
                                  const TransitionModel& m,
                                  Json extra_metadata = Json::object()) {
  Json j = json_from_transition_model(m);
  for (auto& [key, value] : extra_metadata.items()) j[key] = std::move(value);
  save_json_file(path, j);
}

inline TransitionModel load_transition_model(const std::string& path) {
  return transition_model_from_json(load_json_file(path));
}

}  // namespace cail
