#pragma once

// Transition datasets for the sliding environment: in-memory container,
// JSONL serialization (one transition per line, stable field order), and a
// manifest summarizing counts and label balance. JSONL lines carry the fields
// s, a, s_next, episode_id, step plus the ground-truth label, contact flag,
// goal center, and sparse reward of the logged episode.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cail/slide.hpp"

namespace cail {

struct SlideTransition {
  std::int64_t episode_id = 0;
  int step = 0;
  Eigen::Vector4d s = Eigen::Vector4d::Zero();
  double a = 0.0;
  Eigen::Vector4d s_next = Eigen::Vector4d::Zero();
  bool contact = false;
  bool label = false;
  double goal = 0.0;
  double reward = -1.0;
};

struct SlideDataset {
  std::vector<SlideTransition> transitions;
  std::string provenance = "unknown";  // random | scripted | mixed | rl-agent
  double noise_level = 0.0;

  std::size_t size() const { return transitions.size(); }

  Eigen::MatrixXd states() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(size()), kSlideStateDim);
    for (std::size_t i = 0; i < size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) = transitions[i].s.transpose();
    return out;
  }
  Eigen::MatrixXd actions() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(size()), 1);
    for (std::size_t i = 0; i < size(); ++i)
      out(static_cast<Eigen::Index>(i), 0) = transitions[i].a;
    return out;
  }
  Eigen::MatrixXd next_states() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(size()), kSlideStateDim);
    for (std::size_t i = 0; i < size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) =
          transitions[i].s_next.transpose();
    return out;
  }
  std::vector<int> labels() const {
    std::vector<int> out(size());
    for (std::size_t i = 0; i < size(); ++i)
      out[i] = transitions[i].label ? 1 : 0;
    return out;
  }
  std::vector<std::int64_t> episode_ids() const {
    std::vector<std::int64_t> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = transitions[i].episode_id;
    return out;
  }
  std::int64_t positives() const {
    std::int64_t p = 0;
    for (const SlideTransition& t : transitions) p += t.label ? 1 : 0;
    return p;
  }
  std::int64_t episode_count() const {
    std::int64_t count = 0;
    std::int64_t last = -1;
    bool first = true;
    for (const SlideTransition& t : transitions) {
      if (first || t.episode_id != last) {
        ++count;
        last = t.episode_id;
        first = false;
      }
    }
    return count;
  }
};

namespace detail {

inline nlohmann::json json_from_transition(const SlideTransition& t) {
  return nlohmann::json{
      {"episode_id", t.episode_id},
      {"step", t.step},
      {"s", {t.s[0], t.s[1], t.s[2], t.s[3]}},
      {"a", {t.a}},
      {"s_next", {t.s_next[0], t.s_next[1], t.s_next[2], t.s_next[3]}},
      {"contact", t.contact},
      {"label", t.label},
      {"goal", t.goal},
      {"reward", t.reward},
  };
}

inline SlideTransition transition_from_json(const nlohmann::json& j) {
  SlideTransition t;
  t.episode_id = j.at("episode_id").get<std::int64_t>();
  t.step = j.at("step").get<int>();
  const auto& s = j.at("s");
  const auto& sn = j.at("s_next");
  if (s.size() != 4 || sn.size() != 4)
    throw std::invalid_argument("transition: state arrays must have 4 entries");
  for (int d = 0; d < 4; ++d) {
    t.s[d] = s.at(static_cast<std::size_t>(d)).get<double>();
    t.s_next[d] = sn.at(static_cast<std::size_t>(d)).get<double>();
  }
  const auto& a = j.at("a");
  if (a.size() != 1)
    throw std::invalid_argument("transition: action array must have 1 entry");
  t.a = a.at(0).get<double>();
  t.contact = j.at("contact").get<bool>();
  t.label = j.at("label").get<bool>();
  t.goal = j.at("goal").get<double>();
  t.reward = j.at("reward").get<double>();
  return t;
}

}  // namespace detail

inline void write_dataset_jsonl(const std::string& path,
                                const SlideDataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const SlideTransition& t : ds.transitions)
    out << detail::json_from_transition(t).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline SlideDataset read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  SlideDataset ds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ds.transitions.push_back(
        detail::transition_from_json(nlohmann::json::parse(line)));
  }
  return ds;
}

inline nlohmann::json dataset_manifest(const SlideDataset& ds) {
  const std::int64_t n = static_cast<std::int64_t>(ds.size());
  const std::int64_t pos = ds.positives();
  return nlohmann::json{
      {"transitions", n},
      {"episodes", ds.episode_count()},
      {"positives", pos},
      {"positive_rate",
       n > 0 ? static_cast<double>(pos) / static_cast<double>(n) : 0.0},
      {"provenance", ds.provenance},
      {"noise_level", ds.noise_level},
  };
}

}  // namespace cail
