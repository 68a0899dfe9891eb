#pragma once

// The full RL training loop: goal-conditioned DDPG+HER on the sliding task,
// with the influence mechanisms switchable per variant (reward bonus, active
// exploration, influence-ranked replay) and removable at compile time. Also
// provides run-state checkpointing so interrupted runs resume exactly.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cail/checkpoint.hpp"
#include "cail/model_io.hpp"
#include "cail/ddpg.hpp"
#include "cail/density.hpp"
#include "cail/influence.hpp"
#include "cail/replay.hpp"
#include "cail/rng.hpp"
#include "cail/slide.hpp"

namespace cail {

// ---------------------------------------------------------------------------
// Variants

enum class Variant { kBaseline, kBonus, kActive, kCaiP, kCombined };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline:
      return "baseline";
    case Variant::kBonus:
      return "bonus";
    case Variant::kActive:
      return "active";
    case Variant::kCaiP:
      return "cai_p";
    case Variant::kCombined:
      return "combined";
  }
  throw std::logic_error("unknown variant");
}

inline Variant parse_variant(const std::string& name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "bonus") return Variant::kBonus;
  if (name == "active") return Variant::kActive;
  if (name == "cai_p") return Variant::kCaiP;
  if (name == "combined") return Variant::kCombined;
  throw std::invalid_argument("unknown variant: " + name);
}

inline const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = {Variant::kBaseline, Variant::kBonus,
                                         Variant::kActive, Variant::kCaiP,
                                         Variant::kCombined};
  return v;
}

// Which machinery a variant engages.
inline bool uses_model(Variant v) { return v != Variant::kBaseline; }
inline bool uses_scores(Variant v) {
  return v == Variant::kBonus || v == Variant::kCaiP || v == Variant::kCombined;
}
inline bool uses_prioritization(Variant v) {
  return v == Variant::kCaiP || v == Variant::kCombined;
}

// ---------------------------------------------------------------------------
// Configuration

struct TrainConfig {
  SlideParams env;
  AgentConfig agent;             // base settings; variant flags applied below
  TransitionModelConfig model;   // internal transition model for scoring
  OnlineSchedule schedule;       // model refit cadence and batch counts
  CaiConfig cai;                 // influence estimator (smaller K than detection)
  double lambda_bonus = 0.2;     // bonus weight engaged by bonus/combined
  int warmup_episodes = 200;     // random-policy episodes before training
  int train_episodes = 4000;
  int eval_every = 200;          // training episodes between greedy evals
  int eval_episodes = 100;
  std::size_t buffer_capacity = 5000;  // episodes
  std::uint64_t seed = 0;
};

// Scaled-down agent-and-model preset for the 1D task.
inline TrainConfig default_train_config() {
  TrainConfig cfg;
  cfg.model.state_dim = kSlideStateDim;
  cfg.model.action_dim = 1;
  cfg.model.target_dims = {kSlideObjPosDim, kSlideObjVelDim};
  cfg.model.hidden = {64, 64};
  cfg.model.activation = Activation::kTanh;
  cfg.model.spectral_norm = true;
  cfg.model.normalize_input = true;
  cfg.model.batch_size = 500;
  cfg.model.adam = {8e-4, 0.9, 0.9, 1e-8};
  cfg.cai.k = 32;
  cfg.cai.action_lo = Eigen::VectorXd::Constant(1, -1.0);
  cfg.cai.action_hi = Eigen::VectorXd::Constant(1, 1.0);
  return cfg;
}

inline AgentConfig agent_for_variant(AgentConfig base, Variant v,
                                     double lambda_bonus) {
  base.lambda_bonus =
      (v == Variant::kBonus || v == Variant::kCombined) ? lambda_bonus : 0.0;
  base.active_fraction =
      (v == Variant::kActive || v == Variant::kCombined) ? 1.0 : 0.0;
  return base;
}

inline void validate(const TrainConfig& cfg) {
  validate(cfg.agent);
  if (cfg.lambda_bonus < 0.0)
    throw std::invalid_argument("TrainConfig: lambda_bonus >= 0");
  if (cfg.warmup_episodes < 1)
    throw std::invalid_argument("TrainConfig: warmup_episodes >= 1");
  if (cfg.train_episodes < 0)
    throw std::invalid_argument("TrainConfig: train_episodes >= 0");
  if (cfg.eval_every < 1)
    throw std::invalid_argument("TrainConfig: eval_every >= 1");
  if (cfg.eval_episodes < 1)
    throw std::invalid_argument("TrainConfig: eval_episodes >= 1");
  if (cfg.buffer_capacity == 0)
    throw std::invalid_argument("TrainConfig: buffer_capacity >= 1");
  if (cfg.schedule.warmup_episodes != cfg.warmup_episodes)
    throw std::invalid_argument(
        "TrainConfig: schedule warmup must match warmup_episodes");
}

// ---------------------------------------------------------------------------
// Run state and learning curve

struct CurveRow {
  int episode = 0;          // training episodes completed at this eval
  double success_rate = 0.0;
  double mean_cai = 0.0;    // mean stored influence (0 when unscored)
  double critic_loss = 0.0; // mean over update rounds since the previous eval
  double actor_loss = 0.0;
};

// Everything a run needs to continue: checkpoint this at eval points and a
// resumed run replays bit-identically.
struct RunState {
  Agent agent;
  std::optional<TransitionModel> model;  // absent for the plain baseline
  ReplayBuffer buffer{1};
  std::int64_t next_uid = 0;
  int episodes_done = 0;  // completed training episodes (warmup excluded)
  bool warmed_up = false;
  std::vector<CurveRow> curve;
  Rng rollout_rng{0};
  Rng sample_rng{0};
  Rng fit_rng{0};
};

namespace detail {

// Flattens the buffer into one transition pool for model fitting.
inline TransitionBatch flatten_buffer(const ReplayBuffer& buf,
                                      const TransitionModelConfig& cfg) {
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) total += buf.episode(i).length();
  Eigen::MatrixXd s(total, kSlideStateDim), a(total, 1),
      s_next(total, kSlideStateDim);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Episode& ep = buf.episode(i);
    for (int t = 0; t < ep.length(); ++t, ++row) {
      const auto u = static_cast<std::size_t>(t);
      s.row(row) = ep.s[u].transpose();
      a(row, 0) = ep.a[u];
      s_next.row(row) = ep.s_next[u].transpose();
    }
  }
  return make_batch(cfg, std::move(s), std::move(a), s_next);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Training

// Runs (or resumes) one training run. `WithInfluence` compiles the influence
// machinery out entirely when false; such builds accept only the baseline
// variant and must produce bit-identical results to a full build running the
// baseline. `on_eval` fires after every appended curve row (checkpointing
// hook). Returns the final run state, curve included.
template <bool WithInfluence>
RunState train(const TrainConfig& cfg, Variant variant,
               std::optional<RunState> resume = std::nullopt,
               const std::function<void(const RunState&)>& on_eval = {}) {
  validate(cfg);
  if (!WithInfluence && variant != Variant::kBaseline)
    throw std::invalid_argument(
        "train: influence-free build supports only the baseline variant");

  const AgentConfig acfg = agent_for_variant(cfg.agent, variant, cfg.lambda_bonus);
  const bool want_model = WithInfluence && uses_model(variant);
  const bool want_scores = WithInfluence && uses_scores(variant);
  const std::uint64_t score_seed = mix_keys(cfg.seed, 12);

  RunState st;
  if (resume.has_value()) {
    st = std::move(*resume);
    if (want_model && !st.model.has_value())
      throw std::invalid_argument("train: resume state lacks the model");
  } else {
    Rng agent_rng = Rng::from_keys(cfg.seed, 3);
    st.agent = make_agent(acfg, agent_rng);
    if (want_model) {
      Rng model_rng = Rng::from_keys(cfg.seed, 10);
      st.model = make_transition_model(cfg.model, model_rng);
    }
    st.buffer = ReplayBuffer(cfg.buffer_capacity);
    st.rollout_rng = Rng::from_keys(cfg.seed, 1);
    st.sample_rng = Rng::from_keys(cfg.seed, 4);
    st.fit_rng = Rng::from_keys(cfg.seed, 11);
  }

  SampleConfig scfg;
  scfg.batch_size = acfg.batch_size;
  scfg.her_future_p = acfg.her_future_p;
  scfg.goal_halfwidth = cfg.env.goal_halfwidth;
  scfg.prioritized = WithInfluence && uses_prioritization(variant);

  double critic_acc = 0.0, actor_acc = 0.0;
  int loss_rounds = 0;
  const auto append_eval_row = [&](int episode) {
    Rng eval_rng = Rng::from_keys(
        cfg.seed, 2, static_cast<std::uint64_t>(episode / cfg.eval_every));
    CurveRow row;
    row.episode = episode;
    row.success_rate = evaluate(st.agent, cfg.env, cfg.eval_episodes, eval_rng);
    row.mean_cai = want_scores ? mean_buffer_cai(st.buffer) : 0.0;
    row.critic_loss = loss_rounds > 0 ? critic_acc / loss_rounds : 0.0;
    row.actor_loss = loss_rounds > 0 ? actor_acc / loss_rounds : 0.0;
    st.curve.push_back(row);
    critic_acc = actor_acc = 0.0;
    loss_rounds = 0;
    if (on_eval) on_eval(st);
  };

  // Warmup: uniform-random episodes seed the buffer; no updates, then one
  // curve row for the untrained agent at episode 0.
  if (!st.warmed_up) {
    for (int i = 0; i < cfg.warmup_episodes; ++i) {
      const ResetResult init = reset(cfg.env, st.rollout_rng);
      Episode ep;
      ep.uid = st.next_uid++;
      ep.goal = init.goal.center;
      SlideState s = init.state;
      for (int t = 0; t < cfg.env.episode_len; ++t) {
        const double a = st.rollout_rng.uniform(-1.0, 1.0);
        const SlideState next = step(cfg.env, s, a).state;
        ep.s.push_back(to_vector(s));
        ep.a.push_back(a);
        ep.s_next.push_back(to_vector(next));
        ep.achieved.push_back(next.obj_pos);
        ep.reward.push_back(task_reward(next, init.goal));
        s = next;
      }
      st.buffer.push(std::move(ep));
    }
    st.warmed_up = true;
    append_eval_row(0);
  }

  for (int ep_idx = st.episodes_done; ep_idx < cfg.train_episodes; ++ep_idx) {
    const std::int64_t episode_count = cfg.warmup_episodes + ep_idx;

    if constexpr (WithInfluence) {
      if (want_model && ep_idx % cfg.schedule.every_episodes == 0) {
        fit_online(*st.model, detail::flatten_buffer(st.buffer, cfg.model),
                   episode_count, cfg.schedule, st.fit_rng);
        if (want_scores)
          recompute_scores(st.buffer, *st.model, cfg.cai, score_seed);
      }
    }

    // Rollout with the behavior policy.
    const ResetResult init = reset(cfg.env, st.rollout_rng);
    Episode ep;
    ep.uid = st.next_uid++;
    ep.goal = init.goal.center;
    SlideState s = init.state;
    for (int t = 0; t < cfg.env.episode_len; ++t) {
      const TransitionModel* model_ptr = nullptr;
      if constexpr (WithInfluence) {
        if (want_model) model_ptr = &*st.model;
      }
      const double a = explore_action<WithInfluence>(
          st.agent, model_ptr, &cfg.cai, s, ep.goal, st.rollout_rng,
          mix_keys(cfg.seed, 13, static_cast<std::uint64_t>(ep_idx),
                   static_cast<std::uint64_t>(t)));
      const SlideState next = step(cfg.env, s, a).state;
      ep.s.push_back(to_vector(s));
      ep.a.push_back(a);
      ep.s_next.push_back(to_vector(next));
      ep.achieved.push_back(next.obj_pos);
      ep.reward.push_back(task_reward(next, init.goal));
      s = next;
    }
    if constexpr (WithInfluence) {
      if (want_scores) score_episode(ep, *st.model, cfg.cai, score_seed);
    }
    st.buffer.push(std::move(ep));

    for (int u = 0; u < acfg.updates_per_episode; ++u) {
      RlBatch batch = sample_batch(st.buffer, scfg, st.sample_rng);
      if constexpr (WithInfluence) {
        if (acfg.lambda_bonus > 0.0)
          for (Eigen::Index i = 0; i < batch.size(); ++i)
            batch.reward[i] = bonus_reward(batch.reward[i], batch.cai[i],
                                           acfg.lambda_bonus, acfg.max_bonus);
      }
      const UpdateLosses losses = ddpg_update(st.agent, batch);
      critic_acc += losses.critic_loss;
      actor_acc += losses.actor_loss;
      ++loss_rounds;
    }

    st.episodes_done = ep_idx + 1;
    if (st.episodes_done % cfg.eval_every == 0)
      append_eval_row(st.episodes_done);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Curve CSV

inline constexpr const char* kCurveCsvHeader =
    "episode,success_rate,mean_cai,critic_loss,actor_loss,seed,variant";

inline void write_curve_rows(std::ostream& out,
                             const std::vector<CurveRow>& rows,
                             std::uint64_t seed, Variant variant,
                             bool header = true) {
  const auto old_precision = out.precision(17);
  if (header) out << kCurveCsvHeader << '\n';
  for (const CurveRow& r : rows)
    out << r.episode << ',' << r.success_rate << ',' << r.mean_cai << ','
        << r.critic_loss << ',' << r.actor_loss << ',' << seed << ','
        << to_string(variant) << '\n';
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Run-state serialization (checkpoint/resume)

inline Json json_from_agent_config(const AgentConfig& cfg) {
  Json j;
  j["state_dim"] = cfg.state_dim;
  j["goal_dim"] = cfg.goal_dim;
  j["action_dim"] = cfg.action_dim;
  j["hidden"] = cfg.hidden;
  j["gamma"] = cfg.gamma;
  j["polyak"] = cfg.polyak;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["updates_per_episode"] = cfg.updates_per_episode;
  j["action_noise"] = cfg.action_noise;
  j["epsilon"] = cfg.epsilon;
  j["active_fraction"] = cfg.active_fraction;
  j["action_l2"] = cfg.action_l2;
  j["q_clip_lo"] = cfg.q_clip_lo;
  j["q_clip_hi"] = cfg.q_clip_hi;
  j["her_future_p"] = cfg.her_future_p;
  j["lambda_bonus"] = cfg.lambda_bonus;
  j["max_bonus"] = cfg.max_bonus;
  return j;
}

inline AgentConfig agent_config_from_json(const Json& j) {
  AgentConfig cfg;
  cfg.state_dim = j.at("state_dim").get<int>();
  cfg.goal_dim = j.at("goal_dim").get<int>();
  cfg.action_dim = j.at("action_dim").get<int>();
  cfg.hidden = j.at("hidden").get<std::vector<int>>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.polyak = j.at("polyak").get<double>();
  cfg.lr = j.at("lr").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.updates_per_episode = j.at("updates_per_episode").get<int>();
  cfg.action_noise = j.at("action_noise").get<double>();
  cfg.epsilon = j.at("epsilon").get<double>();
  cfg.active_fraction = j.at("active_fraction").get<double>();
  cfg.action_l2 = j.at("action_l2").get<double>();
  cfg.q_clip_lo = j.at("q_clip_lo").get<double>();
  cfg.q_clip_hi = j.at("q_clip_hi").get<double>();
  cfg.her_future_p = j.at("her_future_p").get<double>();
  cfg.lambda_bonus = j.at("lambda_bonus").get<double>();
  cfg.max_bonus = j.at("max_bonus").get<double>();
  return cfg;
}

inline Json json_from_agent(const Agent& agent) {
  Json j;
  j["config"] = json_from_agent_config(agent.cfg);
  j["actor"] = json_from_mlp(agent.actor);
  j["critic"] = json_from_mlp(agent.critic);
  j["actor_target"] = json_from_mlp(agent.actor_target);
  j["critic_target"] = json_from_mlp(agent.critic_target);
  j["actor_opt"] = json_from_adam(agent.actor_opt);
  j["critic_opt"] = json_from_adam(agent.critic_opt);
  return j;
}

inline Agent agent_from_json(const Json& j) {
  Agent agent;
  agent.cfg = agent_config_from_json(j.at("config"));
  agent.actor = mlp_from_json(j.at("actor"));
  agent.critic = mlp_from_json(j.at("critic"));
  agent.actor_target = mlp_from_json(j.at("actor_target"));
  agent.critic_target = mlp_from_json(j.at("critic_target"));
  agent.actor_opt = adam_from_json(j.at("actor_opt"));
  agent.critic_opt = adam_from_json(j.at("critic_opt"));
  return agent;
}

inline Json json_from_episode(const Episode& ep) {
  Json j;
  j["uid"] = ep.uid;
  j["goal"] = ep.goal;
  j["scored"] = ep.scored;
  Json s = Json::array(), a = Json::array(), s_next = Json::array(),
       achieved = Json::array(), reward = Json::array(), cai = Json::array();
  for (int t = 0; t < ep.length(); ++t) {
    const auto u = static_cast<std::size_t>(t);
    s.push_back(json_from_vector(ep.s[u]));
    a.push_back(ep.a[u]);
    s_next.push_back(json_from_vector(ep.s_next[u]));
    achieved.push_back(ep.achieved[u]);
    reward.push_back(ep.reward[u]);
  }
  for (double c : ep.cai) cai.push_back(c);
  j["s"] = std::move(s);
  j["a"] = std::move(a);
  j["s_next"] = std::move(s_next);
  j["achieved"] = std::move(achieved);
  j["reward"] = std::move(reward);
  j["cai"] = std::move(cai);
  return j;
}

inline Episode episode_from_json(const Json& j) {
  Episode ep;
  ep.uid = j.at("uid").get<std::int64_t>();
  ep.goal = j.at("goal").get<double>();
  ep.scored = j.at("scored").get<bool>();
  for (const Json& v : j.at("s"))
    ep.s.push_back(Eigen::Vector4d(vector_from_json(v)));
  for (const Json& v : j.at("a")) ep.a.push_back(v.get<double>());
  for (const Json& v : j.at("s_next"))
    ep.s_next.push_back(Eigen::Vector4d(vector_from_json(v)));
  for (const Json& v : j.at("achieved")) ep.achieved.push_back(v.get<double>());
  for (const Json& v : j.at("reward")) ep.reward.push_back(v.get<double>());
  for (const Json& v : j.at("cai")) ep.cai.push_back(v.get<double>());
  ep.check();
  return ep;
}

inline Json json_from_buffer(const ReplayBuffer& buf) {
  Json j;
  j["capacity"] = buf.capacity();
  Json eps = Json::array();
  for (std::size_t i = 0; i < buf.size(); ++i)
    eps.push_back(json_from_episode(buf.episode(i)));
  j["episodes"] = std::move(eps);
  return j;
}

inline ReplayBuffer buffer_from_json(const Json& j) {
  ReplayBuffer buf(j.at("capacity").get<std::size_t>());
  for (const Json& e : j.at("episodes")) buf.push(episode_from_json(e));
  return buf;
}

inline Json json_from_curve_row(const CurveRow& r) {
  Json j;
  j["episode"] = r.episode;
  j["success_rate"] = r.success_rate;
  j["mean_cai"] = r.mean_cai;
  j["critic_loss"] = r.critic_loss;
  j["actor_loss"] = r.actor_loss;
  return j;
}

inline CurveRow curve_row_from_json(const Json& j) {
  CurveRow r;
  r.episode = j.at("episode").get<int>();
  r.success_rate = j.at("success_rate").get<double>();
  r.mean_cai = j.at("mean_cai").get<double>();
  r.critic_loss = j.at("critic_loss").get<double>();
  r.actor_loss = j.at("actor_loss").get<double>();
  return r;
}

inline Json json_from_run_state(const RunState& st) {
  Json j;
  j["agent"] = json_from_agent(st.agent);
  if (st.model.has_value()) j["model"] = json_from_transition_model(*st.model);
  j["buffer"] = json_from_buffer(st.buffer);
  j["next_uid"] = st.next_uid;
  j["episodes_done"] = st.episodes_done;
  j["warmed_up"] = st.warmed_up;
  Json curve = Json::array();
  for (const CurveRow& r : st.curve) curve.push_back(json_from_curve_row(r));
  j["curve"] = std::move(curve);
  j["rollout_rng"] = st.rollout_rng.save_state();
  j["sample_rng"] = st.sample_rng.save_state();
  j["fit_rng"] = st.fit_rng.save_state();
  return j;
}

inline RunState run_state_from_json(const Json& j) {
  RunState st;
  st.agent = agent_from_json(j.at("agent"));
  if (j.contains("model"))
    st.model = transition_model_from_json(j.at("model"));
  st.buffer = buffer_from_json(j.at("buffer"));
  st.next_uid = j.at("next_uid").get<std::int64_t>();
  st.episodes_done = j.at("episodes_done").get<int>();
  st.warmed_up = j.at("warmed_up").get<bool>();
  for (const Json& r : j.at("curve")) st.curve.push_back(curve_row_from_json(r));
  st.rollout_rng.load_state(j.at("rollout_rng").get<std::string>());
  st.sample_rng.load_state(j.at("sample_rng").get<std::string>());
  st.fit_rng.load_state(j.at("fit_rng").get<std::string>());
  return st;
}

inline void save_run_state(const std::string& path, const RunState& st) {
  save_json_file(path, json_from_run_state(st));
}

inline RunState load_run_state(const std::string& path) {
  return run_state_from_json(load_json_file(path));
}

}  // namespace cail
