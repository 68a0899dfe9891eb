#pragma once

// Goal-conditioned DDPG actor-critic for the sliding task, with the three
// influence hooks: bonus-shaped rewards, influence-seeking exploration, and
// greedy evaluation. The exploration path is templated on a build-time
// switch so ablation baselines compile the influence machinery out while
// consuming the random stream identically.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cail/density.hpp"
#include "cail/influence.hpp"
#include "cail/nn.hpp"
#include "cail/replay.hpp"
#include "cail/rng.hpp"
#include "cail/slide.hpp"

namespace cail {

struct AgentConfig {
  int state_dim = 4;
  int goal_dim = 1;
  int action_dim = 1;
  std::vector<int> hidden = {64, 64};
  double gamma = 0.98;   // discount
  double polyak = 0.95;  // target retention per update round
  double lr = 1e-3;
  int batch_size = 256;
  int updates_per_episode = 20;
  double action_noise = 0.2;     // std of Gaussian noise on the actor
  double epsilon = 0.3;          // probability of the random-exploration branch
  double active_fraction = 0.0;  // influence-seeking share of that branch
  double action_l2 = 1.0;        // actor penalty weight on mean squared action
  double q_clip_lo = -50.0;
  double q_clip_hi = 0.0;
  double her_future_p = 0.8;
  double lambda_bonus = 0.0;  // influence bonus weight on the sparse reward
  double max_bonus = 2.0;     // per-state influence cap inside the bonus

  int obs_dim() const { return state_dim + goal_dim; }
};

inline void validate(const AgentConfig& cfg) {
  if (cfg.state_dim < 1 || cfg.goal_dim < 1 || cfg.action_dim < 1)
    throw std::invalid_argument("AgentConfig: dimensions must be positive");
  if (cfg.hidden.empty())
    throw std::invalid_argument("AgentConfig: needs at least one hidden layer");
  for (int w : cfg.hidden)
    if (w < 1) throw std::invalid_argument("AgentConfig: bad hidden width");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("AgentConfig: gamma in [0, 1)");
  if (!(cfg.polyak >= 0.0 && cfg.polyak <= 1.0))
    throw std::invalid_argument("AgentConfig: polyak in [0, 1]");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("AgentConfig: lr > 0");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("AgentConfig: batch_size >= 1");
  if (cfg.updates_per_episode < 0)
    throw std::invalid_argument("AgentConfig: updates_per_episode >= 0");
  if (!(cfg.action_noise >= 0.0))
    throw std::invalid_argument("AgentConfig: action_noise >= 0");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0))
    throw std::invalid_argument("AgentConfig: epsilon in [0, 1]");
  if (!(cfg.active_fraction >= 0.0 && cfg.active_fraction <= 1.0))
    throw std::invalid_argument("AgentConfig: active_fraction in [0, 1]");
  if (!(cfg.action_l2 >= 0.0))
    throw std::invalid_argument("AgentConfig: action_l2 >= 0");
  if (!(cfg.q_clip_lo <= cfg.q_clip_hi))
    throw std::invalid_argument("AgentConfig: q clip range inverted");
  if (!(cfg.her_future_p >= 0.0 && cfg.her_future_p <= 1.0))
    throw std::invalid_argument("AgentConfig: her_future_p in [0, 1]");
  if (!(cfg.lambda_bonus >= 0.0))
    throw std::invalid_argument("AgentConfig: lambda_bonus >= 0");
  if (!(cfg.max_bonus >= 0.0))
    throw std::invalid_argument("AgentConfig: max_bonus >= 0");
}

struct Agent {
  AgentConfig cfg;
  Mlp actor;          // obs -> action, tanh-bounded output
  Mlp critic;         // [obs, action] -> Q
  Mlp actor_target;
  Mlp critic_target;
  Adam actor_opt;
  Adam critic_opt;
};

inline Agent make_agent(const AgentConfig& cfg, Rng& rng) {
  validate(cfg);
  Agent agent;
  agent.cfg = cfg;
  agent.actor = make_mlp(cfg.obs_dim(), cfg.hidden, cfg.action_dim,
                         Activation::kRelu, false, rng);
  agent.actor.layers.back().act = Activation::kTanh;  // box-bounded policy
  for (Dense& layer : agent.actor.layers) init_xavier_uniform(layer, 1.0, rng);
  agent.critic = make_mlp(cfg.obs_dim() + cfg.action_dim, cfg.hidden, 1,
                          Activation::kRelu, false, rng);
  for (Dense& layer : agent.critic.layers) init_xavier_uniform(layer, 1.0, rng);
  agent.actor_target = agent.actor;
  agent.critic_target = agent.critic;
  const AdamConfig opt_cfg{cfg.lr, 0.9, 0.999, 1e-8};
  agent.actor_opt = Adam(opt_cfg);
  agent.critic_opt = Adam(opt_cfg);
  return agent;
}

// target <- retain * target + (1 - retain) * online, parameter-wise.
inline void polyak_update(Mlp& target, const Mlp& online, double retain) {
  if (target.layers.size() != online.layers.size())
    throw std::invalid_argument("polyak_update: layer count mismatch");
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    Dense& t = target.layers[l];
    const Dense& o = online.layers[l];
    if (t.w.rows() != o.w.rows() || t.w.cols() != o.w.cols())
      throw std::invalid_argument("polyak_update: shape mismatch");
    t.w = retain * t.w + (1.0 - retain) * o.w;
    t.b = retain * t.b + (1.0 - retain) * o.b;
  }
}

namespace detail {

inline Eigen::MatrixXd with_action(const Eigen::MatrixXd& obs,
                                   const Eigen::MatrixXd& action) {
  Eigen::MatrixXd x(obs.rows(), obs.cols() + action.cols());
  x << obs, action;
  return x;
}

}  // namespace detail

// Clipped bootstrap targets y = clip(r + gamma * Q'(s', pi'(s')), lo, hi).
inline Eigen::VectorXd critic_targets(const Agent& agent, const RlBatch& batch) {
  const Eigen::MatrixXd a_next =
      forward_batch(agent.actor_target, batch.next_obs);
  const Eigen::VectorXd q_next =
      forward_batch(agent.critic_target,
                    detail::with_action(batch.next_obs, a_next))
          .col(0);
  return (batch.reward + agent.cfg.gamma * q_next)
      .cwiseMax(agent.cfg.q_clip_lo)
      .cwiseMin(agent.cfg.q_clip_hi);
}

struct UpdateLosses {
  double critic_loss = 0.0;  // mean squared TD error before the step
  double actor_loss = 0.0;   // -mean Q(s, pi(s)) + l2 * mean(pi^2) before the step
};

// One update round: critic descent on the clipped TD target, actor ascent on
// the refreshed critic with the action-magnitude penalty, then Polyak
// averaging of both targets.
// Mean-squared TD loss of the online critic against fixed targets `y`, with
// exact parameter gradients.
inline double critic_loss_grads(const Agent& agent, const RlBatch& batch,
                                const Eigen::VectorXd& y, MlpGrads& grads) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw std::invalid_argument("critic_loss_grads: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  MlpCache cache;
  const Eigen::VectorXd q =
      forward_batch(agent.critic, detail::with_action(batch.obs, batch.action),
                    &cache)
          .col(0);
  const Eigen::VectorXd diff = q - y;
  Eigen::MatrixXd dq(n, 1);
  dq.col(0) = (2.0 * inv_n) * diff;
  backward_batch(agent.critic, cache, dq, grads);
  return diff.squaredNorm() * inv_n;
}

// Deterministic policy-gradient loss -mean Q(s, pi(s)) plus the action
// magnitude penalty, with exact gradients for the actor parameters. The
// critic stays frozen here and only routes the gradient back through the
// action columns of its input.
inline double actor_loss_grads(const Agent& agent, const RlBatch& batch,
                               MlpGrads& grads) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw std::invalid_argument("actor_loss_grads: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  MlpCache actor_cache;
  const Eigen::MatrixXd pi = forward_batch(agent.actor, batch.obs, &actor_cache);
  MlpCache q_cache;
  const Eigen::VectorXd q_pi =
      forward_batch(agent.critic, detail::with_action(batch.obs, pi), &q_cache)
          .col(0);
  const Eigen::MatrixXd dq_pi = Eigen::MatrixXd::Constant(n, 1, -inv_n);
  MlpGrads critic_scratch;
  const Eigen::MatrixXd d_input =
      backward_batch(agent.critic, q_cache, dq_pi, critic_scratch);
  const Eigen::MatrixXd d_pi =
      d_input.rightCols(agent.cfg.action_dim) +
      (2.0 * agent.cfg.action_l2 / static_cast<double>(pi.size())) * pi;
  backward_batch(agent.actor, actor_cache, d_pi, grads);
  return -q_pi.mean() + agent.cfg.action_l2 * pi.array().square().mean();
}

inline UpdateLosses ddpg_update(Agent& agent, const RlBatch& batch) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw std::invalid_argument("ddpg_update: empty batch");
  if (batch.obs.cols() != agent.cfg.obs_dim() ||
      batch.action.cols() != agent.cfg.action_dim)
    throw std::invalid_argument("ddpg_update: batch shape mismatch");
  UpdateLosses out;

  const Eigen::VectorXd y = critic_targets(agent, batch);
  MlpGrads critic_grads;
  out.critic_loss = critic_loss_grads(agent, batch, y, critic_grads);
  agent.critic_opt.step(param_views(agent.critic), grad_views(critic_grads));

  MlpGrads actor_grads;
  out.actor_loss = actor_loss_grads(agent, batch, actor_grads);
  agent.actor_opt.step(param_views(agent.actor), grad_views(actor_grads));

  polyak_update(agent.actor_target, agent.actor, agent.cfg.polyak);
  polyak_update(agent.critic_target, agent.critic, agent.cfg.polyak);
  return out;
}

// Shaped sparse reward: r = min(0, r_task + lambda * min(cai, max_bonus)).
inline double bonus_reward(double r_task, double cai, double lambda_bonus,
                           double max_bonus) {
  return std::min(0.0, r_task + lambda_bonus * std::min(cai, max_bonus));
}

// Behavior policy. With probability epsilon the agent explores: an
// active_fraction share of those branches picks the sampled action with the
// largest influence contribution (scored on the raw state, not the goal),
// the rest draw uniformly. Otherwise the actor's action plus Gaussian noise,
// clipped to the box. Both template instantiations draw the same number of
// variates from `rng` on the non-active paths, so a run with the influence
// machinery compiled out replays bit-identical trajectories; the active
// branch uses its own generator seeded by `score_seed` and is only reachable
// when WithInfluence is true (callers keep active_fraction at 0 otherwise).
template <bool WithInfluence>
double explore_action(const Agent& agent, const TransitionModel* model,
                      const CaiConfig* cai_cfg, const SlideState& s,
                      double goal, Rng& rng, std::uint64_t score_seed) {
  const AgentConfig& cfg = agent.cfg;
  if (rng.uniform() < cfg.epsilon) {
    const double active_coin = rng.uniform();
    if constexpr (WithInfluence) {
      if (active_coin < cfg.active_fraction) {
        if (model == nullptr || cai_cfg == nullptr)
          throw std::invalid_argument(
              "explore_action: active exploration needs a transition model");
        Rng score_rng(score_seed);
        return select_influential_action(*model, to_vector(s), *cai_cfg,
                                         score_rng)[0];
      }
    } else {
      (void)active_coin;  // drawn either way to keep the streams aligned
    }
    return rng.uniform(-1.0, 1.0);
  }
  Eigen::VectorXd obs(cfg.obs_dim());
  obs << to_vector(s), goal;
  const double mean_action = forward(agent.actor, obs)[0];
  return std::clamp(mean_action + cfg.action_noise * rng.normal(), -1.0, 1.0);
}

inline double greedy_action(const Agent& agent, const SlideState& s,
                            const Goal& g) {
  Eigen::VectorXd obs(agent.cfg.obs_dim());
  obs << to_vector(s), g.center;
  return std::clamp(forward(agent.actor, obs)[0], -1.0, 1.0);
}

// Success fraction over n fresh episodes; an episode succeeds when its final
// state earns task reward 0. `policy` is any callable
// double(const SlideState&, const Goal&).
template <typename Policy>
double evaluate_policy(const SlideParams& params, Policy&& policy, int n,
                       Rng& rng) {
  if (n < 1) throw std::invalid_argument("evaluate_policy: n >= 1");
  int successes = 0;
  for (int i = 0; i < n; ++i) {
    const ResetResult ep = reset(params, rng);
    SlideState s = ep.state;
    for (int t = 0; t < params.episode_len; ++t)
      s = step(params, s, policy(s, ep.goal)).state;
    if (task_reward(s, ep.goal) == 0.0) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(n);
}

// Greedy (noise-free) evaluation of the current actor.
inline double evaluate(const Agent& agent, const SlideParams& params, int n,
                       Rng& rng) {
  return evaluate_policy(
      params,
      [&agent](const SlideState& s, const Goal& g) {
        return greedy_action(agent, s, g);
      },
      n, rng);
}

}  // namespace cail
