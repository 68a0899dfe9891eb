#pragma once

// 1-D sliding environment: an agent accelerates along a line segment, cannot
// cross the center barrier, and transfers its full impulse to a free-sliding
// object on contact. Deterministic step function plus the ground-truth
// influence labeler (simulate max acceleration both ways, check for contact
// with object-state change), sparse goal rewards, and observation-noise
// injection for robustness sweeps.
//
// Step order within one tick: the object advances first (drag, move, right
// edge clamp), then the agent (damped acceleration, move, contact resolution,
// barrier/left clamp). Resolving contact after the object phase makes the
// transferred velocity land on the object exactly as the agent's post-damping
// velocity.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "cail/rng.hpp"

namespace cail {

struct SlideParams {
  double world_lo = 0.0;
  double world_hi = 1.0;
  double barrier_pos = 0.5;
  double agent_halfwidth = 0.025;
  double obj_halfwidth = 0.025;
  double accel_scale = 0.04;   // units/step^2 per unit action
  double agent_damping = 0.9;  // per-step velocity retention
  double obj_drag = 0.98;      // per-step velocity retention
  double goal_halfwidth = 0.05;
  double goal_center_lo = 0.6;
  double goal_center_hi = 0.95;
  int episode_len = 30;

  double agent_max_pos() const { return barrier_pos - agent_halfwidth; }
  double agent_min_pos() const { return world_lo + agent_halfwidth; }
  double obj_max_pos() const { return world_hi - obj_halfwidth; }
  double touch_gap() const { return agent_halfwidth + obj_halfwidth; }
  // Rightmost object position the agent can still touch: the de-penetrated
  // agent position obj_pos - touch_gap must not exceed the barrier clamp.
  double obj_reach_limit() const { return agent_max_pos() + touch_gap(); }
};

struct SlideState {
  double agent_pos = 0.0;
  double agent_vel = 0.0;
  double obj_pos = 0.0;
  double obj_vel = 0.0;
};

struct Goal {
  double center = 0.0;
  double halfwidth = 0.05;
};

// Observation layout used by models and agents: [agent_pos, agent_vel,
// obj_pos, obj_vel]. The object occupies dims {2, 3}.
inline constexpr int kSlideStateDim = 4;
inline constexpr int kSlideObjPosDim = 2;
inline constexpr int kSlideObjVelDim = 3;

inline Eigen::Vector4d to_vector(const SlideState& s) {
  return {s.agent_pos, s.agent_vel, s.obj_pos, s.obj_vel};
}

inline SlideState to_state(const Eigen::Vector4d& v) {
  return {v[0], v[1], v[2], v[3]};
}

struct ResetResult {
  SlideState state;
  Goal goal;
};

// Draw order: agent_pos, obj_pos, goal center.
inline ResetResult reset(const SlideParams& p, Rng& rng) {
  ResetResult out;
  out.state.agent_pos = rng.uniform(0.05, 0.35);
  out.state.agent_vel = 0.0;
  out.state.obj_pos = rng.uniform(0.4, 0.48);
  out.state.obj_vel = 0.0;
  out.goal.center = rng.uniform(p.goal_center_lo, p.goal_center_hi);
  out.goal.halfwidth = p.goal_halfwidth;
  return out;
}

struct StepResult {
  SlideState state;
  bool contact = false;
};

inline StepResult step(const SlideParams& p, const SlideState& s, double a) {
  const double act = std::clamp(a, -1.0, 1.0);
  StepResult out;
  SlideState& n = out.state;

  // Object phase: drag, advance, right-edge clamp.
  n.obj_vel = p.obj_drag * s.obj_vel;
  n.obj_pos = s.obj_pos + n.obj_vel;
  if (n.obj_pos > p.obj_max_pos()) {
    n.obj_pos = p.obj_max_pos();
    n.obj_vel = 0.0;
  }

  // Agent phase: damped semi-implicit Euler.
  n.agent_vel = p.agent_damping * (s.agent_vel + p.accel_scale * act);
  n.agent_pos = s.agent_pos + n.agent_vel;

  // Contact: overlapping bodies with closing velocity, at a meeting point the
  // agent is allowed to occupy. Full impulse transfer between equal masses:
  // the object takes the agent's velocity, the agent stops.
  if (n.agent_pos > n.obj_pos - p.touch_gap() && n.agent_vel > n.obj_vel &&
      n.obj_pos <= p.obj_reach_limit()) {
    out.contact = true;
    n.obj_vel = n.agent_vel;
    n.agent_vel = 0.0;
    n.agent_pos = n.obj_pos - p.touch_gap();
  }

  // Barrier and left wall (velocity zeroed on clamp).
  if (n.agent_pos > p.agent_max_pos()) {
    n.agent_pos = p.agent_max_pos();
    n.agent_vel = 0.0;
  }
  if (n.agent_pos < p.agent_min_pos()) {
    n.agent_pos = p.agent_min_pos();
    n.agent_vel = 0.0;
  }
  return out;
}

// True iff max acceleration in either direction produces contact that changes
// the object state. Pure function of (params, s).
inline bool ground_truth_influence(const SlideParams& p, const SlideState& s) {
  for (const double a : {1.0, -1.0}) {
    const StepResult r = step(p, s, a);
    const bool obj_changed =
        r.state.obj_pos != s.obj_pos || r.state.obj_vel != s.obj_vel;
    if (r.contact && obj_changed) return true;
  }
  return false;
}

// Sparse goal reward: 0 inside the (closed) goal zone, -1 outside.
inline double task_reward(const SlideState& s, const Goal& g) {
  return std::abs(s.obj_pos - g.center) <= g.halfwidth ? 0.0 : -1.0;
}

inline double achieved_goal(const SlideState& s) { return s.obj_pos; }

// Scripted hit-and-push policy: close on the object's contact point, then
// hover just behind it, nudging it along while it stays reachable. Keeps the
// agent in influence range for much of the episode, so scripted corpora are
// rich in positive labels; coasts once the object escapes past the barrier.
inline double scripted_action(const SlideParams& p, const SlideState& s) {
  if (s.obj_pos > p.obj_reach_limit()) return 0.0;
  const double gap = s.obj_pos - p.touch_gap() - s.agent_pos;
  return std::clamp(8.0 * (gap + 0.002) - 10.0 * s.agent_vel, -1.0, 1.0);
}

// Adds per-dimension Gaussian noise scaled by `level` times the empirical
// (population) std of that dimension over the dataset. Zero-variance
// dimensions stay unchanged; level 0 returns the input bit-for-bit.
inline Eigen::MatrixXd add_observation_noise(const Eigen::MatrixXd& states,
                                             double level, Rng& rng) {
  if (level < 0.0)
    throw std::invalid_argument("add_observation_noise: level must be >= 0");
  if (states.rows() == 0)
    throw std::invalid_argument("add_observation_noise: empty dataset");
  const Eigen::RowVectorXd mean = states.colwise().mean();
  Eigen::RowVectorXd std_dev =
      ((states.rowwise() - mean).array().square().colwise().sum() /
       static_cast<double>(states.rows()))
          .sqrt();
  // A constant dimension must contribute exactly zero noise; the two-pass
  // formula can report a tiny spurious spread from the rounded mean.
  for (Eigen::Index d = 0; d < states.cols(); ++d)
    if (states.col(d).minCoeff() == states.col(d).maxCoeff()) std_dev[d] = 0.0;
  Eigen::MatrixXd out = states;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index d = 0; d < out.cols(); ++d)
      out(i, d) += level * std_dev[d] * rng.normal();
  return out;
}

}  // namespace cail
