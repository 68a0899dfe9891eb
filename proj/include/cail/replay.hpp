#pragma once

// Episode-organized replay with influence-ranked prioritization and
// hindsight goal relabeling. Episodes carry lazily refreshed per-state
// influence scores; prioritized sampling ranks episodes by total influence
// (ascending, older first on ties) and draws episode i with probability
// proportional to 1/(M + 1 - rank_i), states uniform within the episode.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "cail/density.hpp"
#include "cail/influence.hpp"
#include "cail/rng.hpp"

namespace cail {

struct Episode {
  std::int64_t uid = 0;  // global collection index; larger = newer
  double goal = 0.0;     // goal zone center
  std::vector<Eigen::Vector4d> s;       // departure states
  std::vector<double> a;                // actions
  std::vector<Eigen::Vector4d> s_next;  // arrival states
  std::vector<double> achieved;         // achieved goal of each arrival state
  std::vector<double> reward;           // sparse reward under the original goal
  std::vector<double> cai;              // per-departure-state influence scores
  bool scored = false;

  int length() const { return static_cast<int>(s.size()); }

  double total_influence() const {
    double total = 0.0;
    for (double c : cai) total += c;
    return total;
  }

  void check() const {
    const std::size_t n = s.size();
    if (n == 0 || a.size() != n || s_next.size() != n ||
        achieved.size() != n || reward.size() != n)
      throw std::invalid_argument("Episode: inconsistent field lengths");
    if (scored && cai.size() != n)
      throw std::invalid_argument("Episode: scored without full cai vector");
  }
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0)
      throw std::invalid_argument("ReplayBuffer: zero capacity");
  }

  void push(Episode ep) {
    ep.check();
    if (episodes_.size() == capacity_) episodes_.pop_front();
    episodes_.push_back(std::move(ep));
  }

  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Episode& episode(std::size_t i) const { return episodes_.at(i); }
  Episode& episode(std::size_t i) { return episodes_.at(i); }

 private:
  std::size_t capacity_;
  std::deque<Episode> episodes_;  // front = oldest
};

// Normalized per-episode selection probabilities, aligned with storage order
// (oldest first). Rank 1 = lowest total influence; ties give the older
// episode the lower rank; p_i = 1/(M + 1 - rank_i), normalized.
inline std::vector<double> episode_priorities(const ReplayBuffer& buf) {
  const std::size_t m = buf.size();
  if (m == 0) throw std::invalid_argument("episode_priorities: empty buffer");
  std::vector<double> totals(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!buf.episode(i).scored)
      throw std::invalid_argument("episode_priorities: unscored episode");
    totals[i] = buf.episode(i).total_influence();
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Storage order is age order, so stable sort keeps older first on ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) {
                     return totals[x] < totals[y];
                   });
  std::vector<double> probs(m);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t rank = r + 1;
    probs[order[r]] = 1.0 / static_cast<double>(m + 1 - rank);
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  for (double& p : probs) p /= sum;
  return probs;
}

struct SampleConfig {
  int batch_size = 256;
  double her_future_p = 0.8;
  double goal_halfwidth = 0.05;
  bool prioritized = false;
};

struct RlBatch {
  Eigen::MatrixXd obs;       // n x (state_dim + 1), state with goal appended
  Eigen::MatrixXd action;    // n x 1
  Eigen::VectorXd reward;    // n
  Eigen::MatrixXd next_obs;  // n x (state_dim + 1)
  Eigen::VectorXd cai;       // departure-state scores (0 when unscored)

  Eigen::Index size() const { return obs.rows(); }
};

// Draws transitions episode-first (prioritized or uniform), state uniform
// within the episode; with probability her_future_p the goal is relabeled
// with a future achieved state of the same episode and the reward recomputed
// under the relabeled goal. (s, a, s') are never altered.
inline RlBatch sample_batch(const ReplayBuffer& buf, const SampleConfig& cfg,
                            Rng& rng) {
  if (buf.size() == 0) throw std::invalid_argument("sample_batch: empty buffer");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("sample_batch: batch_size >= 1");

  std::vector<double> cdf;
  if (cfg.prioritized) {
    cdf = episode_priorities(buf);
    for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] += cdf[i - 1];
  }

  const int state_dim = 4;
  const int n = cfg.batch_size;
  RlBatch batch;
  batch.obs.resize(n, state_dim + 1);
  batch.action.resize(n, 1);
  batch.reward.resize(n);
  batch.next_obs.resize(n, state_dim + 1);
  batch.cai.resize(n);

  for (int row = 0; row < n; ++row) {
    std::size_t ep_idx;
    if (cfg.prioritized) {
      const double u = rng.uniform();
      ep_idx = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      if (ep_idx >= buf.size()) ep_idx = buf.size() - 1;
    } else {
      ep_idx = rng.index(buf.size());
    }
    const Episode& ep = buf.episode(ep_idx);
    const std::size_t horizon = static_cast<std::size_t>(ep.length());
    const std::size_t t = rng.index(horizon);

    double goal = ep.goal;
    double reward = ep.reward[t];
    if (rng.uniform() < cfg.her_future_p) {
      const std::size_t k = t + rng.index(horizon - t);  // future index
      goal = ep.achieved[k];
      reward = std::abs(ep.achieved[t] - goal) <= cfg.goal_halfwidth ? 0.0
                                                                     : -1.0;
    }

    batch.obs.row(row) << ep.s[t].transpose(), goal;
    batch.action(row, 0) = ep.a[t];
    batch.reward[row] = reward;
    batch.next_obs.row(row) << ep.s_next[t].transpose(), goal;
    batch.cai[row] = ep.scored ? ep.cai[t] : 0.0;
  }
  return batch;
}

// Scores one episode's departure states in place with the same per-state
// seeds the buffer-wide recompute uses, so a freshly collected episode can
// join a scored buffer and a later recompute with the same model reproduces
// its scores exactly.
inline void score_episode(Episode& ep, const TransitionModel& model,
                          const CaiConfig& cfg, std::uint64_t score_seed) {
  const int len = ep.length();
  if (len == 0) throw std::invalid_argument("score_episode: empty episode");
  Eigen::MatrixXd states(len, 4);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) {
    states.row(t) = ep.s[static_cast<std::size_t>(t)].transpose();
    seeds[static_cast<std::size_t>(t)] =
        mix_keys(score_seed, static_cast<std::uint64_t>(ep.uid),
                 static_cast<std::uint64_t>(t));
  }
  const BatchScores scores = score_states(model, states, cfg, seeds);
  ep.cai.assign(static_cast<std::size_t>(len), 0.0);
  for (int t = 0; t < len; ++t)
    ep.cai[static_cast<std::size_t>(t)] = scores.cai[t];
  ep.scored = true;
}

// Rescores every stored departure state against the given model snapshot.
// Per-state action sets are seeded by (base seed, episode uid, step), so
// rescoring with the same model is idempotent and scores stay comparable
// across refits.
inline void recompute_scores(ReplayBuffer& buf, const TransitionModel& model,
                             const CaiConfig& cfg, std::uint64_t score_seed) {
  const std::size_t m = buf.size();
  if (m == 0) return;
  Eigen::Index total_states = 0;
  for (std::size_t i = 0; i < m; ++i) total_states += buf.episode(i).length();

  Eigen::MatrixXd states(total_states, 4);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(total_states));
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Episode& ep = buf.episode(i);
    for (int t = 0; t < ep.length(); ++t, ++row) {
      states.row(row) = ep.s[static_cast<std::size_t>(t)].transpose();
      seeds[static_cast<std::size_t>(row)] =
          mix_keys(score_seed, static_cast<std::uint64_t>(ep.uid),
                   static_cast<std::uint64_t>(t));
    }
  }
  const BatchScores scores = score_states(model, states, cfg, seeds);
  row = 0;
  for (std::size_t i = 0; i < m; ++i) {
    Episode& ep = buf.episode(i);
    ep.cai.resize(static_cast<std::size_t>(ep.length()));
    for (int t = 0; t < ep.length(); ++t, ++row)
      ep.cai[static_cast<std::size_t>(t)] = scores.cai[row];
    ep.scored = true;
  }
}

// Mean per-state influence over all scored episodes (0 when none scored).
inline double mean_buffer_cai(const ReplayBuffer& buf) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Episode& ep = buf.episode(i);
    if (!ep.scored) continue;
    sum += ep.total_influence();
    count += ep.length();
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace cail
