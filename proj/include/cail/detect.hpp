#pragma once

// Detection-evaluation pipeline: dataset collection under the sliding
// environment, influence/entropy scoring of whole datasets with per-row
// deterministic seeds, metric evaluation, the observation-noise robustness
// sweep (noisy scoring inputs, clean labels), and CSV emission for plots.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cail/data.hpp"
#include "cail/density.hpp"
#include "cail/influence.hpp"
#include "cail/metrics.hpp"
#include "cail/rng.hpp"
#include "cail/slide.hpp"

namespace cail {

enum class CollectPolicy { kRandom, kScripted, kMixed };

inline const char* to_string(CollectPolicy p) {
  switch (p) {
    case CollectPolicy::kRandom: return "random";
    case CollectPolicy::kScripted: return "scripted";
    case CollectPolicy::kMixed: return "mixed";
  }
  return "unknown";
}

// Rolls out `n_episodes` full episodes and records every transition with the
// departure state's ground-truth influence label, the step's contact flag,
// the episode goal, and the sparse reward of the arrival state. Mixed
// collection alternates random/scripted episodes so any prefix stays
// balanced. Deterministic given the RNG state.
inline SlideDataset collect(const SlideParams& p, CollectPolicy policy,
                            int n_episodes, Rng& rng,
                            std::int64_t episode_id_base = 0) {
  if (n_episodes < 1) throw std::invalid_argument("collect: n_episodes >= 1");
  SlideDataset ds;
  ds.provenance = to_string(policy);
  ds.transitions.reserve(static_cast<std::size_t>(n_episodes) *
                         static_cast<std::size_t>(p.episode_len));
  for (int ep = 0; ep < n_episodes; ++ep) {
    const bool scripted =
        policy == CollectPolicy::kScripted ||
        (policy == CollectPolicy::kMixed && ep % 2 == 1);
    const ResetResult init = reset(p, rng);
    SlideState s = init.state;
    for (int t = 0; t < p.episode_len; ++t) {
      SlideTransition tr;
      tr.episode_id = episode_id_base + ep;
      tr.step = t;
      tr.s = to_vector(s);
      tr.label = ground_truth_influence(p, s);
      tr.a = scripted ? scripted_action(p, s) : rng.uniform(-1.0, 1.0);
      const StepResult r = step(p, s, tr.a);
      tr.s_next = to_vector(r.state);
      tr.contact = r.contact;
      tr.goal = init.goal.center;
      tr.reward = task_reward(r.state, init.goal);
      ds.transitions.push_back(tr);
      s = r.state;
    }
  }
  return ds;
}

// Model preset for offline detection: wide ReLU stack with spectral norm,
// predicting the object dims of the observation.
inline TransitionModelConfig detection_model_config() {
  TransitionModelConfig cfg;
  cfg.state_dim = kSlideStateDim;
  cfg.action_dim = 1;
  cfg.target_dims = {kSlideObjPosDim, kSlideObjVelDim};
  cfg.hidden = {128, 128, 128, 128};
  cfg.activation = Activation::kRelu;
  cfg.spectral_norm = true;
  cfg.normalize_input = false;
  cfg.adam = {3e-4, 0.9, 0.999, 1e-8};
  cfg.batch_size = 1000;
  return cfg;
}

inline CaiConfig detection_cai_config(int k = 64) {
  CaiConfig cfg;
  cfg.k = k;
  cfg.action_lo = Eigen::VectorXd::Constant(1, -1.0);
  cfg.action_hi = Eigen::VectorXd::Constant(1, 1.0);
  return cfg;
}

struct ScoredDataset {
  std::vector<double> cai;
  std::vector<double> entropy;
};

// Scores every row of `states`; row i uses the deterministic seed
// mix_keys(base_seed, i), so rescoring the same rows (e.g. after noise
// injection) reuses the same sampled action sets.
inline ScoredDataset score_dataset(const TransitionModel& model,
                                   const Eigen::MatrixXd& states,
                                   const CaiConfig& cfg,
                                   std::uint64_t base_seed) {
  const Eigen::Index n = states.rows();
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    seeds[static_cast<std::size_t>(i)] =
        mix_keys(base_seed, static_cast<std::uint64_t>(i));
  const BatchScores scores = score_states(model, states, cfg, seeds);
  ScoredDataset out;
  out.cai.assign(scores.cai.data(), scores.cai.data() + n);
  out.entropy.assign(scores.entropy.data(), scores.entropy.data() + n);
  return out;
}

struct DetectionMetrics {
  double auc = 0.0;
  double ap = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  std::size_t n = 0;
};

inline DetectionMetrics evaluate_detection(const std::vector<double>& scores,
                                           const std::vector<int>& labels) {
  DetectionMetrics m;
  m.auc = roc_auc(scores, labels);
  m.ap = average_precision(scores, labels);
  const BestF1 b = best_f1(scores, labels);
  m.f1 = b.f1;
  m.threshold = b.threshold;
  m.n = scores.size();
  return m;
}

struct NoiseSweepRow {
  std::string scorer;  // "cai" | "entropy"
  double noise_level = 0.0;
  DetectionMetrics metrics;
};

// For each noise level (ascending): perturb the scoring inputs by
// per-dimension Gaussian noise, re-score, and evaluate against the clean
// labels. Level 0 reproduces the un-noised metrics exactly.
inline std::vector<NoiseSweepRow> noise_sweep(const TransitionModel& model,
                                              const SlideDataset& ds,
                                              const std::vector<double>& levels,
                                              const CaiConfig& cfg,
                                              std::uint64_t seed) {
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] < levels[i - 1])
      throw std::invalid_argument("noise_sweep: levels must ascend");
  const Eigen::MatrixXd clean = ds.states();
  const std::vector<int> labels = ds.labels();
  std::vector<NoiseSweepRow> rows;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    Rng noise_rng = Rng::from_keys(seed, 0x6e6f697365ull, li);
    const Eigen::MatrixXd noised =
        add_observation_noise(clean, levels[li], noise_rng);
    const ScoredDataset scored = score_dataset(model, noised, cfg, seed);
    rows.push_back({"cai", levels[li], evaluate_detection(scored.cai, labels)});
    rows.push_back(
        {"entropy", levels[li], evaluate_detection(scored.entropy, labels)});
  }
  return rows;
}

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline void write_metrics_csv(const std::string& path,
                              const std::vector<NoiseSweepRow>& rows,
                              std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "scorer,noise_level,auc,ap,f1,threshold,n,seed\n";
  for (const NoiseSweepRow& r : rows) {
    out << r.scorer << ',' << detail::format_double(r.noise_level) << ','
        << detail::format_double(r.metrics.auc) << ','
        << detail::format_double(r.metrics.ap) << ','
        << detail::format_double(r.metrics.f1) << ','
        << detail::format_double(r.metrics.threshold) << ',' << r.metrics.n
        << ',' << seed << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_roc_csv(const std::string& path,
                          const std::vector<RocPoint>& pts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "fpr,tpr\n";
  for (const RocPoint& p : pts)
    out << detail::format_double(p.fpr) << ',' << detail::format_double(p.tpr)
        << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_pr_csv(const std::string& path,
                         const std::vector<PrPoint>& pts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "recall,precision\n";
  for (const PrPoint& p : pts)
    out << detail::format_double(p.recall) << ','
        << detail::format_double(p.precision) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cail
