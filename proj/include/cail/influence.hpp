#pragma once

// Causal action influence scoring. For a state s, K actions are sampled
// uniformly from the action box, the transition model produces K predictive
// Gaussians over the target dims, and the influence estimate is the average
// KL term of each component against the uniform mixture of all K. The
// conditional-entropy baseline reuses the same K predictions. All pairwise
// math is done in flat K x d arrays (the hot path scores many states per
// model snapshot), and reduces bit-exactly to the reference formulas in
// gaussian.hpp.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "cail/density.hpp"
#include "cail/gaussian.hpp"
#include "cail/rng.hpp"

namespace cail {

struct CaiConfig {
  int k = 64;
  Eigen::VectorXd action_lo;
  Eigen::VectorXd action_hi;
};

inline void validate(const CaiConfig& cfg) {
  if (cfg.k < 2) throw std::invalid_argument("CaiConfig: K must be >= 2");
  if (cfg.action_lo.size() == 0 || cfg.action_lo.size() != cfg.action_hi.size())
    throw std::invalid_argument("CaiConfig: bad action box");
  for (Eigen::Index d = 0; d < cfg.action_lo.size(); ++d) {
    if (!std::isfinite(cfg.action_lo[d]) || !std::isfinite(cfg.action_hi[d]) ||
        !(cfg.action_lo[d] < cfg.action_hi[d]))
      throw std::invalid_argument("CaiConfig: bounds must be finite with lo < hi");
  }
}

// K uniform action samples, one row per action.
inline Eigen::MatrixXd sample_actions(const CaiConfig& cfg, Rng& rng) {
  const Eigen::Index da = cfg.action_lo.size();
  Eigen::MatrixXd actions(cfg.k, da);
  for (int i = 0; i < cfg.k; ++i)
    for (Eigen::Index d = 0; d < da; ++d)
      actions(i, d) = rng.uniform(cfg.action_lo[d], cfg.action_hi[d]);
  return actions;
}

namespace detail {

// Per-component KL terms (clamped bound midpoints) of each of the K
// predictive Gaussians against their uniform mixture, plus entropies.
// means/vars are K x d_j. Mirrors gaussian.hpp arithmetic term for term so
// the identical-components case yields exact zeros.
struct MixtureTerms {
  Eigen::ArrayXd kl_terms;   // K, each >= 0
  Eigen::ArrayXd entropies;  // K
};

inline MixtureTerms mixture_terms(const Eigen::MatrixXd& means,
                                  const Eigen::MatrixXd& vars) {
  const Eigen::Index k = means.rows();
  const Eigen::Index dj = means.cols();
  const double log_w = -std::log(static_cast<double>(k));

  const Eigen::ArrayXXd v = vars.array().max(kVarianceFloor);
  const Eigen::ArrayXXd m = means.array();
  const Eigen::ArrayXXd log_v = v.log();

  MixtureTerms out;
  out.kl_terms.resize(k);
  out.entropies = 0.5 * (log_v.rowwise().sum() +
                         static_cast<double>(dj) * (kLog2Pi + 1.0));

  Eigen::ArrayXd log_t(k), kl(k), buf(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    // log t_{i,b} and KL(f_i || g_b) for all b at once, dim by dim.
    log_t.setConstant(-0.5 * static_cast<double>(dj) * kLog2Pi);
    kl.setZero();
    for (Eigen::Index d = 0; d < dj; ++d) {
      const double vi = v(i, d);
      const double mi = m(i, d);
      const double lvi = log_v(i, d);
      buf = v.col(d) + vi;  // vf + vg per component
      log_t -= 0.5 * (buf.log() + (m.col(d) - mi).square() / buf);
      kl += log_v.col(d) - lvi + vi / v.col(d) +
            (m.col(d) - mi).square() / v.col(d) - 1.0;
    }
    kl *= 0.5;

    // Lower bound: -logsumexp(log_w + log_t) - H(f_i).
    Eigen::ArrayXd terms = log_w + log_t;
    double mx = terms.maxCoeff();
    const double lower =
        -(mx + std::log((terms - mx).exp().sum())) - out.entropies[i];
    // Upper bound: -logsumexp(log_w - KL).
    terms = log_w - kl;
    mx = terms.maxCoeff();
    const double upper = -(mx + std::log((terms - mx).exp().sum()));
    out.kl_terms[i] = std::max(0.0, 0.5 * (lower + upper));
  }
  return out;
}

}  // namespace detail

struct StateScore {
  double cai = 0.0;
  double entropy = 0.0;
};

// Scores one state with the action set drawn from `rng`; both the influence
// score and the entropy baseline come from the same K predictions.
inline StateScore score_state(const TransitionModel& model,
                              const Eigen::VectorXd& s, const CaiConfig& cfg,
                              Rng& rng) {
  validate(cfg);
  if (s.size() != model.cfg.state_dim)
    throw std::invalid_argument("score_state: state dimension mismatch");
  if (cfg.action_lo.size() != model.cfg.action_dim)
    throw std::invalid_argument("score_state: action dimension mismatch");
  const Eigen::MatrixXd actions = sample_actions(cfg, rng);
  const Eigen::MatrixXd s_rep = s.transpose().replicate(cfg.k, 1);
  const Prediction pred = predict_batch(model, s_rep, actions);
  const detail::MixtureTerms terms = detail::mixture_terms(pred.mean, pred.var);
  return {terms.kl_terms.mean(), terms.entropies.mean()};
}

inline double cai_score(const TransitionModel& model, const Eigen::VectorXd& s,
                        const CaiConfig& cfg, Rng& rng) {
  return score_state(model, s, cfg, rng).cai;
}

inline double entropy_score(const TransitionModel& model,
                            const Eigen::VectorXd& s, const CaiConfig& cfg,
                            Rng& rng) {
  return score_state(model, s, cfg, rng).entropy;
}

// Eq.-6-style selection: the sampled action whose KL term against the mixture
// is largest; ties resolve to the lowest sample index, so the all-ties case
// returns the first (uniform-random) sample.
inline Eigen::VectorXd select_influential_action(const TransitionModel& model,
                                                 const Eigen::VectorXd& s,
                                                 const CaiConfig& cfg,
                                                 Rng& rng) {
  validate(cfg);
  const Eigen::MatrixXd actions = sample_actions(cfg, rng);
  const Eigen::MatrixXd s_rep = s.transpose().replicate(cfg.k, 1);
  const Prediction pred = predict_batch(model, s_rep, actions);
  const detail::MixtureTerms terms = detail::mixture_terms(pred.mean, pred.var);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < terms.kl_terms.size(); ++i)
    if (terms.kl_terms[i] > terms.kl_terms[best]) best = i;
  return actions.row(best).transpose();
}

// Batch scorer: states as rows, one independent RNG seed per state, with the
// K predictions of many states fused into block forward passes.
struct BatchScores {
  Eigen::VectorXd cai;
  Eigen::VectorXd entropy;
};

inline BatchScores score_states(const TransitionModel& model,
                                const Eigen::MatrixXd& states,
                                const CaiConfig& cfg,
                                const std::vector<std::uint64_t>& seeds,
                                Eigen::Index block_size = 128) {
  validate(cfg);
  const Eigen::Index n = states.rows();
  if (seeds.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("score_states: one seed per state required");
  if (states.cols() != model.cfg.state_dim)
    throw std::invalid_argument("score_states: state dimension mismatch");

  BatchScores out;
  out.cai.resize(n);
  out.entropy.resize(n);
  const Eigen::Index k = cfg.k;
  for (Eigen::Index start = 0; start < n; start += block_size) {
    const Eigen::Index count = std::min(block_size, n - start);
    Eigen::MatrixXd s_rep(count * k, model.cfg.state_dim);
    Eigen::MatrixXd actions(count * k, model.cfg.action_dim);
    for (Eigen::Index b = 0; b < count; ++b) {
      Rng rng(seeds[static_cast<std::size_t>(start + b)]);
      actions.middleRows(b * k, k) = sample_actions(cfg, rng);
      s_rep.middleRows(b * k, k) =
          states.row(start + b).replicate(k, 1);
    }
    const Prediction pred = predict_batch(model, s_rep, actions);
    for (Eigen::Index b = 0; b < count; ++b) {
      const detail::MixtureTerms terms = detail::mixture_terms(
          pred.mean.middleRows(b * k, k), pred.var.middleRows(b * k, k));
      out.cai[start + b] = terms.kl_terms.mean();
      out.entropy[start + b] = terms.entropies.mean();
    }
  }
  return out;
}

}  // namespace cail
