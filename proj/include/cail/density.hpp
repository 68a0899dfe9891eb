#pragma once

// Probabilistic one-step transition model p(s'_j | s, a) = N(mu(s,a), var(s,a))
// over a configured subset j of next-state dimensions, trained by negative
// log-likelihood. Targets are scaled deltas (s'_j - s_j) * scale. The variance
// head goes through softplus, a small additive floor, and a hard cap.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cail/gaussian.hpp"
#include "cail/nn.hpp"
#include "cail/rng.hpp"

namespace cail {

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct TransitionModelConfig {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<int> target_dims;  // indices of S_j within the state vector
  double target_scale = 1.0;
  std::vector<int> hidden = {128, 128, 128, 128};
  Activation activation = Activation::kRelu;
  bool spectral_norm = true;     // hidden layers and variance head
  bool normalize_input = false;
  double var_floor = 1e-8;
  double var_cap = 200.0;
  AdamConfig adam{3e-4, 0.9, 0.999, 1e-8};
  int batch_size = 1000;

  int input_dim() const { return state_dim + action_dim; }
  int target_dim() const { return static_cast<int>(target_dims.size()); }
};

struct TransitionModel {
  TransitionModelConfig cfg;
  Mlp backbone;      // hidden stack, every layer activated
  Dense mean_head;   // affine, never spectral-normalized
  Dense var_head;    // affine, spectral-normalized when configured
  Normalizer input_norm;
  Adam opt;
};

inline TransitionModel make_transition_model(TransitionModelConfig cfg,
                                             Rng& rng) {
  if (cfg.state_dim <= 0 || cfg.action_dim <= 0 || cfg.target_dims.empty())
    throw std::invalid_argument("make_transition_model: bad dimensions");
  for (int j : cfg.target_dims)
    if (j < 0 || j >= cfg.state_dim)
      throw std::invalid_argument("make_transition_model: target index out of range");
  if (cfg.target_scale <= 0.0)
    throw std::invalid_argument("make_transition_model: target scale must be positive");
  TransitionModel m;
  m.cfg = cfg;
  const double hidden_gain =
      cfg.activation == Activation::kRelu ? std::sqrt(2.0) : 1.0;
  int prev = cfg.input_dim();
  for (int width : cfg.hidden) {
    Dense layer = make_dense(prev, width, cfg.activation, cfg.spectral_norm, rng);
    init_orthogonal(layer, hidden_gain, rng);
    m.backbone.layers.push_back(std::move(layer));
    prev = width;
  }
  m.mean_head = make_dense(prev, cfg.target_dim(), Activation::kIdentity, false, rng);
  init_orthogonal(m.mean_head, 1.0, rng);
  m.var_head = make_dense(prev, cfg.target_dim(), Activation::kIdentity,
                          cfg.spectral_norm, rng);
  init_orthogonal(m.var_head, 1.0, rng);
  m.input_norm = Normalizer(cfg.input_dim());
  m.opt = Adam(cfg.adam);
  return m;
}

struct TransitionBatch {
  Eigen::MatrixXd s;       // n x state_dim
  Eigen::MatrixXd a;       // n x action_dim
  Eigen::MatrixXd target;  // n x target_dim, scaled deltas

  Eigen::Index size() const { return s.rows(); }
};

// Builds the scaled-delta targets from raw (s, a, s_next) matrices.
inline TransitionBatch make_batch(const TransitionModelConfig& cfg,
                                  Eigen::MatrixXd s, Eigen::MatrixXd a,
                                  const Eigen::MatrixXd& s_next) {
  TransitionBatch batch;
  batch.target.resize(s.rows(), cfg.target_dim());
  for (int k = 0; k < cfg.target_dim(); ++k) {
    const int j = cfg.target_dims[static_cast<std::size_t>(k)];
    batch.target.col(k) = (s_next.col(j) - s.col(j)) * cfg.target_scale;
  }
  batch.s = std::move(s);
  batch.a = std::move(a);
  return batch;
}

struct Prediction {
  Eigen::MatrixXd mean;  // n x target_dim
  Eigen::MatrixXd var;   // n x target_dim, in [floor, cap]
};

namespace detail {

struct PredictWork {
  Eigen::MatrixXd input;     // normalized [s a]
  MlpCache cache;            // backbone cache
  Eigen::MatrixXd hidden;    // backbone output
  Eigen::MatrixXd raw_var;   // variance head pre-softplus
  Eigen::MatrixXd var_pre;   // softplus(raw) + floor, before the cap
};

inline Prediction predict_impl(const TransitionModel& m,
                               const Eigen::MatrixXd& s,
                               const Eigen::MatrixXd& a, PredictWork* work) {
  if (s.cols() != m.cfg.state_dim || a.cols() != m.cfg.action_dim ||
      s.rows() != a.rows())
    throw std::invalid_argument("predict: dimension mismatch");
  Eigen::MatrixXd x(s.rows(), m.cfg.input_dim());
  x << s, a;
  if (m.cfg.normalize_input) x = m.input_norm.apply(x);
  MlpCache local_cache;
  MlpCache* cache = work ? &work->cache : &local_cache;
  const Eigen::MatrixXd h = forward_batch(m.backbone, x, cache);
  Prediction out;
  out.mean = h * m.mean_head.w.transpose();
  out.mean.rowwise() += m.mean_head.b.transpose();
  Eigen::MatrixXd raw = h * m.var_head.w.transpose();
  raw.rowwise() += m.var_head.b.transpose();
  Eigen::MatrixXd var_pre = raw.unaryExpr([&](double v) {
    return softplus(v) + m.cfg.var_floor;
  });
  out.var = var_pre.cwiseMin(m.cfg.var_cap);
  if (work) {
    work->input = std::move(x);
    work->hidden = h;
    work->raw_var = std::move(raw);
    work->var_pre = std::move(var_pre);
  }
  return out;
}

}  // namespace detail

inline Prediction predict_batch(const TransitionModel& m,
                                const Eigen::MatrixXd& s,
                                const Eigen::MatrixXd& a) {
  return detail::predict_impl(m, s, a, nullptr);
}

inline DiagGaussian predict(const TransitionModel& m, const Eigen::VectorXd& s,
                            const Eigen::VectorXd& a) {
  const Prediction p =
      detail::predict_impl(m, s.transpose(), a.transpose(), nullptr);
  return make_diag(p.mean.row(0).transpose(), p.var.row(0).transpose());
}

struct ModelGrads {
  MlpGrads backbone;
  Eigen::MatrixXd dw_mean, dw_var;
  Eigen::VectorXd db_mean, db_var;
};

inline std::vector<TensorView> param_views(TransitionModel& m) {
  std::vector<TensorView> views = param_views(m.backbone);
  views.push_back({m.mean_head.w.data(), m.mean_head.w.size()});
  views.push_back({m.mean_head.b.data(), m.mean_head.b.size()});
  views.push_back({m.var_head.w.data(), m.var_head.w.size()});
  views.push_back({m.var_head.b.data(), m.var_head.b.size()});
  return views;
}

inline std::vector<ConstTensorView> grad_views(const ModelGrads& g) {
  std::vector<ConstTensorView> views = grad_views(g.backbone);
  views.push_back({g.dw_mean.data(), g.dw_mean.size()});
  views.push_back({g.db_mean.data(), g.db_mean.size()});
  views.push_back({g.dw_var.data(), g.dw_var.size()});
  views.push_back({g.db_var.data(), g.db_var.size()});
  return views;
}

// Mean NLL over the batch, summed over target dims:
//   (1/N) sum_i sum_k [ (t-mu)^2 / (2 var) + 0.5 log var ],
// with exact gradients through both heads; the variance path includes the
// softplus derivative and a zero gradient where the cap saturates.
inline double nll_loss(const TransitionModel& m, const TransitionBatch& batch,
                       ModelGrads* grads = nullptr) {
  if (batch.size() == 0) throw std::invalid_argument("nll_loss: empty batch");
  detail::PredictWork work;
  const Prediction pred = detail::predict_impl(m, batch.s, batch.a, &work);
  const double n = static_cast<double>(batch.size());

  const Eigen::ArrayXXd diff = (pred.mean - batch.target).array();
  const Eigen::ArrayXXd var = pred.var.array();
  const double loss =
      ((diff.square() / (2.0 * var)) + 0.5 * var.log()).sum() / n;
  if (!grads) return loss;

  // d loss / d mean and d loss / d var.
  const Eigen::ArrayXXd dmean = diff / var / n;
  const Eigen::ArrayXXd dvar =
      (0.5 / var - diff.square() / (2.0 * var.square())) / n;
  // Through the cap (zero where saturated) and the softplus (+floor) path.
  const Eigen::ArrayXXd gate =
      (work.var_pre.array() < m.cfg.var_cap).cast<double>();
  const Eigen::ArrayXXd draw =
      dvar * gate * work.raw_var.array().unaryExpr([](double v) {
        return sigmoid(v);
      });

  const Eigen::MatrixXd dmean_m = dmean.matrix();
  const Eigen::MatrixXd draw_m = draw.matrix();
  grads->dw_mean.noalias() = dmean_m.transpose() * work.hidden;
  grads->db_mean = dmean_m.colwise().sum().transpose();
  grads->dw_var.noalias() = draw_m.transpose() * work.hidden;
  grads->db_var = draw_m.colwise().sum().transpose();

  Eigen::MatrixXd dh = dmean_m * m.mean_head.w;
  dh.noalias() += draw_m * m.var_head.w;
  backward_batch(m.backbone, work.cache, dh, grads->backbone);
  return loss;
}

// One Adam step on a minibatch followed by the spectral-norm projection.
inline double train_step(TransitionModel& m, const TransitionBatch& batch) {
  ModelGrads grads;
  const double loss = nll_loss(m, batch, &grads);
  auto params = param_views(m);
  m.opt.step(params, grad_views(grads));
  if (m.cfg.spectral_norm) {
    spectral_normalize(m.backbone);
    spectral_normalize(m.var_head);
  }
  return loss;
}

// Validation MSE of the mean head in scaled-delta space.
inline double validation_mse(const TransitionModel& m,
                             const TransitionBatch& batch) {
  const Prediction p = predict_batch(m, batch.s, batch.a);
  return (p.mean - batch.target).array().square().mean();
}

struct FitSchedule {
  int max_epochs = 3000;
  int eval_every = 20;
  int patience = 10;  // non-improving evaluations before stopping
};

struct FitEval {
  int epoch = 0;
  double val_mse = 0.0;
};

struct FitResult {
  std::vector<FitEval> trace;
  double best_mse = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  bool early_stopped = false;
};

namespace detail {

inline TransitionBatch gather_rows(const TransitionBatch& batch,
                                   const std::vector<Eigen::Index>& rows) {
  TransitionBatch out;
  out.s.resize(static_cast<Eigen::Index>(rows.size()), batch.s.cols());
  out.a.resize(static_cast<Eigen::Index>(rows.size()), batch.a.cols());
  out.target.resize(static_cast<Eigen::Index>(rows.size()), batch.target.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.s.row(static_cast<Eigen::Index>(i)) = batch.s.row(rows[i]);
    out.a.row(static_cast<Eigen::Index>(i)) = batch.a.row(rows[i]);
    out.target.row(static_cast<Eigen::Index>(i)) = batch.target.row(rows[i]);
  }
  return out;
}

inline std::vector<double> snapshot_params(TransitionModel& m) {
  std::vector<double> flat;
  for (const TensorView& v : param_views(m))
    flat.insert(flat.end(), v.data, v.data + v.size);
  return flat;
}

inline void restore_params(TransitionModel& m, const std::vector<double>& flat) {
  std::size_t offset = 0;
  for (TensorView& v : param_views(m)) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + v.size),
              v.data);
    offset += static_cast<std::size_t>(v.size);
  }
}

}  // namespace detail

// Minibatch training with periodic validation and early stopping. `episode_of`
// assigns each row to an episode; the split is by episode to avoid leakage.
// The parameters with the best validation MSE are restored at the end.
inline FitResult fit(TransitionModel& m, const TransitionBatch& data,
                     const std::vector<std::int64_t>& episode_of,
                     const FitSchedule& schedule, Rng& rng) {
  if (data.size() == 0) throw std::invalid_argument("fit: empty dataset");
  if (episode_of.size() != static_cast<std::size_t>(data.size()))
    throw std::invalid_argument("fit: episode labels do not match dataset");

  // Split episodes 90/10.
  std::vector<std::int64_t> episodes = episode_of;
  std::sort(episodes.begin(), episodes.end());
  episodes.erase(std::unique(episodes.begin(), episodes.end()), episodes.end());
  for (std::size_t i = episodes.size(); i > 1; --i)
    std::swap(episodes[i - 1], episodes[rng.index(i)]);
  const std::size_t n_val =
      std::max<std::size_t>(1, episodes.size() / 10);
  std::vector<std::int64_t> val_eps(episodes.end() - static_cast<std::ptrdiff_t>(n_val),
                                    episodes.end());
  std::sort(val_eps.begin(), val_eps.end());
  const auto is_val = [&](std::int64_t ep) {
    return std::binary_search(val_eps.begin(), val_eps.end(), ep);
  };

  std::vector<Eigen::Index> train_rows, val_rows;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (is_val(episode_of[static_cast<std::size_t>(i)]))
      val_rows.push_back(i);
    else
      train_rows.push_back(i);
  }
  if (train_rows.empty() || val_rows.empty())
    throw std::invalid_argument("fit: degenerate train/validation split");

  const TransitionBatch train = detail::gather_rows(data, train_rows);
  const TransitionBatch val = detail::gather_rows(data, val_rows);

  if (m.cfg.normalize_input) {
    Eigen::MatrixXd x(train.size(), m.cfg.input_dim());
    x << train.s, train.a;
    m.input_norm.update(x);
  }

  const Eigen::Index batch_size =
      std::min<Eigen::Index>(m.cfg.batch_size, train.size());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), 0);

  FitResult result;
  result.best_mse = std::numeric_limits<double>::infinity();
  int evals_since_best = 0;
  std::vector<double> best_params = detail::snapshot_params(m);

  for (int epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.index(i)]);
    for (Eigen::Index start = 0; start < train.size(); start += batch_size) {
      const Eigen::Index count = std::min(batch_size, train.size() - start);
      std::vector<Eigen::Index> rows(
          order.begin() + start, order.begin() + start + count);
      train_step(m, detail::gather_rows(train, rows));
    }
    result.epochs_run = epoch;
    if (epoch % schedule.eval_every == 0) {
      const double mse = validation_mse(m, val);
      result.trace.push_back({epoch, mse});
      if (mse < result.best_mse) {
        result.best_mse = mse;
        result.best_epoch = epoch;
        evals_since_best = 0;
        best_params = detail::snapshot_params(m);
      } else {
        ++evals_since_best;
        if (evals_since_best >= schedule.patience) {
          result.early_stopped = true;
          break;
        }
      }
    }
  }
  detail::restore_params(m, best_params);
  return result;
}

// Online schedule: nothing before the buffer warmup completes, one big warmup
// fit when it does, then a fixed number of batches per call that decays late
// in training.
struct OnlineSchedule {
  int every_episodes = 100;
  int warmup_episodes = 200;
  int warmup_batches = 4000;
  int mid_batches = 1000;
  std::int64_t mid_until_episode = 5200;
  int late_batches = 500;

  int batches_for(std::int64_t episode_count) const {
    if (episode_count < warmup_episodes) return 0;
    if (episode_count == warmup_episodes) return warmup_batches;
    return episode_count <= mid_until_episode ? mid_batches : late_batches;
  }
};

// Trains for the scheduled number of uniformly sampled minibatches from the
// provided transition pool (the replay buffer flattened by the caller).
inline void fit_online(TransitionModel& m, const TransitionBatch& pool,
                       std::int64_t episode_count, const OnlineSchedule& schedule,
                       Rng& rng) {
  if (pool.size() == 0) throw std::invalid_argument("fit_online: empty pool");
  const int batches = schedule.batches_for(episode_count);
  if (batches == 0) return;
  if (m.cfg.normalize_input) {
    Eigen::MatrixXd x(pool.size(), m.cfg.input_dim());
    x << pool.s, pool.a;
    m.input_norm.update(x);
  }
  const auto batch_size = static_cast<std::size_t>(
      std::min<Eigen::Index>(m.cfg.batch_size, pool.size()));
  std::vector<Eigen::Index> rows(batch_size);
  for (int b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < batch_size; ++i)
      rows[i] = static_cast<Eigen::Index>(
          rng.index(static_cast<std::size_t>(pool.size())));
    train_step(m, detail::gather_rows(pool, rows));
  }
}

}  // namespace cail
