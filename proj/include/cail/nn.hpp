#pragma once

// Minimal dense-network substrate: batched forward/backward passes with
// hand-derived gradients, Adam, running input normalization, and spectral
// normalization by power iteration. Everything is double precision and
// allocation patterns are deterministic, so training runs are bit-reproducible
// for a fixed seed.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "cail/rng.hpp"

namespace cail {

enum class Activation { kIdentity, kRelu, kTanh };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  throw std::logic_error("unknown activation");
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + name);
}

struct Dense {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
  Activation act = Activation::kIdentity;
  bool spectral_norm = false;
  Eigen::VectorXd power_u;  // persistent power-iteration state, size out

  Eigen::Index in_dim() const { return w.cols(); }
  Eigen::Index out_dim() const { return w.rows(); }
};

// ---------------------------------------------------------------------------
// Initialization

// Xavier/Glorot uniform: limit = gain * sqrt(6 / (fan_in + fan_out)).
inline void init_xavier_uniform(Dense& layer, double gain, Rng& rng) {
  const double limit =
      gain * std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
  for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
      layer.w(r, c) = rng.uniform(-limit, limit);
  layer.b.setZero();
}

// Orthogonal init: QR of a Gaussian matrix with the sign fix that makes the
// factorization unique, scaled by `gain`.
inline void init_orthogonal(Dense& layer, double gain, Rng& rng);

inline Dense make_dense(int in, int out, Activation act, bool spectral_norm,
                        Rng& rng) {
  Dense layer;
  layer.w = Eigen::MatrixXd::Zero(out, in);
  layer.b = Eigen::VectorXd::Zero(out);
  layer.act = act;
  layer.spectral_norm = spectral_norm;
  layer.power_u = rng.normal_vector(out);
  const double n = layer.power_u.norm();
  layer.power_u /= (n > 0.0 ? n : 1.0);
  return layer;
}

struct Mlp {
  std::vector<Dense> layers;

  Eigen::Index input_dim() const { return layers.front().in_dim(); }
  Eigen::Index output_dim() const { return layers.back().out_dim(); }
};

// ---------------------------------------------------------------------------
// Forward / backward

namespace detail {

inline void apply_activation(Activation act, Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      return;
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      return;
  }
}

// Derivative expressed through the post-activation value.
inline Eigen::ArrayXXd activation_grad_from_post(Activation act,
                                                 const Eigen::MatrixXd& post) {
  switch (act) {
    case Activation::kIdentity:
      return Eigen::ArrayXXd::Ones(post.rows(), post.cols());
    case Activation::kRelu:
      return (post.array() > 0.0).cast<double>();
    case Activation::kTanh:
      return 1.0 - post.array().square();
  }
  throw std::logic_error("unknown activation");
}

}  // namespace detail

struct MlpCache {
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l+1] = layer l output
};

// Rows are samples: x is n x input_dim, the result n x output_dim.
inline Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& x,
                                     MlpCache* cache = nullptr) {
  if (x.cols() != net.input_dim())
    throw std::invalid_argument("forward_batch: input dimension mismatch");
  if (cache) {
    cache->acts.clear();
    cache->acts.reserve(net.layers.size() + 1);
    cache->acts.push_back(x);
  }
  Eigen::MatrixXd a = x;
  for (const Dense& layer : net.layers) {
    Eigen::MatrixXd z = a * layer.w.transpose();
    z.rowwise() += layer.b.transpose();
    detail::apply_activation(layer.act, z);
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

inline Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x) {
  return forward_batch(net, x.transpose()).row(0).transpose();
}

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;

  void resize_like(const Mlp& net) {
    dw.resize(net.layers.size());
    db.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      dw[l].resize(net.layers[l].w.rows(), net.layers[l].w.cols());
      db[l].resize(net.layers[l].b.size());
    }
  }
};

// Reverse-mode pass: given dL/d(output) in `upstream` (n x output_dim) and the
// cache of the matching forward pass, fills dL/d(params) and returns dL/dx.
inline Eigen::MatrixXd backward_batch(const Mlp& net, const MlpCache& cache,
                                      const Eigen::MatrixXd& upstream,
                                      MlpGrads& grads) {
  if (cache.acts.size() != net.layers.size() + 1)
    throw std::invalid_argument("backward_batch: cache does not match network");
  grads.resize_like(net);
  Eigen::MatrixXd da = upstream;
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const Dense& layer = net.layers[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd& post = cache.acts[static_cast<std::size_t>(l) + 1];
    const Eigen::MatrixXd& prev = cache.acts[static_cast<std::size_t>(l)];
    Eigen::MatrixXd dz =
        (da.array() * detail::activation_grad_from_post(layer.act, post))
            .matrix();
    grads.dw[static_cast<std::size_t>(l)].noalias() = dz.transpose() * prev;
    grads.db[static_cast<std::size_t>(l)] = dz.colwise().sum().transpose();
    da.noalias() = dz * layer.w;
  }
  return da;
}

// Convenience single-sample wrapper: gradient of <upstream, forward(net, x)>.
inline Eigen::VectorXd backward(const Mlp& net, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& upstream,
                                MlpGrads& grads) {
  MlpCache cache;
  forward_batch(net, x.transpose(), &cache);
  return backward_batch(net, cache, upstream.transpose(), grads)
      .row(0)
      .transpose();
}

// ---------------------------------------------------------------------------
// Parameter views (flat tensor list shared by Adam and serialization)

struct TensorView {
  double* data = nullptr;
  Eigen::Index size = 0;
};

struct ConstTensorView {
  const double* data = nullptr;
  Eigen::Index size = 0;
};

inline std::vector<TensorView> param_views(Mlp& net) {
  std::vector<TensorView> views;
  views.reserve(net.layers.size() * 2);
  for (Dense& layer : net.layers) {
    views.push_back({layer.w.data(), layer.w.size()});
    views.push_back({layer.b.data(), layer.b.size()});
  }
  return views;
}

inline std::vector<ConstTensorView> grad_views(const MlpGrads& grads) {
  std::vector<ConstTensorView> views;
  views.reserve(grads.dw.size() * 2);
  for (std::size_t l = 0; l < grads.dw.size(); ++l) {
    views.push_back({grads.dw[l].data(), grads.dw[l].size()});
    views.push_back({grads.db[l].data(), grads.db[l].size()});
  }
  return views;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return t_; }

  // One bias-corrected update. Throws without touching parameters if any
  // gradient entry is non-finite.
  void step(const std::vector<TensorView>& params,
            const std::vector<ConstTensorView>& grads) {
    if (params.size() != grads.size())
      throw std::invalid_argument("Adam::step: tensor count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size);
      if (!g.isFinite().all())
        throw std::runtime_error("Adam::step: non-finite gradient rejected");
    }
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = Eigen::ArrayXd::Zero(params[i].size);
        v_[i] = Eigen::ArrayXd::Zero(params[i].size);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (m_[i].size() != params[i].size)
        throw std::invalid_argument("Adam::step: tensor shape changed");
      Eigen::Map<Eigen::ArrayXd> p(params[i].data, params[i].size);
      const Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size);
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.square();
      p -= cfg_.lr * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + cfg_.eps);
    }
  }

  // Moment access for checkpointing.
  std::vector<Eigen::ArrayXd>& first_moments() { return m_; }
  std::vector<Eigen::ArrayXd>& second_moments() { return v_; }
  const std::vector<Eigen::ArrayXd>& first_moments() const { return m_; }
  const std::vector<Eigen::ArrayXd>& second_moments() const { return v_; }
  void set_state(std::int64_t t, std::vector<Eigen::ArrayXd> m,
                 std::vector<Eigen::ArrayXd> v) {
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Eigen::ArrayXd> m_, v_;
};

// ---------------------------------------------------------------------------
// Running input normalizer (Welford / parallel batch merge)

class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(int dim, double clip = 5.0)
      : clip_(clip),
        mean_(Eigen::VectorXd::Zero(dim)),
        m2_(Eigen::VectorXd::Zero(dim)) {}

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  double clip() const { return clip_; }
  const Eigen::VectorXd& mean() const { return mean_; }

  Eigen::VectorXd variance() const {
    if (count_ <= 0.0) return Eigen::VectorXd::Ones(mean_.size());
    return (m2_ / count_).cwiseMax(0.0);
  }

  // Merges a batch of rows using the parallel variance combination, so feeding
  // one big batch or several smaller ones gives the same moments.
  void update(const Eigen::MatrixXd& batch) {
    if (batch.cols() != mean_.size())
      throw std::invalid_argument("Normalizer::update: dimension mismatch");
    const double nb = static_cast<double>(batch.rows());
    if (nb == 0.0) return;
    const Eigen::VectorXd mb = batch.colwise().mean().transpose();
    const Eigen::MatrixXd centered = batch.rowwise() - mb.transpose();
    const Eigen::VectorXd m2b =
        centered.array().square().colwise().sum().transpose();
    const double n_total = count_ + nb;
    const Eigen::VectorXd delta = mb - mean_;
    mean_ += delta * (nb / n_total);
    m2_ += m2b + delta.array().square().matrix() * (count_ * nb / n_total);
    count_ = n_total;
  }

  // (x - mean) / max(std, 1e-6), clipped to [-clip, clip]. A fresh normalizer
  // acts as identity followed by the clip.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    const Eigen::ArrayXd sd = stddev_for_apply();
    return ((x - mean_).array() / sd).cwiseMax(-clip_).cwiseMin(clip_).matrix();
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    const Eigen::ArrayXd sd = stddev_for_apply();
    Eigen::MatrixXd out = x.rowwise() - mean_.transpose();
    out.array().rowwise() /= sd.transpose();
    return out.cwiseMax(-clip_).cwiseMin(clip_);
  }

  // Checkpoint access.
  void set_state(double count, Eigen::VectorXd mean, Eigen::VectorXd m2) {
    count_ = count;
    mean_ = std::move(mean);
    m2_ = std::move(m2);
  }
  const Eigen::VectorXd& m2() const { return m2_; }

 private:
  Eigen::ArrayXd stddev_for_apply() const {
    if (count_ <= 0.0) return Eigen::ArrayXd::Ones(mean_.size());
    return variance().array().sqrt().max(1e-6);
  }

  double clip_ = 5.0;
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

// ---------------------------------------------------------------------------
// Spectral normalization (one power-iteration step per call)

inline void spectral_normalize(Dense& layer) {
  if (layer.power_u.size() != layer.w.rows())
    throw std::invalid_argument("spectral_normalize: power vector not initialized");
  Eigen::VectorXd v = layer.w.transpose() * layer.power_u;
  const double nv = v.norm();
  if (nv < 1e-30) return;  // zero (or numerically dead) matrix: leave as-is
  v /= nv;
  Eigen::VectorXd u = layer.w * v;
  const double nu = u.norm();
  if (nu < 1e-30) return;
  u /= nu;
  layer.power_u = u;
  const double sigma = u.dot(layer.w * v);
  if (sigma > 1e-30) layer.w /= sigma;
}

inline void spectral_normalize(Mlp& net) {
  for (Dense& layer : net.layers)
    if (layer.spectral_norm) spectral_normalize(layer);
}

// ---------------------------------------------------------------------------
// Orthogonal init (declared above; defined after Mlp for readability)

inline void init_orthogonal(Dense& layer, double gain, Rng& rng) {
  const Eigen::Index rows = layer.w.rows();
  const Eigen::Index cols = layer.w.cols();
  const bool wide = cols > rows;
  const Eigen::Index qr_rows = wide ? cols : rows;
  const Eigen::Index qr_cols = wide ? rows : cols;
  Eigen::MatrixXd gaussian(qr_rows, qr_cols);
  for (Eigen::Index r = 0; r < qr_rows; ++r)
    for (Eigen::Index c = 0; c < qr_cols; ++c) gaussian(r, c) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(qr_rows, qr_cols);
  const Eigen::MatrixXd r_mat =
      qr.matrixQR().topLeftCorner(qr_cols, qr_cols).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < qr_cols; ++c)
    if (r_mat(c, c) < 0.0) q.col(c) = -q.col(c);
  layer.w = gain * (wide ? q.transpose() : q);
  layer.b.setZero();
}

// Builds a plain MLP: hidden layers share one activation, the output layer is
// affine. `spectral_hidden` tags hidden layers for spectral normalization.
inline Mlp make_mlp(int input_dim, const std::vector<int>& hidden,
                    int output_dim, Activation hidden_act, bool spectral_hidden,
                    Rng& rng) {
  Mlp net;
  int prev = input_dim;
  for (int width : hidden) {
    net.layers.push_back(make_dense(prev, width, hidden_act, spectral_hidden, rng));
    prev = width;
  }
  net.layers.push_back(
      make_dense(prev, output_dim, Activation::kIdentity, false, rng));
  return net;
}

}  // namespace cail
