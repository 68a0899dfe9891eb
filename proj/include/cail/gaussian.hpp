#pragma once

// Diagonal Gaussians, mixtures of them, and KL divergence machinery.
//
// All divergences are reported in nats. Mixture KL divergences have no closed
// form, so we compute the classic product-of-Gaussians lower bound and the
// variational upper bound and take their clamped midpoint as the point
// estimate. Every formula routes through log-sum-exp and applies a variance
// floor, so scores stay finite for near-degenerate predictions.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace cail {

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

struct DiagGaussian {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;

  int dim() const { return static_cast<int>(mean.size()); }
};

inline DiagGaussian make_diag(Eigen::VectorXd mean, Eigen::VectorXd var) {
  if (mean.size() != var.size())
    throw std::invalid_argument("make_diag: mean/var dimension mismatch");
  if (mean.size() == 0)
    throw std::invalid_argument("make_diag: zero-dimensional Gaussian");
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    if (!std::isfinite(mean[i]) || !std::isfinite(var[i]) || var[i] <= 0.0)
      throw std::invalid_argument("make_diag: variances must be positive and finite");
  }
  return DiagGaussian{std::move(mean), std::move(var)};
}

struct GaussianMixture {
  Eigen::VectorXd weights;           // positive, sums to 1
  std::vector<DiagGaussian> comps;   // equal dimension

  int dim() const { return comps.empty() ? 0 : comps.front().dim(); }
  int size() const { return static_cast<int>(comps.size()); }
};

inline GaussianMixture make_mixture(Eigen::VectorXd weights,
                                    std::vector<DiagGaussian> comps) {
  if (weights.size() == 0 ||
      weights.size() != static_cast<Eigen::Index>(comps.size()))
    throw std::invalid_argument("make_mixture: weight/component count mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] <= 0.0)
      throw std::invalid_argument("make_mixture: weights must be positive");
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("make_mixture: weights must sum to 1");
  const int d = comps.front().dim();
  for (const auto& c : comps) {
    if (c.dim() != d)
      throw std::invalid_argument("make_mixture: component dimension mismatch");
  }
  return GaussianMixture{std::move(weights), std::move(comps)};
}

inline GaussianMixture uniform_mixture(std::vector<DiagGaussian> comps) {
  const auto n = static_cast<Eigen::Index>(comps.size());
  return make_mixture(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)),
                      std::move(comps));
}

// Numerically stable log(sum(exp(v))). A single-element input returns that
// element bit-exactly.
inline double logsumexp(const Eigen::ArrayXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a stray inf) dominates
  if (v.size() == 1) return v[0];
  return m + std::log((v - m).exp().sum());
}

// Differential entropy of a diagonal Gaussian: 0.5 * sum_k log(2*pi*e*var_k).
inline double entropy(const DiagGaussian& g) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < g.var.size(); ++i)
    acc += std::log(std::max(g.var[i], kVarianceFloor));
  const auto d = static_cast<double>(g.var.size());
  return 0.5 * (acc + d * (kLog2Pi + 1.0));
}

// Closed-form KL(f || g) between diagonal Gaussians:
//   0.5 * sum_k [ log(var_g/var_f) + var_f/var_g + (mu_f-mu_g)^2/var_g - 1 ].
// Identical inputs yield exactly 0.
inline double kl_exact(const DiagGaussian& f, const DiagGaussian& g) {
  if (f.dim() != g.dim())
    throw std::invalid_argument("kl_exact: dimension mismatch");
  double acc = 0.0;
  for (int k = 0; k < f.dim(); ++k) {
    const double vf = std::max(f.var[k], kVarianceFloor);
    const double vg = std::max(g.var[k], kVarianceFloor);
    const double dm = f.mean[k] - g.mean[k];
    acc += std::log(vg) - std::log(vf) + vf / vg + dm * dm / vg - 1.0;
  }
  return 0.5 * acc;
}

// log of the normalization of a product of two diagonal Gaussians,
//   log t = -d/2 log(2*pi) - 1/2 sum_k log(vf+vg)_k
//           - 1/2 sum_k (mu_g-mu_f)_k^2 / (vf+vg)_k,
// i.e. the log-density of N(mu_f; mu_g, vf+vg).
inline double log_prod_norm(const DiagGaussian& f, const DiagGaussian& g) {
  if (f.dim() != g.dim())
    throw std::invalid_argument("log_prod_norm: dimension mismatch");
  double acc = 0.0;
  for (int k = 0; k < f.dim(); ++k) {
    const double v =
        std::max(f.var[k], kVarianceFloor) + std::max(g.var[k], kVarianceFloor);
    const double dm = g.mean[k] - f.mean[k];
    acc += std::log(v) + dm * dm / v;
  }
  return -0.5 * (static_cast<double>(f.dim()) * kLog2Pi + acc);
}

// Product-of-Gaussians lower bound on KL(f || mix):
//   -log sum_b w_b * t_{f,b} - H(f), evaluated in log space.
inline double kl_mixture_lower(const DiagGaussian& f,
                               const GaussianMixture& mix) {
  Eigen::ArrayXd terms(mix.size());
  for (int b = 0; b < mix.size(); ++b)
    terms[b] = std::log(mix.weights[b]) + log_prod_norm(f, mix.comps[b]);
  return -logsumexp(terms) - entropy(f);
}

// Variational upper bound on KL(f || mix):
//   -log sum_b w_b * exp(-KL(f || g_b)), evaluated in log space.
// With a single component this reduces bit-exactly to kl_exact.
inline double kl_mixture_upper(const DiagGaussian& f,
                               const GaussianMixture& mix) {
  Eigen::ArrayXd terms(mix.size());
  for (int b = 0; b < mix.size(); ++b)
    terms[b] = std::log(mix.weights[b]) - kl_exact(f, mix.comps[b]);
  return -logsumexp(terms);
}

// Clamped midpoint of the two bounds; the point estimate used for scoring.
// Since KL >= 0, clamping at zero can only tighten the estimate.
inline double kl_mixture_mean(const DiagGaussian& f,
                              const GaussianMixture& mix) {
  const double lo = kl_mixture_lower(f, mix);
  const double hi = kl_mixture_upper(f, mix);
  return std::max(0.0, 0.5 * (lo + hi));
}

}  // namespace cail
