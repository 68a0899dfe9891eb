#include "cail/nn.hpp"

#include <cmath>
#include <filesystem>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "cail/checkpoint.hpp"
#include "oracles.hpp"

using namespace cail;

namespace {

// Straight-line reimplementation of the forward pass (scalar loops only).
Eigen::VectorXd forward_reference(const Mlp& net, const Eigen::VectorXd& x) {
  Eigen::VectorXd a = x;
  for (const Dense& layer : net.layers) {
    Eigen::VectorXd z(layer.out_dim());
    for (Eigen::Index r = 0; r < layer.out_dim(); ++r) {
      double acc = layer.b[r];
      for (Eigen::Index c = 0; c < layer.in_dim(); ++c)
        acc += layer.w(r, c) * a[c];
      z[r] = acc;
    }
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      if (layer.act == Activation::kRelu) z[r] = std::max(0.0, z[r]);
      if (layer.act == Activation::kTanh) z[r] = std::tanh(z[r]);
    }
    a = z;
  }
  return a;
}

Mlp random_tanh_net(int in, const std::vector<int>& hidden, int out, Rng& rng) {
  Mlp net = make_mlp(in, hidden, out, Activation::kTanh, false, rng);
  for (Dense& layer : net.layers) {
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
        layer.w(r, c) = rng.uniform(-0.8, 0.8);
      layer.b[r] = rng.uniform(-0.3, 0.3);
    }
  }
  return net;
}

}  // namespace

TEST_CASE("forward handles identity and zero nets") {
  Rng rng(7);
  Mlp zero = make_mlp(3, {4}, 2, Activation::kRelu, false, rng);
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  CHECK(forward(zero, x).isZero(0.0));

  Mlp ident;
  ident.layers.push_back(make_dense(3, 3, Activation::kIdentity, false, rng));
  ident.layers[0].w = Eigen::MatrixXd::Identity(3, 3);
  CHECK(forward(ident, x) == x);
}

TEST_CASE("forward matches a straight-line reimplementation") {
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    Mlp net = random_tanh_net(3, {6, 5}, 2, rng);
    const Eigen::VectorXd x = rng.uniform_vector(3, -2.0, 2.0);
    const Eigen::VectorXd got = forward(net, x);
    const Eigen::VectorXd expected = forward_reference(net, x);
    REQUIRE((got - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("forward is deterministic bit-for-bit") {
  Rng rng(9);
  Mlp net = random_tanh_net(4, {8, 8}, 3, rng);
  const Eigen::VectorXd x = rng.uniform_vector(4, -1.0, 1.0);
  const Eigen::VectorXd a = forward(net, x);
  const Eigen::VectorXd b = forward(net, x);
  CHECK(a == b);
}

TEST_CASE("backward: trivial closed forms") {
  Rng rng(10);
  // Scalar linear net y = w * x: dy/dw = x, dy/db = 1, dy/dx = w.
  Mlp net;
  net.layers.push_back(make_dense(1, 1, Activation::kIdentity, false, rng));
  net.layers[0].w(0, 0) = 1.7;
  Eigen::VectorXd x(1), up(1);
  x << 2.5;
  up << 1.0;
  MlpGrads grads;
  const Eigen::VectorXd dx = backward(net, x, up, grads);
  CHECK(grads.dw[0](0, 0) == Catch::Approx(2.5).epsilon(1e-14));
  CHECK(grads.db[0][0] == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(dx[0] == Catch::Approx(1.7).epsilon(1e-14));

  // Zero upstream: all gradients vanish.
  up << 0.0;
  const Eigen::VectorXd dx0 = backward(net, x, up, grads);
  CHECK(grads.dw[0](0, 0) == 0.0);
  CHECK(grads.db[0][0] == 0.0);
  CHECK(dx0[0] == 0.0);
}

TEST_CASE("backward matches central finite differences on random tanh nets") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int in = 1 + static_cast<int>(rng.index(4));
    const int out = 1 + static_cast<int>(rng.index(3));
    std::vector<int> hidden;
    const int depth = 1 + static_cast<int>(rng.index(2));
    for (int l = 0; l < depth; ++l)
      hidden.push_back(2 + static_cast<int>(rng.index(7)));
    Mlp net = random_tanh_net(in, hidden, out, rng);
    const Eigen::VectorXd x = rng.uniform_vector(in, -1.5, 1.5);
    const Eigen::VectorXd up = rng.uniform_vector(out, -1.0, 1.0);

    MlpGrads grads;
    backward(net, x, up, grads);

    auto views = param_views(net);
    const auto fd = test::finite_difference_gradients(
        views, [&]() { return up.dot(forward(net, x)); }, 1e-5);
    const auto analytic = grad_views(grads);
    REQUIRE(fd.size() == analytic.size());
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const Eigen::Map<const Eigen::ArrayXd> a(analytic[i].data,
                                               analytic[i].size);
      for (Eigen::Index k = 0; k < fd[i].size(); ++k)
        REQUIRE(test::close_rel(a[k], fd[i][k], 1e-4, 1e-8));
    }
  }
}

TEST_CASE("backward input gradient matches finite differences") {
  Rng rng(12);
  Mlp net = random_tanh_net(3, {5}, 2, rng);
  Eigen::VectorXd x = rng.uniform_vector(3, -1.0, 1.0);
  const Eigen::VectorXd up = rng.uniform_vector(2, -1.0, 1.0);
  MlpGrads grads;
  const Eigen::VectorXd dx = backward(net, x, up, grads);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + 1e-5;
    const double fp = up.dot(forward(net, x));
    x[k] = saved - 1e-5;
    const double fm = up.dot(forward(net, x));
    x[k] = saved;
    REQUIRE(test::close_rel(dx[k], (fp - fm) / 2e-5, 1e-4, 1e-8));
  }
}

TEST_CASE("Adam: descent direction, convergence, zero-grad no-op") {
  // One step on f(w) = w^2/2 at w=1 with lr=0.1 decreases w.
  AdamConfig cfg;
  cfg.lr = 0.1;
  Adam opt(cfg);
  Eigen::ArrayXd w(1), g(1);
  w << 1.0;
  g << 1.0;  // grad of w^2/2 at w=1
  std::vector<TensorView> p = {{w.data(), 1}};
  std::vector<ConstTensorView> gv = {{g.data(), 1}};
  opt.step(p, gv);
  CHECK(w[0] < 1.0);

  // 200 steps on the quadratic pull |w| under 1e-2.
  Adam opt2(cfg);
  w << 1.0;
  for (int i = 0; i < 200; ++i) {
    g[0] = w[0];
    opt2.step(p, gv);
  }
  CHECK(std::abs(w[0]) < 1e-2);

  // Zero gradients from a fresh state leave parameters untouched.
  Adam opt3(cfg);
  w << 0.731;
  g << 0.0;
  opt3.step(p, gv);
  CHECK(w[0] == 0.731);
}

TEST_CASE("Adam rejects non-finite gradients without touching parameters") {
  Adam opt;
  Eigen::ArrayXd w(2), g(2);
  w << 1.0, 2.0;
  g << 0.5, std::numeric_limits<double>::quiet_NaN();
  std::vector<TensorView> p = {{w.data(), 2}};
  std::vector<ConstTensorView> gv = {{g.data(), 2}};
  CHECK_THROWS_AS(opt.step(p, gv), std::runtime_error);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 2.0);
}

TEST_CASE("Adam first step matches the hand-computed update") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  Adam opt(cfg);
  Eigen::ArrayXd w(1), g(1);
  w << 1.0;
  g << 3.0;
  std::vector<TensorView> p = {{w.data(), 1}};
  std::vector<ConstTensorView> gv = {{g.data(), 1}};
  opt.step(p, gv);
  // Bias-corrected m-hat = g, v-hat = g^2, so the step is lr * g/(|g|+eps).
  CHECK(w[0] == Catch::Approx(1.0 - 0.01 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("Normalizer: fresh behaves as identity-then-clip") {
  Normalizer n(2, 5.0);
  Eigen::VectorXd x(2);
  x << 7.0, -0.25;
  const Eigen::VectorXd y = n.apply(x);
  CHECK(y[0] == 5.0);
  CHECK(y[1] == -0.25);
}

TEST_CASE("Normalizer: constant dataset standardizes to zero") {
  Normalizer n(1, 5.0);
  Eigen::MatrixXd batch = Eigen::MatrixXd::Constant(40, 1, 3.25);
  n.update(batch);
  Eigen::VectorXd x(1);
  x << 3.25;
  CHECK(n.apply(x)[0] == 0.0);
}

TEST_CASE("Normalizer: two-batch merge equals one-pass moments") {
  Rng rng(13);
  Eigen::MatrixXd all(100, 3);
  for (int r = 0; r < 100; ++r)
    for (int c = 0; c < 3; ++c) all(r, c) = rng.uniform(-4.0, 9.0);

  Normalizer merged(3);
  merged.update(all.topRows(37));
  merged.update(all.bottomRows(63));

  Normalizer one(3);
  one.update(all);

  // Single-pass oracle: E[x^2] - E[x]^2.
  Eigen::VectorXd mean = all.colwise().mean().transpose();
  Eigen::VectorXd sq = (all.array().square().colwise().mean()).transpose();
  Eigen::VectorXd var = sq - mean.array().square().matrix();

  CHECK((merged.mean() - one.mean()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((merged.variance() - one.variance()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((merged.mean() - mean).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((merged.variance() - var).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(merged.count() == 100.0);
}

TEST_CASE("Normalizer applies the std floor and clipping after updates") {
  Normalizer n(1, 5.0);
  Eigen::MatrixXd batch = Eigen::MatrixXd::Constant(10, 1, 2.0);
  n.update(batch);  // variance 0 -> std floor 1e-6
  Eigen::VectorXd x(1);
  x << 2.0 + 1e-3;
  CHECK(n.apply(x)[0] == 5.0);  // (1e-3 / 1e-6) clipped to 5
}

TEST_CASE("spectral_normalize: diagonal, orthogonal, zero, and random cases") {
  Rng rng(14);

  Dense diag = make_dense(2, 2, Activation::kIdentity, true, rng);
  diag.w << 2.0, 0.0, 0.0, 0.5;
  for (int i = 0; i < 50; ++i) spectral_normalize(diag);
  CHECK(diag.w(0, 0) == Catch::Approx(1.0).margin(1e-6));
  CHECK(diag.w(1, 1) == Catch::Approx(0.25).margin(1e-6));

  // Orthogonal matrices are fixed points (all singular values are 1).
  Dense orth = make_dense(4, 4, Activation::kIdentity, true, rng);
  init_orthogonal(orth, 1.0, rng);
  const Eigen::MatrixXd before = orth.w;
  for (int i = 0; i < 20; ++i) spectral_normalize(orth);
  CHECK((orth.w - before).cwiseAbs().maxCoeff() <= 1e-3);

  // Zero matrices are returned unchanged.
  Dense zero = make_dense(3, 3, Activation::kIdentity, true, rng);
  spectral_normalize(zero);
  CHECK(zero.w.isZero(0.0));

  // Random 64x64: after 50 one-step calls, the true operator norm is within
  // 1% of 1 (equivalently, the running sigma estimate is within 1% of exact).
  Dense big = make_dense(64, 64, Activation::kIdentity, true, rng);
  for (Eigen::Index r = 0; r < 64; ++r)
    for (Eigen::Index c = 0; c < 64; ++c) big.w(r, c) = rng.normal();
  for (int i = 0; i < 50; ++i) spectral_normalize(big);
  CHECK(test::exact_operator_norm(big.w) == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("initializers: xavier bounds, orthogonal columns, determinism") {
  Rng rng_a(15), rng_b(15);
  Dense xa = make_dense(10, 6, Activation::kRelu, false, rng_a);
  Dense xb = make_dense(10, 6, Activation::kRelu, false, rng_b);
  init_xavier_uniform(xa, std::sqrt(2.0), rng_a);
  init_xavier_uniform(xb, std::sqrt(2.0), rng_b);
  CHECK(xa.w == xb.w);  // same seed, same weights
  const double limit = std::sqrt(2.0) * std::sqrt(6.0 / 16.0);
  CHECK(xa.w.cwiseAbs().maxCoeff() <= limit);
  CHECK(xa.b.isZero(0.0));

  Rng rng_c(16);
  Dense tall = make_dense(4, 9, Activation::kTanh, false, rng_c);
  init_orthogonal(tall, 1.0, rng_c);
  // Tall matrix (out > in): columns are orthonormal.
  const Eigen::MatrixXd gram = tall.w.transpose() * tall.w;
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);

  Dense wide = make_dense(9, 4, Activation::kTanh, false, rng_c);
  init_orthogonal(wide, 2.0, rng_c);
  // Wide matrix (in > out): rows are orthogonal with norm = gain.
  const Eigen::MatrixXd gram_w = wide.w * wide.w.transpose();
  CHECK((gram_w - 4.0 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <=
        1e-10);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  Rng rng(17);
  Mlp net = make_mlp(5, {16, 16}, 3, Activation::kRelu, true, rng);
  for (Dense& layer : net.layers)
    init_orthogonal(layer, std::sqrt(2.0), rng);
  Normalizer norm(5);
  Eigen::MatrixXd batch(64, 5);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 5; ++c) batch(r, c) = rng.normal() * 3.1 + 0.7;
  norm.update(batch);

  const auto dir = std::filesystem::temp_directory_path() / "cail_nn_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.json").string();
  Json j;
  j["format"] = "cail-model";
  j["mlp"] = json_from_mlp(net);
  j["normalizer"] = json_from_normalizer(norm);
  save_json_file(path, j);

  const Json loaded = load_json_file(path);
  const Mlp net2 = mlp_from_json(loaded.at("mlp"));
  const Normalizer norm2 = normalizer_from_json(loaded.at("normalizer"));

  REQUIRE(net2.layers.size() == net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(net2.layers[l].w == net.layers[l].w);
    CHECK(net2.layers[l].b == net.layers[l].b);
    CHECK(net2.layers[l].power_u == net.layers[l].power_u);
    CHECK(net2.layers[l].act == net.layers[l].act);
    CHECK(net2.layers[l].spectral_norm == net.layers[l].spectral_norm);
  }
  CHECK(norm2.count() == norm.count());
  CHECK(norm2.mean() == norm.mean());
  CHECK(norm2.m2() == norm.m2());
  std::filesystem::remove_all(dir);
}

TEST_CASE("adam state survives a checkpoint round-trip") {
  AdamConfig cfg;
  cfg.lr = 3e-4;
  cfg.beta2 = 0.9;
  Adam opt(cfg);
  Eigen::ArrayXd w(3), g(3);
  w << 0.1, -0.2, 0.3;
  g << 1.0, -2.0, 0.5;
  std::vector<TensorView> p = {{w.data(), 3}};
  std::vector<ConstTensorView> gv = {{g.data(), 3}};
  opt.step(p, gv);
  opt.step(p, gv);

  const Json j = json_from_adam(opt);
  Adam opt2 = adam_from_json(j);
  CHECK(opt2.step_count() == 2);
  CHECK(opt2.config().lr == 3e-4);
  REQUIRE(opt2.first_moments().size() == 1);
  CHECK((opt2.first_moments()[0] == opt.first_moments()[0]).all());
  CHECK((opt2.second_moments()[0] == opt.second_moments()[0]).all());

  // Continuing from the restored state matches continuing the original.
  Eigen::ArrayXd w2 = w;
  std::vector<TensorView> p2 = {{w2.data(), 3}};
  opt.step(p, gv);
  opt2.step(p2, gv);
  CHECK((w == w2).all());
}
