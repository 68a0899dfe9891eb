#include "cail/gaussian.hpp"

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "cail/rng.hpp"
#include "oracles.hpp"

using namespace cail;

namespace {

DiagGaussian gauss1(double mean, double var) {
  Eigen::VectorXd m(1), v(1);
  m << mean;
  v << var;
  return make_diag(m, v);
}

DiagGaussian random_gauss(int d, Rng& rng) {
  Eigen::VectorXd m(d), v(d);
  for (int k = 0; k < d; ++k) {
    m[k] = rng.uniform(-3.0, 3.0);
    v[k] = std::exp(rng.uniform(-2.5, 1.5));
  }
  return make_diag(m, v);
}

GaussianMixture random_mixture(int b, int d, Rng& rng) {
  std::vector<DiagGaussian> comps;
  comps.reserve(b);
  Eigen::VectorXd w(b);
  for (int i = 0; i < b; ++i) {
    comps.push_back(random_gauss(d, rng));
    w[i] = rng.uniform(0.2, 1.0);
  }
  w /= w.sum();
  return make_mixture(w, std::move(comps));
}

}  // namespace

TEST_CASE("entropy matches the closed form") {
  CHECK(entropy(gauss1(0.0, 1.0)) ==
        Catch::Approx(1.4189385332046727).epsilon(1e-12));
  // Two i.i.d. dims with var e: 2 * (1 + 0.5*log(2*pi*e)) - structural check.
  Eigen::VectorXd m = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(2, std::exp(1.0));
  CHECK(entropy(make_diag(m, v)) ==
        Catch::Approx(2.0 * (0.5 * kLog2Pi + 1.0)).epsilon(1e-12));
}

TEST_CASE("entropy applies the variance floor") {
  const double h = entropy(gauss1(0.0, 1e-18));
  CHECK(std::isfinite(h));
  CHECK(h == Catch::Approx(0.5 * (std::log(1e-12) + kLog2Pi + 1.0)).epsilon(1e-12));
}

TEST_CASE("kl_exact matches hand values and is zero on identical inputs") {
  CHECK(kl_exact(gauss1(0.0, 2.0), gauss1(0.0, 1.0)) ==
        Catch::Approx(0.5 * (1.0 - std::log(2.0))).epsilon(1e-12));
  CHECK(kl_exact(gauss1(0.0, 2.0), gauss1(0.0, 1.0)) ==
        Catch::Approx(0.153426).margin(1e-6));

  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    const DiagGaussian f = random_gauss(3, rng);
    CHECK(kl_exact(f, f) == 0.0);  // exactly, not approximately
  }
}

TEST_CASE("kl_exact is nonnegative on random pairs") {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const DiagGaussian f = random_gauss(2, rng);
    const DiagGaussian g = random_gauss(2, rng);
    CHECK(kl_exact(f, g) >= 0.0);
  }
}

TEST_CASE("log_prod_norm frozen examples") {
  CHECK(log_prod_norm(gauss1(0.0, 1.0), gauss1(0.0, 1.0)) ==
        Catch::Approx(-0.5 * (kLog2Pi + std::log(2.0))).epsilon(1e-12));
  CHECK(log_prod_norm(gauss1(0.0, 1.0), gauss1(0.0, 1.0)) ==
        Catch::Approx(-1.265512).margin(1e-6));
  CHECK(log_prod_norm(gauss1(0.0, 1.0), gauss1(3.0, 1.0)) ==
        Catch::Approx(-1.2655121234846454 - 9.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("log_prod_norm matches quadrature") {
  Rng rng(43);
  for (int i = 0; i < 20; ++i) {
    const int d = 1 + static_cast<int>(rng.index(3));
    const DiagGaussian f = random_gauss(d, rng);
    const DiagGaussian g = random_gauss(d, rng);
    const double expected = test::log_prod_norm_quadrature(f, g);
    CHECK(log_prod_norm(f, g) == Catch::Approx(expected).margin(1e-6));
  }
  // Symmetry: the product of densities is symmetric in its arguments.
  const DiagGaussian a = random_gauss(2, rng);
  const DiagGaussian b = random_gauss(2, rng);
  CHECK(log_prod_norm(a, b) == Catch::Approx(log_prod_norm(b, a)).epsilon(1e-14));
}

TEST_CASE("mixture bounds sandwich the Monte-Carlo KL") {
  Rng rng(44);
  for (int i = 0; i < 12; ++i) {
    const int d = 1 + static_cast<int>(rng.index(3));
    const int b = 1 + static_cast<int>(rng.index(6));
    const DiagGaussian f = random_gauss(d, rng);
    const GaussianMixture mix = random_mixture(b, d, rng);
    const double lo = kl_mixture_lower(f, mix);
    const double hi = kl_mixture_upper(f, mix);
    REQUIRE(lo <= hi + 1e-12);
    Rng mc_rng = Rng::from_keys(900, static_cast<std::uint64_t>(i));
    const auto mc = test::mc_kl_divergence(f, mix, 200000, mc_rng);
    CHECK(lo <= mc.mean + 4.0 * mc.se + 1e-9);
    CHECK(mc.mean - 4.0 * mc.se <= hi + 1e-9);
    const double mean = kl_mixture_mean(f, mix);
    CHECK(mean >= 0.0);
    CHECK(mean <= std::max(0.0, hi) + 1e-12);
  }
}

TEST_CASE("single-component mixture bounds") {
  Rng rng(45);
  for (int i = 0; i < 100; ++i) {
    const int d = 1 + static_cast<int>(rng.index(4));
    const DiagGaussian f = random_gauss(d, rng);
    GaussianMixture mix = uniform_mixture({random_gauss(d, rng)});
    const double exact = kl_exact(f, mix.comps[0]);
    // The upper bound collapses to the closed form bit-exactly.
    CHECK(kl_mixture_upper(f, mix) == exact);
    CHECK(kl_mixture_lower(f, mix) <= exact + 1e-12);
  }
}

TEST_CASE("worked single-component example: N(0,1) against N(1,1)") {
  const DiagGaussian f = gauss1(0.0, 1.0);
  const GaussianMixture mix = uniform_mixture({gauss1(1.0, 1.0)});
  const double expected_lower =
      -(-0.5 * (kLog2Pi + std::log(2.0)) - 0.25) - 1.4189385332046727;
  CHECK(kl_mixture_lower(f, mix) == Catch::Approx(expected_lower).epsilon(1e-12));
  CHECK(kl_mixture_upper(f, mix) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(kl_mixture_mean(f, mix) ==
        Catch::Approx(0.5 * (expected_lower + 0.5)).epsilon(1e-12));
}

TEST_CASE("identical component mixture scores exactly zero") {
  Rng rng(46);
  for (int i = 0; i < 50; ++i) {
    const int d = 1 + static_cast<int>(rng.index(3));
    const DiagGaussian f = random_gauss(d, rng);
    std::vector<DiagGaussian> comps(7, f);
    const GaussianMixture mix = uniform_mixture(std::move(comps));
    CHECK(std::abs(kl_mixture_upper(f, mix)) <= 1e-12);
    // Lower bound sits at d/2 * log(2/e) below zero; midpoint clamps to 0.
    CHECK(kl_mixture_lower(f, mix) ==
          Catch::Approx(0.5 * d * std::log(2.0 / std::exp(1.0))).margin(1e-9));
    CHECK(kl_mixture_mean(f, mix) == 0.0);
  }
}

TEST_CASE("variance floor keeps divergences finite") {
  const DiagGaussian f = gauss1(0.0, 1e-30);
  const DiagGaussian g = gauss1(0.5, 1e-30);
  CHECK(std::isfinite(kl_exact(f, g)));
  CHECK(std::isfinite(log_prod_norm(f, g)));
  const GaussianMixture mix = uniform_mixture({g});
  CHECK(std::isfinite(kl_mixture_mean(f, mix)));
}

TEST_CASE("construction validates inputs") {
  Eigen::VectorXd m(2), v(2);
  m << 0.0, 0.0;
  v << 1.0, -1.0;
  CHECK_THROWS_AS(make_diag(m, v), std::invalid_argument);
  v << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_diag(m, v), std::invalid_argument);
  Eigen::VectorXd m1(1);
  m1 << 0.0;
  CHECK_THROWS_AS(make_diag(m1, v), std::invalid_argument);

  Eigen::VectorXd w(2);
  w << 0.7, 0.7;  // does not sum to 1
  std::vector<DiagGaussian> comps = {gauss1(0.0, 1.0), gauss1(1.0, 1.0)};
  CHECK_THROWS_AS(make_mixture(w, comps), std::invalid_argument);
  w << 1.5, -0.5;  // negative weight
  CHECK_THROWS_AS(make_mixture(w, comps), std::invalid_argument);
}

TEST_CASE("logsumexp is exact for single elements and stable for large ones") {
  Eigen::ArrayXd one(1);
  one << -1234.5678;
  CHECK(logsumexp(one) == -1234.5678);
  Eigen::ArrayXd big(2);
  big << 1000.0, 1000.0;
  CHECK(logsumexp(big) == Catch::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
}
