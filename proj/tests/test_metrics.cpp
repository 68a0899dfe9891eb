#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cail/metrics.hpp"
#include "cail/rng.hpp"
#include "oracles.hpp"

namespace {

using namespace cail;

// Random instance with deliberate ties: scores quantized to one decimal.
struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

Instance random_instance(Rng& rng, bool force_both_classes) {
  const int n = 2 + static_cast<int>(rng.index(199));
  Instance inst;
  inst.scores.resize(static_cast<std::size_t>(n));
  inst.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    inst.scores[static_cast<std::size_t>(i)] =
        std::round(rng.uniform(-1.0, 1.0) * 10.0) / 10.0;
    inst.labels[static_cast<std::size_t>(i)] = rng.uniform() < 0.3 ? 1 : 0;
  }
  if (force_both_classes) {
    inst.labels[0] = 1;
    inst.labels[static_cast<std::size_t>(n - 1)] = 0;
  } else {
    inst.labels[0] = 1;  // at least one positive
  }
  return inst;
}

}  // namespace

TEST_CASE("roc_auc frozen examples") {
  REQUIRE(roc_auc({0.9, 0.8, 0.1}, {1, 1, 0}) == 1.0);
  REQUIRE(roc_auc({0.9, 0.8, 0.1}, {1, 0, 1}) == 0.5);
  REQUIRE(roc_auc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}) == 0.5);
}

TEST_CASE("roc_auc equals the pair-count oracle exactly") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = random_instance(rng, true);
    REQUIRE(roc_auc(inst.scores, inst.labels) ==
            cail::test::auc_pair_count(inst.scores, inst.labels));
  }
}

TEST_CASE("roc_auc rank invariance and label swap") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = random_instance(rng, true);
    const double base = roc_auc(inst.scores, inst.labels);

    // Strictly increasing affine transform preserves ranks and ties.
    std::vector<double> shifted = inst.scores;
    for (double& s : shifted) s = 2.0 * s + 1.0;
    REQUIRE(roc_auc(shifted, inst.labels) == base);

    std::vector<int> swapped = inst.labels;
    for (int& y : swapped) y = 1 - y;
    REQUIRE(std::abs(roc_auc(inst.scores, swapped) - (1.0 - base)) < 1e-12);
  }
}

TEST_CASE("average_precision frozen examples") {
  // Perfect ranking: both positives above the negative.
  REQUIRE(average_precision({0.9, 0.8, 0.1}, {1, 1, 0}) == 1.0);
  // Ranking (+, -, +): 0.5 * 1 + 0.5 * (2/3).
  const double expected = 0.5 * 1.0 + 0.5 * (2.0 / 3.0);
  REQUIRE(average_precision({0.9, 0.8, 0.1}, {1, 0, 1}) == expected);
  REQUIRE(std::abs(expected - 0.8333) < 5e-5);
}

TEST_CASE("average_precision equals the rescan oracle exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = random_instance(rng, false);
    REQUIRE(average_precision(inst.scores, inst.labels) ==
            cail::test::average_precision_rescan(inst.scores, inst.labels));
  }
}

TEST_CASE("average_precision of random scores approximates the positive rate") {
  Rng rng(13);
  const int n = 10000;
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  int npos = 0;
  for (int i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] = rng.uniform();
    labels[static_cast<std::size_t>(i)] = (rng.uniform() < 0.5) ? 1 : 0;
    npos += labels[static_cast<std::size_t>(i)];
  }
  const double rate = static_cast<double>(npos) / n;
  const double ap = average_precision(scores, labels);
  REQUIRE(std::abs(ap - rate) < 0.02);
}

TEST_CASE("best_f1 frozen examples") {
  {
    const BestF1 b = best_f1({0.9, 0.8, 0.1}, {1, 1, 0});
    REQUIRE(b.f1 == 1.0);
    REQUIRE(b.threshold == 0.8);  // lowest maximizing threshold
  }
  {
    // Predict-all-positive wins: precision 2/3, recall 1 -> F1 = 0.8.
    const BestF1 b = best_f1({0.9, 0.8, 0.1}, {1, 0, 1});
    REQUIRE(b.f1 == 0.8);
    REQUIRE(b.threshold == 0.1);
  }
  {
    // Constant shift changes thresholds, never the F1 value.
    const BestF1 a = best_f1({0.9, 0.8, 0.1}, {1, 0, 1});
    const BestF1 b = best_f1({10.9, 10.8, 10.1}, {1, 0, 1});
    REQUIRE(a.f1 == b.f1);
    REQUIRE(b.threshold == 10.1);
  }
}

TEST_CASE("best_f1 equals the rescan oracle exactly") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = random_instance(rng, false);
    const BestF1 mine = best_f1(inst.scores, inst.labels);
    const cail::test::F1Point ref =
        cail::test::best_f1_rescan(inst.scores, inst.labels);
    REQUIRE(mine.f1 == ref.f1);
    REQUIRE(mine.threshold == ref.threshold);
  }
}

TEST_CASE("metric validation errors") {
  REQUIRE_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  REQUIRE_THROWS_AS(roc_auc({0.1, 0.2}, {0, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(average_precision({0.1, 0.2}, {0, 0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(best_f1({0.1, 0.2}, {0, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(roc_auc({}, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(roc_auc({0.1}, {1, 0}), std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(roc_auc({nan, 0.2}, {1, 0}), std::invalid_argument);
}

TEST_CASE("roc and pr curves") {
  const std::vector<double> scores{0.9, 0.8, 0.1};
  {
    const std::vector<RocPoint> pts = roc_curve(scores, {1, 1, 0});
    REQUIRE(pts.size() == 4);
    REQUIRE(pts.front().fpr == 0.0);
    REQUIRE(pts.front().tpr == 0.0);
    REQUIRE(pts.back().fpr == 1.0);
    REQUIRE(pts.back().tpr == 1.0);
    // Perfect separation passes through (0, 1).
    REQUIRE(pts[2].fpr == 0.0);
    REQUIRE(pts[2].tpr == 1.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      REQUIRE(pts[i].fpr >= pts[i - 1].fpr);
      REQUIRE(pts[i].tpr >= pts[i - 1].tpr);
    }
  }
  {
    const std::vector<PrPoint> pts = pr_curve(scores, {1, 0, 1});
    REQUIRE(pts.size() == 3);
    REQUIRE(pts[0].recall == 0.5);
    REQUIRE(pts[0].precision == 1.0);
    REQUIRE(pts[2].recall == 1.0);
    REQUIRE(pts[2].precision == 2.0 / 3.0);
  }
  {
    // Tied scores collapse to a single curve vertex.
    const std::vector<RocPoint> pts =
        roc_curve({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
    REQUIRE(pts.size() == 2);
    REQUIRE(pts.back().fpr == 1.0);
    REQUIRE(pts.back().tpr == 1.0);
  }
}
