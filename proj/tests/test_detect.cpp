#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cail/data.hpp"
#include "cail/detect.hpp"
#include "cail/rng.hpp"

namespace {

using namespace cail;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

double label_rate(const SlideDataset& ds) {
  return static_cast<double>(ds.positives()) / static_cast<double>(ds.size());
}

TransitionModel tiny_slide_model(std::uint64_t seed) {
  TransitionModelConfig cfg = detection_model_config();
  cfg.hidden = {16, 16};
  Rng rng(seed);
  return make_transition_model(cfg, rng);
}

}  // namespace

TEST_CASE("collect length accounting and determinism") {
  SlideParams p;
  Rng rng(5);
  const SlideDataset ds = collect(p, CollectPolicy::kRandom, 1, rng);
  REQUIRE(ds.size() == 30);
  REQUIRE(ds.episode_count() == 1);
  for (int t = 0; t < 30; ++t) {
    REQUIRE(ds.transitions[static_cast<std::size_t>(t)].step == t);
    REQUIRE(ds.transitions[static_cast<std::size_t>(t)].episode_id == 0);
  }
  // Chained transitions: s_next of step t equals s of step t+1.
  for (int t = 0; t + 1 < 30; ++t) {
    REQUIRE(ds.transitions[static_cast<std::size_t>(t)].s_next ==
            ds.transitions[static_cast<std::size_t>(t) + 1].s);
  }

  // Identical seed, identical file bytes.
  Rng r1(99), r2(99);
  const SlideDataset a = collect(p, CollectPolicy::kMixed, 10, r1);
  const SlideDataset b = collect(p, CollectPolicy::kMixed, 10, r2);
  const auto pa = temp_file("cail_test_collect_a.jsonl");
  const auto pb = temp_file("cail_test_collect_b.jsonl");
  write_dataset_jsonl(pa.string(), a);
  write_dataset_jsonl(pb.string(), b);
  REQUIRE(slurp(pa) == slurp(pb));
  std::filesystem::remove(pa);
  std::filesystem::remove(pb);
}

TEST_CASE("scripted data has more positive labels than random data") {
  SlideParams p;
  Rng rng(31);
  const SlideDataset random_ds = collect(p, CollectPolicy::kRandom, 1000, rng);
  const SlideDataset scripted_ds =
      collect(p, CollectPolicy::kScripted, 1000, rng);
  INFO("random " << label_rate(random_ds) << " scripted "
                 << label_rate(scripted_ds));
  REQUIRE(label_rate(scripted_ds) > label_rate(random_ds));
  REQUIRE(random_ds.positives() > 0);
}

TEST_CASE("mixed collection alternates policies") {
  SlideParams p;
  Rng rng(7);
  const SlideDataset ds = collect(p, CollectPolicy::kMixed, 6, rng);
  REQUIRE(ds.provenance == "mixed");
  REQUIRE(ds.episode_count() == 6);
  for (const SlideTransition& t : ds.transitions) {
    if (t.episode_id % 2 == 1) {
      // Scripted episodes replay the deterministic controller exactly.
      REQUIRE(t.a == scripted_action(p, to_state(t.s)));
    }
  }
}

TEST_CASE("jsonl round trip preserves every field") {
  SlideParams p;
  Rng rng(13);
  SlideDataset ds = collect(p, CollectPolicy::kMixed, 5, rng);
  ds.noise_level = 0.0;
  const auto path = temp_file("cail_test_roundtrip.jsonl");
  write_dataset_jsonl(path.string(), ds);
  const SlideDataset back = read_dataset_jsonl(path.string());
  std::filesystem::remove(path);

  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const SlideTransition& x = ds.transitions[i];
    const SlideTransition& y = back.transitions[i];
    REQUIRE(x.episode_id == y.episode_id);
    REQUIRE(x.step == y.step);
    REQUIRE(x.s == y.s);
    REQUIRE(x.a == y.a);
    REQUIRE(x.s_next == y.s_next);
    REQUIRE(x.contact == y.contact);
    REQUIRE(x.label == y.label);
    REQUIRE(x.goal == y.goal);
    REQUIRE(x.reward == y.reward);
  }
}

TEST_CASE("manifest counts agree with a recount") {
  SlideParams p;
  Rng rng(17);
  const SlideDataset ds = collect(p, CollectPolicy::kRandom, 20, rng);
  const nlohmann::json m = dataset_manifest(ds);
  REQUIRE(m.at("transitions").get<std::int64_t>() == 600);
  REQUIRE(m.at("episodes").get<std::int64_t>() == 20);
  std::int64_t pos = 0;
  for (const SlideTransition& t : ds.transitions) pos += t.label ? 1 : 0;
  REQUIRE(m.at("positives").get<std::int64_t>() == pos);
  REQUIRE(m.at("positive_rate").get<double>() ==
          static_cast<double>(pos) / 600.0);
  REQUIRE(m.at("provenance").get<std::string>() == "random");
}

TEST_CASE("dataset scoring is aligned and deterministic") {
  SlideParams p;
  Rng rng(23);
  const SlideDataset ds = collect(p, CollectPolicy::kMixed, 20, rng);
  const TransitionModel model = tiny_slide_model(3);
  const CaiConfig cfg = detection_cai_config(8);

  const ScoredDataset s1 = score_dataset(model, ds.states(), cfg, 1234);
  const ScoredDataset s2 = score_dataset(model, ds.states(), cfg, 1234);
  REQUIRE(s1.cai == s2.cai);
  REQUIRE(s1.entropy == s2.entropy);
  REQUIRE(s1.cai.size() == ds.size());

  const ScoredDataset s3 = score_dataset(model, ds.states(), cfg, 4321);
  REQUIRE(s1.cai != s3.cai);

  for (double v : s1.cai) {
    REQUIRE(std::isfinite(v));
    REQUIRE(v >= 0.0);
  }
}

TEST_CASE("noise sweep: level zero reproduces un-noised metrics exactly") {
  SlideParams p;
  Rng rng(29);
  const SlideDataset ds = collect(p, CollectPolicy::kMixed, 60, rng);
  REQUIRE(ds.positives() > 0);
  const TransitionModel model = tiny_slide_model(5);
  const CaiConfig cfg = detection_cai_config(8);
  const std::uint64_t seed = 777;

  const std::vector<NoiseSweepRow> rows =
      noise_sweep(model, ds, {0.0, 0.1}, cfg, seed);
  REQUIRE(rows.size() == 4);
  REQUIRE(rows[0].scorer == "cai");
  REQUIRE(rows[1].scorer == "entropy");
  REQUIRE(rows[0].noise_level == 0.0);
  REQUIRE(rows[2].noise_level == 0.1);

  const ScoredDataset direct = score_dataset(model, ds.states(), cfg, seed);
  const DetectionMetrics m = evaluate_detection(direct.cai, ds.labels());
  REQUIRE(rows[0].metrics.auc == m.auc);
  REQUIRE(rows[0].metrics.ap == m.ap);
  REQUIRE(rows[0].metrics.f1 == m.f1);
  REQUIRE(rows[0].metrics.threshold == m.threshold);

  // Determinism of the full sweep.
  const std::vector<NoiseSweepRow> again =
      noise_sweep(model, ds, {0.0, 0.1}, cfg, seed);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].metrics.auc == again[i].metrics.auc);
    REQUIRE(rows[i].metrics.ap == again[i].metrics.ap);
  }

  REQUIRE_THROWS_AS(noise_sweep(model, ds, {0.1, 0.0}, cfg, seed),
                    std::invalid_argument);
}

TEST_CASE("csv emission") {
  SlideParams p;
  Rng rng(41);
  const SlideDataset ds = collect(p, CollectPolicy::kMixed, 30, rng);
  const TransitionModel model = tiny_slide_model(7);
  const CaiConfig cfg = detection_cai_config(4);
  const std::vector<NoiseSweepRow> rows =
      noise_sweep(model, ds, {0.0, 0.05}, cfg, 55);

  const auto mpath = temp_file("cail_test_metrics.csv");
  write_metrics_csv(mpath.string(), rows, 55);
  std::ifstream in(mpath);
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "scorer,noise_level,auc,ap,f1,threshold,n,seed");
  int data_lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++data_lines;
    REQUIRE(std::count(line.begin(), line.end(), ',') == 7);
  }
  REQUIRE(data_lines == 4);
  std::filesystem::remove(mpath);

  const ScoredDataset scored = score_dataset(model, ds.states(), cfg, 55);
  const auto rpath = temp_file("cail_test_roc.csv");
  const auto ppath = temp_file("cail_test_pr.csv");
  write_roc_csv(rpath.string(), roc_curve(scored.cai, ds.labels()));
  write_pr_csv(ppath.string(), pr_curve(scored.cai, ds.labels()));
  REQUIRE(slurp(rpath).rfind("fpr,tpr\n", 0) == 0);
  REQUIRE(slurp(ppath).rfind("recall,precision\n", 0) == 0);
  std::filesystem::remove(rpath);
  std::filesystem::remove(ppath);
}

TEST_CASE("collect rejects invalid episode counts") {
  SlideParams p;
  Rng rng(1);
  REQUIRE_THROWS_AS(collect(p, CollectPolicy::kRandom, 0, rng),
                    std::invalid_argument);
}
