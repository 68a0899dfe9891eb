// Command-line front end: declarative configs in, CSV/JSONL artifacts out.
//
// Subcommands
//   collect      roll out episodes and write a labeled transition dataset
//   train-model  fit the Gaussian transition model on a dataset
//   eval-detect  score a test dataset and emit detection metrics + curves
//   score        write per-state influence/entropy scores for a dataset
//   train-rl     run goal-conditioned RL variants and emit learning curves
//
// Every command reads `--config FILE` (TOML subset) plus repeatable
// `--set key=value` overrides; `--seed` and `--out` are shorthand for the
// top-level `seed` and `out` keys. Unknown keys are rejected. Each run
// writes the fully-resolved configuration beside its outputs, so rerunning
// from that snapshot reproduces the run. Exit codes: 0 success, 1 usage or
// configuration error, 2 runtime failure.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cail/config.hpp"
#include "cail/data.hpp"
#include "cail/ddpg.hpp"
#include "cail/density.hpp"
#include "cail/detect.hpp"
#include "cail/influence.hpp"
#include "cail/model_io.hpp"
#include "cail/rng.hpp"
#include "cail/slide.hpp"
#include "cail/train.hpp"

namespace fs = std::filesystem;
using namespace cail;

namespace {

// Distinct base keys for each command's RNG stream so artifacts produced by
// different commands from the same seed are independent.
constexpr std::uint64_t kCollectStream = 0x636f6c6c;
constexpr std::uint64_t kModelInitStream = 0x6d696e69;
constexpr std::uint64_t kFitStream = 0x666974;

// ---------------------------------------------------------------------------
// Config schema helpers

SlideParams env_from_config(Config& cfg) {
  SlideParams p;
  p.world_lo = cfg.get_double("env.world_lo", p.world_lo);
  p.world_hi = cfg.get_double("env.world_hi", p.world_hi);
  p.barrier_pos = cfg.get_double("env.barrier_pos", p.barrier_pos);
  p.agent_halfwidth = cfg.get_double("env.agent_halfwidth", p.agent_halfwidth);
  p.obj_halfwidth = cfg.get_double("env.obj_halfwidth", p.obj_halfwidth);
  p.accel_scale = cfg.get_double("env.accel_scale", p.accel_scale);
  p.agent_damping = cfg.get_double("env.agent_damping", p.agent_damping);
  p.obj_drag = cfg.get_double("env.obj_drag", p.obj_drag);
  p.goal_halfwidth = cfg.get_double("env.goal_halfwidth", p.goal_halfwidth);
  p.goal_center_lo = cfg.get_double("env.goal_center_lo", p.goal_center_lo);
  p.goal_center_hi = cfg.get_double("env.goal_center_hi", p.goal_center_hi);
  p.episode_len = static_cast<int>(cfg.get_int("env.episode_len", p.episode_len));
  if (p.episode_len < 1) throw ConfigError("env.episode_len must be >= 1");
  if (p.world_lo >= p.world_hi) throw ConfigError("env world bounds inverted");
  if (p.agent_halfwidth <= 0 || p.obj_halfwidth <= 0)
    throw ConfigError("env halfwidths must be positive");
  if (p.barrier_pos <= p.world_lo || p.barrier_pos >= p.world_hi)
    throw ConfigError("env.barrier_pos must lie inside the world");
  if (p.goal_center_lo > p.goal_center_hi)
    throw ConfigError("env goal range inverted");
  return p;
}

std::vector<int> int_list(Config& cfg, const std::string& key,
                          const std::vector<int>& def) {
  std::vector<std::int64_t> wide(def.begin(), def.end());
  std::vector<int> out;
  for (std::int64_t v : cfg.get_int_list(key, wide))
    out.push_back(static_cast<int>(v));
  return out;
}

// Reads [model] keys on top of `base`; dimensions stay owned by the caller.
TransitionModelConfig model_from_config(Config& cfg,
                                        TransitionModelConfig base) {
  base.hidden = int_list(cfg, "model.hidden", base.hidden);
  base.activation = activation_from_name(
      cfg.get_string("model.activation", activation_name(base.activation)));
  base.spectral_norm = cfg.get_bool("model.spectral_norm", base.spectral_norm);
  base.normalize_input =
      cfg.get_bool("model.normalize_input", base.normalize_input);
  base.target_scale = cfg.get_double("model.target_scale", base.target_scale);
  base.var_floor = cfg.get_double("model.var_floor", base.var_floor);
  base.var_cap = cfg.get_double("model.var_cap", base.var_cap);
  base.batch_size =
      static_cast<int>(cfg.get_int("model.batch_size", base.batch_size));
  base.adam.lr = cfg.get_double("model.lr", base.adam.lr);
  base.adam.beta1 = cfg.get_double("model.beta1", base.adam.beta1);
  base.adam.beta2 = cfg.get_double("model.beta2", base.adam.beta2);
  base.adam.eps = cfg.get_double("model.adam_eps", base.adam.eps);
  return base;
}

CaiConfig cai_from_config(Config& cfg, CaiConfig base) {
  base.k = static_cast<int>(cfg.get_int("cai.k", base.k));
  const double lo = cfg.get_double("cai.action_lo", base.action_lo(0));
  const double hi = cfg.get_double("cai.action_hi", base.action_hi(0));
  base.action_lo.setConstant(lo);
  base.action_hi.setConstant(hi);
  validate(base);
  return base;
}

fs::path prepare_out_dir(Config& cfg, const std::string& default_dir) {
  const fs::path out = cfg.get_string("out", default_dir);
  fs::create_directories(out);
  return out;
}

CollectPolicy parse_policy(const std::string& name) {
  if (name == "random") return CollectPolicy::kRandom;
  if (name == "scripted") return CollectPolicy::kScripted;
  if (name == "mixed") return CollectPolicy::kMixed;
  throw ConfigError("collect.policy must be random|scripted|mixed, got: " +
                    name);
}

// ---------------------------------------------------------------------------
// collect

void cmd_collect(Config& cfg) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const int episodes = static_cast<int>(cfg.get_int("collect.episodes", 1000));
  const CollectPolicy policy =
      parse_policy(cfg.get_string("collect.policy", "mixed"));
  const SlideParams env = env_from_config(cfg);
  const fs::path out = prepare_out_dir(cfg, "runs/collect");
  cfg.require_consumed();
  cfg.write_resolved((out / "config.toml").string());

  Rng rng = Rng::from_keys(seed, kCollectStream);
  const SlideDataset ds = collect(env, policy, episodes, rng);
  write_dataset_jsonl((out / "dataset.jsonl").string(), ds);

  Json manifest = dataset_manifest(ds);
  manifest["seed"] = seed;
  save_json_file((out / "manifest.json").string(), manifest);

  std::cout << "collect: wrote " << ds.size() << " transitions ("
            << manifest["positives"].get<std::int64_t>()
            << " positive) to " << (out / "dataset.jsonl").string() << "\n";
}

// ---------------------------------------------------------------------------
// train-model

void cmd_train_model(Config& cfg) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const std::string train_path = cfg.get_string("data.train");
  const std::string resume_path = cfg.get_string("fit.resume", "");
  FitSchedule schedule;
  schedule.max_epochs =
      static_cast<int>(cfg.get_int("fit.max_epochs", schedule.max_epochs));
  schedule.eval_every =
      static_cast<int>(cfg.get_int("fit.eval_every", schedule.eval_every));
  schedule.patience =
      static_cast<int>(cfg.get_int("fit.patience", schedule.patience));
  // When resuming, the checkpoint's stored hyperparameters win; the [model]
  // keys are still resolved so the snapshot stays complete.
  const TransitionModelConfig model_cfg =
      model_from_config(cfg, detection_model_config());
  const fs::path out = prepare_out_dir(cfg, "runs/train-model");
  cfg.require_consumed();
  cfg.write_resolved((out / "config.toml").string());

  const SlideDataset ds = read_dataset_jsonl(train_path);
  if (ds.size() == 0) throw std::runtime_error("empty training dataset");

  TransitionModel model;
  int prior_epochs = 0;
  if (!resume_path.empty()) {
    const Json j = load_json_file(resume_path);
    model = transition_model_from_json(j);
    prior_epochs = j.value("epochs_done", 0);
  } else {
    Rng init_rng = Rng::from_keys(seed, kModelInitStream);
    model = make_transition_model(model_cfg, init_rng);
  }

  const TransitionBatch batch =
      make_batch(model.cfg, ds.states(), ds.actions(), ds.next_states());
  std::vector<std::int64_t> episode_of;
  episode_of.reserve(ds.size());
  for (const SlideTransition& t : ds.transitions)
    episode_of.push_back(t.episode_id);

  Rng fit_rng = Rng::from_keys(seed, kFitStream, prior_epochs > 0 ? 1u : 0u);
  const FitResult res = fit(model, batch, episode_of, schedule, fit_rng);

  {
    std::ofstream log(out / "fit_log.csv");
    if (!log) throw std::runtime_error("cannot open fit_log.csv for writing");
    log << "epoch,val_mse\n";
    log.precision(17);
    for (const FitEval& e : res.trace)
      log << (prior_epochs + e.epoch) << ',' << e.val_mse << "\n";
    if (!log) throw std::runtime_error("write failed: fit_log.csv");
  }

  Json meta;
  meta["epochs_done"] = prior_epochs + res.epochs_run;
  meta["best_epoch"] = prior_epochs + res.best_epoch;
  meta["best_mse"] = res.best_mse;
  meta["early_stopped"] = res.early_stopped;
  meta["seed"] = seed;
  save_transition_model((out / "model.json").string(), model, meta);

  std::cout << "train-model: " << res.epochs_run << " epochs ("
            << prior_epochs << " prior), best val MSE " << res.best_mse
            << " at epoch " << (prior_epochs + res.best_epoch) << ", wrote "
            << (out / "model.json").string() << "\n";
}

// ---------------------------------------------------------------------------
// eval-detect

void cmd_eval_detect(Config& cfg) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const std::string test_path = cfg.get_string("data.test");
  const std::string ckpt_path = cfg.get_string("model.checkpoint");
  const std::vector<double> levels =
      cfg.get_double_list("noise.levels", {0.0});
  const CaiConfig cai_cfg = cai_from_config(cfg, detection_cai_config());
  const fs::path out = prepare_out_dir(cfg, "runs/eval-detect");
  cfg.require_consumed();
  cfg.write_resolved((out / "config.toml").string());

  const SlideDataset ds = read_dataset_jsonl(test_path);
  const std::int64_t pos = ds.positives();
  if (pos == 0 || pos == static_cast<std::int64_t>(ds.size()))
    throw std::runtime_error(
        "test dataset must contain both classes (positives: " +
        std::to_string(pos) + " of " + std::to_string(ds.size()) + ")");

  const TransitionModel model = load_transition_model(ckpt_path);
  const std::vector<NoiseSweepRow> rows =
      noise_sweep(model, ds, levels, cai_cfg, seed);
  write_metrics_csv((out / "metrics.csv").string(), rows, seed);

  // Curve dumps for the clean (first) level, both scorers.
  const ScoredDataset scored =
      score_dataset(model, ds.states(), cai_cfg, seed);
  const std::vector<int> labels = ds.labels();
  write_roc_csv((out / "roc_cai.csv").string(), roc_curve(scored.cai, labels));
  write_pr_csv((out / "pr_cai.csv").string(), pr_curve(scored.cai, labels));
  write_roc_csv((out / "roc_entropy.csv").string(),
                roc_curve(scored.entropy, labels));
  write_pr_csv((out / "pr_entropy.csv").string(),
               pr_curve(scored.entropy, labels));

  std::cout << "eval-detect: " << rows.size() << " metric rows over "
            << levels.size() << " noise level(s)\n";
  for (const NoiseSweepRow& r : rows)
    std::cout << "  " << r.scorer << " @ " << r.noise_level << ": AUC "
              << r.metrics.auc << ", AP " << r.metrics.ap << ", F1 "
              << r.metrics.f1 << "\n";
}

// ---------------------------------------------------------------------------
// score

void cmd_score(Config& cfg) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const std::string states_path = cfg.get_string("data.states");
  const std::string ckpt_path = cfg.get_string("model.checkpoint");
  const CaiConfig cai_cfg = cai_from_config(cfg, detection_cai_config());
  const fs::path out = prepare_out_dir(cfg, "runs/score");
  cfg.require_consumed();
  cfg.write_resolved((out / "config.toml").string());

  const SlideDataset ds = read_dataset_jsonl(states_path);
  if (ds.size() == 0) throw std::runtime_error("empty states dataset");
  const TransitionModel model = load_transition_model(ckpt_path);
  const ScoredDataset scored =
      score_dataset(model, ds.states(), cai_cfg, seed);

  const fs::path path = out / "scores.jsonl";
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Json j;
    j["state_id"] = i;
    j["cai"] = scored.cai[i];
    j["entropy"] = scored.entropy[i];
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
  std::cout << "score: wrote " << ds.size() << " rows to " << path.string()
            << "\n";
}

// ---------------------------------------------------------------------------
// train-rl

struct RlRunSpec {
  Variant variant = Variant::kBaseline;
  std::uint64_t seed = 0;
  fs::path dir;
};

struct RlRunResult {
  std::vector<CurveRow> curve;
  double final_success = 0.0;
};

TrainConfig rl_config_from(Config& cfg) {
  TrainConfig base = default_train_config();
  base.env = env_from_config(cfg);

  AgentConfig& a = base.agent;
  a.hidden = int_list(cfg, "agent.hidden", a.hidden);
  a.gamma = cfg.get_double("agent.gamma", a.gamma);
  a.polyak = cfg.get_double("agent.polyak", a.polyak);
  a.lr = cfg.get_double("agent.lr", a.lr);
  a.batch_size = static_cast<int>(cfg.get_int("agent.batch_size", a.batch_size));
  a.updates_per_episode = static_cast<int>(
      cfg.get_int("agent.updates_per_episode", a.updates_per_episode));
  a.action_noise = cfg.get_double("agent.action_noise", a.action_noise);
  a.epsilon = cfg.get_double("agent.epsilon", a.epsilon);
  a.action_l2 = cfg.get_double("agent.action_l2", a.action_l2);
  a.her_future_p = cfg.get_double("agent.her_future_p", a.her_future_p);
  a.max_bonus = cfg.get_double("agent.max_bonus", a.max_bonus);

  base.model = model_from_config(cfg, base.model);
  base.cai = cai_from_config(cfg, base.cai);
  base.lambda_bonus = cfg.get_double("rl.lambda_bonus", base.lambda_bonus);
  base.warmup_episodes =
      static_cast<int>(cfg.get_int("rl.warmup", base.warmup_episodes));
  base.train_episodes =
      static_cast<int>(cfg.get_int("rl.episodes", base.train_episodes));
  base.eval_every = static_cast<int>(cfg.get_int("rl.eval_every", base.eval_every));
  base.eval_episodes =
      static_cast<int>(cfg.get_int("rl.eval_episodes", base.eval_episodes));
  base.buffer_capacity = static_cast<std::size_t>(
      cfg.get_int("rl.buffer", static_cast<std::int64_t>(base.buffer_capacity)));

  OnlineSchedule& s = base.schedule;
  s.every_episodes =
      static_cast<int>(cfg.get_int("schedule.every", s.every_episodes));
  s.warmup_batches =
      static_cast<int>(cfg.get_int("schedule.warmup_batches", s.warmup_batches));
  s.mid_batches =
      static_cast<int>(cfg.get_int("schedule.mid_batches", s.mid_batches));
  s.mid_until_episode = static_cast<int>(
      cfg.get_int("schedule.mid_until", s.mid_until_episode));
  s.late_batches =
      static_cast<int>(cfg.get_int("schedule.late_batches", s.late_batches));
  s.warmup_episodes = base.warmup_episodes;  // kept in lockstep by design
  return base;
}

RlRunResult run_rl_once(const TrainConfig& base, const RlRunSpec& spec,
                        bool resume_enabled, int checkpoint_every,
                        std::mutex& log_mutex) {
  TrainConfig cfg = base;
  cfg.seed = spec.seed;
  fs::create_directories(spec.dir);
  const fs::path ckpt = spec.dir / "checkpoint.json";

  std::optional<RunState> resume;
  if (resume_enabled && fs::exists(ckpt)) {
    resume = load_run_state(ckpt.string());
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cout << "[" << to_string(spec.variant) << " s" << spec.seed
              << "] resuming at episode " << resume->episodes_done << "\n";
  }

  int evals_seen = 0;
  const auto on_eval = [&](const RunState& st) {
    ++evals_seen;
    if (checkpoint_every > 0 && evals_seen % checkpoint_every == 0)
      save_run_state(ckpt.string(), st);
    std::lock_guard<std::mutex> lock(log_mutex);
    const CurveRow& row = st.curve.back();
    std::cout << "[" << to_string(spec.variant) << " s" << spec.seed
              << "] episode " << row.episode << ": success "
              << row.success_rate << "\n";
  };

  const RunState st =
      train<true>(cfg, spec.variant, std::move(resume), on_eval);
  save_run_state(ckpt.string(), st);

  std::ofstream curve(spec.dir / "curve.csv");
  if (!curve) throw std::runtime_error("cannot write curve.csv");
  write_curve_rows(curve, st.curve, spec.seed, spec.variant);
  if (!curve) throw std::runtime_error("write failed: curve.csv");

  RlRunResult out;
  out.curve = st.curve;
  out.final_success = st.curve.empty() ? 0.0 : st.curve.back().success_rate;
  return out;
}

void cmd_train_rl(Config& cfg) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  std::vector<Variant> variants;
  for (const std::string& name :
       cfg.get_string_list("rl.variants", {"baseline"}))
    variants.push_back(parse_variant(name));
  std::vector<std::uint64_t> seeds;
  for (std::int64_t s : cfg.get_int_list(
           "rl.seeds", {static_cast<std::int64_t>(seed)}))
    seeds.push_back(static_cast<std::uint64_t>(s));
  if (variants.empty() || seeds.empty())
    throw ConfigError("rl.variants and rl.seeds must be non-empty");
  const bool resume_enabled = cfg.get_bool("rl.resume", true);
  const int checkpoint_every =
      static_cast<int>(cfg.get_int("rl.checkpoint_every", 1));
  const int workers =
      std::max(1, static_cast<int>(cfg.get_int("workers", 1)));
  const TrainConfig base = rl_config_from(cfg);
  validate(base);
  const fs::path out = prepare_out_dir(cfg, "runs/train-rl");
  cfg.require_consumed();
  cfg.write_resolved((out / "config.toml").string());

  std::vector<RlRunSpec> specs;
  for (const Variant v : variants)
    for (const std::uint64_t s : seeds) {
      RlRunSpec spec;
      spec.variant = v;
      spec.seed = s;
      spec.dir = out / (std::string(to_string(v)) + "_s" + std::to_string(s));
      specs.push_back(spec);
    }

  // Fan the independent runs out over a small worker pool. Each run's RNG
  // streams derive only from its own seed, and results land in per-run
  // slots, so the outputs do not depend on the worker count.
  std::vector<RlRunResult> results(specs.size());
  std::vector<std::string> errors(specs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        results[i] = run_rl_once(base, specs[i], resume_enabled,
                                 checkpoint_every, log_mutex);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers == 1 || specs.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n_threads =
        std::min<int>(workers, static_cast<int>(specs.size()));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  bool failed = false;
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (!errors[i].empty()) {
      failed = true;
      std::cerr << "run " << to_string(specs[i].variant) << " s"
                << specs[i].seed << " failed: " << errors[i] << "\n";
    }
  if (failed) throw std::runtime_error("one or more RL runs failed");

  // One combined CSV keyed by (variant, seed), in declaration order.
  const fs::path curves_path = out / "curves.csv";
  std::ofstream curves(curves_path);
  if (!curves) throw std::runtime_error("cannot write curves.csv");
  bool header = true;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    write_curve_rows(curves, results[i].curve, specs[i].seed,
                     specs[i].variant, header);
    header = false;
  }
  if (!curves) throw std::runtime_error("write failed: curves.csv");

  std::cout << "train-rl: " << specs.size() << " run(s) -> "
            << curves_path.string() << "\n";
  for (std::size_t i = 0; i < specs.size(); ++i)
    std::cout << "  " << to_string(specs[i].variant) << " s" << specs[i].seed
              << ": final success " << results[i].final_success << "\n";
}

// ---------------------------------------------------------------------------
// Option plumbing

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::int64_t> seed;
  std::string out;
  std::optional<std::int64_t> workers;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_workers) {
  cmd->add_option("--config", o.config_path,
                  "Config file (TOML subset: [section], key = value)");
  cmd->add_option("--set", o.sets,
                  "Override a config key, e.g. --set rl.episodes=500")
      ->take_all();
  cmd->add_option("--seed", o.seed, "Shorthand for --set seed=N");
  cmd->add_option("--out", o.out, "Shorthand for --set out=DIR");
  if (with_workers)
    cmd->add_option("--workers", o.workers,
                    "Worker threads for fanned-out runs (results are "
                    "independent of this)");
}

Config build_config(const CommonOpts& o) {
  Config cfg = o.config_path.empty() ? Config()
                                     : Config::from_file(o.config_path);
  for (const std::string& s : o.sets) cfg.apply_override(s);
  if (o.seed) cfg.apply_override("seed=" + std::to_string(*o.seed));
  if (!o.out.empty())
    cfg.apply_override("out=" + config_detail::escape_string(o.out));
  if (o.workers) cfg.apply_override("workers=" + std::to_string(*o.workers));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-aware RL laboratory: datasets, transition models, "
               "detection metrics, and learning-curve experiments"};
  app.require_subcommand(1);

  CommonOpts collect_opts, train_model_opts, eval_detect_opts, score_opts,
      train_rl_opts;
  CLI::App* c_collect =
      app.add_subcommand("collect", "Collect a labeled transition dataset");
  add_common(c_collect, collect_opts, false);
  CLI::App* c_train_model =
      app.add_subcommand("train-model", "Fit the transition model");
  add_common(c_train_model, train_model_opts, false);
  CLI::App* c_eval_detect = app.add_subcommand(
      "eval-detect", "Evaluate influence detection on a test dataset");
  add_common(c_eval_detect, eval_detect_opts, false);
  CLI::App* c_score =
      app.add_subcommand("score", "Score a dataset's states");
  add_common(c_score, score_opts, false);
  CLI::App* c_train_rl = app.add_subcommand(
      "train-rl", "Train RL variants and write learning curves");
  add_common(c_train_rl, train_rl_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(c_collect)) {
      Config cfg = build_config(collect_opts);
      cmd_collect(cfg);
    } else if (app.got_subcommand(c_train_model)) {
      Config cfg = build_config(train_model_opts);
      cmd_train_model(cfg);
    } else if (app.got_subcommand(c_eval_detect)) {
      Config cfg = build_config(eval_detect_opts);
      cmd_eval_detect(cfg);
    } else if (app.got_subcommand(c_score)) {
      Config cfg = build_config(score_opts);
      cmd_score(cfg);
    } else if (app.got_subcommand(c_train_rl)) {
      Config cfg = build_config(train_rl_opts);
      cmd_train_rl(cfg);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
