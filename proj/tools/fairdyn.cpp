// fairdyn command-line driver: experiment sweeps, training comparisons,
// plotting, and the rollout / estimate utilities.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fairdyn/causal/effects.hpp"
#include "fairdyn/causal/io.hpp"
#include "fairdyn/common/error.hpp"
#include "fairdyn/common/parallel.hpp"
#include "fairdyn/harness/harness.hpp"

using namespace fairdyn;
namespace fs = std::filesystem;

namespace {

std::uint64_t default_seed() {
  const char* env = std::getenv("FAIRDYN_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("FAIRDYN_SEED is not an unsigned integer: ") + env);
  }
}

// Env from a JSON config file when given, else from the named preset.
envs::EnvParams load_env(const std::string& kind, const std::string& preset, const std::string& config_path) {
  if (!config_path.empty()) return envs::parse_env_config(harness::read_text_file(config_path));
  return envs::preset(envs::env_kind_from_string(kind), preset);
}

void write_output(const fs::path& path, const std::string& text) {
  harness::write_text_file(path.has_parent_path() ? path.parent_path() : fs::path("."), path.filename().string(), text);
}

struct Common {
  std::string env = "allocation";
  std::string preset;
  std::string env_config;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;

  std::uint64_t seed_or_default() const { return seed ? *seed : default_seed(); }
  std::size_t worker_count() const { return workers == 0 ? default_workers() : workers; }
};

void add_env_options(CLI::App* cmd, Common& c, const std::string& default_preset) {
  c.preset = default_preset;
  cmd->add_option("--env", c.env, "allocation or lending")->check(CLI::IsMember({"allocation", "lending"}));
  cmd->add_option("--preset", c.preset, "detect, unfair or fair");
  cmd->add_option("--env-config", c.env_config, "JSON env config; overrides --env and --preset")
      ->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal fairness diagnostics and fair model-based planning"};
  app.require_subcommand(1);

  // analytic
  std::string analytic_out;
  std::size_t analytic_points = 101;
  auto* analytic = app.add_subcommand("analytic", "closed-form effect sweep over w0 for the logistic model");
  analytic->add_option("--out", analytic_out, "output directory")->required();
  analytic->add_option("--points", analytic_points, "grid points per setting");

  // detect
  Common det;
  std::string detect_channel = "reward", detect_out;
  std::size_t detect_grid = 8, detect_episodes = 200, detect_resamples = 200;
  auto* detect = app.add_subcommand("detect", "dynamics-fairness heatmap over advantage parameters");
  add_env_options(detect, det, "detect");
  detect->add_option("--channel", detect_channel)->check(CLI::IsMember({"reward", "transition"}));
  detect->add_option("--grid", detect_grid, "points per axis");
  detect->add_option("--episodes", detect_episodes, "random-policy episodes per cell");
  detect->add_option("--resamples", detect_resamples, "bootstrap resamples per cell");
  detect->add_option("--seed", det.seed, "default: $FAIRDYN_SEED or 0");
  detect->add_option("--workers", det.workers, "0 uses all cores");
  detect->add_option("--out", detect_out, "output directory")->required();

  // train
  Common tr;
  std::vector<std::string> train_algos{"all"};
  std::size_t train_seeds = 5, train_epochs = 30;
  std::string train_out, learn_config;
  auto* train = app.add_subcommand("train", "learning curves for PETS and the fairness-aware planners");
  add_env_options(train, tr, "unfair");
  train->add_option("--algo", train_algos, "pets, fair-a, fair-s, insightfair or all (repeatable)")
      ->check(CLI::IsMember({"all", "pets", "fair-a", "fair-s", "insightfair"}));
  train->add_option("--seeds", train_seeds, "number of seeds, counting up from --seed");
  train->add_option("--seed", tr.seed, "first seed; default $FAIRDYN_SEED or 0");
  train->add_option("--epochs", train_epochs);
  train->add_option("--learn-config", learn_config, "JSON planner and model knobs")->check(CLI::ExistingFile);
  train->add_option("--workers", tr.workers, "0 uses all cores");
  train->add_option("--out", train_out, "output directory")->required();

  // plot
  std::string plot_in, plot_kind = "lines", plot_out, plot_title;
  auto* plot = app.add_subcommand("plot", "render a CSV as SVG");
  plot->add_option("--in", plot_in)->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", plot_kind)->check(CLI::IsMember({"lines", "heatmap", "bars"}));
  plot->add_option("--out", plot_out, "SVG path")->required();
  plot->add_option("--title", plot_title, "default: input file name");

  // rollout
  Common ro;
  std::size_t rollout_episodes = 200;
  std::string rollout_out;
  auto* rollout = app.add_subcommand("rollout", "random-policy trajectories as JSONL");
  add_env_options(rollout, ro, "detect");
  rollout->add_option("--episodes", rollout_episodes);
  rollout->add_option("--seed", ro.seed, "default: $FAIRDYN_SEED or 0");
  rollout->add_option("--out", rollout_out, "JSONL path")->required();

  // estimate
  Common est;
  std::string estimate_in, estimate_out;
  std::size_t estimate_resamples = 200;
  auto* estimate = app.add_subcommand("estimate", "plug-in TE/NDE/NIE with bootstrap errors from JSONL");
  add_env_options(estimate, est, "detect");
  estimate->add_option("--in", estimate_in, "JSONL trajectories")->required()->check(CLI::ExistingFile);
  estimate->add_option("--resamples", estimate_resamples);
  estimate->add_option("--seed", est.seed, "default: $FAIRDYN_SEED or 0");
  estimate->add_option("--workers", est.workers, "0 uses all cores");
  estimate->add_option("--out", estimate_out, "CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analytic) {
      harness::AnalyticConfig cfg;
      cfg.points = analytic_points;
      harness::run_analytic(cfg, analytic_out);
    } else if (*detect) {
      harness::DetectConfig cfg;
      cfg.env = load_env(det.env, det.preset, det.env_config);
      cfg.channel = harness::channel_from_string(detect_channel);
      cfg.grid = detect_grid;
      cfg.episodes = detect_episodes;
      cfg.resamples = detect_resamples;
      cfg.seed = det.seed_or_default();
      cfg.workers = det.worker_count();
      harness::run_detect(cfg, detect_out);
    } else if (*train) {
      harness::TrainConfig cfg;
      cfg.env = load_env(tr.env, tr.preset, tr.env_config);
      cfg.learn = harness::default_learn_config();
      if (!learn_config.empty()) {
        cfg.learn = harness::parse_learn_config(nlohmann::json::parse(harness::read_text_file(learn_config)), cfg.learn);
      }
      cfg.learn.epochs = train_epochs;
      bool all = false;
      for (const auto& a : train_algos) all = all || a == "all";
      if (!all) {
        cfg.algos.clear();
        for (const auto& a : train_algos) cfg.algos.push_back(planner::mode_from_string(a));
      }
      cfg.seeds.clear();
      for (std::size_t i = 0; i < train_seeds; ++i) cfg.seeds.push_back(tr.seed_or_default() + i);
      cfg.workers = tr.worker_count();
      harness::run_train(cfg, train_out);
    } else if (*plot) {
      const auto table = harness::read_csv(plot_in);
      const std::string title = plot_title.empty() ? fs::path(plot_in).filename().string() : plot_title;
      const std::string svg = harness::emit_svg(table, harness::plot_kind_from_string(plot_kind), title);
      write_output(plot_out, svg);
    } else if (*rollout) {
      const auto env = load_env(ro.env, ro.preset, ro.env_config);
      const auto data = envs::rollout(env, envs::random_policy(envs::num_actions(env)), ro.seed_or_default(),
                                      rollout_episodes);
      std::ostringstream jsonl;
      causal::write_jsonl(data, jsonl);
      write_output(rollout_out, jsonl.str());
    } else if (*estimate) {
      const auto env = load_env(est.env, est.preset, est.env_config);
      const auto data = causal::read_jsonl_file(estimate_in);
      const auto effects = causal::estimate_effects(data, envs::default_discretization(env),
                                                    {estimate_resamples, est.seed_or_default(), est.worker_count()});
      std::ostringstream csv;
      causal::write_effects_csv(csv, effects);
      write_output(estimate_out, csv.str());
    }
  } catch (const std::exception& e) {
    std::cerr << "fairdyn: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
