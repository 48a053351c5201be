#include <cmath>
#include <fstream>
#include <sstream>

#include "fairdyn/causal/effects.hpp"
#include "fairdyn/common/error.hpp"
#include "fairdyn/common/format.hpp"
#include "fairdyn/common/parallel.hpp"
#include "fairdyn/common/rng.hpp"
#include "fairdyn/harness/harness.hpp"

namespace fairdyn::harness {

namespace {

std::string weight_tag(double w) {
  std::ostringstream s;
  s << w;
  return s.str();
}

}  // namespace

void AnalyticConfig::validate() const {
  require(points >= 2, ErrorCode::kInvalidArgument, "analytic sweep needs at least 2 points");
  require(lo < hi, ErrorCode::kInvalidArgument, "analytic sweep needs lo < hi");
  require(!shared_weights.empty(), ErrorCode::kInvalidArgument, "analytic sweep needs a weight setting");
}

std::vector<AnalyticSetting> run_analytic(const AnalyticConfig& config) {
  config.validate();
  std::vector<AnalyticSetting> out;
  for (double w : config.shared_weights) {
    analytic::LogisticModelParams p;
    p.w1 = p.w2 = p.w3 = w;
    out.push_back({w, analytic::sweep_w0(p, config.lo, config.hi, config.points)});
  }
  return out;
}

std::vector<AnalyticSetting> run_analytic(const AnalyticConfig& config, const std::filesystem::path& out_dir) {
  auto settings = run_analytic(config);
  Manifest m;
  m.command = "analytic";
  m.config = {{"lo", config.lo}, {"hi", config.hi}, {"points", config.points},
              {"shared_weights", config.shared_weights}};
  for (const auto& s : settings) {
    std::ostringstream csv;
    analytic::write_sweep_csv(csv, s.rows);
    const std::string name = "analytic_w" + weight_tag(s.w) + ".csv";
    write_text_file(out_dir, name, csv.str());
    m.outputs.push_back(name);
  }
  m.write(out_dir);
  return settings;
}

std::string_view to_string(Channel channel) { return channel == Channel::kReward ? "reward" : "transition"; }

Channel channel_from_string(std::string_view name) {
  if (name == "reward") return Channel::kReward;
  if (name == "transition") return Channel::kTransition;
  fail(ErrorCode::kInvalidArgument, "unknown channel '" + std::string(name) + "'");
}

double DetectConfig::range_hi() const {
  if (hi > 0.0) return hi;
  if (channel == Channel::kTransition) return 0.5;
  return envs::kind_of(env) == envs::EnvKind::kAllocation ? 1.0 : 0.2;
}

void DetectConfig::validate() const {
  envs::validate(env);
  require(grid >= 2, ErrorCode::kInvalidArgument, "detect grid needs at least 2 points per axis");
  require(episodes >= 1, ErrorCode::kInvalidArgument, "detect needs at least one episode per cell");
  require(lo >= 0.0 && range_hi() > lo, ErrorCode::kInvalidArgument, "detect range must satisfy 0 <= lo < hi");
  require(tau_multiplier > 0.0, ErrorCode::kInvalidArgument, "tau multiplier must be positive");
}

HeatmapResult run_detect(const DetectConfig& config) {
  config.validate();
  HeatmapResult result;
  result.channel = config.channel;
  result.grid = config.grid;
  const double hi = config.range_hi();
  for (std::size_t i = 0; i < config.grid; ++i) {
    result.axis.push_back(config.lo + (hi - config.lo) * static_cast<double>(i) / static_cast<double>(config.grid - 1));
  }
  result.cells.resize(config.grid * config.grid);
  const Rng base(config.seed);
  const int menu = envs::num_actions(config.env);

  parallel_for(result.cells.size(), config.workers, [&](std::size_t cell) {
    const double a = result.axis[cell / config.grid];
    const double b = result.axis[cell % config.grid];
    envs::EnvParams params = config.env;
    std::visit(
        [&](auto& p) {
          // The other channel stays at zero relative advantage.
          if (config.channel == Channel::kReward) {
            p.alpha = {a, b};
            p.beta = {0.0, 0.0};
          } else {
            p.beta = {a, b};
            p.alpha = {0.0, 0.0};
          }
        },
        params);
    Rng cell_rng = base.substream(cell);
    const std::uint64_t rollout_seed = cell_rng.engine()();
    const std::uint64_t boot_seed = cell_rng.engine()();
    const auto data = envs::rollout(params, envs::random_policy(menu), rollout_seed, config.episodes);
    const auto effects =
        causal::estimate_effects(data, envs::default_discretization(params), {config.resamples, boot_seed, 1});
    HeatmapCell& c = result.cells[cell];
    c.row_param = a;
    c.col_param = b;
    if (config.channel == Channel::kReward) {
      c.nde = effects.nde.scalar();
      c.std_error = effects.nde.scalar_error();
    } else {
      const auto& v = effects.nde_next_state;
      std::size_t best = 0;
      for (std::size_t d = 1; d < v.value.size(); ++d) {
        if (std::fabs(v.value[d]) > std::fabs(v.value[best])) best = d;
      }
      c.nde = v.value[best];
      c.std_error = v.std_error[best];
    }
    c.tau = config.tau_multiplier * c.std_error;
  });
  return result;
}

void write_heatmap_csv(std::ostream& out, const HeatmapResult& result) {
  out << "row_param,col_param,nde,stderr,tau\n";
  for (const auto& c : result.cells) {
    out << format_number(c.row_param) << ',' << format_number(c.col_param) << ',' << format_number(c.nde) << ','
        << format_number(c.std_error) << ',' << format_number(c.tau) << '\n';
  }
}

HeatmapResult run_detect(const DetectConfig& config, const std::filesystem::path& out_dir) {
  auto result = run_detect(config);
  std::ostringstream csv;
  write_heatmap_csv(csv, result);
  const std::string name = "detect_" + std::string(to_string(config.channel)) + ".csv";
  write_text_file(out_dir, name, csv.str());
  Manifest m;
  m.command = "detect";
  m.config = {{"env", nlohmann::ordered_json::parse(envs::env_config_json(config.env))},
              {"channel", to_string(config.channel)},
              {"grid", config.grid},
              {"lo", config.lo},
              {"hi", config.range_hi()},
              {"episodes", config.episodes},
              {"behavior_policy", "uniform-random"},
              {"resamples", config.resamples},
              {"tau_multiplier", config.tau_multiplier}};
  m.seeds = {config.seed};
  m.outputs = {name};
  m.write(out_dir);
  return result;
}

planner::LearnConfig default_learn_config() {
  planner::LearnConfig c;
  c.plan.population = 100;
  c.plan.elites = 10;
  c.plan.iterations = 3;
  c.plan.penalty = 1.0;
  c.plan.state_penalty = 10.0;
  c.model.optimizer = model::Optimizer::kAdam;
  c.model.learning_rate = 3e-3;
  return c;
}

void TrainConfig::validate() const {
  envs::validate(env);
  require(!algos.empty(), ErrorCode::kInvalidArgument, "train needs at least one algorithm");
  require(!seeds.empty(), ErrorCode::kInvalidArgument, "train needs at least one seed");
  learn.plan.validate();
  require(learn.epochs >= 1, ErrorCode::kInvalidArgument, "train needs at least one epoch");
}

std::vector<TrainRun> run_train(const TrainConfig& config) {
  config.validate();
  std::vector<TrainRun> runs;
  for (auto algo : config.algos) {
    for (auto seed : config.seeds) runs.push_back({algo, seed, {}});
  }
  parallel_for(runs.size(), config.workers, [&](std::size_t i) {
    planner::LearnConfig lc = config.learn;
    lc.plan.mode = runs[i].algo;
    lc.seed = runs[i].seed;
    runs[i].result = planner::learn(config.env, lc);
  });
  return runs;
}

void write_mean_curve_csv(std::ostream& out, const std::vector<const TrainRun*>& runs) {
  require(!runs.empty(), ErrorCode::kInvalidArgument, "no runs to average");
  const std::size_t epochs = runs.front()->result.epochs.size();
  out << "epoch,return,gap,abs_gap\n";
  for (std::size_t e = 0; e < epochs; ++e) {
    double ret = 0.0, gap = 0.0, abs_gap = 0.0;
    for (const auto* r : runs) {
      const auto& log = r->result.epochs.at(e);
      ret += log.ret;
      gap += log.gap;
      abs_gap += std::fabs(log.gap);
    }
    const double n = static_cast<double>(runs.size());
    out << e << ',' << format_number(ret / n) << ',' << format_number(gap / n) << ',' << format_number(abs_gap / n)
        << '\n';
  }
}

std::vector<TrainRun> run_train(const TrainConfig& config, const std::filesystem::path& out_dir) {
  auto runs = run_train(config);
  Manifest m;
  m.command = "train";
  nlohmann::ordered_json algos = nlohmann::ordered_json::array();
  for (auto a : config.algos) algos.push_back(planner::to_string(a));
  m.config = {{"env", nlohmann::ordered_json::parse(envs::env_config_json(config.env))},
              {"algos", algos},
              {"learn", learn_config_json(config.learn)}};
  m.seeds = config.seeds;
  for (auto algo : config.algos) {
    const std::string tag = "train_" + std::string(planner::to_string(algo));
    std::vector<const TrainRun*> group;
    for (const auto& r : runs) {
      if (r.algo != algo) continue;
      group.push_back(&r);
      const std::string stem = tag + "_seed" + std::to_string(r.seed);
      std::ostringstream epochs, episode;
      planner::write_epoch_csv(epochs, r.result.epochs);
      planner::write_episode_csv(episode, r.result.episodes.back());
      write_text_file(out_dir, stem + "_epochs.csv", epochs.str());
      write_text_file(out_dir, stem + "_episode.csv", episode.str());
      m.outputs.push_back(stem + "_epochs.csv");
      m.outputs.push_back(stem + "_episode.csv");
    }
    std::ostringstream mean;
    write_mean_curve_csv(mean, group);
    write_text_file(out_dir, tag + "_mean.csv", mean.str());
    m.outputs.push_back(tag + "_mean.csv");
  }
  m.write(out_dir);
  return runs;
}

}  // namespace fairdyn::harness
