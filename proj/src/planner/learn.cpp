#include "fairdyn/planner/learn.hpp"

#include <cmath>
#include <ostream>

#include "fairdyn/causal/effects.hpp"
#include "fairdyn/common/error.hpp"
#include "fairdyn/common/format.hpp"

namespace fairdyn::planner {

EpisodeLog run_episode(const envs::EnvParams& env, const model::EnsembleModel& model, CemPlanner& planner,
                       bool df_violated, std::uint64_t seed, causal::TrajectoryDataset* buffer) {
  envs::Environment sim(env);
  const Rng base(seed);
  sim.reset(base.substream(0).engine()());
  Rng plan_rng = base.substream(1);
  planner.reset();

  EpisodeLog log;
  double weight = 1.0;
  const double gamma = planner.config().discount;
  while (!sim.done()) {
    const envs::GroupEnvState before = sim.state();
    const envs::GroupAction action = planner.plan(model, before, df_violated, plan_rng);
    const envs::StepOutcome out = sim.step(action);
    if (buffer != nullptr) envs::append_step(*buffer, before, action, out);
    log.steps.push_back(StepLog{before.step, action.a[0], action.a[1], out.rewards[0], out.rewards[1],
                                before.disparity(), std::fabs(static_cast<double>(action.a[0] - action.a[1]))});
    log.returns[0] += weight * out.rewards[0];
    log.returns[1] += weight * out.rewards[1];
    weight *= gamma;
  }
  return log;
}

LearnResult learn(const envs::EnvParams& env, const LearnConfig& config) {
  envs::validate(env);
  config.plan.validate();
  const auto spec = config.discretization.value_or(envs::default_discretization(env));
  const Rng base(config.seed);

  causal::TrajectoryDataset buffer(envs::state_dim(env), 1, config.plan.discount);
  if (config.initial_episodes > 0) {
    const auto warmup =
        envs::rollout(env, envs::random_policy(envs::num_actions(env)), base.substream(0).engine()(),
                      config.initial_episodes, config.plan.discount);
    for (const auto& r : warmup.records()) buffer.add(r);
  }

  model::EnsembleModel model(envs::state_dim(env), 1, config.model);
  model.set_state_projector([env](std::span<double> s) { envs::project_state(env, s); });
  CemPlanner planner(config.plan, env);

  LearnResult result;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const std::uint64_t epoch_seed = base.substream(1 + e).engine()();
    require(!buffer.empty(), ErrorCode::kEmptyDataset, "no data to fit; set initial_episodes >= 1");
    model.fit(buffer, epoch_seed, model.trained() ? config.fit_epochs : config.first_fit_epochs);

    EpochLog row;
    row.epoch = e;
    if (buffer.count(causal::Group::kZ0) > 0 && buffer.count(causal::Group::kZ1) > 0) {
      const auto effects =
          causal::estimate_effects(buffer, spec, {config.df_resamples, mix64(epoch_seed), config.plan.workers});
      const auto verdict = causal::check_dynamics_fairness(effects, std::nullopt, config.df_multiplier);
      row.df_flag = verdict.violated;
      row.nde_r = effects.nde.scalar();
      for (double v : effects.nde_next_state.value)
        if (std::fabs(v) > std::fabs(row.nde_s)) row.nde_s = v;
    }

    const EpisodeLog episode = run_episode(env, model, planner, row.df_flag, mix64(epoch_seed + 1), &buffer);
    row.ret = episode.total_return();
    row.gap = episode.gap();
    result.epochs.push_back(row);
    result.episodes.push_back(episode);
  }
  return result;
}

void write_episode_csv(std::ostream& out, const EpisodeLog& log) {
  out << "step,action_z0,action_z1,r_z0,r_z1,state_disparity,decision_gap\n";
  for (const auto& s : log.steps) {
    out << s.step << ',' << s.action_z0 << ',' << s.action_z1 << ',' << format_number(s.r_z0) << ','
        << format_number(s.r_z1) << ',' << format_number(s.state_disparity) << ',' << format_number(s.decision_gap)
        << '\n';
  }
}

void write_epoch_csv(std::ostream& out, const std::vector<EpochLog>& epochs) {
  out << "epoch,return,gap,df_flag,nde_r,nde_s\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << format_number(e.ret) << ',' << format_number(e.gap) << ',' << (e.df_flag ? 1 : 0) << ','
        << format_number(e.nde_r) << ',' << format_number(e.nde_s) << '\n';
  }
}

}  // namespace fairdyn::planner
