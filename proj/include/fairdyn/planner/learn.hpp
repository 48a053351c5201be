#pragma once

#include <cstddef>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fairdyn/causal/discretization.hpp"
#include "fairdyn/envs/envs.hpp"
#include "fairdyn/model/ensemble.hpp"
#include "fairdyn/planner/cem.hpp"

namespace fairdyn::planner {

struct StepLog {
  std::uint32_t step = 0;
  int action_z0 = 0;
  int action_z1 = 0;
  double r_z0 = 0.0;
  double r_z1 = 0.0;
  double state_disparity = 0.0;  // L1 disparity of the state the actions were chosen in
  double decision_gap = 0.0;     // |action_z0 - action_z1|
};

struct EpisodeLog {
  std::vector<StepLog> steps;
  std::array<double, 2> returns{0.0, 0.0};  // discounted per-group returns
  double total_return() const { return returns[0] + returns[1]; }
  double gap() const { return returns[1] - returns[0]; }
};

// Plans every step with `planner` and appends the transitions to `buffer`.
EpisodeLog run_episode(const envs::EnvParams& env, const model::EnsembleModel& model, CemPlanner& planner,
                       bool df_violated, std::uint64_t seed, causal::TrajectoryDataset* buffer = nullptr);

struct LearnConfig {
  PlanConfig plan;
  model::EnsembleConfig model;
  std::size_t epochs = 30;
  std::size_t initial_episodes = 1;      // random-policy episodes before the first fit
  std::size_t first_fit_epochs = 100;    // training passes for the first fit
  std::size_t fit_epochs = 10;           // passes for each warm-started refit
  std::size_t df_resamples = 200;        // bootstrap resamples for the fairness check
  double df_multiplier = 3.0;            // tau = multiplier x bootstrap SE
  std::optional<causal::DiscretizationSpec> discretization;  // env default when unset
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double ret = 0.0;  // discounted G_z0 + G_z1
  double gap = 0.0;  // discounted G_z1 - G_z0
  bool df_flag = false;
  double nde_r = 0.0;
  double nde_s = 0.0;  // component of NDE(S') with the largest magnitude
};

struct LearnResult {
  std::vector<EpochLog> epochs;
  std::vector<EpisodeLog> episodes;
};

// Learn loop: random warm-up episodes, then per epoch refit the ensemble on
// the replay buffer, check dynamics fairness on the buffer, and run one
// planned episode.
LearnResult learn(const envs::EnvParams& env, const LearnConfig& config);

// `step,action_z0,action_z1,r_z0,r_z1,state_disparity,decision_gap`
void write_episode_csv(std::ostream& out, const EpisodeLog& log);
// `epoch,return,gap,df_flag,nde_r,nde_s`
void write_epoch_csv(std::ostream& out, const std::vector<EpochLog>& epochs);

}  // namespace fairdyn::planner
