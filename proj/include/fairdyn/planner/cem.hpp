#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fairdyn/common/rng.hpp"
#include "fairdyn/envs/envs.hpp"
#include "fairdyn/model/ensemble.hpp"

namespace fairdyn::planner {

enum class Mode { kPets, kFairA, kFairS, kInsightFair };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);  // pets, fair-a, fair-s, insightfair

struct PlanConfig {
  std::size_t horizon = 10;
  std::size_t population = 200;
  std::size_t elites = 20;
  std::size_t iterations = 5;
  std::size_t particles = 5;
  double penalty = 1.0;        // lambda on |G1 - G0| (InsightFair)
  double state_penalty = 1.0;  // lambda_s on terminal L1 state disparity (FairS)
  double epsilon = 0.05;       // disparity below which InsightFair may share actions
  double discount = 0.99;
  Mode mode = Mode::kPets;
  double init_std_fraction = 0.25;  // initial std as a fraction of the menu width
  double min_std = 1e-3;
  bool elite_retention = true;
  std::size_t workers = 1;

  void validate() const;
};

// Gaussian sampling distribution over continuous action sequences on
// [lo, hi]. Entry (t, g) lives at index 2t + g; when shared, only g = 0 is
// used and both groups receive the same action.
struct ActionDistribution {
  std::size_t horizon = 0;
  bool shared = false;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> mean;
  std::vector<double> std;

  static ActionDistribution initial(std::size_t horizon, double lo, double hi, bool shared, double std);
  std::size_t width() const { return shared ? 1 : 2; }
};

struct CandidateEval {
  std::vector<double> sample;   // continuous draw, 2 * horizon entries
  std::vector<int> actions;     // nearest menu points, 2 * horizon entries
  std::array<double, 2> returns{0.0, 0.0};  // particle-averaged discounted returns
  double gap = 0.0;             // returns[1] - returns[0]
  double terminal_disparity = 0.0;  // particle-averaged L1 gap of the final simulated states
  double objective = 0.0;
};

// Rolls each candidate out for H steps with P particles; particle p follows
// ensemble member p mod B for the whole rollout. Transition noise comes from
// `noise` (P x H x state_dim standard normals) and is shared by all
// candidates and by both groups; rewards use the predicted mean.
std::vector<CandidateEval> evaluate_candidates(const model::EnsembleModel& model, const envs::GroupEnvState& state,
                                               std::vector<CandidateEval> candidates, const PlanConfig& config,
                                               const envs::EnvParams& env, std::span<const double> noise);

// Objective for the configured mode.
double objective(const CandidateEval& c, const PlanConfig& config);

// Elite mean and population standard deviation per coordinate; std floored
// at min_std and means clamped to the menu bounds.
ActionDistribution update_distribution(const ActionDistribution& dist, std::span<const CandidateEval> elites,
                                       double min_std = 1e-3);

// Whether this step plans with one action sequence for both groups.
bool shares_actions(const PlanConfig& config, const envs::GroupEnvState& state, bool df_violated);

// CEM planner with a warm-started mean across consecutive steps.
class CemPlanner {
 public:
  CemPlanner(PlanConfig config, envs::EnvParams env);

  const PlanConfig& config() const noexcept { return config_; }
  void reset();

  envs::GroupAction plan(const model::EnsembleModel& model, const envs::GroupEnvState& state, bool df_violated,
                         Rng& rng);

  // Best objective after each CEM iteration of the last plan() call.
  const std::vector<double>& best_history() const noexcept { return best_history_; }
  const CandidateEval& last_best() const noexcept { return best_; }

 private:
  PlanConfig config_;
  envs::EnvParams env_;
  std::optional<ActionDistribution> previous_;
  std::vector<double> best_history_;
  CandidateEval best_;
};

// One-shot plan without warm start.
envs::GroupAction plan(const model::EnsembleModel& model, const envs::GroupEnvState& state, const PlanConfig& config,
                       const envs::EnvParams& env, bool df_violated, Rng& rng);

}  // namespace fairdyn::planner
