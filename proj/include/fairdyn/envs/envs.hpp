#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairdyn/causal/dataset.hpp"
#include "fairdyn/causal/discretization.hpp"
#include "fairdyn/common/rng.hpp"

namespace fairdyn::envs {

enum class EnvKind { kAllocation, kLending };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

// alpha = (a1, a2) and beta = (b1, b2) are advantage pairs: the group with the
// larger element gets the difference as its relative advantage, the other
// gets 0. alpha acts on the reward channel and beta on the transition
// channel unless advantage_channel_swap is set.
struct AllocationParams {
  std::array<double, 2> init_rates{6.0, 6.0};
  std::array<double, 2> alpha{0.0, 0.0};
  std::array<double, 2> beta{0.0, 0.0};
  double rate_delta = 0.1;
  double rate_max = 12.0;
  // Below about 0.5 the optimum is to over-allocate until both rates hit 0.
  double allocation_cost = 0.6;
  int max_allocation = 10;  // menu is 0..max_allocation units
  std::uint32_t episode_len = 100;
  bool advantage_channel_swap = false;
  // Both groups see the same standard-normal incident shock each step. Each
  // group's own dynamics are unchanged; only the two are correlated.
  bool common_noise = true;

  void validate() const;
};

struct LendingParams {
  static constexpr std::size_t kBins = 5;
  using Dist = std::array<double, kBins>;

  std::array<Dist, 2> init_dists{Dist{0.0, 0.2, 0.3, 0.3, 0.2}, Dist{0.0, 0.2, 0.3, 0.3, 0.2}};
  std::array<double, 2> alpha{0.0, 0.0};
  std::array<double, 2> beta{0.0, 0.0};
  Dist base_repay{0.1, 0.3, 0.5, 0.7, 0.9};
  double shift_mass = 0.01;
  double interest = 1.0;
  double default_cost = 1.0;
  int applicants_per_step = 10;
  std::uint32_t episode_len = 100;
  bool advantage_channel_swap = false;
  // Both groups reuse the same applicant and repayment uniforms each step.
  bool common_noise = true;

  void validate() const;
};

using EnvParams = std::variant<AllocationParams, LendingParams>;

EnvKind kind_of(const EnvParams& params);
void validate(const EnvParams& params);

// Relative advantage (z0, z1) implied by a pair.
std::array<double, 2> group_advantage(const std::array<double, 2>& pair);

struct GroupEnvState {
  std::array<std::vector<double>, 2> s;
  std::uint32_t step = 0;

  const std::vector<double>& operator[](causal::Group g) const { return s[causal::index_of(g)]; }
  // L1 distance between the two groups' states.
  double disparity() const;
};

struct GroupAction {
  std::array<int, 2> a{0, 0};
};

// Allocation: events = incidents, successes = solved (fractional under a
// capacity advantage). Lending: events = loans granted, successes = repaid,
// failures = defaulted.
struct GroupInfo {
  double events = 0.0;
  double successes = 0.0;
  double failures = 0.0;
};

struct StepOutcome {
  std::array<double, 2> rewards{0.0, 0.0};
  GroupEnvState next;
  std::array<GroupInfo, 2> info;
};

GroupEnvState reset(const AllocationParams& params);
GroupEnvState reset(const LendingParams& params);
GroupEnvState reset(const EnvParams& params);

StepOutcome step_allocation(const GroupEnvState& state, const GroupAction& action, const AllocationParams& params,
                            Rng& rng);
StepOutcome step_lending(const GroupEnvState& state, const GroupAction& action, const LendingParams& params, Rng& rng);

// Moves probability mass for one group: each entry of `repaid` / `defaulted`
// is the score bin of one applicant, processed in order. A repayment at bin
// i < 4 moves shift * (1 + advantage) up one bin; a default at i > 0 moves
// shift down one bin. Moves are capped by the mass available in the source.
void apply_credit_shifts(LendingParams::Dist& dist, std::span<const int> repaid, std::span<const int> defaulted,
                         double shift, double advantage);

// Clamp to the valid state region: [0, rate_max] for Allocation, the
// probability simplex for Lending.
void project_state(const EnvParams& params, std::span<double> s);

std::size_t state_dim(const EnvParams& params);
int num_actions(const EnvParams& params);
std::uint32_t episode_len(const EnvParams& params);

// Binning used by the plug-in estimators when none is configured.
causal::DiscretizationSpec default_discretization(const EnvParams& params);

// Single-owner simulator with its own RNG.
class Environment {
 public:
  explicit Environment(EnvParams params);

  const EnvParams& params() const noexcept { return params_; }
  EnvKind kind() const noexcept { return kind_of(params_); }

  const GroupEnvState& reset(std::uint64_t seed);
  StepOutcome step(const GroupAction& action);
  const GroupEnvState& state() const noexcept { return state_; }
  bool done() const noexcept { return state_.step >= episode_len(params_); }

 private:
  EnvParams params_;
  GroupEnvState state_;
  Rng rng_;
};

using Policy = std::function<GroupAction(const GroupEnvState&, Rng&)>;

// Independent uniform draws from the action menu for each group.
Policy random_policy(int num_actions);

// Appends the two per-group records of one step.
void append_step(causal::TrajectoryDataset& data, const GroupEnvState& state, const GroupAction& action,
                 const StepOutcome& outcome);

// `episodes` full episodes; episode e uses environment seed substream(e) of
// `seed` and policy stream substream(e + 2^32).
causal::TrajectoryDataset rollout(const EnvParams& params, const Policy& policy, std::uint64_t seed,
                                  std::size_t episodes, double discount = 0.99);

// Parameter sets for the detection sweep ("detect"), the unfair-dynamics and
// the fair-dynamics training experiments ("unfair", "fair").
EnvParams preset(EnvKind kind, std::string_view name);

// JSON config with keys `env`, `init`, `alpha`, `beta`, `episode_len` and the
// environment-specific knobs; missing keys keep their defaults.
EnvParams parse_env_config(std::string_view json_text);
std::string env_config_json(const EnvParams& params);

}  // namespace fairdyn::envs
