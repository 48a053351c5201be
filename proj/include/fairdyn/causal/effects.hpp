#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fairdyn/causal/dataset.hpp"
#include "fairdyn/causal/discretization.hpp"
#include "fairdyn/causal/tables.hpp"

namespace fairdyn::causal {

enum class EffectKind { kTeReward, kNdeReward, kNieReward, kNdeNextState, kTeReturn };

std::string_view to_string(EffectKind kind);

struct EffectEstimate {
  EffectKind kind = EffectKind::kTeReward;
  std::vector<double> value;
  std::vector<double> std_error;  // zeros unless bootstrapped
  std::size_t n_effective = 0;

  double scalar() const { return value.at(0); }
  double scalar_error() const { return std_error.at(0); }
};

// Point estimators on fitted tables. All sums run over cells observed under
// both groups, with P^(.|z) renormalised over that common support.
//
//   TE  = sum E[R|z1,c] w1(c) - sum E[R|z0,c] w0(c)
//   NDE = sum (E[R|z1,c] - E[R|z0,c]) w0(c)
//   NIE = sum E[R|z1,c] (w0(c) - w1(c))
//
// so TE = NDE - NIE holds up to rounding for any tables.
EffectEstimate estimate_te_reward(const ConditionalTables& tables);
EffectEstimate estimate_nde_reward(const ConditionalTables& tables);
EffectEstimate estimate_nie_reward(const ConditionalTables& tables);
EffectEstimate estimate_nde_next_state(const ConditionalTables& tables);

struct EffectSet {
  EffectEstimate te;
  EffectEstimate nde;
  EffectEstimate nie;
  EffectEstimate nde_next_state;
};

EffectSet estimate_all(const ConditionalTables& tables);

struct BootstrapOptions {
  std::size_t resamples = 200;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Point estimates from the full data plus nonparametric bootstrap standard
// errors (records resampled with replacement within each group).
EffectSet estimate_effects(const TrajectoryDataset& data, const DiscretizationSpec& spec,
                           const BootstrapOptions& options = {});

// Mediator probabilities P^(s, a | z) from `mediator_data`, outcome means
// E^[R | z, s, a] from `outcome_data` (typically collected with (s, a) set
// independently of z, so every cell is observed under both groups). Both
// datasets are resampled in each bootstrap replicate.
EffectSet estimate_spliced_effects(const TrajectoryDataset& mediator_data, const TrajectoryDataset& outcome_data,
                                   const DiscretizationSpec& spec, const BootstrapOptions& options = {});

struct StepDecomposition {
  std::uint32_t step = 0;
  EffectEstimate te;
  EffectEstimate nde;
  EffectEstimate nie;
};

struct DecompositionReport {
  std::vector<StepDecomposition> per_step;
  double discount = 0.0;
  EffectEstimate te_return;  // discounted sum of per-step reward gaps
  // |te_return - sum_k discount^k (nde_k - nie_k)|
  double residual = 0.0;
  // discount^H * r_max / (1 - discount): bound on the dropped tail.
  double truncation_bound = 0.0;
};

// Per-step TE/NDE/NIE on tables fitted to that step's records, accumulated
// over steps 0..horizon-1. Throws kMissingStep when a step lacks a group.
DecompositionReport decompose_gap(const TrajectoryDataset& data, const DiscretizationSpec& spec,
                                  std::uint32_t horizon, const BootstrapOptions& options = {0, 0, 1});

struct FairnessVerdict {
  EffectEstimate nde_reward;
  EffectEstimate nde_next_state;
  double tau_reward = 0.0;
  std::vector<double> tau_next_state;
  bool calibrated = false;
  bool violated = false;
};

// Fixed threshold: violated iff |NDE(R)| > tau or max_d |NDE(S')_d| > tau.
FairnessVerdict check_dynamics_fairness(const ConditionalTables& tables, double tau);

// With no tau, each quantity is compared to multiplier x its bootstrap
// standard error; a supplied tau overrides the calibration.
FairnessVerdict check_dynamics_fairness(const EffectSet& effects, std::optional<double> tau = std::nullopt,
                                        double multiplier = 3.0);

}  // namespace fairdyn::causal
