#pragma once

#include <cstddef>
#include <vector>

#include "fairdyn/causal/dataset.hpp"
#include "fairdyn/causal/discretization.hpp"
#include "fairdyn/common/rng.hpp"

namespace fairdyn::causal {

// Finite structural model Z -> S -> A -> R with Z also feeding A and R.
// Exogenous noises U_S, U_A, U_R are mutually independent categorical
// variables; every mechanism is an explicit lookup table.
struct DiscreteScm {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> state_noise;   // P(U_S = u)
  std::vector<double> action_noise;  // P(U_A = u)
  std::vector<double> reward_noise;  // P(U_R = u)
  std::vector<int> state_map;        // [z][u_s] -> s
  std::vector<int> action_map;       // [z][s][u_a] -> a
  std::vector<double> reward_map;    // [z][s][a][u_r] -> r

  void validate() const;

  int state(int z, std::size_t u) const;
  int action(int z, int s, std::size_t u) const;
  double reward(int z, int s, int a, std::size_t u) const;
};

struct OracleEffects {
  double mean_reward_z0 = 0.0;  // E[R(z0)]
  double mean_reward_z1 = 0.0;  // E[R(z1)]
  double mean_nested = 0.0;     // E[R(z1, S(z0), A(z0))]
  double te = 0.0;
  double nde = 0.0;
  double nie = 0.0;
};

// Exact counterfactual effects by enumerating all exogenous configurations.
// Throws kSupportTooLarge when |U_S| |U_A| |U_R| exceeds max_support.
OracleEffects oracle_effects(const DiscreteScm& scm, std::size_t max_support = std::size_t{1} << 20);

// Random model with num_states * num_actions <= max_cells in which every
// (s, a) pair has positive probability under both groups.
DiscreteScm random_scm(Rng& rng, std::size_t max_cells = 16);

// n observational draws with Z ~ Bernoulli(1/2); records carry step 0.
TrajectoryDataset sample_scm(const DiscreteScm& scm, std::size_t n, Rng& rng);

// One bin per state value and per action value.
DiscretizationSpec scm_discretization(const DiscreteScm& scm, double alpha = 1.0);

}  // namespace fairdyn::causal
