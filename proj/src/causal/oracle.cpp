#include "fairdyn/causal/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fairdyn/common/error.hpp"

namespace fairdyn::causal {

namespace {

void check_distribution(const std::vector<double>& p, const char* name) {
  require(!p.empty(), ErrorCode::kInvalidArgument, std::string(name) + " has empty support");
  double total = 0.0;
  for (double v : p) {
    require(v >= 0.0 && std::isfinite(v), ErrorCode::kInvalidArgument, std::string(name) + " has invalid mass");
    total += v;
  }
  require(std::fabs(total - 1.0) < 1e-9, ErrorCode::kInvalidArgument, std::string(name) + " does not sum to 1");
}

std::size_t categorical(const std::vector<double>& p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (auto& v : w) v = rng.uniform(0.3, 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

std::vector<int> random_cover(std::size_t values, std::size_t support, Rng& rng) {
  // First `values` noise levels hit every value once; the rest are free.
  std::vector<int> map(support);
  std::iota(map.begin(), map.begin() + static_cast<std::ptrdiff_t>(values), 0);
  std::shuffle(map.begin(), map.begin() + static_cast<std::ptrdiff_t>(values), rng.engine());
  for (std::size_t u = values; u < support; ++u) map[u] = static_cast<int>(rng.index(values));
  return map;
}

}  // namespace

void DiscreteScm::validate() const {
  require(num_states >= 1 && num_actions >= 1, ErrorCode::kInvalidArgument, "empty state or action support");
  check_distribution(state_noise, "state noise");
  check_distribution(action_noise, "action noise");
  check_distribution(reward_noise, "reward noise");
  require(state_map.size() == 2 * state_noise.size(), ErrorCode::kInvalidArgument, "state_map size");
  require(action_map.size() == 2 * num_states * action_noise.size(), ErrorCode::kInvalidArgument, "action_map size");
  require(reward_map.size() == 2 * num_states * num_actions * reward_noise.size(), ErrorCode::kInvalidArgument,
          "reward_map size");
  for (int s : state_map)
    require(s >= 0 && static_cast<std::size_t>(s) < num_states, ErrorCode::kInvalidArgument, "state out of range");
  for (int a : action_map)
    require(a >= 0 && static_cast<std::size_t>(a) < num_actions, ErrorCode::kInvalidArgument, "action out of range");
}

int DiscreteScm::state(int z, std::size_t u) const { return state_map[static_cast<std::size_t>(z) * state_noise.size() + u]; }

int DiscreteScm::action(int z, int s, std::size_t u) const {
  return action_map[(static_cast<std::size_t>(z) * num_states + static_cast<std::size_t>(s)) * action_noise.size() + u];
}

double DiscreteScm::reward(int z, int s, int a, std::size_t u) const {
  const std::size_t cell =
      (static_cast<std::size_t>(z) * num_states + static_cast<std::size_t>(s)) * num_actions + static_cast<std::size_t>(a);
  return reward_map[cell * reward_noise.size() + u];
}

OracleEffects oracle_effects(const DiscreteScm& scm, std::size_t max_support) {
  scm.validate();
  const double joint = static_cast<double>(scm.state_noise.size()) * static_cast<double>(scm.action_noise.size()) *
                       static_cast<double>(scm.reward_noise.size());
  require(joint <= static_cast<double>(max_support), ErrorCode::kSupportTooLarge,
          "exogenous support of size " + std::to_string(static_cast<long long>(joint)) + " exceeds the cap");

  OracleEffects out;
  for (std::size_t us = 0; us < scm.state_noise.size(); ++us) {
    for (std::size_t ua = 0; ua < scm.action_noise.size(); ++ua) {
      for (std::size_t ur = 0; ur < scm.reward_noise.size(); ++ur) {
        const double p = scm.state_noise[us] * scm.action_noise[ua] * scm.reward_noise[ur];
        // Same unit u evaluated in three worlds.
        const int s0 = scm.state(0, us);
        const int a0 = scm.action(0, s0, ua);
        const int s1 = scm.state(1, us);
        const int a1 = scm.action(1, s1, ua);
        out.mean_reward_z0 += p * scm.reward(0, s0, a0, ur);
        out.mean_reward_z1 += p * scm.reward(1, s1, a1, ur);
        out.mean_nested += p * scm.reward(1, s0, a0, ur);
      }
    }
  }
  out.te = out.mean_reward_z1 - out.mean_reward_z0;
  out.nde = out.mean_nested - out.mean_reward_z0;
  out.nie = out.mean_nested - out.mean_reward_z1;
  return out;
}

DiscreteScm random_scm(Rng& rng, std::size_t max_cells) {
  require(max_cells >= 4, ErrorCode::kInvalidArgument, "max_cells must allow a 2x2 model");
  DiscreteScm scm;
  scm.num_states = 2 + rng.index(std::min<std::size_t>(3, max_cells / 2 - 1));
  scm.num_actions = 2 + rng.index(std::min<std::size_t>(3, max_cells / scm.num_states - 1));

  const std::size_t us = scm.num_states + rng.index(3);
  const std::size_t ua = scm.num_actions + rng.index(3);
  const std::size_t ur = 2 + rng.index(2);
  scm.state_noise = random_simplex(us, rng);
  scm.action_noise = random_simplex(ua, rng);
  scm.reward_noise = random_simplex(ur, rng);

  for (int z = 0; z < 2; ++z) {
    const auto m = random_cover(scm.num_states, us, rng);
    scm.state_map.insert(scm.state_map.end(), m.begin(), m.end());
  }
  for (int z = 0; z < 2; ++z) {
    for (std::size_t s = 0; s < scm.num_states; ++s) {
      const auto m = random_cover(scm.num_actions, ua, rng);
      scm.action_map.insert(scm.action_map.end(), m.begin(), m.end());
    }
  }
  scm.reward_map.resize(2 * scm.num_states * scm.num_actions * ur);
  for (auto& r : scm.reward_map) r = rng.uniform(-1.0, 1.0);
  scm.validate();
  return scm;
}

TrajectoryDataset sample_scm(const DiscreteScm& scm, std::size_t n, Rng& rng) {
  scm.validate();
  TrajectoryDataset data(1, 1, 0.99);
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int z = rng.bernoulli(0.5) ? 1 : 0;
    const int s = scm.state(z, categorical(scm.state_noise, rng));
    const int a = scm.action(z, s, categorical(scm.action_noise, rng));
    const double r = scm.reward(z, s, a, categorical(scm.reward_noise, rng));
    TransitionRecord rec;
    rec.group = group_from_int(z);
    rec.state = {static_cast<double>(s)};
    rec.action = {static_cast<double>(a)};
    rec.reward = r;
    rec.next_state = rec.state;
    data.add(std::move(rec));
  }
  return data;
}

DiscretizationSpec scm_discretization(const DiscreteScm& scm, double alpha) {
  DiscretizationSpec spec;
  spec.state_axes = {AxisBins::integers(0, static_cast<long>(scm.num_states) - 1)};
  spec.action_axes = {AxisBins::integers(0, static_cast<long>(scm.num_actions) - 1)};
  spec.laplace_alpha = alpha;
  spec.validate();
  return spec;
}

}  // namespace fairdyn::causal
