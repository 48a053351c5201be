#include "fairdyn/envs/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fairdyn/common/error.hpp"

namespace fairdyn::envs {

using causal::Group;

std::string_view to_string(EnvKind kind) { return kind == EnvKind::kAllocation ? "allocation" : "lending"; }

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "allocation") return EnvKind::kAllocation;
  if (name == "lending") return EnvKind::kLending;
  fail(ErrorCode::kInvalidArgument, "unknown environment '" + std::string(name) + "'");
}

namespace {

void require_finite_pair(const std::array<double, 2>& p, const char* name) {
  require(std::isfinite(p[0]) && std::isfinite(p[1]), ErrorCode::kInvalidArgument,
          std::string(name) + " must be finite");
}

// (reward pair, transition pair) after the optional swap.
template <typename P>
std::pair<std::array<double, 2>, std::array<double, 2>> channels(const P& p) {
  if (p.advantage_channel_swap) return {group_advantage(p.beta), group_advantage(p.alpha)};
  return {group_advantage(p.alpha), group_advantage(p.beta)};
}

std::size_t categorical(const LendingParams::Dist& p, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

void project_simplex(std::span<double> s) {
  double total = 0.0;
  for (auto& v : s) {
    if (!(v > 0.0)) v = 0.0;
    total += v;
  }
  if (total <= 0.0) {
    std::fill(s.begin(), s.end(), 1.0 / static_cast<double>(s.size()));
    return;
  }
  for (auto& v : s) v /= total;
}

}  // namespace

void AllocationParams::validate() const {
  require(init_rates[0] > 0.0 && init_rates[1] > 0.0, ErrorCode::kInvalidArgument, "initial rates must be positive");
  require(init_rates[0] <= rate_max && init_rates[1] <= rate_max, ErrorCode::kInvalidArgument,
          "initial rates exceed rate_max");
  require(rate_delta > 0.0 && std::isfinite(rate_delta), ErrorCode::kInvalidArgument, "rate_delta must be positive");
  require(std::isfinite(allocation_cost) && allocation_cost >= 0.0, ErrorCode::kInvalidArgument,
          "allocation_cost must be nonnegative");
  require(max_allocation >= 1, ErrorCode::kInvalidArgument, "max_allocation must be at least 1");
  require(episode_len >= 1, ErrorCode::kInvalidArgument, "episode_len must be at least 1");
  require_finite_pair(alpha, "alpha");
  require_finite_pair(beta, "beta");
}

void LendingParams::validate() const {
  double min_positive = 1.0;
  for (const auto& d : init_dists) {
    double total = 0.0;
    for (double v : d) {
      require(v >= 0.0 && std::isfinite(v), ErrorCode::kInvalidArgument, "initial distribution entries must be >= 0");
      total += v;
      if (v > 0.0) min_positive = std::min(min_positive, v);
    }
    require(std::fabs(total - 1.0) <= 1e-12, ErrorCode::kInvalidArgument, "initial distribution must sum to 1");
  }
  require(shift_mass > 0.0 && shift_mass < min_positive, ErrorCode::kInvalidArgument,
          "shift_mass must lie in (0, smallest positive initial mass)");
  for (double p : base_repay)
    require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument, "repayment probabilities must lie in [0, 1]");
  require(applicants_per_step >= 1, ErrorCode::kInvalidArgument, "applicants_per_step must be at least 1");
  require(episode_len >= 1, ErrorCode::kInvalidArgument, "episode_len must be at least 1");
  require(std::isfinite(interest) && std::isfinite(default_cost), ErrorCode::kInvalidArgument,
          "reward coefficients must be finite");
  require_finite_pair(alpha, "alpha");
  require_finite_pair(beta, "beta");
}

EnvKind kind_of(const EnvParams& params) {
  return std::holds_alternative<AllocationParams>(params) ? EnvKind::kAllocation : EnvKind::kLending;
}

void validate(const EnvParams& params) {
  std::visit([](const auto& p) { p.validate(); }, params);
}

std::array<double, 2> group_advantage(const std::array<double, 2>& pair) {
  const double rel = pair[1] - pair[0];
  return rel >= 0.0 ? std::array<double, 2>{0.0, rel} : std::array<double, 2>{-rel, 0.0};
}

double GroupEnvState::disparity() const {
  double d = 0.0;
  for (std::size_t i = 0; i < s[0].size(); ++i) d += std::fabs(s[0][i] - s[1][i]);
  return d;
}

GroupEnvState reset(const AllocationParams& params) {
  params.validate();
  GroupEnvState st;
  st.s = {std::vector<double>{params.init_rates[0]}, std::vector<double>{params.init_rates[1]}};
  return st;
}

GroupEnvState reset(const LendingParams& params) {
  params.validate();
  GroupEnvState st;
  for (std::size_t z = 0; z < 2; ++z) st.s[z].assign(params.init_dists[z].begin(), params.init_dists[z].end());
  return st;
}

GroupEnvState reset(const EnvParams& params) {
  return std::visit([](const auto& p) { return reset(p); }, params);
}

StepOutcome step_allocation(const GroupEnvState& state, const GroupAction& action, const AllocationParams& params,
                            Rng& rng) {
  const auto [adv_r, adv_t] = channels(params);
  StepOutcome out;
  out.next.step = state.step + 1;
  const double shared_shock = params.common_noise ? rng.normal() : 0.0;
  for (std::size_t z = 0; z < 2; ++z) {
    const double rate = state.s[z].at(0);
    const int units = action.a[z];
    require(units >= 0 && units <= params.max_allocation, ErrorCode::kInvalidArgument, "allocation outside the menu");
    const double shock = params.common_noise ? shared_shock : rng.normal();
    const double incidents = std::max(0.0, std::round(rate + shock));
    const double solved = std::min(incidents, units * (1.0 + adv_r[z]));
    out.rewards[z] = -(incidents - solved) - params.allocation_cost * units;
    // No incidents counts as "not more than half solved", so the rate rises.
    const double next = solved > 0.5 * incidents ? rate - params.rate_delta * (1.0 + adv_t[z])
                                                 : rate + params.rate_delta * (1.0 - adv_t[z]);
    out.next.s[z] = {std::clamp(next, 0.0, params.rate_max)};
    out.info[z] = GroupInfo{incidents, solved, incidents - solved};
  }
  return out;
}

void apply_credit_shifts(LendingParams::Dist& dist, std::span<const int> repaid, std::span<const int> defaulted,
                         double shift, double advantage) {
  constexpr int kTop = static_cast<int>(LendingParams::kBins) - 1;
  for (int i : repaid) {
    if (i >= kTop) continue;
    const double m = std::min(shift * (1.0 + advantage), dist[i]);
    dist[i] -= m;
    dist[i + 1] += m;
  }
  for (int i : defaulted) {
    if (i <= 0) continue;
    const double m = std::min(shift, dist[i]);
    dist[i] -= m;
    dist[i - 1] += m;
  }
  project_simplex(dist);
}

StepOutcome step_lending(const GroupEnvState& state, const GroupAction& action, const LendingParams& params,
                         Rng& rng) {
  const auto [adv_r, adv_t] = channels(params);
  StepOutcome out;
  out.next.step = state.step + 1;
  // Two uniforms per applicant: score draw and repayment draw.
  const std::size_t draws = 2 * static_cast<std::size_t>(params.applicants_per_step);
  std::vector<double> uniforms(draws);
  if (params.common_noise)
    for (auto& u : uniforms) u = rng.uniform();
  for (std::size_t z = 0; z < 2; ++z) {
    if (!params.common_noise)
      for (auto& u : uniforms) u = rng.uniform();
    const int threshold = action.a[z];
    require(threshold >= 0 && threshold <= static_cast<int>(LendingParams::kBins), ErrorCode::kInvalidArgument,
            "threshold outside the menu");
    LendingParams::Dist dist{};
    std::copy_n(state.s[z].begin(), LendingParams::kBins, dist.begin());
    std::vector<int> repaid, defaulted;
    for (std::size_t k = 0; k < static_cast<std::size_t>(params.applicants_per_step); ++k) {
      const int score = static_cast<int>(categorical(dist, uniforms[2 * k]));
      if (score < threshold) continue;
      const double p = std::clamp(params.base_repay[score] * (1.0 + adv_r[z]), 0.0, 1.0);
      (uniforms[2 * k + 1] < p ? repaid : defaulted).push_back(score);
    }
    out.rewards[z] = params.interest * static_cast<double>(repaid.size()) -
                     params.default_cost * static_cast<double>(defaulted.size());
    if (!repaid.empty() || !defaulted.empty()) apply_credit_shifts(dist, repaid, defaulted, params.shift_mass, adv_t[z]);
    out.next.s[z].assign(dist.begin(), dist.end());
    out.info[z] = GroupInfo{static_cast<double>(repaid.size() + defaulted.size()), static_cast<double>(repaid.size()),
                            static_cast<double>(defaulted.size())};
  }
  return out;
}

void project_state(const EnvParams& params, std::span<double> s) {
  if (const auto* a = std::get_if<AllocationParams>(&params)) {
    for (auto& v : s) v = std::isfinite(v) ? std::clamp(v, 0.0, a->rate_max) : 0.0;
  } else {
    project_simplex(s);
  }
}

std::size_t state_dim(const EnvParams& params) {
  return kind_of(params) == EnvKind::kAllocation ? 1 : LendingParams::kBins;
}

int num_actions(const EnvParams& params) {
  if (const auto* a = std::get_if<AllocationParams>(&params)) return a->max_allocation + 1;
  return static_cast<int>(LendingParams::kBins) + 1;
}

std::uint32_t episode_len(const EnvParams& params) {
  return std::visit([](const auto& p) { return p.episode_len; }, params);
}

causal::DiscretizationSpec default_discretization(const EnvParams& params) {
  causal::DiscretizationSpec spec;
  if (const auto* a = std::get_if<AllocationParams>(&params)) {
    spec.state_axes = {causal::AxisBins{0.0, a->rate_max, 10}};
    spec.action_axes = {causal::AxisBins::integers(0, a->max_allocation)};
  } else {
    spec.state_axes.assign(LendingParams::kBins, causal::AxisBins{0.0, 1.0, 10});
    spec.action_axes = {causal::AxisBins::integers(0, static_cast<long>(LendingParams::kBins))};
  }
  spec.laplace_alpha = 1.0;
  spec.next_state_increment = true;
  return spec;
}

Environment::Environment(EnvParams params) : params_(std::move(params)), rng_(0) {
  validate(params_);
  state_ = envs::reset(params_);
}

const GroupEnvState& Environment::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  state_ = envs::reset(params_);
  return state_;
}

StepOutcome Environment::step(const GroupAction& action) {
  StepOutcome out = std::visit(
      [&](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, AllocationParams>) {
          return step_allocation(state_, action, p, rng_);
        } else {
          return step_lending(state_, action, p, rng_);
        }
      },
      params_);
  state_ = out.next;
  return out;
}

Policy random_policy(int num_actions) {
  require(num_actions >= 1, ErrorCode::kInvalidArgument, "empty action menu");
  return [num_actions](const GroupEnvState&, Rng& rng) {
    GroupAction a;
    a.a[0] = static_cast<int>(rng.index(static_cast<std::size_t>(num_actions)));
    a.a[1] = static_cast<int>(rng.index(static_cast<std::size_t>(num_actions)));
    return a;
  };
}

void append_step(causal::TrajectoryDataset& data, const GroupEnvState& state, const GroupAction& action,
                 const StepOutcome& outcome) {
  for (std::size_t z = 0; z < 2; ++z) {
    causal::TransitionRecord rec;
    rec.group = static_cast<Group>(z);
    rec.state = state.s[z];
    rec.action = {static_cast<double>(action.a[z])};
    rec.reward = outcome.rewards[z];
    rec.next_state = outcome.next.s[z];
    rec.step = state.step;
    data.add(std::move(rec));
  }
}

causal::TrajectoryDataset rollout(const EnvParams& params, const Policy& policy, std::uint64_t seed,
                                  std::size_t episodes, double discount) {
  Environment env(params);
  causal::TrajectoryDataset data(state_dim(params), 1, discount);
  data.reserve(2 * episodes * episode_len(params));
  const Rng base(seed);
  for (std::size_t e = 0; e < episodes; ++e) {
    env.reset(base.substream(e).engine()());
    Rng policy_rng = base.substream(e + (std::uint64_t{1} << 32));
    while (!env.done()) {
      const GroupEnvState before = env.state();
      const GroupAction action = policy(before, policy_rng);
      const StepOutcome out = env.step(action);
      append_step(data, before, action, out);
    }
  }
  return data;
}

EnvParams preset(EnvKind kind, std::string_view name) {
  if (kind == EnvKind::kAllocation) {
    AllocationParams p;
    if (name == "detect") return p;
    if (name == "unfair") {
      p.alpha = {0.0, 0.05};
      p.beta = {0.0, 0.05};
      return p;
    }
    if (name == "fair") {
      p.init_rates = {6.2, 6.0};
      return p;
    }
  } else {
    LendingParams p;
    if (name == "detect") return p;
    if (name == "unfair") {
      p.alpha = {0.0, 0.01};
      p.beta = {0.0, 0.05};
      return p;
    }
    if (name == "fair") {
      p.init_dists = {LendingParams::Dist{0.0, 0.2, 0.35, 0.25, 0.2}, LendingParams::Dist{0.0, 0.2, 0.25, 0.35, 0.2}};
      return p;
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown preset '" + std::string(name) + "'");
}

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

EnvParams parse_env_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("env config: ") + e.what());
  }
  require(j.is_object() && j.contains("env"), ErrorCode::kInvalidArgument, "env config needs an 'env' key");
  const EnvKind kind = env_kind_from_string(j.at("env").get<std::string>());
  EnvParams params = preset(kind, j.value("preset", std::string("detect")));
  try {
    if (auto* a = std::get_if<AllocationParams>(&params)) {
      read_opt(j, "init", a->init_rates);
      read_opt(j, "alpha", a->alpha);
      read_opt(j, "beta", a->beta);
      read_opt(j, "rate_delta", a->rate_delta);
      read_opt(j, "rate_max", a->rate_max);
      read_opt(j, "allocation_cost", a->allocation_cost);
      read_opt(j, "max_allocation", a->max_allocation);
      read_opt(j, "episode_len", a->episode_len);
      read_opt(j, "advantage_channel_swap", a->advantage_channel_swap);
      read_opt(j, "common_noise", a->common_noise);
    } else {
      auto& l = std::get<LendingParams>(params);
      read_opt(j, "init", l.init_dists);
      read_opt(j, "alpha", l.alpha);
      read_opt(j, "beta", l.beta);
      read_opt(j, "base_repay", l.base_repay);
      read_opt(j, "shift_mass", l.shift_mass);
      read_opt(j, "interest", l.interest);
      read_opt(j, "default_cost", l.default_cost);
      read_opt(j, "applicants_per_step", l.applicants_per_step);
      read_opt(j, "episode_len", l.episode_len);
      read_opt(j, "advantage_channel_swap", l.advantage_channel_swap);
      read_opt(j, "common_noise", l.common_noise);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("env config: ") + e.what());
  }
  validate(params);
  return params;
}

std::string env_config_json(const EnvParams& params) {
  nlohmann::ordered_json j;
  if (const auto* a = std::get_if<AllocationParams>(&params)) {
    j["env"] = "allocation";
    j["init"] = a->init_rates;
    j["alpha"] = a->alpha;
    j["beta"] = a->beta;
    j["rate_delta"] = a->rate_delta;
    j["rate_max"] = a->rate_max;
    j["allocation_cost"] = a->allocation_cost;
    j["max_allocation"] = a->max_allocation;
    j["episode_len"] = a->episode_len;
    j["advantage_channel_swap"] = a->advantage_channel_swap;
    j["common_noise"] = a->common_noise;
  } else {
    const auto& l = std::get<LendingParams>(params);
    j["env"] = "lending";
    j["init"] = l.init_dists;
    j["alpha"] = l.alpha;
    j["beta"] = l.beta;
    j["base_repay"] = l.base_repay;
    j["shift_mass"] = l.shift_mass;
    j["interest"] = l.interest;
    j["default_cost"] = l.default_cost;
    j["applicants_per_step"] = l.applicants_per_step;
    j["episode_len"] = l.episode_len;
    j["advantage_channel_swap"] = l.advantage_channel_swap;
    j["common_noise"] = l.common_noise;
  }
  return j.dump(2);
}

}  // namespace fairdyn::envs
