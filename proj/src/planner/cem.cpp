#include "fairdyn/planner/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairdyn/common/error.hpp"
#include "fairdyn/common/parallel.hpp"

namespace fairdyn::planner {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kPets: return "pets";
    case Mode::kFairA: return "fair-a";
    case Mode::kFairS: return "fair-s";
    case Mode::kInsightFair: return "insightfair";
  }
  return "?";
}

Mode mode_from_string(std::string_view name) {
  for (Mode m : {Mode::kPets, Mode::kFairA, Mode::kFairS, Mode::kInsightFair})
    if (to_string(m) == name) return m;
  fail(ErrorCode::kInvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

void PlanConfig::validate() const {
  require(horizon >= 1, ErrorCode::kInvalidArgument, "horizon must be at least 1");
  require(particles >= 1, ErrorCode::kInvalidArgument, "particles must be at least 1");
  require(population >= 1 && elites >= 1 && elites <= population, ErrorCode::kInvalidArgument,
          "need 1 <= elites <= population");
  require(iterations >= 1, ErrorCode::kInvalidArgument, "iterations must be at least 1");
  require(penalty >= 0.0 && state_penalty >= 0.0 && epsilon >= 0.0, ErrorCode::kInvalidArgument,
          "penalties and epsilon must be nonnegative");
  require(discount > 0.0 && discount <= 1.0, ErrorCode::kInvalidArgument, "discount must lie in (0, 1]");
  require(min_std > 0.0 && init_std_fraction > 0.0, ErrorCode::kInvalidArgument, "std settings must be positive");
}

ActionDistribution ActionDistribution::initial(std::size_t horizon, double lo, double hi, bool shared, double std) {
  ActionDistribution d;
  d.horizon = horizon;
  d.shared = shared;
  d.lo = lo;
  d.hi = hi;
  d.mean.assign(2 * horizon, 0.5 * (lo + hi));
  d.std.assign(2 * horizon, std);
  return d;
}

double objective(const CandidateEval& c, const PlanConfig& config) {
  const double ret = c.returns[0] + c.returns[1];
  switch (config.mode) {
    case Mode::kInsightFair: return ret - config.penalty * std::fabs(c.gap);
    case Mode::kFairS: return ret - config.state_penalty * c.terminal_disparity;
    case Mode::kPets:
    case Mode::kFairA: return ret;
  }
  return ret;
}

std::vector<CandidateEval> evaluate_candidates(const model::EnsembleModel& model, const envs::GroupEnvState& state,
                                               std::vector<CandidateEval> candidates, const PlanConfig& config,
                                               const envs::EnvParams& env, std::span<const double> noise) {
  require(model.trained(), ErrorCode::kUntrainedModel, "planning needs a fitted model");
  const std::size_t H = config.horizon, P = config.particles, B = model.size();
  const std::size_t sd = model.state_dim(), in = model.input_dim(), out_dim = 2 * model.target_dim();
  require(noise.size() == P * H * sd, ErrorCode::kInvalidArgument, "noise buffer size");
  const std::size_t C = candidates.size();
  for (const auto& c : candidates)
    require(c.actions.size() == 2 * H, ErrorCode::kInvalidArgument, "candidate length must be 2 * horizon");

  // Per (candidate, particle, group): discounted return and final state.
  std::vector<double> ret(C * P * 2, 0.0);
  std::vector<double> final_state(C * P * 2 * sd, 0.0);

  parallel_for(std::min(B, P), config.workers, [&](std::size_t b) {
    std::vector<std::size_t> mine;
    for (std::size_t p = b; p < P; p += B) mine.push_back(p);
    const std::size_t rows = C * mine.size() * 2;
    std::vector<double> s(rows * sd), x(rows * in), y(rows * out_dim), disc_ret(rows, 0.0);
    // Row layout: ((c * |mine| + k) * 2 + g).
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& src = state.s[r % 2];
      std::copy(src.begin(), src.end(), s.begin() + static_cast<std::ptrdiff_t>(r * sd));
    }
    model::Mlp::Workspace ws;
    double weight = 1.0;
    for (std::size_t t = 0; t < H; ++t) {
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t g = r % 2, c = r / (2 * mine.size());
        const double a = candidates[c].actions[2 * t + g];
        model::encode_input(static_cast<causal::Group>(g), std::span<const double>(s.data() + r * sd, sd),
                            std::span<const double>(&a, 1), x.data() + r * in);
      }
      model.predict_batch(b, x.data(), rows, y.data(), ws);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t p = mine[(r / 2) % mine.size()];
        const double* o = y.data() + r * out_dim;
        double* sr = s.data() + r * sd;
        const double* eps = noise.data() + (p * H + t) * sd;
        for (std::size_t d = 0; d < sd; ++d) sr[d] += o[d] + std::exp(0.5 * o[sd + 1 + d]) * eps[d];
        envs::project_state(env, std::span<double>(sr, sd));
        disc_ret[r] += weight * o[sd];
      }
      weight *= config.discount;
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t g = r % 2, k = (r / 2) % mine.size(), c = r / (2 * mine.size());
      const std::size_t slot = (c * P + mine[k]) * 2 + g;
      ret[slot] = disc_ret[r];
      std::copy_n(s.data() + r * sd, sd, final_state.data() + slot * sd);
    }
  });

  const double inv_p = 1.0 / static_cast<double>(P);
  for (std::size_t c = 0; c < C; ++c) {
    auto& e = candidates[c];
    e.returns = {0.0, 0.0};
    e.terminal_disparity = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const std::size_t slot = (c * P + p) * 2;
      e.returns[0] += ret[slot] * inv_p;
      e.returns[1] += ret[slot + 1] * inv_p;
      double l1 = 0.0;
      for (std::size_t d = 0; d < sd; ++d) l1 += std::fabs(final_state[slot * sd + d] - final_state[(slot + 1) * sd + d]);
      e.terminal_disparity += l1 * inv_p;
    }
    e.gap = e.returns[1] - e.returns[0];
    e.objective = objective(e, config);
  }
  return candidates;
}

ActionDistribution update_distribution(const ActionDistribution& dist, std::span<const CandidateEval> elites,
                                       double min_std) {
  require(!elites.empty(), ErrorCode::kInvalidArgument, "need at least one elite");
  ActionDistribution next = dist;
  const double m = static_cast<double>(elites.size());
  for (std::size_t i = 0; i < dist.mean.size(); ++i) {
    double mean = 0.0;
    for (const auto& e : elites) mean += e.sample.at(i);
    mean /= m;
    double var = 0.0;
    for (const auto& e : elites) var += (e.sample[i] - mean) * (e.sample[i] - mean);
    next.mean[i] = std::clamp(mean, dist.lo, dist.hi);
    next.std[i] = std::max(std::sqrt(var / m), min_std);
  }
  return next;
}

bool shares_actions(const PlanConfig& config, const envs::GroupEnvState& state, bool df_violated) {
  if (config.mode == Mode::kFairA) return true;
  if (config.mode == Mode::kInsightFair) return !df_violated && state.disparity() <= config.epsilon;
  return false;
}

CemPlanner::CemPlanner(PlanConfig config, envs::EnvParams env) : config_(std::move(config)), env_(std::move(env)) {
  config_.validate();
}

void CemPlanner::reset() { previous_.reset(); }

envs::GroupAction CemPlanner::plan(const model::EnsembleModel& model, const envs::GroupEnvState& state,
                                   bool df_violated, Rng& rng) {
  const std::size_t H = config_.horizon, P = config_.particles, N = config_.population;
  const double lo = 0.0, hi = static_cast<double>(envs::num_actions(env_) - 1);
  const double init_std = config_.init_std_fraction * (hi - lo);
  const bool shared = shares_actions(config_, state, df_violated);

  ActionDistribution dist = ActionDistribution::initial(H, lo, hi, shared, init_std);
  if (previous_) {
    // Shift the last plan by one step; the final step repeats.
    for (std::size_t t = 0; t < H; ++t) {
      const std::size_t src = std::min(t + 1, H - 1);
      for (std::size_t g = 0; g < 2; ++g) dist.mean[2 * t + g] = previous_->mean[2 * src + g];
      if (shared) {
        const double avg = 0.5 * (dist.mean[2 * t] + dist.mean[2 * t + 1]);
        dist.mean[2 * t] = dist.mean[2 * t + 1] = avg;
      }
    }
  }

  const Rng base(rng.engine()());
  std::vector<double> noise(P * H * model.state_dim());
  {
    Rng nr = base.substream(0);
    for (auto& v : noise) v = nr.normal();
  }

  best_history_.clear();
  std::optional<CandidateEval> best;
  for (std::size_t k = 0; k < config_.iterations; ++k) {
    Rng sr = base.substream(1 + k);
    std::vector<CandidateEval> pool(N);
    for (auto& c : pool) {
      c.sample.resize(2 * H);
      c.actions.resize(2 * H);
      for (std::size_t t = 0; t < H; ++t) {
        for (std::size_t g = 0; g < 2; ++g) {
          if (shared && g == 1) {
            c.sample[2 * t + 1] = c.sample[2 * t];
          } else {
            c.sample[2 * t + g] = std::clamp(dist.mean[2 * t + g] + dist.std[2 * t + g] * sr.normal(), lo, hi);
          }
          c.actions[2 * t + g] = static_cast<int>(std::lround(c.sample[2 * t + g]));
        }
      }
    }
    pool = evaluate_candidates(model, state, std::move(pool), config_, env_, noise);
    // The previous best keeps its cached evaluation: the noise is fixed
    // within this call, so its objective is still exact.
    if (config_.elite_retention && best) pool.push_back(*best);

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pool[a].objective > pool[b].objective; });
    std::vector<CandidateEval> elites;
    for (std::size_t i = 0; i < std::min(config_.elites, pool.size()); ++i) elites.push_back(pool[order[i]]);
    if (!best || elites.front().objective > best->objective) best = elites.front();
    dist = update_distribution(dist, elites, config_.min_std);
    best_history_.push_back(best->objective);
  }

  previous_ = dist;
  best_ = *best;
  envs::GroupAction action;
  action.a = {best_.actions[0], best_.actions[1]};
  return action;
}

envs::GroupAction plan(const model::EnsembleModel& model, const envs::GroupEnvState& state, const PlanConfig& config,
                       const envs::EnvParams& env, bool df_violated, Rng& rng) {
  CemPlanner planner(config, env);
  return planner.plan(model, state, df_violated, rng);
}

}  // namespace fairdyn::planner
