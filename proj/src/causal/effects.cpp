#include "fairdyn/causal/effects.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairdyn/common/error.hpp"
#include "fairdyn/common/parallel.hpp"
#include "fairdyn/common/rng.hpp"
#include "indexed.hpp"

namespace fairdyn::causal {

std::string_view to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::kTeReward: return "TE_R";
    case EffectKind::kNdeReward: return "NDE_R";
    case EffectKind::kNieReward: return "NIE_R";
    case EffectKind::kNdeNextState: return "NDE_Sprime";
    case EffectKind::kTeReturn: return "TE_G";
  }
  return "?";
}

namespace {

// Mass of each group's mediator distribution on the common support.
std::array<double, 2> common_mass(const ConditionalTables& t) {
  std::array<double, 2> mass{0.0, 0.0};
  for (const auto& c : t.cells()) {
    if (!c.common()) continue;
    mass[0] += c.probability[0];
    mass[1] += c.probability[1];
  }
  require(mass[0] > 0.0 && mass[1] > 0.0, ErrorCode::kEmptyGroup,
          "no (state, action) cell is observed under both groups");
  return mass;
}

EffectEstimate scalar_estimate(EffectKind kind, double value, const ConditionalTables& t) {
  return EffectEstimate{kind, {value}, {0.0}, t.n_effective()};
}

}  // namespace

EffectEstimate estimate_te_reward(const ConditionalTables& t) {
  const auto mass = common_mass(t);
  double e1 = 0.0;
  double e0 = 0.0;
  for (const auto& c : t.cells()) {
    if (!c.common()) continue;
    e1 += c.mean_reward[1] * (c.probability[1] / mass[1]);
    e0 += c.mean_reward[0] * (c.probability[0] / mass[0]);
  }
  return scalar_estimate(EffectKind::kTeReward, e1 - e0, t);
}

EffectEstimate estimate_nde_reward(const ConditionalTables& t) {
  const auto mass = common_mass(t);
  double v = 0.0;
  for (const auto& c : t.cells()) {
    if (!c.common()) continue;
    v += (c.mean_reward[1] - c.mean_reward[0]) * (c.probability[0] / mass[0]);
  }
  return scalar_estimate(EffectKind::kNdeReward, v, t);
}

EffectEstimate estimate_nie_reward(const ConditionalTables& t) {
  const auto mass = common_mass(t);
  double v = 0.0;
  for (const auto& c : t.cells()) {
    if (!c.common()) continue;
    v += c.mean_reward[1] * (c.probability[0] / mass[0] - c.probability[1] / mass[1]);
  }
  return scalar_estimate(EffectKind::kNieReward, v, t);
}

EffectEstimate estimate_nde_next_state(const ConditionalTables& t) {
  const auto mass = common_mass(t);
  const std::size_t d = t.state_dim();
  std::vector<double> v(d, 0.0);
  for (const auto& c : t.cells()) {
    if (!c.common()) continue;
    const double w = c.probability[0] / mass[0];
    for (std::size_t j = 0; j < d; ++j) v[j] += (c.mean_next_state[1][j] - c.mean_next_state[0][j]) * w;
  }
  return EffectEstimate{EffectKind::kNdeNextState, std::move(v), std::vector<double>(d, 0.0), t.n_effective()};
}

EffectSet estimate_all(const ConditionalTables& t) {
  return EffectSet{estimate_te_reward(t), estimate_nde_reward(t), estimate_nie_reward(t),
                   estimate_nde_next_state(t)};
}

namespace {

void assign_std_error(EffectEstimate& est, const std::vector<std::vector<double>>& draws) {
  const std::size_t dim = est.value.size();
  est.std_error.assign(dim, 0.0);
  if (draws.size() < 2) return;
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (const auto& d : draws) mean += d[j];
    mean /= static_cast<double>(draws.size());
    double ss = 0.0;
    for (const auto& d : draws) ss += (d[j] - mean) * (d[j] - mean);
    est.std_error[j] = std::sqrt(ss / static_cast<double>(draws.size() - 1));
  }
}

}  // namespace

namespace {

std::vector<std::uint32_t> resample_groups(const detail::IndexedRecords& rec, Rng& rng) {
  std::vector<std::uint32_t> mult(rec.cell.size(), 0);
  for (const auto& members : rec.by_group) {
    for (std::size_t i = 0; i < members.size(); ++i) ++mult[members[rng.index(members.size())]];
  }
  return mult;
}

// Fills the standard errors of `point` from `resamples` replicates produced by
// replicate(rng). Each replicate gets its own substream, so the result does
// not depend on the worker count.
template <typename Replicate>
void bootstrap(EffectSet& point, const BootstrapOptions& options, Replicate replicate) {
  struct Draw {
    bool ok = false;
    double te = 0.0, nde = 0.0, nie = 0.0;
    std::vector<double> nde_s;
  };
  std::vector<Draw> draws(options.resamples);
  const Rng base(options.seed);
  parallel_for(options.resamples, options.workers, [&](std::size_t r) {
    Rng rng = base.substream(r);
    try {
      const EffectSet e = replicate(rng);
      draws[r] = Draw{true, e.te.scalar(), e.nde.scalar(), e.nie.scalar(), e.nde_next_state.value};
    } catch (const Error& err) {
      // A replicate can lose all common support on sparse grids; drop it.
      if (err.code() != ErrorCode::kEmptyGroup) throw;
    }
  });

  std::vector<std::vector<double>> te, nde, nie, nde_s;
  for (const auto& d : draws) {
    if (!d.ok) continue;
    te.push_back({d.te});
    nde.push_back({d.nde});
    nie.push_back({d.nie});
    nde_s.push_back(d.nde_s);
  }
  assign_std_error(point.te, te);
  assign_std_error(point.nde, nde);
  assign_std_error(point.nie, nie);
  assign_std_error(point.nde_next_state, nde_s);
}

}  // namespace

EffectSet estimate_effects(const TrajectoryDataset& data, const DiscretizationSpec& spec,
                           const BootstrapOptions& options) {
  const auto rec = detail::index_records(data, spec);
  EffectSet point = estimate_all(detail::build_tables(rec, {}));
  if (options.resamples == 0) return point;
  bootstrap(point, options, [&](Rng& rng) { return estimate_all(detail::build_tables(rec, resample_groups(rec, rng))); });
  return point;
}

EffectSet estimate_spliced_effects(const TrajectoryDataset& mediator_data, const TrajectoryDataset& outcome_data,
                                   const DiscretizationSpec& spec, const BootstrapOptions& options) {
  const auto med = detail::index_records(mediator_data, spec);
  const auto out = detail::index_records(outcome_data, spec);
  auto splice = [&](std::span<const std::uint32_t> mm, std::span<const std::uint32_t> mo) {
    return estimate_all(detail::build_tables(med, mm).with_outcomes_from(detail::build_tables(out, mo)));
  };
  EffectSet point = splice({}, {});
  if (options.resamples == 0) return point;
  bootstrap(point, options, [&](Rng& rng) {
    const auto mm = resample_groups(med, rng);
    const auto mo = resample_groups(out, rng);
    return splice(mm, mo);
  });
  return point;
}

DecompositionReport decompose_gap(const TrajectoryDataset& data, const DiscretizationSpec& spec,
                                  std::uint32_t horizon, const BootstrapOptions& options) {
  data.require_nonempty();
  require(horizon >= 1, ErrorCode::kInvalidArgument, "horizon must be at least 1");

  std::vector<TrajectoryDataset> steps;
  steps.reserve(horizon);
  for (std::uint32_t k = 0; k < horizon; ++k) steps.emplace_back(data.state_dim(), data.action_dim(), data.discount());
  double r_max = 0.0;
  for (const auto& r : data.records()) {
    r_max = std::max(r_max, std::fabs(r.reward));
    if (r.step < horizon) steps[r.step].add(r);
  }

  DecompositionReport report;
  report.discount = data.discount();
  const double g = data.discount();
  double te_g = 0.0;
  double te_g_var = 0.0;
  double identity_sum = 0.0;
  double weight = 1.0;
  std::size_t n_eff = 0;
  for (std::uint32_t k = 0; k < horizon; ++k) {
    const auto& sd = steps[k];
    require(sd.count(Group::kZ0) > 0 && sd.count(Group::kZ1) > 0, ErrorCode::kMissingStep,
            "step " + std::to_string(k) + " has no records for one of the groups");
    BootstrapOptions step_options = options;
    step_options.seed = mix64(options.seed + k);
    const EffectSet e = estimate_effects(sd, spec, step_options);
    te_g += weight * e.te.scalar();
    te_g_var += weight * weight * e.te.scalar_error() * e.te.scalar_error();
    identity_sum += weight * (e.nde.scalar() - e.nie.scalar());
    n_eff += e.te.n_effective;
    report.per_step.push_back(StepDecomposition{k, e.te, e.nde, e.nie});
    weight *= g;
  }
  // Standard error treats the per-step gaps as independent.
  report.te_return = EffectEstimate{EffectKind::kTeReturn, {te_g}, {std::sqrt(te_g_var)}, n_eff};
  report.residual = std::fabs(te_g - identity_sum);
  report.truncation_bound = g == 0.0 ? 0.0 : std::pow(g, static_cast<double>(horizon)) * r_max / (1.0 - g);
  return report;
}

namespace {

FairnessVerdict decide(EffectEstimate nde_r, EffectEstimate nde_s, double tau_r, std::vector<double> tau_s,
                       bool calibrated) {
  FairnessVerdict v;
  bool violated = std::fabs(nde_r.scalar()) > tau_r;
  for (std::size_t j = 0; j < nde_s.value.size(); ++j) violated = violated || std::fabs(nde_s.value[j]) > tau_s[j];
  v.nde_reward = std::move(nde_r);
  v.nde_next_state = std::move(nde_s);
  v.tau_reward = tau_r;
  v.tau_next_state = std::move(tau_s);
  v.calibrated = calibrated;
  v.violated = violated;
  return v;
}

}  // namespace

FairnessVerdict check_dynamics_fairness(const ConditionalTables& tables, double tau) {
  require(tau >= 0.0, ErrorCode::kInvalidArgument, "tau must be nonnegative");
  auto nde_s = estimate_nde_next_state(tables);
  std::vector<double> tau_s(nde_s.value.size(), tau);
  return decide(estimate_nde_reward(tables), std::move(nde_s), tau, std::move(tau_s), false);
}

FairnessVerdict check_dynamics_fairness(const EffectSet& effects, std::optional<double> tau, double multiplier) {
  if (tau) {
    require(*tau >= 0.0, ErrorCode::kInvalidArgument, "tau must be nonnegative");
    std::vector<double> tau_s(effects.nde_next_state.value.size(), *tau);
    return decide(effects.nde, effects.nde_next_state, *tau, std::move(tau_s), false);
  }
  std::vector<double> tau_s(effects.nde_next_state.std_error.size());
  for (std::size_t j = 0; j < tau_s.size(); ++j) tau_s[j] = multiplier * effects.nde_next_state.std_error[j];
  return decide(effects.nde, effects.nde_next_state, multiplier * effects.nde.scalar_error(), std::move(tau_s), true);
}

}  // namespace fairdyn::causal
