#include "fairdyn/analytic/logistic.hpp"

#include <cmath>
#include <ostream>

#include "fairdyn/causal/discretization.hpp"
#include "fairdyn/common/error.hpp"
#include "fairdyn/common/format.hpp"
#include "fairdyn/common/rng.hpp"

namespace fairdyn::analytic {

void LogisticModelParams::validate() const {
  for (double v : {w0, w1, w2, w3, sigma_s, sigma_a})
    require(std::isfinite(v), ErrorCode::kNonFinite, "logistic model parameter is not finite");
  require(sigma_s >= 0.0 && sigma_a >= 0.0, ErrorCode::kInvalidArgument, "noise scales must be nonnegative");
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

AnalyticEffects analytic_effects(const LogisticModelParams& p) {
  const double l0 = logistic(p.w0);
  const double l1 = logistic(p.w0 + p.w1);
  const double l123 = logistic(p.w0 + p.w1 + p.w2 + p.w3);
  AnalyticEffects e;
  e.nde = l1 - l0;
  e.nie = l1 - l123;
  e.te = e.nde - e.nie;
  return e;
}

std::vector<SweepRow> sweep_w0(const LogisticModelParams& p, double lo, double hi, std::size_t n_points) {
  require(lo < hi, ErrorCode::kInvalidArgument, "sweep range must satisfy lo < hi");
  require(n_points >= 2, ErrorCode::kInvalidArgument, "sweep needs at least two points");
  std::vector<SweepRow> rows;
  rows.reserve(n_points);
  const double step = (hi - lo) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    LogisticModelParams q = p;
    q.w0 = i + 1 == n_points ? hi : lo + step * static_cast<double>(i);
    const auto e = analytic_effects(q);
    rows.push_back(SweepRow{q.w0, e.te, e.nde, -e.nie});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "w0,te,nde,neg_nie\n";
  for (const auto& r : rows) {
    out << format_number(r.w0) << ',' << format_number(r.te) << ',' << format_number(r.nde) << ','
        << format_number(r.neg_nie) << '\n';
  }
}

namespace {

double logistic_noise(Rng& rng) {
  double u = rng.uniform();
  while (u <= 0.0) u = rng.uniform();
  return std::log(u / (1.0 - u));
}

causal::TransitionRecord draw(const LogisticModelParams& p, double sigma, bool randomized, Rng& rng) {
  const int z = rng.bernoulli(0.5) ? 1 : 0;
  const double s_center = randomized ? static_cast<double>(rng.index(2)) : z;
  const double a_center = randomized ? static_cast<double>(rng.index(2)) : z;
  const double s = s_center + sigma * rng.normal();
  const double a = a_center + sigma * rng.normal();
  const double latent = p.w0 + p.w1 * z + p.w2 * s + p.w3 * a + logistic_noise(rng);
  causal::TransitionRecord rec;
  rec.group = causal::group_from_int(z);
  rec.state = {s};
  rec.action = {a};
  rec.reward = latent >= 0.0 ? 1.0 : 0.0;
  rec.next_state = {s};
  return rec;
}

}  // namespace

causal::EffectSet monte_carlo_effects(const LogisticModelParams& p, const MonteCarloOptions& options) {
  p.validate();
  require(options.draws >= 2, ErrorCode::kInvalidArgument, "need at least two draws");
  const Rng base(options.seed);
  causal::TrajectoryDataset natural(1, 1), randomized(1, 1);
  natural.reserve(options.draws);
  randomized.reserve(options.draws);
  Rng rn = base.substream(0), rr = base.substream(1);
  for (std::size_t i = 0; i < options.draws; ++i) {
    natural.add(draw(p, options.sigma, false, rn));
    randomized.add(draw(p, options.sigma, true, rr));
  }
  causal::DiscretizationSpec spec;
  spec.state_axes = {causal::AxisBins::integers(0, 1)};
  spec.action_axes = {causal::AxisBins::integers(0, 1)};
  spec.laplace_alpha = 1.0;
  return causal::estimate_spliced_effects(natural, randomized, spec, options.bootstrap);
}

}  // namespace fairdyn::analytic
