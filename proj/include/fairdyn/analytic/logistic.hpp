#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fairdyn/causal/effects.hpp"

// Threshold reward model R = 1 iff w0 + w1 z + w2 s + w3 a + U_R >= 0 with
// U_R ~ Logistic(0, 1), so P(R = 1 | z, s, a) = L(w0 + w1 z + w2 s + w3 a).
// Mediators are S = z + sigma_s e_S and A = z + sigma_a e_A; the closed forms
// keep the leading order in sigma.
namespace fairdyn::analytic {

struct LogisticModelParams {
  double w0 = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  double sigma_s = 0.0;
  double sigma_a = 0.0;

  void validate() const;
};

double logistic(double x);

struct AnalyticEffects {
  double te = 0.0;
  double nde = 0.0;
  double nie = 0.0;
};

// nde = L(w0+w1) - L(w0), nie = L(w0+w1) - L(w0+w1+w2+w3), te = nde - nie.
AnalyticEffects analytic_effects(const LogisticModelParams& p);

struct SweepRow {
  double w0 = 0.0;
  double te = 0.0;
  double nde = 0.0;
  double neg_nie = 0.0;
};

// n_points evenly spaced values of w0 over [lo, hi]; p.w0 is ignored.
std::vector<SweepRow> sweep_w0(const LogisticModelParams& p, double lo, double hi, std::size_t n_points);

// Header `w0,te,nde,neg_nie`.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct MonteCarloOptions {
  std::size_t draws = 1'000'000;  // per data source
  double sigma = 1e-3;
  std::uint64_t seed = 0;
  causal::BootstrapOptions bootstrap{200, 0, 1};
};

// Simulates the model and estimates effects through the plug-in estimators.
// With vanishing mediator noise the two groups' natural mediators never
// overlap, so outcome means come from a second sample in which (s, a) is drawn
// from {0, 1}^2 independently of z, and P^(s, a | z) from the natural sample.
causal::EffectSet monte_carlo_effects(const LogisticModelParams& p, const MonteCarloOptions& options = {});

}  // namespace fairdyn::analytic
