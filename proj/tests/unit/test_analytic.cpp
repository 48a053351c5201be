#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fairdyn/analytic/logistic.hpp"
#include "fairdyn/common/rng.hpp"

using namespace fairdyn;
using namespace fairdyn::analytic;

namespace {

// Independent evaluation through tanh: L(x) = (1 + tanh(x / 2)) / 2.
double logistic_ref(double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); }

LogisticModelParams shared_weight(double w) {
  LogisticModelParams p;
  p.w1 = p.w2 = p.w3 = w;
  return p;
}

}  // namespace

TEST_CASE("logistic values") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(0.3) == doctest::Approx(0.574443).epsilon(1e-6));
  for (double x : {-40.0, -3.0, -0.1, 0.7, 5.0, 40.0}) {
    CHECK(logistic(x) + logistic(-x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(logistic(x) == doctest::Approx(logistic_ref(x)).epsilon(1e-14));
  }
  CHECK(logistic(-800.0) >= 0.0);
}

TEST_CASE("closed-form effects at w = 0.1") {
  const auto e = analytic_effects(shared_weight(0.1));
  CHECK(std::fabs(e.nde - (logistic_ref(0.1) - 0.5)) < 1e-12);
  CHECK(std::fabs(e.nie - (logistic_ref(0.1) - logistic_ref(0.3))) < 1e-12);
  CHECK(std::fabs(e.nde - 0.024979) < 1e-6);
  CHECK(std::fabs(e.nie - -0.049464) < 1e-6);
  CHECK(std::fabs(e.te - 0.074443) < 1e-6);
}

TEST_CASE("missing paths give zero effects") {
  LogisticModelParams p;
  p.w0 = 0.4;
  p.w2 = 0.7;
  p.w3 = -0.2;
  CHECK(analytic_effects(p).nde == 0.0);
  p.w1 = 1.3;
  p.w2 = p.w3 = 0.0;
  CHECK(analytic_effects(p).nie == 0.0);
  p.w1 = 0.0;
  const auto e = analytic_effects(p);
  CHECK(e.te == 0.0);
}

TEST_CASE("property: te = nde - nie for random parameters") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    LogisticModelParams p{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5), 0, 0};
    const auto e = analytic_effects(p);
    CHECK(std::fabs(e.te - (e.nde - e.nie)) < 1e-12);
  }
}

TEST_CASE("sweep shape") {
  const auto rows = sweep_w0(shared_weight(0.1), -2.5, 2.5, 101);
  REQUIRE(rows.size() == 101);
  CHECK(rows.front().w0 == -2.5);
  CHECK(rows.back().w0 == 2.5);
  CHECK(rows[50].w0 == doctest::Approx(0.0));
  for (const auto& r : rows) {
    CHECK(r.te - (r.nde + r.neg_nie) == 0.0);
    CHECK(std::fabs(r.neg_nie) > std::fabs(r.nde));
  }
  double max_nde = 0.0, max_nie = 0.0;
  for (const auto& r : sweep_w0(shared_weight(3.0), -2.5, 2.5, 101)) {
    max_nde = std::max(max_nde, std::fabs(r.nde));
    max_nie = std::max(max_nie, std::fabs(r.neg_nie));
  }
  CHECK(max_nde > max_nie);
  CHECK_THROWS(sweep_w0(shared_weight(0.1), 1.0, 1.0, 5));
  CHECK_THROWS(sweep_w0(shared_weight(0.1), 0.0, 1.0, 1));
}

TEST_CASE("sweep csv") {
  std::stringstream ss;
  write_sweep_csv(ss, sweep_w0(shared_weight(0.1), -1.0, 1.0, 3));
  std::string line;
  std::getline(ss, line);
  CHECK(line == "w0,te,nde,neg_nie");
  int n = 0;
  while (std::getline(ss, line)) ++n;
  CHECK(n == 3);
}

TEST_CASE("simulation reproduces the closed-form direct effect") {
  for (double w : {0.1, 3.0}) {
    CAPTURE(w);
    auto p = shared_weight(w);
    p.w0 = -0.5;
    MonteCarloOptions opt;
    opt.draws = 200'000;
    opt.seed = 21;
    opt.bootstrap.resamples = 60;
    const auto mc = monte_carlo_effects(p, opt);
    const auto e = analytic_effects(p);
    CHECK(std::fabs(mc.nde.scalar() - e.nde) <= 3.0 * mc.nde.scalar_error());
    CHECK(std::fabs(mc.te.scalar() - e.te) <= 3.0 * mc.te.scalar_error());
    CHECK(mc.nde.scalar_error() > 0.0);
  }
}
