#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "fairdyn/causal/effects.hpp"
#include "fairdyn/causal/io.hpp"
#include "fairdyn/causal/tables.hpp"
#include "fairdyn/common/error.hpp"
#include "fairdyn/envs/envs.hpp"

using namespace fairdyn;
using namespace fairdyn::envs;

namespace {

GroupAction both(int a) { return GroupAction{{a, a}}; }

}  // namespace

TEST_CASE("presets reset to the configured initial states") {
  CHECK(reset(preset(EnvKind::kAllocation, "unfair")).s[0] == std::vector<double>{6.0});
  CHECK(reset(preset(EnvKind::kAllocation, "unfair")).s[1] == std::vector<double>{6.0});
  const auto fair = reset(preset(EnvKind::kAllocation, "fair"));
  CHECK(fair.s[0][0] == 6.2);
  CHECK(fair.s[1][0] == 6.0);
  CHECK(fair.step == 0);
  const auto lend = reset(preset(EnvKind::kLending, "fair"));
  CHECK(lend.s[0] == std::vector<double>{0.0, 0.2, 0.35, 0.25, 0.2});
  CHECK(lend.s[1] == std::vector<double>{0.0, 0.2, 0.25, 0.35, 0.2});
  CHECK_THROWS_AS(preset(EnvKind::kLending, "nope"), Error);
}

TEST_CASE("relative advantage of a pair") {
  CHECK(group_advantage({0.0, 0.05}) == std::array<double, 2>{0.0, 0.05});
  CHECK(group_advantage({0.3, 0.1})[0] == doctest::Approx(0.2));
  CHECK(group_advantage({0.3, 0.1})[1] == 0.0);
  CHECK(group_advantage({0.2, 0.2}) == std::array<double, 2>{0.0, 0.0});
}

TEST_CASE("allocation decrease rule") {
  // Search for a draw with six incidents; four units solve four of them.
  const AllocationParams p;
  const auto s0 = reset(p);
  bool seen = false;
  for (std::uint64_t seed = 0; seed < 200 && !seen; ++seed) {
    Rng rng(seed);
    const auto out = step_allocation(s0, both(4), p, rng);
    if (out.info[0].events != 6.0) continue;
    seen = true;
    CHECK(out.info[0].successes == 4.0);
    CHECK(out.next.s[0][0] == doctest::Approx(5.9));
    CHECK(out.rewards[0] == doctest::Approx(-2.0 - p.allocation_cost * 4));
    CHECK(out.next.step == 1);
  }
  CHECK(seen);
}

TEST_CASE("zero allocation misses every incident") {
  const AllocationParams p;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto out = step_allocation(reset(p), both(0), p, rng);
    CHECK(out.rewards[0] == -out.info[0].events);
    CHECK(out.next.s[0][0] == doctest::Approx(6.1));
  }
}

TEST_CASE("allocation rates stay within bounds") {
  AllocationParams p;
  p.init_rates = {0.05, 11.95};
  Rng rng(4);
  auto st = reset(p);
  for (int t = 0; t < 500; ++t) {
    st = step_allocation(st, GroupAction{{10, 0}}, p, rng).next;
    CHECK(st.s[0][0] >= 0.0);
    CHECK(st.s[1][0] <= p.rate_max);
  }
}

TEST_CASE("property: equal advantages give group-symmetric allocation dynamics") {
  AllocationParams p;
  p.alpha = {0.4, 0.4};
  p.beta = {0.2, 0.2};
  const auto data = rollout(p, random_policy(11), 8, 300);
  double sum[2] = {0, 0}, sq[2] = {0, 0}, n[2] = {0, 0};
  for (const auto& r : data.records()) {
    const auto z = causal::index_of(r.group);
    sum[z] += r.reward;
    sq[z] += r.reward * r.reward;
    n[z] += 1;
  }
  const double m0 = sum[0] / n[0], m1 = sum[1] / n[1];
  const double v0 = sq[0] / n[0] - m0 * m0, v1 = sq[1] / n[1] - m1 * m1;
  // Episodes share a state trajectory, so allow a generous multiple.
  CHECK(std::fabs(m0 - m1) < 6.0 * std::sqrt(v0 / n[0] + v1 / n[1]) + 0.05);
  // A stepwise check: same rng stream, labels swapped, same mapping.
  const auto st = reset(p);
  Rng a(9), b(9);
  const auto out_a = step_allocation(st, GroupAction{{3, 7}}, p, a);
  const auto out_b = step_allocation(st, GroupAction{{3, 7}}, p, b);
  CHECK(out_a.rewards == out_b.rewards);
}

TEST_CASE("property: a larger transition advantage lowers the next rate") {
  auto mean_next = [](double b2) {
    AllocationParams p;
    p.beta = {0.0, b2};
    Rng rng(10);
    double total = 0.0;
    for (int i = 0; i < 4000; ++i) total += step_allocation(reset(p), both(5), p, rng).next.s[1][0];
    return total / 4000.0;
  };
  CHECK(mean_next(0.3) < mean_next(0.1));
  CHECK(mean_next(0.1) < mean_next(0.0));
}

TEST_CASE("credit shift after one repayment") {
  LendingParams::Dist d{0.0, 0.2, 0.3, 0.3, 0.2};
  const std::vector<int> repaid{2};
  apply_credit_shifts(d, repaid, {}, 0.01, 0.0);
  CHECK(d[1] == doctest::Approx(0.2));
  CHECK(d[2] == doctest::Approx(0.29));
  CHECK(d[3] == doctest::Approx(0.31));
  CHECK(d[4] == doctest::Approx(0.2));
  const std::vector<int> defaulted{1};
  apply_credit_shifts(d, {}, defaulted, 0.01, 0.0);
  CHECK(d[0] == doctest::Approx(0.01));
  CHECK(d[1] == doctest::Approx(0.19));
  // A shift larger than the source mass moves only what is there.
  LendingParams::Dist e{0.0, 0.005, 0.3, 0.3, 0.395};
  apply_credit_shifts(e, std::vector<int>{1}, {}, 0.01, 0.0);
  CHECK(e[1] == 0.0);
  CHECK(e[2] == doctest::Approx(0.305));
}

TEST_CASE("threshold above the top bin grants no loans") {
  const LendingParams p;
  Rng rng(2);
  const auto st = reset(p);
  const auto out = step_lending(st, both(5), p, rng);
  CHECK(out.rewards == std::array<double, 2>{0.0, 0.0});
  CHECK(out.next.s == st.s);
  CHECK_THROWS_AS(step_lending(st, both(6), p, rng), Error);
}

TEST_CASE("property: lending states stay on the simplex") {
  LendingParams p;
  p.alpha = {0.0, 0.2};
  p.beta = {0.5, 0.0};
  Rng rng(5), policy(6);
  auto st = reset(p);
  for (int t = 0; t < 10000; ++t) {
    const GroupAction a{{static_cast<int>(policy.index(6)), static_cast<int>(policy.index(6))}};
    st = step_lending(st, a, p, rng).next;
    for (const auto& d : st.s) {
      double total = 0.0;
      for (double v : d) {
        CHECK(v >= 0.0);
        total += v;
      }
      CHECK(std::fabs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("lending rewards count repayments and defaults") {
  LendingParams p;
  p.interest = 2.0;
  p.default_cost = 3.0;
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto out = step_lending(reset(p), both(0), p, rng);
    for (int z = 0; z < 2; ++z) {
      CHECK(out.info[z].events == p.applicants_per_step);
      CHECK(out.rewards[z] == 2.0 * out.info[z].successes - 3.0 * out.info[z].failures);
    }
  }
}

TEST_CASE("invalid parameters are rejected") {
  LendingParams p;
  p.init_dists[0] = {0.0, 0.2, 0.3, 0.3, 0.3};
  CHECK_THROWS_AS(p.validate(), Error);
  p = LendingParams{};
  p.shift_mass = 0.25;
  CHECK_THROWS_AS(p.validate(), Error);
  AllocationParams a;
  a.rate_delta = 0.0;
  CHECK_THROWS_AS(a.validate(), Error);
  a = AllocationParams{};
  a.init_rates = {0.0, 6.0};
  CHECK_THROWS_AS(a.validate(), Error);
}

TEST_CASE("rollouts are deterministic per seed") {
  for (auto kind : {EnvKind::kAllocation, EnvKind::kLending}) {
    const auto p = preset(kind, "unfair");
    std::stringstream a, b, c;
    causal::write_jsonl(rollout(p, random_policy(num_actions(p)), 42, 3), a);
    causal::write_jsonl(rollout(p, random_policy(num_actions(p)), 42, 3), b);
    causal::write_jsonl(rollout(p, random_policy(num_actions(p)), 43, 3), c);
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
  }
  const auto data = rollout(preset(EnvKind::kAllocation, "unfair"), random_policy(11), 1, 2);
  CHECK(data.size() == 400);
  CHECK(data.max_step() == 99);
}

TEST_CASE("zero episodes yield an empty dataset") {
  const auto p = preset(EnvKind::kAllocation, "unfair");
  const auto data = rollout(p, random_policy(11), 1, 0);
  CHECK(data.empty());
  try {
    causal::fit_tables(data, default_discretization(p));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyDataset);
  }
}

TEST_CASE("random-policy data reveals the transition advantage") {
  const auto p = preset(EnvKind::kAllocation, "unfair");
  const auto data = rollout(p, random_policy(11), 77, 200);
  const auto e = causal::estimate_effects(data, default_discretization(p), {100, 1, 1});
  const auto verdict = causal::check_dynamics_fairness(e);
  CHECK(verdict.violated);
  // z1 moves down by 0.1 * 0.05 more per step at any fixed state.
  CHECK(e.nde_next_state.value[0] < -3.0 * e.nde_next_state.std_error[0]);
  CHECK(e.nde_next_state.value[0] == doctest::Approx(-0.005).epsilon(0.5));
}

TEST_CASE("env config round trip") {
  auto p = preset(EnvKind::kLending, "unfair");
  std::get<LendingParams>(p).shift_mass = 0.02;
  const auto back = parse_env_config(env_config_json(p));
  CHECK(env_config_json(back) == env_config_json(p));
  const auto a = parse_env_config(R"({"env":"allocation","preset":"fair","beta":[0.1,0.0]})");
  CHECK(std::get<AllocationParams>(a).init_rates[0] == 6.2);
  CHECK(std::get<AllocationParams>(a).beta[0] == 0.1);
  CHECK_THROWS_AS(parse_env_config(R"({"env":"moon"})"), Error);
  CHECK_THROWS_AS(parse_env_config(R"({"env":"lending","shift_mass":0.5})"), Error);
}

TEST_CASE("channel swap moves alpha to transitions") {
  AllocationParams p;
  p.alpha = {0.0, 0.5};
  p.advantage_channel_swap = true;
  Rng rng(1);
  const auto out = step_allocation(reset(p), both(0), p, rng);
  // No capacity advantage on rewards; the rate rise for z1 is damped.
  CHECK(out.rewards[1] == -out.info[1].events);
  CHECK(out.next.s[1][0] == doctest::Approx(6.05));
}
