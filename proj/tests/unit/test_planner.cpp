#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "fairdyn/common/error.hpp"
#include "fairdyn/planner/cem.hpp"
#include "fairdyn/planner/learn.hpp"

using namespace fairdyn;
using namespace fairdyn::planner;

namespace {

// Linear one-state model with no hidden layer: delta-s = ds_a * a,
// r = -s + r_z1 * z1 - 0.2 a, and log-variances pinned at a tiny floor.
model::EnsembleModel linear_model(double ds_a, double r_z1, std::size_t members = 1) {
  // Inputs (z0, z1, s, a); outputs (delta-s, r, logvar delta-s, logvar r).
  std::vector<double> w(16, 0.0), b{0.0, 0.0, -1e3, -1e3};
  w[3 * 4 + 0] = ds_a;
  w[2 * 4 + 1] = -1.0;
  w[1 * 4 + 1] = r_z1;
  w[3 * 4 + 1] = -0.2;
  std::vector<double> params = w;
  params.insert(params.end(), b.begin(), b.end());
  nlohmann::json j;
  j["format"] = "fairdyn-ensemble";
  j["version"] = 1;
  j["config"] = {{"ensemble_size", members}, {"hidden_layers", std::vector<int>{}}, {"learning_rate", 1e-3},
                 {"epochs", 1},  {"batch_size", 8}, {"weight_init_scale", 1.0}, {"min_logvar", -60.0},
                 {"max_logvar", 2.0}, {"optimizer", "sgd"}, {"bootstrap", false}};
  j["layout"] = {{"state_dim", 1}, {"action_dim", 1}, {"input_dim", 4}, {"output_dim", 4}};
  j["trained"] = true;
  j["normalization"] = {{"mean", std::vector<double>(4, 0.0)}, {"std", std::vector<double>(4, 1.0)}};
  j["members"] = std::vector<std::vector<double>>(members, params);
  return model::EnsembleModel::from_json(j.dump(), 1, 1);
}

envs::GroupEnvState alloc_state(double s0, double s1) {
  envs::GroupEnvState st;
  st.s = {std::vector<double>{s0}, std::vector<double>{s1}};
  return st;
}

CandidateEval candidate(std::vector<int> actions) {
  CandidateEval c;
  c.actions = actions;
  c.sample.assign(actions.begin(), actions.end());
  return c;
}

const envs::EnvParams kAlloc = envs::AllocationParams{};

}  // namespace

TEST_CASE("hand-built two-step model gives the hand-computed objective") {
  const auto m = linear_model(-0.1, 0.5);
  PlanConfig cfg;
  cfg.horizon = 2;
  cfg.particles = 3;
  cfg.discount = 0.9;
  cfg.mode = Mode::kInsightFair;
  const std::vector<double> noise(cfg.particles * cfg.horizon, 0.7);
  // t0: (1, 2), t1: (3, 0)
  auto out = evaluate_candidates(m, alloc_state(6.0, 5.0), {candidate({1, 2, 3, 0})}, cfg, kAlloc, noise);
  // z0: -6.2 + 0.9 * (-5.9 - 0.6) ; z1: (-5 + 0.5 - 0.4) + 0.9 * (-4.8 + 0.5)
  CHECK(out[0].returns[0] == doctest::Approx(-12.05).epsilon(1e-9));
  CHECK(out[0].returns[1] == doctest::Approx(-8.77).epsilon(1e-9));
  CHECK(out[0].gap == doctest::Approx(3.28).epsilon(1e-9));
  CHECK(out[0].objective == doctest::Approx(-20.82 - 3.28).epsilon(1e-9));
  // Terminal states 5.6 and 4.8.
  CHECK(out[0].terminal_disparity == doctest::Approx(0.8).epsilon(1e-9));
  cfg.mode = Mode::kFairS;
  cfg.state_penalty = 2.0;
  CHECK(objective(out[0], cfg) == doctest::Approx(-20.82 - 1.6).epsilon(1e-9));
  cfg.mode = Mode::kPets;
  CHECK(objective(out[0], cfg) == doctest::Approx(-20.82).epsilon(1e-9));
}

TEST_CASE("symmetric model, state and candidate give zero gap") {
  const auto m = linear_model(-0.1, 0.0, 3);
  PlanConfig cfg;
  cfg.horizon = 4;
  cfg.particles = 5;
  Rng rng(1);
  std::vector<double> noise(cfg.particles * cfg.horizon);
  for (auto& v : noise) v = rng.normal();
  const auto out =
      evaluate_candidates(m, alloc_state(4.0, 4.0), {candidate({1, 1, 5, 5, 2, 2, 9, 9})}, cfg, kAlloc, noise);
  CHECK(out[0].gap == 0.0);
  CHECK(out[0].terminal_disparity == 0.0);
}

TEST_CASE("update_distribution statistics") {
  auto dist = ActionDistribution::initial(1, 0.0, 10.0, false, 2.0);
  std::vector<CandidateEval> two{candidate({2, 5}), candidate({4, 5})};
  auto next = update_distribution(dist, two, 1e-3);
  CHECK(next.mean[0] == doctest::Approx(3.0));
  CHECK(next.std[0] == doctest::Approx(1.0));
  // Identical elites collapse to the floor.
  CHECK(next.mean[1] == doctest::Approx(5.0));
  CHECK(next.std[1] == 1e-3);
  // Elites symmetric about the mean leave it in place.
  std::vector<CandidateEval> sym{candidate({3, 5}), candidate({7, 5})};
  CHECK(update_distribution(dist, sym).mean[0] == doctest::Approx(dist.mean[0]));
}

TEST_CASE("shared-action rule") {
  PlanConfig cfg;
  cfg.epsilon = 0.05;
  cfg.mode = Mode::kFairA;
  CHECK(shares_actions(cfg, alloc_state(1.0, 9.0), true));
  cfg.mode = Mode::kPets;
  CHECK_FALSE(shares_actions(cfg, alloc_state(6.0, 6.0), false));
  cfg.mode = Mode::kInsightFair;
  CHECK(shares_actions(cfg, alloc_state(6.0, 6.04), false));
  CHECK_FALSE(shares_actions(cfg, alloc_state(6.0, 6.04), true));
  CHECK_FALSE(shares_actions(cfg, alloc_state(6.0, 6.2), false));
}

TEST_CASE("planning properties on a fixed model") {
  const auto m = linear_model(-0.3, 0.4, 2);
  PlanConfig cfg;
  cfg.horizon = 5;
  cfg.population = 40;
  cfg.elites = 6;
  cfg.iterations = 4;
  cfg.particles = 2;

  SUBCASE("actions stay on the menu and the best objective never drops") {
    for (Mode mode : {Mode::kPets, Mode::kFairA, Mode::kFairS, Mode::kInsightFair}) {
      cfg.mode = mode;
      CemPlanner p(cfg, kAlloc);
      Rng rng(3);
      for (int step = 0; step < 5; ++step) {
        const auto a = p.plan(m, alloc_state(6.0 - step, 3.0 + step), true, rng);
        for (int v : a.a) {
          CHECK(v >= 0);
          CHECK(v <= 10);
        }
        const auto& h = p.best_history();
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] >= h[i - 1]);
        if (mode == Mode::kFairA) CHECK(a.a[0] == a.a[1]);
      }
    }
  }

  SUBCASE("zero-penalty InsightFair traces PETS exactly") {
    PlanConfig pets = cfg, fair = cfg;
    pets.mode = Mode::kPets;
    fair.mode = Mode::kInsightFair;
    fair.penalty = 0.0;
    fair.epsilon = 0.0;
    CemPlanner a(pets, kAlloc), b(fair, kAlloc);
    Rng ra(9), rb(9);
    for (int step = 0; step < 6; ++step) {
      const auto st = alloc_state(5.0 + 0.1 * step, 2.0);
      const auto x = a.plan(m, st, true, ra);
      const auto y = b.plan(m, st, true, rb);
      CHECK(x.a == y.a);
      CHECK(a.best_history() == b.best_history());
    }
  }

  SUBCASE("a constant shift of the objective keeps the ranking") {
    Rng rng(4);
    std::vector<CandidateEval> pool;
    for (int i = 0; i < 30; ++i) {
      std::vector<int> acts(10);
      for (auto& v : acts) v = static_cast<int>(rng.index(11));
      pool.push_back(candidate(acts));
    }
    const std::vector<double> noise(cfg.particles * cfg.horizon, 0.0);
    auto evals = evaluate_candidates(m, alloc_state(6.0, 5.0), pool, cfg, kAlloc, noise);
    auto best = [](const std::vector<CandidateEval>& v, double shift) {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].objective + shift > v[arg].objective + shift) arg = i;
      return arg;
    };
    CHECK(best(evals, 0.0) == best(evals, 1234.5));
  }
}

TEST_CASE("planning on an untrained model is rejected") {
  model::EnsembleModel m(1, 1, model::EnsembleConfig{});
  Rng rng(1);
  try {
    plan(m, alloc_state(6.0, 6.0), PlanConfig{}, kAlloc, false, rng);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUntrainedModel);
  }
}

TEST_CASE("lending rollouts stay on the simplex inside the planner") {
  // Zero model on a 5-bin state: only noise moves the state.
  model::EnsembleConfig mc;
  mc.hidden_layers = {4};
  mc.ensemble_size = 1;
  model::EnsembleModel m(5, 1, mc);
  causal::TrajectoryDataset data(5, 1);
  Rng rng(2);
  for (int i = 0; i < 64; ++i) {
    std::vector<double> s{0.0, 0.2, 0.3, 0.3, 0.2};
    data.add({causal::group_from_int(i % 2), s, {double(i % 6)}, rng.normal(), s, 0});
  }
  m.fit(data, 1, 2);
  PlanConfig cfg;
  cfg.horizon = 3;
  cfg.population = 10;
  cfg.elites = 2;
  cfg.iterations = 2;
  cfg.mode = Mode::kFairS;
  const envs::EnvParams lend = envs::LendingParams{};
  std::vector<double> noise(cfg.particles * cfg.horizon * 5);
  for (auto& v : noise) v = 50.0 * rng.normal();
  const auto out = evaluate_candidates(m, envs::reset(lend), {candidate({0, 5, 1, 4, 2, 3})}, cfg, lend, noise);
  // Two points on the simplex are at most 2 apart in L1.
  CHECK(out[0].terminal_disparity <= 2.0 + 1e-12);
}

TEST_CASE("learn loop is deterministic and logs every epoch") {
  LearnConfig cfg;
  cfg.plan.horizon = 3;
  cfg.plan.population = 12;
  cfg.plan.elites = 3;
  cfg.plan.iterations = 2;
  cfg.plan.particles = 2;
  cfg.plan.mode = Mode::kInsightFair;
  cfg.model.ensemble_size = 2;
  cfg.model.hidden_layers = {8};
  cfg.model.optimizer = model::Optimizer::kAdam;
  cfg.epochs = 2;
  cfg.first_fit_epochs = 3;
  cfg.fit_epochs = 1;
  cfg.df_resamples = 10;
  cfg.seed = 5;
  auto env = envs::preset(envs::EnvKind::kAllocation, "unfair");
  std::get<envs::AllocationParams>(env).episode_len = 15;
  const auto a = learn(env, cfg);
  const auto b = learn(env, cfg);
  REQUIRE(a.epochs.size() == 2);
  REQUIRE(a.episodes.size() == 2);
  CHECK(a.episodes[0].steps.size() == 15);
  std::stringstream ea, eb, pa, pb;
  write_epoch_csv(ea, a.epochs);
  write_epoch_csv(eb, b.epochs);
  write_episode_csv(pa, a.episodes[1]);
  write_episode_csv(pb, b.episodes[1]);
  CHECK(ea.str() == eb.str());
  CHECK(pa.str() == pb.str());
  std::string header;
  std::getline(pa, header);
  CHECK(header == "step,action_z0,action_z1,r_z0,r_z1,state_disparity,decision_gap");
  std::getline(ea, header);
  CHECK(header == "epoch,return,gap,df_flag,nde_r,nde_s");
}

TEST_CASE("Fair-A never treats the groups differently") {
  LearnConfig cfg;
  cfg.plan.horizon = 3;
  cfg.plan.population = 12;
  cfg.plan.elites = 3;
  cfg.plan.iterations = 2;
  cfg.plan.particles = 2;
  cfg.plan.mode = Mode::kFairA;
  cfg.model.ensemble_size = 2;
  cfg.model.hidden_layers = {8};
  cfg.model.optimizer = model::Optimizer::kAdam;
  cfg.epochs = 1;
  cfg.first_fit_epochs = 3;
  cfg.df_resamples = 5;
  auto env = envs::preset(envs::EnvKind::kLending, "fair");
  std::get<envs::LendingParams>(env).episode_len = 20;
  const auto res = learn(env, cfg);
  for (const auto& s : res.episodes[0].steps) CHECK(s.decision_gap == 0.0);
}
