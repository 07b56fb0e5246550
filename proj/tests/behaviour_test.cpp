#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adaptrl/behaviour.hpp"
#include "adaptrl/errors.hpp"
#include "adaptrl/oracle.hpp"
#include "adaptrl/user_response.hpp"

using namespace adaptrl;

namespace {

TabularResponseModel constant_model(const GameConfig& game, double p, double e) {
  return TabularResponseModel::from_functions(
      game, [=](const GameState&) { return p; }, [=](const GameState&, Outcome) { return e; });
}

TabularResponseModel varied_model(const GameConfig& game) {
  return TabularResponseModel::from_functions(
      game,
      [](const GameState& s) {
        return 0.9 - 0.15 * s.level + 0.05 * to_int(s.feedback) - (s.previous_score < 0 ? 0.1 : 0.0);
      },
      [](const GameState& s, Outcome o) {
        return 0.4 - 0.2 * s.level + (s.feedback == Feedback::kEncouraging ? 0.3 : 0.0) +
               0.1 * to_int(o);
      });
}

std::vector<ActionId> actions(std::initializer_list<int> ids) {
  std::vector<ActionId> out;
  for (int i : ids) out.push_back(ActionId{i});
  return out;
}

}  // namespace

TEST_CASE("softmax probabilities") {
  const std::vector<double> flat(5, 0.7);
  const auto all = actions({1, 2, 3, 4, 5});
  for (double p : softmax_probabilities(flat, all, 1.0)) CHECK(p == doctest::Approx(0.2));

  const std::vector<double> q{1.0, 2.0};
  const auto p = softmax_probabilities(q, actions({1, 2}), 1.0);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.2689).epsilon(1e-4));

  const std::vector<double> dominant{0.0, 1.0, 0.0, 0.0, 0.0};
  CHECK(softmax_probabilities(dominant, all, 0.01)[1] > 0.99);

  const std::vector<double> huge{1000.0, 999.0, 5000.0, 0.0, 0.0};
  const auto masked = softmax_probabilities(huge, actions({1, 2}), 1.0);
  CHECK(masked[2] == 0.0);
  CHECK(masked[3] == 0.0);
  CHECK(masked[0] + masked[1] == doctest::Approx(1.0));
  CHECK(std::isfinite(masked[0]));
}

TEST_CASE("softmax sampling frequencies") {
  Rng rng(1234);
  const std::vector<double> q{0.3, -0.2, 1.1, 5.0, 5.0};
  const auto valid = actions({1, 2, 3});
  const auto p = softmax_probabilities(q, valid, 0.8);
  const int n = 1000000;
  std::vector<int> counts(5, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(softmax_sample(q, valid, 0.8, rng).index - 1)];
  CHECK(counts[3] == 0);
  CHECK(counts[4] == 0);
  for (int a = 0; a < 3; ++a) {
    const double sigma = std::sqrt(n * p[a] * (1 - p[a]));
    CHECK(std::abs(counts[a] - n * p[a]) <= 3 * sigma);
  }
}

TEST_CASE("temperature schedule") {
  TrainingConfig cfg;
  CHECK(temperature_for_visits(0, cfg) == cfg.initial_temperature);
  CHECK(temperature_for_visits(100, cfg) == doctest::Approx(std::pow(0.99, 100)));
  CHECK(temperature_for_visits(100, cfg) == doctest::Approx(0.366).epsilon(1e-3));
  CHECK(temperature_for_visits(1000000, cfg) == cfg.min_temperature);
  double prev = temperature_for_visits(0, cfg);
  for (int v = 1; v < 2000; ++v) {
    const double t = temperature_for_visits(v, cfg);
    CHECK(t <= prev);
    prev = t;
  }
}

TEST_CASE("rewards") {
  CHECK(compute_reward({RewardVariant::kRePlusE, 3, 3}, 3, 0.5) == 4.5);
  CHECK(compute_reward({RewardVariant::kEOnly, 3, 3}, 2, -1.0) == -3.0);
  CHECK(compute_reward({RewardVariant::kReOnly, 3, 3}, -1, 0.9) == -1.0);
  CHECK(to_string(RewardVariant::kRePlusE) == "RE_plus_E");
  CHECK(reward_variant_from_string("E_only") == RewardVariant::kEOnly);
  CHECK_THROWS_AS(reward_variant_from_string("nope"), ValidationError);
  CHECK_THROWS_AS((RewardSpec{RewardVariant::kRePlusE, 0.0, 3.0}.validate()), ValidationError);
}

TEST_CASE("q_iteration with a deterministic stub") {
  GameConfig game;
  const auto sure = constant_model(game, 1.0, 1.0);
  TrainingConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.discount = 0.0;
  const RewardSpec re{RewardVariant::kReOnly, 3, 3};
  QTable q(game, cfg.initial_temperature);
  Rng rng(3);
  GameState s = initial_state(game);
  int cs = 0;
  for (int t = 0; t < 25; ++t) {
    const IterationResult r = q_iteration(sure, q, s, cs, cfg, re, rng);
    CHECK(r.record.outcome == Outcome::kSuccess);
    CHECK(q.value(s, r.record.action) == r.next_state.level);
    CHECK(r.next_state.previous_score == cs);
    CHECK(r.next_score == r.next_state.level);
    s = r.next_state;
    cs = r.next_score;
  }

  const auto never = constant_model(game, 0.0, 0.0);
  s = initial_state(game);
  cs = 0;
  for (int t = 0; t < 25; ++t) {
    const IterationResult r = q_iteration(never, q, s, cs, cfg, re, rng);
    CHECK(r.record.outcome == Outcome::kFailure);
    CHECK(r.record.activity_result == -1);
    CHECK(r.next_score == -r.next_state.level);
    s = r.next_state;
    cs = r.next_score;
  }
}

TEST_CASE("q_iteration is deterministic for a fixed seed") {
  GameConfig game;
  const auto model = varied_model(game);
  TrainingConfig cfg;
  const RewardSpec reward;
  QTable a(game), b(game);
  Rng ra(77), rb(77);
  GameState sa = initial_state(game), sb = sa;
  int ca = 0, cb = 0;
  for (int t = 0; t < 500; ++t) {
    auto x = q_iteration(model, a, sa, ca, cfg, reward, ra);
    auto y = q_iteration(model, b, sb, cb, cfg, reward, rb);
    CHECK(x.next_state == y.next_state);
    sa = x.next_state, ca = x.next_score;
    sb = y.next_state, cb = y.next_score;
  }
  CHECK(a == b);
}

TEST_CASE("run_session") {
  GameConfig game;
  TrainingConfig cfg;
  cfg.exploration = ExplorationMode::kGreedyOnly;
  const RewardSpec reward{RewardVariant::kReOnly, 3, 3};
  const auto sure = constant_model(game, 1.0, 0.0);
  QTable q(game);
  for (const GameState& s : reachable_states(game)) q.set_value(s, ActionId{3}, 1e6);
  Rng rng(1);
  cfg.learning_rate = 1e-12;
  const SessionResult r = run_session(sure, q, cfg, reward, rng);
  CHECK(r.accumulated_score == 30);
  CHECK(r.steps.size() == 10);

  TrainingConfig soft;
  const auto never = constant_model(game, 0.0, -0.5);
  for (int i = 0; i < 20; ++i) {
    QTable fresh(game);
    const SessionResult f = run_session(never, fresh, soft, reward, rng);
    CHECK(f.accumulated_score >= -30);
    CHECK(f.accumulated_score <= -10);
    CHECK(f.steps.size() == 10);
    CHECK(f.mean_engagement == doctest::Approx(-0.5));
    int sum = 0;
    for (const auto& step : f.steps) sum += step.current_score;
    CHECK(sum == f.accumulated_score);
  }
}

TEST_CASE("train_policy") {
  GameConfig game;
  TrainingConfig cfg;
  const RewardSpec reward;
  const auto model = varied_model(game);
  Rng rng(5);

  QTable init(game);
  init.set_value(GameState{1, Feedback::kNone, 1}, ActionId{2}, 4.25);
  cfg.epochs = 0;
  const TrainingResult none = train_policy(model, game, cfg, reward, rng, &init);
  CHECK(none.q == init);
  CHECK(none.epochs.empty());

  GameConfig one;
  one.num_levels = 1;
  one.sequence_lengths = {3};
  TrainingConfig small;
  small.epochs = 3;
  small.sessions_per_epoch = 10;
  const auto sure = constant_model(one, 1.0, 0.2);
  const TrainingResult r = train_policy(sure, one, small, reward, rng);
  REQUIRE(r.epochs.size() == 3);
  for (const auto& e : r.epochs) CHECK(e.mean_score == 10.0);
  CHECK(r.epochs[2].epoch == 3);
}

TEST_CASE("temperatures never increase during training") {
  GameConfig game;
  TrainingConfig cfg;
  const RewardSpec reward;
  const auto model = varied_model(game);
  QTable q(game);
  Rng rng(8);
  std::vector<double> prev;
  const auto states = reachable_states(game);
  for (const auto& s : states) prev.push_back(q.temperature(s));
  for (int session = 0; session < 300; ++session) {
    run_session(model, q, cfg, reward, rng);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const double t = q.temperature(states[i]);
      CHECK(t <= prev[i]);
      CHECK(t >= cfg.min_temperature);
      prev[i] = t;
    }
  }
}

TEST_CASE("greedy policy") {
  GameConfig game;
  QTable q(game);
  Policy zero = greedy_policy(q);
  for (const GameState& s : reachable_states(game)) CHECK(zero.action(s).index == 1);

  const GameState s{2, Feedback::kNone, -2};
  q.set_value(s, ActionId{2}, 0.5);
  CHECK(greedy_policy(q).action(s).index == 2);

  q.set_value(initial_state(game), ActionId{4}, 10.0);
  q.set_value(initial_state(game), ActionId{5}, 10.0);
  q.set_value(initial_state(game), ActionId{3}, 1.0);
  CHECK(greedy_policy(q).action(initial_state(game)).index == 3);

  Rng rng(4);
  QTable r(game);
  for (const GameState& st : reachable_states(game)) {
    for (ActionId a : valid_actions(st, game)) r.set_value(st, a, rng.normal());
  }
  const Policy before = greedy_policy(r);
  for (const GameState& st : reachable_states(game)) {
    const double shift = 10.0 * rng.normal();
    for (ActionId a : valid_actions(st, game)) r.set_value(st, a, r.value(st, a) + shift);
  }
  const Policy after = greedy_policy(r);
  CHECK(policy_agreement(before, after, game) == 1.0);
}

TEST_CASE("greedy-only mode only executes argmax actions") {
  GameConfig game;
  TrainingConfig cfg;
  cfg.exploration = ExplorationMode::kGreedyOnly;
  const RewardSpec reward;
  const auto model = varied_model(game);
  QTable q(game);
  Rng rng(21);
  GameState s = initial_state(game);
  int cs = 0;
  for (int t = 0; t < 5000; ++t) {
    if (t % 10 == 0) {
      s = initial_state(game);
      cs = 0;
    }
    const auto valid = valid_actions(s, game);
    double best = -1e300;
    for (ActionId a : valid) best = std::max(best, q.value(s, a));
    std::vector<double> before(valid.size());
    for (std::size_t i = 0; i < valid.size(); ++i) before[i] = q.value(s, valid[i]);
    const IterationResult r = q_iteration(model, q, s, cs, cfg, reward, rng);
    const std::size_t k = static_cast<std::size_t>(
        std::find(valid.begin(), valid.end(), r.record.action) - valid.begin());
    REQUIRE(k < valid.size());
    CHECK(before[k] == best);
    s = r.next_state;
    cs = r.next_score;
  }
}

TEST_CASE("select_transfer_policy") {
  GameConfig game;
  auto run = [&](double score) {
    TrainingResult r{QTable(game), {}};
    r.epochs.push_back({1, 0.0, 0.0, 0.0});
    r.epochs.push_back({2, score, 0.0, 0.0});
    return r;
  };
  std::vector<TrainingResult> runs{run(5), run(9), run(7)};
  CHECK(select_transfer_policy(runs) == 1);
  runs = {run(3)};
  CHECK(select_transfer_policy(runs) == 0);
  runs = {run(4), run(4), run(4)};
  CHECK(select_transfer_policy(runs) == 0);
  runs.clear();
  CHECK_THROWS_AS(select_transfer_policy(runs), ValidationError);
}

TEST_CASE("training is reproducible bit for bit") {
  GameConfig game;
  TrainingConfig cfg;
  cfg.epochs = 3;
  const RewardSpec reward;
  const auto model = varied_model(game);
  Rng a(2022), b(2022);
  const TrainingResult x = train_policy(model, game, cfg, reward, a);
  const TrainingResult y = train_policy(model, game, cfg, reward, b);
  CHECK(x.q == y.q);
  REQUIRE(x.epochs.size() == y.epochs.size());
  for (std::size_t i = 0; i < x.epochs.size(); ++i) {
    CHECK(x.epochs[i].mean_score == y.epochs[i].mean_score);
    CHECK(x.epochs[i].mean_engagement == y.epochs[i].mean_engagement);
  }
}

// Averaged over outcome draws, the TD error vanishes when Q already holds the
// fixed point of the stationary Bellman equation.
TEST_CASE("expected TD error is zero at the oracle fixed point") {
  GameConfig game;
  TrainingConfig cfg;
  cfg.learning_rate = 1.0;
  const RewardSpec reward;
  const auto model = varied_model(game);
  const OracleSolution sol = value_iteration_oracle(model, game, cfg, reward);
  QTable q(game);
  for (const GameState& s : reachable_states(game)) {
    for (ActionId a : valid_actions(s, game)) q.set_value(s, a, sol.stationary_values.value(s, a));
  }
  Rng rng(606);
  const std::vector<std::pair<GameState, ActionId>> probes{
      {initial_state(game), ActionId{2}},
      {GameState{1, Feedback::kNone, 0}, ActionId{4}},
      {GameState{2, Feedback::kNone, -1}, ActionId{3}},
      {GameState{3, Feedback::kChallenging, 3}, ActionId{1}}};
  for (const auto& [s, a] : probes) {
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    const double q0 = q.value(s, a);
    for (int i = 0; i < n; ++i) {
      int cs = 0;
      if (!s.is_initial()) {
        const bool won = model.success_probability(s) >= 1.0 - rng.uniform();
        cs = current_score(s.level, won ? Outcome::kSuccess : Outcome::kFailure);
      }
      const ActionEffect eff = apply_action(s, a, game);
      const GameState next{eff.level, eff.feedback, cs};
      const bool ok = model.success_probability(next) >= 1.0 - rng.uniform();
      const Outcome o = ok ? Outcome::kSuccess : Outcome::kFailure;
      observe_step(q, s, cs, a, o, model.engagement(next, o), cfg, reward);
      const double td = q.value(s, a) - q0;
      q.set_value(s, a, q0);
      sum += td;
      sq += td * td;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
  }
}
