#include "adaptrl/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "adaptrl/errors.hpp"

namespace adaptrl {

namespace {

struct Branch {
  double weight;
  std::size_t next;
  double reward;
};

double best_valid(const ActionValues& q, const GameState& s, const GameConfig& game) {
  double best = -INFINITY;
  for (ActionId a : valid_actions(s, game)) best = std::max(best, q.value(s, a));
  return best;
}

Policy greedy_from(const ActionValues& q, const std::vector<GameState>& states,
                   const GameConfig& game) {
  Policy policy(game);
  for (const GameState& s : states) {
    const auto valid = valid_actions(s, game);
    ActionId best = valid.front();
    for (ActionId a : valid) {
      if (q.value(s, a) > q.value(s, best)) best = a;
    }
    policy.set_action(s, best);
  }
  return policy;
}

}  // namespace

OracleSolution value_iteration_oracle(const UserResponseModel& model, const GameConfig& game,
                                      const TrainingConfig& cfg, const RewardSpec& reward,
                                      double tolerance, int max_iterations) {
  game.validate();
  cfg.validate();
  reward.validate();
  const StateIndexer indexer(game.num_levels);
  const int num_actions = game.num_actions();
  const std::vector<GameState> states = reachable_states(game);

  // branches[(state, action)] lists successor states with their probability
  // and expected immediate reward.
  std::vector<std::vector<Branch>> branches(indexer.size() * static_cast<std::size_t>(num_actions));
  auto slot = [&](const GameState& s, ActionId a) {
    return indexer.index(s) * static_cast<std::size_t>(num_actions) +
           static_cast<std::size_t>(a.index - 1);
  };
  for (const GameState& s : states) {
    std::vector<std::pair<int, double>> carried;
    if (s.is_initial()) {
      carried = {{0, 1.0}};
    } else {
      const double p = model.success_probability(s);
      carried = {{current_score(s.level, Outcome::kSuccess), p},
                 {current_score(s.level, Outcome::kFailure), 1.0 - p}};
    }
    for (ActionId a : valid_actions(s, game)) {
      const ActionEffect effect = apply_action(s, a, game);
      auto& out = branches[slot(s, a)];
      for (const auto& [score, weight] : carried) {
        if (weight == 0.0) continue;
        const GameState next{effect.level, effect.feedback, score};
        const double p = model.success_probability(next);
        const double expected_re = p * effect.level + (1.0 - p) * -1.0;
        const double expected_e = p * model.engagement(next, Outcome::kSuccess) +
                                  (1.0 - p) * model.engagement(next, Outcome::kFailure);
        out.push_back({weight, indexer.index(next), compute_reward(reward, expected_re, expected_e)});
      }
    }
  }

  auto empty_values = [&] {
    return ActionValues{indexer, num_actions,
                        std::vector<double>(indexer.size() * static_cast<std::size_t>(num_actions), 0.0)};
  };
  // Bellman backup of every reachable (s, a) against successor values v.
  auto backup = [&](const std::vector<double>& v, ActionValues& q) {
    for (const GameState& s : states) {
      for (ActionId a : valid_actions(s, game)) {
        double total = 0.0;
        for (const Branch& b : branches[slot(s, a)]) {
          total += b.weight * (b.reward + cfg.discount * v[b.next]);
        }
        q.values[slot(s, a)] = total;
      }
    }
  };
  auto state_values = [&](const ActionValues& q) {
    std::vector<double> v(indexer.size(), 0.0);
    for (const GameState& s : states) v[indexer.index(s)] = best_valid(q, s, game);
    return v;
  };

  OracleSolution solution{{}, {}, 0.0, empty_values(), Policy(game), 0};
  std::vector<double> v(indexer.size(), 0.0);
  for (int h = 1; h <= cfg.session_length; ++h) {
    ActionValues q = empty_values();
    backup(v, q);
    v = state_values(q);
    solution.stage_policies.push_back(greedy_from(q, states, game));
    solution.stage_values.push_back(std::move(q));
  }
  solution.session_value = v[indexer.index(initial_state(game))];

  ActionValues q = empty_values();
  std::vector<double> sv(indexer.size(), 0.0);
  int it = 0;
  for (; it < max_iterations; ++it) {
    ActionValues next = empty_values();
    backup(sv, next);
    double delta = 0.0;
    for (std::size_t i = 0; i < next.values.size(); ++i) {
      delta = std::max(delta, std::abs(next.values[i] - q.values[i]));
    }
    q = std::move(next);
    sv = state_values(q);
    if (delta <= tolerance) break;
  }
  if (it == max_iterations) throw NumericalError("value iteration did not converge");
  solution.iterations = it + 1;
  solution.stationary_policy = greedy_from(q, states, game);
  solution.stationary_values = std::move(q);
  return solution;
}

double policy_agreement(const Policy& a, const Policy& b, const GameConfig& game) {
  const std::vector<GameState> states = reachable_states(game);
  std::size_t same = 0;
  for (const GameState& s : states) {
    if (a.action(s) == b.action(s)) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(states.size());
}

}  // namespace adaptrl
