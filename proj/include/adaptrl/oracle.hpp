#pragma once

#include <vector>

#include "adaptrl/behaviour.hpp"

namespace adaptrl {

// Q-values over every indexable state, laid out like QTable rows.
struct ActionValues {
  StateIndexer indexer;
  int num_actions = 0;
  std::vector<double> values;

  double value(const GameState& s, ActionId a) const {
    return values[indexer.index(s) * static_cast<std::size_t>(num_actions) +
                  static_cast<std::size_t>(a.index - 1)];
  }
};

// Exact solution of the finite MDP induced by a user model.
struct OracleSolution {
  // stage_values[h - 1] holds Q-values with h decisions left (h = 1..omega).
  std::vector<ActionValues> stage_values;
  std::vector<Policy> stage_policies;
  // Optimal expected discounted session return from the initial state.
  double session_value = 0.0;
  // Fixed point of Q(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) max_a' Q(s',a'),
  // which is what a single stationary Q-table converges to.
  ActionValues stationary_values;
  Policy stationary_policy;
  int iterations = 0;
};

// Transition model: from s (non-initial), the score carried forward is +L with
// probability p(s) and -L otherwise; from the initial state it is 0. Action a
// then yields s' = (L', F', carried score). The expected reward of (s, a) is
// averaged over carried scores and over the outcome at s' with p(s').
OracleSolution value_iteration_oracle(const UserResponseModel& model, const GameConfig& game,
                                      const TrainingConfig& cfg, const RewardSpec& reward,
                                      double tolerance = 1e-12, int max_iterations = 100000);

// Fraction of reachable states (initial state included) on which the two
// policies choose the same action.
double policy_agreement(const Policy& a, const Policy& b, const GameConfig& game);

}  // namespace adaptrl
