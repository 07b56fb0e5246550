#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptrl/game.hpp"
#include "adaptrl/rng.hpp"
#include "adaptrl/user_response.hpp"

namespace adaptrl {

enum class RewardVariant { kReOnly, kRePlusE, kEOnly };

std::string to_string(RewardVariant v);           // "RE_only", "RE_plus_E", "E_only"
RewardVariant reward_variant_from_string(const std::string& name);

struct RewardSpec {
  RewardVariant variant = RewardVariant::kRePlusE;
  double beta = 3.0;
  double lambda = 3.0;

  void validate() const;
};

// RE_only: RE;  RE_plus_E: RE + beta * E;  E_only: lambda * E.
double compute_reward(const RewardSpec& spec, double activity_result, double engagement);

enum class ExplorationMode { kSoftmax, kGreedyOnly };

struct TrainingConfig {
  double learning_rate = 0.1;
  double discount = 0.9;
  double initial_temperature = 1.0;
  double temperature_decay = 0.99;
  double min_temperature = 0.01;
  int session_length = 10;
  int sessions_per_epoch = 100;
  int epochs = 20;
  ExplorationMode exploration = ExplorationMode::kSoftmax;

  void validate() const;
};

// max(T_min, T0 * decay^visits).
double temperature_for_visits(std::int64_t visits, const TrainingConfig& cfg);

// Dense Q-values over (state, action) with per-state visit counts and
// softmax temperatures.
class QTable {
 public:
  QTable(const GameConfig& game, double initial_temperature = 1.0);

  double value(const GameState& s, ActionId a) const { return values_[slot(s, a)]; }
  void set_value(const GameState& s, ActionId a, double v) { values_[slot(s, a)] = v; }

  // Q-values of state s for actions 1..l+2.
  std::span<const double> row(const GameState& s) const;

  std::int64_t visits(const GameState& s) const { return visits_[indexer_.index(s)]; }
  double temperature(const GameState& s) const { return temperatures_[indexer_.index(s)]; }
  void set_visits(const GameState& s, std::int64_t n) { visits_[indexer_.index(s)] = n; }
  void set_temperature(const GameState& s, double t) { temperatures_[indexer_.index(s)] = t; }

  // Counts one visit to s and refreshes its temperature.
  void record_visit(const GameState& s, const TrainingConfig& cfg);

  // Max over the actions valid in s.
  double max_value(const GameState& s) const;

  int num_levels() const { return num_levels_; }
  int num_actions() const { return num_actions_; }
  const StateIndexer& indexer() const { return indexer_; }
  const GameConfig& game() const { return game_; }

  // Exact (bitwise) equality of values, visits and temperatures.
  friend bool operator==(const QTable& a, const QTable& b);

 private:
  std::size_t slot(const GameState& s, ActionId a) const {
    return indexer_.index(s) * static_cast<std::size_t>(num_actions_) +
           static_cast<std::size_t>(a.index - 1);
  }

  GameConfig game_;
  StateIndexer indexer_;
  int num_levels_;
  int num_actions_;
  std::vector<double> values_;
  std::vector<std::int64_t> visits_;
  std::vector<double> temperatures_;
};

// Boltzmann probabilities over q_row (indexed by action - 1); actions outside
// `valid` get probability 0. Uses max-subtraction.
std::vector<double> softmax_probabilities(std::span<const double> q_row,
                                          std::span<const ActionId> valid, double temperature);
ActionId softmax_sample(std::span<const double> q_row, std::span<const ActionId> valid,
                        double temperature, Rng& rng);

// argmax over valid actions; ties go to the lowest action index.
ActionId greedy_action(std::span<const double> q_row, std::span<const ActionId> valid);

struct StepRecord {
  GameState state;
  ActionId action;
  GameState next_state;
  Outcome outcome = Outcome::kSuccess;
  int activity_result = 0;
  double engagement = 0.0;
  double reward = 0.0;
  int current_score = 0;
};

struct IterationResult {
  GameState next_state;
  int next_score = 0;
  StepRecord record;
};

// Softmax over the valid actions at the state's temperature, or the greedy
// action in greedy-only mode.
ActionId choose_action(const QTable& q, const GameState& s, const TrainingConfig& cfg, Rng& rng);

// Q-update for an executed action whose outcome and engagement were observed
// (by simulation or from a live user). Also counts the visit to s.
IterationResult observe_step(QTable& q, const GameState& s, int cs, ActionId action,
                             Outcome outcome, double engagement, const TrainingConfig& cfg,
                             const RewardSpec& reward);

// One Q-learning iteration from state s with current score cs (0 at the start
// of a session): pick an action, simulate the user's next sequence with the
// model, and update Q(s, a).
IterationResult q_iteration(const UserResponseModel& model, QTable& q, const GameState& s, int cs,
                            const TrainingConfig& cfg, const RewardSpec& reward, Rng& rng);

struct SessionResult {
  int accumulated_score = 0;   // sum of L * O over the session
  double mean_engagement = 0;  // mean of the predicted E values
  double total_reward = 0;
  std::vector<StepRecord> steps;
};

SessionResult run_session(const UserResponseModel& model, QTable& q, const TrainingConfig& cfg,
                          const RewardSpec& reward, Rng& rng);

struct EpochMetrics {
  int epoch = 1;
  double mean_score = 0.0;
  double mean_engagement = 0.0;
  double mean_reward = 0.0;
};

struct TrainingResult {
  QTable q;
  std::vector<EpochMetrics> epochs;
};

// Runs cfg.epochs * cfg.sessions_per_epoch sessions on one Q-table, starting
// from initial_q when given.
TrainingResult train_policy(const UserResponseModel& model, const GameConfig& game,
                            const TrainingConfig& cfg, const RewardSpec& reward, Rng& rng,
                            const QTable* initial_q = nullptr);

// Deterministic action per state; defined on every state with L >= 1 and on
// the initial state.
class Policy {
 public:
  explicit Policy(const GameConfig& game);

  ActionId action(const GameState& s) const { return actions_[indexer_.index(s)]; }
  void set_action(const GameState& s, ActionId a) { actions_[indexer_.index(s)] = a; }

 private:
  StateIndexer indexer_;
  std::vector<ActionId> actions_;
};

Policy greedy_policy(const QTable& q);

// Index of the run with the highest last-epoch mean score; ties go to the
// lowest index. Throws ValidationError on an empty list.
std::size_t select_transfer_policy(std::span<const TrainingResult> runs);

}  // namespace adaptrl
