#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "adaptrl/rng.hpp"

namespace adaptrl {

struct GameConfig {
  int num_levels = 3;
  // Sequence length per difficulty level; index 0 is level 1.
  std::vector<int> sequence_lengths{3, 5, 7};
  int session_length = 10;
  std::vector<std::string> emotion_pool{"happy", "disgusted", "sad", "angry"};

  // Throws ValidationError when an invariant does not hold.
  void validate() const;

  int num_actions() const { return num_levels + 2; }
  int sequence_length(int level) const { return sequence_lengths.at(level - 1); }
};

enum class Feedback : int { kNone = 0, kEncouraging = 1, kChallenging = 2 };

enum class Outcome : int { kFailure = -1, kSuccess = 1 };

inline int to_int(Feedback f) { return static_cast<int>(f); }
inline int to_int(Outcome o) { return static_cast<int>(o); }
Feedback feedback_from_int(int code);
Outcome outcome_from_int(int value);

// MDP state (L, F, PS). L = 0 marks the initial state before any sequence has
// been chosen; PS = 0 is only possible there and in the state of the first
// played sequence, which has no previous score.
struct GameState {
  int level = 0;
  Feedback feedback = Feedback::kNone;
  int previous_score = 0;

  bool is_initial() const { return level == 0; }

  friend auto operator<=>(const GameState&, const GameState&) = default;
};

std::string to_string(const GameState& s);

// Throws ValidationError if s is not a well-formed state under cfg.
void validate_state(const GameState& s, const GameConfig& cfg);

// Actions are 1-based: 1..l select a level, l+1 encourages, l+2 challenges.
struct ActionId {
  int index = 1;

  friend auto operator<=>(const ActionId&, const ActionId&) = default;
};

inline ActionId encouraging_action(const GameConfig& cfg) { return {cfg.num_levels + 1}; }
inline ActionId challenging_action(const GameConfig& cfg) { return {cfg.num_levels + 2}; }
inline bool is_level_action(ActionId a, const GameConfig& cfg) {
  return a.index >= 1 && a.index <= cfg.num_levels;
}

struct SequenceSpec {
  int level = 1;
  std::vector<std::string> emotions;
};

GameState initial_state(const GameConfig& cfg);

// Ascending by index. Feedback actions are excluded in the initial state.
std::vector<ActionId> valid_actions(const GameState& s, const GameConfig& cfg);
bool is_valid_action(const GameState& s, ActionId a, const GameConfig& cfg);

struct ActionEffect {
  int level = 0;
  Feedback feedback = Feedback::kNone;
};

// Throws ProtocolError when a is not valid in s.
ActionEffect apply_action(const GameState& s, ActionId a, const GameConfig& cfg);

// RE: the level on success, -1 on failure regardless of level.
int activity_result(int level, Outcome o);
// CS = L * O.
int current_score(int level, Outcome o);

SequenceSpec sample_sequence(int level, const GameConfig& cfg, Rng& rng);

// Dense indexing of every syntactically possible (L, F, PS) triple, used to
// lay out Q-tables and tabulated user responses.
class StateIndexer {
 public:
  explicit StateIndexer(int num_levels);

  std::size_t size() const { return size_; }
  std::size_t index(const GameState& s) const;
  GameState state(std::size_t index) const;
  int num_levels() const { return num_levels_; }

 private:
  int num_levels_;
  int score_span_;
  std::size_t size_;
};

// States reachable from the initial state under any action sequence and any
// outcomes, in ascending order. Includes the initial state.
std::vector<GameState> reachable_states(const GameConfig& cfg);

}  // namespace adaptrl
