#include "adaptrl/game.hpp"

#include <cstdlib>
#include <deque>
#include <set>

#include "adaptrl/errors.hpp"

namespace adaptrl {

void GameConfig::validate() const {
  if (num_levels < 1) throw ValidationError("game: num_levels must be >= 1");
  if (static_cast<int>(sequence_lengths.size()) != num_levels) {
    throw ValidationError("game: sequence_lengths must have one entry per level");
  }
  for (std::size_t i = 0; i < sequence_lengths.size(); ++i) {
    if (sequence_lengths[i] < 1) throw ValidationError("game: sequence lengths must be positive");
    if (i > 0 && sequence_lengths[i] <= sequence_lengths[i - 1]) {
      throw ValidationError("game: sequence_lengths must be strictly increasing");
    }
  }
  if (session_length < 1) throw ValidationError("game: session_length must be >= 1");
  if (emotion_pool.empty()) throw ValidationError("game: emotion_pool must not be empty");
}

Feedback feedback_from_int(int code) {
  if (code < 0 || code > 2) {
    throw ValidationError("feedback code must be 0, 1 or 2, got " + std::to_string(code));
  }
  return static_cast<Feedback>(code);
}

Outcome outcome_from_int(int value) {
  if (value != -1 && value != 1) {
    throw ValidationError("outcome must be -1 or 1, got " + std::to_string(value));
  }
  return static_cast<Outcome>(value);
}

std::string to_string(const GameState& s) {
  return "(" + std::to_string(s.level) + "," + std::to_string(to_int(s.feedback)) + "," +
         std::to_string(s.previous_score) + ")";
}

void validate_state(const GameState& s, const GameConfig& cfg) {
  const int f = to_int(s.feedback);
  if (s.level < 0 || s.level > cfg.num_levels || f < 0 || f > 2 ||
      std::abs(s.previous_score) > cfg.num_levels) {
    throw ValidationError("state out of range: " + to_string(s));
  }
  if (s.level == 0 && (f != 0 || s.previous_score != 0)) {
    throw ValidationError("level 0 is reserved for the initial state: " + to_string(s));
  }
  if (s.previous_score == 0 && f != 0) {
    throw ValidationError("feedback requires a previous score: " + to_string(s));
  }
}

GameState initial_state(const GameConfig& /*cfg*/) { return GameState{}; }

std::vector<ActionId> valid_actions(const GameState& s, const GameConfig& cfg) {
  const int last = s.is_initial() ? cfg.num_levels : cfg.num_actions();
  std::vector<ActionId> actions;
  actions.reserve(static_cast<std::size_t>(last));
  for (int i = 1; i <= last; ++i) actions.push_back(ActionId{i});
  return actions;
}

bool is_valid_action(const GameState& s, ActionId a, const GameConfig& cfg) {
  const int last = s.is_initial() ? cfg.num_levels : cfg.num_actions();
  return a.index >= 1 && a.index <= last;
}

ActionEffect apply_action(const GameState& s, ActionId a, const GameConfig& cfg) {
  if (!is_valid_action(s, a, cfg)) {
    throw ProtocolError("action " + std::to_string(a.index) + " is not valid in state " +
                        to_string(s));
  }
  if (is_level_action(a, cfg)) return {a.index, Feedback::kNone};
  if (a == encouraging_action(cfg)) return {s.level, Feedback::kEncouraging};
  return {s.level, Feedback::kChallenging};
}

int activity_result(int level, Outcome o) { return o == Outcome::kSuccess ? level : -1; }

int current_score(int level, Outcome o) { return level * to_int(o); }

SequenceSpec sample_sequence(int level, const GameConfig& cfg, Rng& rng) {
  if (level < 1 || level > cfg.num_levels) {
    throw ValidationError("sequence level out of range: " + std::to_string(level));
  }
  SequenceSpec spec;
  spec.level = level;
  const int n = cfg.sequence_length(level);
  spec.emotions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    spec.emotions.push_back(cfg.emotion_pool[rng.below(cfg.emotion_pool.size())]);
  }
  return spec;
}

StateIndexer::StateIndexer(int num_levels)
    : num_levels_(num_levels),
      score_span_(2 * num_levels + 1),
      size_(static_cast<std::size_t>((num_levels + 1) * 3 * (2 * num_levels + 1))) {}

std::size_t StateIndexer::index(const GameState& s) const {
  return static_cast<std::size_t>((s.level * 3 + to_int(s.feedback)) * score_span_ +
                                  (s.previous_score + num_levels_));
}

GameState StateIndexer::state(std::size_t index) const {
  const int i = static_cast<int>(index);
  GameState s;
  s.previous_score = i % score_span_ - num_levels_;
  s.feedback = static_cast<Feedback>((i / score_span_) % 3);
  s.level = i / (3 * score_span_);
  return s;
}

std::vector<GameState> reachable_states(const GameConfig& cfg) {
  std::set<GameState> seen;
  std::deque<GameState> frontier{initial_state(cfg)};
  seen.insert(frontier.front());
  while (!frontier.empty()) {
    const GameState s = frontier.front();
    frontier.pop_front();
    // The score carried into the next state is that of the sequence played
    // in s; the initial state has none.
    std::vector<int> scores;
    if (s.is_initial()) {
      scores = {0};
    } else {
      scores = {current_score(s.level, Outcome::kFailure),
                current_score(s.level, Outcome::kSuccess)};
    }
    for (ActionId a : valid_actions(s, cfg)) {
      const ActionEffect effect = apply_action(s, a, cfg);
      for (int score : scores) {
        GameState next{effect.level, effect.feedback, score};
        if (seen.insert(next).second) frontier.push_back(next);
      }
    }
  }
  return {seen.begin(), seen.end()};
}

}  // namespace adaptrl
