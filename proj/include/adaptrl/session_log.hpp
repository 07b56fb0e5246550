#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptrl/engagement.hpp"
#include "adaptrl/game.hpp"

namespace adaptrl {

// One played sequence within a session.
struct SequenceRecord {
  int seq_index = 1;  // 1-based, contiguous within the session
  int level = 1;
  Feedback feedback = Feedback::kNone;
  Outcome outcome = Outcome::kSuccess;
  double start_time = 0.0;
  double end_time = 0.0;
  std::vector<EngagementSample> engagement;
  std::vector<Interval> focus_periods;

  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

struct SessionLog {
  std::string user_id;
  int session_id = 1;
  std::vector<SequenceRecord> sequences;

  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

// Throws ValidationError naming the offending sequence. When cfg is given,
// levels are also checked against it.
void validate_session(const SessionLog& log, const GameConfig* cfg = nullptr);

// The (L, F, PS) state each sequence was played in; PS is the previous
// sequence's score, 0 for the first.
std::vector<GameState> played_states(const SessionLog& log);

// Mean focus-period engagement of one sequence, or nothing when the stream
// has no samples inside its focus periods.
std::optional<double> sequence_engagement(const SequenceRecord& record);

}  // namespace adaptrl
