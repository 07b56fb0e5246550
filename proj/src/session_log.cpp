#include "adaptrl/session_log.hpp"

#include "adaptrl/errors.hpp"

namespace adaptrl {

void validate_session(const SessionLog& log, const GameConfig* cfg) {
  const std::string where = "session " + log.user_id + "/" + std::to_string(log.session_id);
  if (log.user_id.empty()) throw ValidationError("session log without user_id");
  for (std::size_t i = 0; i < log.sequences.size(); ++i) {
    const SequenceRecord& r = log.sequences[i];
    const std::string at = where + " seq " + std::to_string(r.seq_index);
    if (r.seq_index != static_cast<int>(i) + 1) {
      throw ValidationError(where + ": seq_index " + std::to_string(r.seq_index) +
                            " breaks the contiguous 1..n numbering");
    }
    if (r.level < 1 || (cfg != nullptr && r.level > cfg->num_levels)) {
      throw ValidationError(at + ": level out of range");
    }
    if (to_int(r.outcome) != 1 && to_int(r.outcome) != -1) {
      throw ValidationError(at + ": outcome must be -1 or 1");
    }
    const int f = to_int(r.feedback);
    if (f < 0 || f > 2) throw ValidationError(at + ": feedback out of range");
    if (f != 0 && (i == 0 || log.sequences[i - 1].level != r.level)) {
      throw ValidationError(at + ": feedback must repeat the previous sequence's level");
    }
    if (!(r.start_time <= r.end_time)) throw ValidationError(at + ": end before start");
    if (i > 0 && r.start_time < log.sequences[i - 1].end_time) {
      throw ValidationError(at + ": sequences overlap in time");
    }
    try {
      EngagementSeries{r.engagement, r.focus_periods}.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(at + ": " + e.what());
    }
  }
}

std::vector<GameState> played_states(const SessionLog& log) {
  std::vector<GameState> states;
  states.reserve(log.sequences.size());
  int previous = 0;
  for (const auto& r : log.sequences) {
    states.push_back(GameState{r.level, r.feedback, previous});
    previous = current_score(r.level, r.outcome);
  }
  return states;
}

std::optional<double> sequence_engagement(const SequenceRecord& record) {
  const EngagementSeries series{record.engagement, record.focus_periods};
  const ExpectedEngagement expected = expected_per_second(series);
  try {
    return mean_engagement(expected, record.focus_periods);
  } catch (const InsufficientDataError&) {
    return std::nullopt;
  }
}

}  // namespace adaptrl
