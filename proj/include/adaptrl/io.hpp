#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaptrl/behaviour.hpp"
#include "adaptrl/session_log.hpp"
#include "adaptrl/user_model.hpp"

namespace adaptrl {

// Shortest-exact decimal is not guaranteed by printf, so doubles destined for
// bit-exact files are written with 17 significant digits.
std::string format_double(double v);

// {"cluster_id", "num_levels", "performance": GP, "engagement": GP} where a GP
// is {"inputs", "targets", "length_scales", "signal_variance",
// "noise_variance"}. Factorizations are recomputed on load.
std::string user_model_to_json(const UserModel& model);
UserModel user_model_from_json(std::string_view text);

// JSON array of {"L","F","PS","action","value","visits"} records, one per
// reachable state and valid action, in ascending (state, action) order.
// Temperatures are rebuilt from visit counts with `training`.
std::string qtable_to_json(const QTable& q);
QTable qtable_from_json(std::string_view text, const GameConfig& game,
                        const TrainingConfig& training);

// One JSON object per sequence record (schema version field "v": 1).
std::string session_to_jsonl(const SessionLog& log);

// Writes one <user_id>.jsonl file per user into dir (created if missing).
void write_logs(std::span<const SessionLog> logs, const std::filesystem::path& dir);

// Reads every *.jsonl file in dir (sorted by name). Throws ValidationError
// with "<file>:<line>: ..." on malformed or invalid records.
std::vector<SessionLog> ingest_logs(const std::filesystem::path& dir);

// Throws ValidationError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
// Writes bytes verbatim (no newline translation). Throws std::runtime_error.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace adaptrl
