#include "adaptrl/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "adaptrl/errors.hpp"

namespace adaptrl {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json gp_to_json(const GaussianProcess& gp) {
  return json{{"inputs", gp.inputs()},
              {"targets", gp.targets()},
              {"length_scales", gp.hyperparameters().length_scales},
              {"signal_variance", gp.hyperparameters().signal_variance},
              {"noise_variance", gp.hyperparameters().noise_variance}};
}

GaussianProcess gp_from_json(const json& j) {
  GpHyperparameters hp{j.at("length_scales").get<std::vector<double>>(),
                       j.at("signal_variance").get<double>(),
                       j.at("noise_variance").get<double>()};
  return GaussianProcess(j.at("inputs").get<std::vector<std::vector<double>>>(),
                         j.at("targets").get<std::vector<double>>(), std::move(hp));
}

}  // namespace

std::string user_model_to_json(const UserModel& model) {
  const json j{{"cluster_id", model.cluster_id()},
               {"num_levels", model.num_levels()},
               {"performance", gp_to_json(model.performance())},
               {"engagement", gp_to_json(model.engagement_gp())}};
  return j.dump(1) + "\n";
}

UserModel user_model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    return UserModel(gp_from_json(j.at("performance")), gp_from_json(j.at("engagement")),
                     j.at("cluster_id").get<int>(), j.at("num_levels").get<int>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("user model JSON: ") + e.what());
  }
}

std::string qtable_to_json(const QTable& q) {
  std::string out = "[\n";
  bool first = true;
  for (const GameState& s : reachable_states(q.game())) {
    for (ActionId a : valid_actions(s, q.game())) {
      if (!first) out += ",\n";
      first = false;
      out += "{\"L\":" + std::to_string(s.level) + ",\"F\":" + std::to_string(to_int(s.feedback)) +
             ",\"PS\":" + std::to_string(s.previous_score) + ",\"action\":" +
             std::to_string(a.index) + ",\"value\":" + format_double(q.value(s, a)) +
             ",\"visits\":" + std::to_string(q.visits(s)) + "}";
    }
  }
  out += "\n]\n";
  return out;
}

QTable qtable_from_json(std::string_view text, const GameConfig& game,
                        const TrainingConfig& training) {
  QTable q(game, training.initial_temperature);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("Q-table JSON: ") + e.what());
  }
  if (!j.is_array()) throw ValidationError("Q-table JSON: expected an array of records");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& r = j[i];
    try {
      const GameState s{r.at("L").get<int>(), feedback_from_int(r.at("F").get<int>()),
                        r.at("PS").get<int>()};
      validate_state(s, game);
      const ActionId a{r.at("action").get<int>()};
      if (!is_valid_action(s, a, game)) {
        throw ValidationError("action " + std::to_string(a.index) + " invalid in " + to_string(s));
      }
      const auto visits = r.at("visits").get<std::int64_t>();
      if (visits < 0) throw ValidationError("negative visit count");
      q.set_value(s, a, r.at("value").get<double>());
      q.set_visits(s, visits);
      q.set_temperature(s, temperature_for_visits(visits, training));
    } catch (const json::exception& e) {
      throw ValidationError("Q-table record " + std::to_string(i) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("Q-table record " + std::to_string(i) + ": " + e.what());
    }
  }
  return q;
}

std::string session_to_jsonl(const SessionLog& log) {
  std::string out;
  for (const auto& r : log.sequences) {
    json samples = json::array();
    for (const auto& s : r.engagement) samples.push_back(json::array({s.timestamp, s.value}));
    json periods = json::array();
    for (const auto& p : r.focus_periods) periods.push_back(json::array({p.start, p.end}));
    const json line{{"v", 1},
                    {"user_id", log.user_id},
                    {"session_id", log.session_id},
                    {"seq_index", r.seq_index},
                    {"level", r.level},
                    {"feedback", to_int(r.feedback)},
                    {"outcome", to_int(r.outcome)},
                    {"start", r.start_time},
                    {"end", r.end_time},
                    {"engagement", samples},
                    {"focus_periods", periods}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_logs(std::span<const SessionLog> logs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> files;
  for (const auto& log : logs) files[log.user_id] += session_to_jsonl(log);
  for (const auto& [user, contents] : files) write_file(dir / (user + ".jsonl"), contents);
}

namespace {

SequenceRecord parse_record(const json& j, std::string& user, int& session) {
  if (j.at("v").get<int>() != 1) throw ValidationError("unsupported schema version");
  user = j.at("user_id").get<std::string>();
  session = j.at("session_id").get<int>();
  SequenceRecord r;
  r.seq_index = j.at("seq_index").get<int>();
  r.level = j.at("level").get<int>();
  r.feedback = feedback_from_int(j.at("feedback").get<int>());
  try {
    r.outcome = outcome_from_int(j.at("outcome").get<int>());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("field 'outcome': ") + e.what());
  }
  r.start_time = j.at("start").get<double>();
  r.end_time = j.at("end").get<double>();
  for (const auto& s : j.at("engagement")) {
    r.engagement.push_back({s.at(0).get<double>(), s.at(1).get<int>()});
  }
  for (const auto& p : j.at("focus_periods")) {
    r.focus_periods.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return r;
}

}  // namespace

std::vector<SessionLog> ingest_logs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("log directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<SessionLog> logs;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::string line;
    int line_no = 0;
    // Sessions are validated once complete; remember where each started.
    std::map<std::pair<std::string, int>, std::size_t> open;
    std::map<std::size_t, int> first_line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = file.filename().string() + ":" + std::to_string(line_no);
      std::string user;
      int session = 0;
      SequenceRecord record;
      try {
        record = parse_record(json::parse(line), user, session);
      } catch (const json::exception& e) {
        throw ValidationError(where + ": malformed record: " + e.what());
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
      auto key = std::make_pair(user, session);
      auto it = open.find(key);
      if (it == open.end()) {
        it = open.emplace(key, logs.size()).first;
        first_line[logs.size()] = line_no;
        logs.push_back(SessionLog{user, session, {}});
      }
      auto& seqs = logs[it->second].sequences;
      if (record.seq_index != static_cast<int>(seqs.size()) + 1) {
        throw ValidationError(where + ": seq_index " + std::to_string(record.seq_index) +
                              " is not contiguous (expected " + std::to_string(seqs.size() + 1) +
                              ")");
      }
      seqs.push_back(std::move(record));
    }
    for (const auto& [key, index] : open) {
      try {
        validate_session(logs[index]);
      } catch (const ValidationError& e) {
        throw ValidationError(file.filename().string() + ":" +
                              std::to_string(first_line[index]) + ": " + e.what());
      }
    }
  }
  return logs;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace adaptrl
