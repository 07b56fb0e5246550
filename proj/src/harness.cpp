#include "adaptrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "adaptrl/errors.hpp"
#include "adaptrl/io.hpp"

namespace adaptrl {

using nlohmann::json;

void SyntheticUserSpec::validate(const GameConfig& game) const {
  const auto l = static_cast<std::size_t>(game.num_levels);
  if (group.empty()) throw ValidationError("population: group name must not be empty");
  if (count < 1) throw ValidationError("population: group '" + group + "' needs count >= 1");
  if (success_probs.size() != l || engagement_means.size() != l) {
    throw ValidationError("population: group '" + group + "' needs one value per level");
  }
  if (engagement_noise < 0.0 || user_spread < 0.0) {
    throw ValidationError("population: noise scales must be >= 0");
  }
}

std::vector<std::pair<int, Feedback>> curriculum(int session, const GameConfig& game) {
  std::vector<std::pair<int, Feedback>> plan;
  auto alternate = [](int k) { return k % 2 == 0 ? Feedback::kEncouraging : Feedback::kChallenging; };
  for (int level = 1; level <= game.num_levels; ++level) {
    plan.emplace_back(level, Feedback::kNone);
    plan.emplace_back(level, Feedback::kNone);
    plan.emplace_back(level, alternate(level + session));
  }
  int k = game.num_levels + session + 1;
  while (static_cast<int>(plan.size()) < game.session_length) {
    plan.emplace_back(game.num_levels, alternate(k++));
  }
  plan.resize(static_cast<std::size_t>(game.session_length));
  return plan;
}

namespace {

double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

SessionLog simulate_session(const SyntheticUserSpec& spec, const std::string& user_id,
                            int session_id, double success_offset, double engagement_offset,
                            const GameConfig& game, Rng& rng) {
  constexpr double kSampleRate = 10.0;
  constexpr double kTabletPenalty = 0.8;  // users look down at the tablet
  SessionLog log{user_id, session_id, {}};
  double t = 0.0;
  int seq = 0;
  for (const auto& [level, feedback] : curriculum(session_id, game)) {
    const auto li = static_cast<std::size_t>(level - 1);
    const int fi = to_int(feedback);
    const double p = std::clamp(
        spec.success_probs[li] + spec.feedback_success_delta[static_cast<std::size_t>(fi)] +
            success_offset,
        0.0, 1.0);
    const Outcome outcome = p >= 1.0 - rng.uniform() ? Outcome::kSuccess : Outcome::kFailure;
    const double latent = std::clamp(
        spec.engagement_means[li] + spec.feedback_engagement_delta[static_cast<std::size_t>(fi)] +
            (outcome == Outcome::kSuccess ? 1.0 : -1.0) * spec.outcome_engagement_delta +
            engagement_offset + spec.engagement_noise * rng.normal(),
        -1.0, 1.0);

    const int length = game.sequence_length(level);
    const double speak = 1.0 + 0.6 * length;
    const double answer = 1.2 * length + 2.0 * rng.uniform();
    const double result = 2.0;

    SequenceRecord r;
    r.seq_index = ++seq;
    r.level = level;
    r.feedback = feedback;
    r.outcome = outcome;
    r.start_time = round_ms(t);
    const double answer_start = round_ms(t + speak);
    const double answer_end = round_ms(t + speak + answer);
    r.end_time = round_ms(t + speak + answer + result);
    r.focus_periods = {{r.start_time, answer_start}, {answer_end, r.end_time}};
    const int samples = static_cast<int>(std::floor((r.end_time - r.start_time) * kSampleRate));
    for (int k = 0; k < samples; ++k) {
      const double ts = round_ms(r.start_time + k / kSampleRate);
      const bool on_tablet = ts >= answer_start && ts < answer_end;
      const double e = on_tablet ? std::max(-1.0, latent - kTabletPenalty) : latent;
      r.engagement.push_back({ts, rng.uniform() < 0.5 * (1.0 + e) ? 1 : -1});
    }
    log.sequences.push_back(std::move(r));
    t = round_ms(t + speak + answer + result + 0.5);
  }
  return log;
}

std::string user_id_for(const SyntheticUserSpec& spec, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", index + 1);
  return spec.group + "-" + buf;
}

}  // namespace

std::vector<SessionLog> generate_population(std::span<const SyntheticUserSpec> specs,
                                            const GameConfig& game, int sessions_per_user,
                                            Rng& rng) {
  game.validate();
  if (specs.empty()) throw ValidationError("population: no user specs");
  if (sessions_per_user < 1) throw ValidationError("population: sessions_per_user must be >= 1");
  std::set<std::string> groups;
  for (const auto& spec : specs) {
    spec.validate(game);
    if (!groups.insert(spec.group).second) {
      throw ValidationError("population: duplicate group '" + spec.group + "'");
    }
  }
  const std::uint64_t base = rng.next();
  std::vector<SessionLog> logs;
  for (const auto& spec : specs) {
    for (int u = 0; u < spec.count; ++u) {
      Rng user_rng(derive_seed(spec.seed, base, static_cast<std::uint64_t>(u)));
      const double success_offset = spec.user_spread * user_rng.normal();
      const double engagement_offset = spec.user_spread * user_rng.normal();
      const std::string id = user_id_for(spec, u);
      for (int s = 1; s <= sessions_per_user; ++s) {
        logs.push_back(
            simulate_session(spec, id, s, success_offset, engagement_offset, game, user_rng));
      }
    }
  }
  return logs;
}

std::vector<std::string> group_of_users(std::span<const SyntheticUserSpec> specs) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& spec : specs) {
    for (int u = 0; u < spec.count; ++u) pairs.emplace_back(user_id_for(spec, u), spec.group);
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::string> groups;
  for (auto& p : pairs) groups.push_back(std::move(p.second));
  return groups;
}

std::vector<SyntheticUserSpec> default_population() {
  SyntheticUserSpec high;
  high.group = "engaged";
  high.count = 11;
  high.success_probs = {0.95, 0.85, 0.70};
  high.feedback_success_delta = {0.0, 0.05, -0.05};
  high.feedback_engagement_delta = {0.0, 0.1, 0.0};
  high.engagement_means = {0.70, 0.65, 0.60};
  high.outcome_engagement_delta = 0.1;
  high.engagement_noise = 0.15;
  high.user_spread = 0.05;
  high.seed = 11;

  SyntheticUserSpec low;
  low.group = "distracted";
  low.count = 9;
  low.success_probs = {0.95, 0.85, 0.65};
  low.feedback_success_delta = {0.0, 0.05, -0.05};
  low.feedback_engagement_delta = {0.0, 0.5, -0.2};
  low.engagement_means = {0.0, -0.3, -0.6};
  low.outcome_engagement_delta = 0.2;
  low.engagement_noise = 0.15;
  low.user_spread = 0.05;
  low.seed = 9;
  return {high, low};
}

void ExperimentConfig::validate() const {
  game.validate();
  training.validate();
  if (rewards.empty()) throw ValidationError("config: at least one reward is required");
  for (const auto& r : rewards) r.validate();
  if (num_runs < 1) throw ValidationError("config: num_runs must be >= 1");
  if (clusters < 1) throw ValidationError("config: clusters must be >= 1");
  if (kmeans_restarts < 1) throw ValidationError("config: kmeans_restarts must be >= 1");
  gp_grid.validate();
  if (log_dir.empty()) {
    if (population.empty()) throw ValidationError("config: population or log_dir required");
    for (const auto& spec : population) spec.validate(game);
  }
  if (sessions_per_user < 1) throw ValidationError("config: sessions_per_user must be >= 1");
  if (transfer_source < 1 || transfer_source > clusters || transfer_target < 1 ||
      transfer_target > clusters) {
    throw ValidationError("config: transfer_source/transfer_target must name a cluster");
  }
  if (jobs < 1) throw ValidationError("config: jobs must be >= 1");
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ExplorationMode exploration_from_string(const std::string& s) {
  if (s == "softmax") return ExplorationMode::kSoftmax;
  if (s == "greedy_only") return ExplorationMode::kGreedyOnly;
  throw ValidationError("unknown exploration mode '" + s + "'");
}

std::string to_string(ExplorationMode m) {
  return m == ExplorationMode::kSoftmax ? "softmax" : "greedy_only";
}

SyntheticUserSpec spec_from_json(const json& j) {
  SyntheticUserSpec s;
  read_opt(j, "group", s.group);
  read_opt(j, "count", s.count);
  read_opt(j, "success_probs", s.success_probs);
  read_opt(j, "feedback_success_delta", s.feedback_success_delta);
  read_opt(j, "feedback_engagement_delta", s.feedback_engagement_delta);
  read_opt(j, "engagement_means", s.engagement_means);
  read_opt(j, "outcome_engagement_delta", s.outcome_engagement_delta);
  read_opt(j, "engagement_noise", s.engagement_noise);
  read_opt(j, "user_spread", s.user_spread);
  read_opt(j, "seed", s.seed);
  return s;
}

json spec_to_json(const SyntheticUserSpec& s) {
  return json{{"group", s.group},
              {"count", s.count},
              {"success_probs", s.success_probs},
              {"feedback_success_delta", s.feedback_success_delta},
              {"feedback_engagement_delta", s.feedback_engagement_delta},
              {"engagement_means", s.engagement_means},
              {"outcome_engagement_delta", s.outcome_engagement_delta},
              {"engagement_noise", s.engagement_noise},
              {"user_spread", s.user_spread},
              {"seed", s.seed}};
}

}  // namespace

ExperimentConfig experiment_config_from_json(std::string_view text) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    read_opt(j, "seed", cfg.seed);
    if (j.contains("game")) {
      const json& g = j.at("game");
      read_opt(g, "num_levels", cfg.game.num_levels);
      read_opt(g, "sequence_lengths", cfg.game.sequence_lengths);
      read_opt(g, "session_length", cfg.game.session_length);
      read_opt(g, "emotion_pool", cfg.game.emotion_pool);
    }
    cfg.training.session_length = cfg.game.session_length;
    if (j.contains("training")) {
      const json& t = j.at("training");
      read_opt(t, "learning_rate", cfg.training.learning_rate);
      read_opt(t, "discount", cfg.training.discount);
      read_opt(t, "initial_temperature", cfg.training.initial_temperature);
      read_opt(t, "temperature_decay", cfg.training.temperature_decay);
      read_opt(t, "min_temperature", cfg.training.min_temperature);
      read_opt(t, "session_length", cfg.training.session_length);
      read_opt(t, "sessions_per_epoch", cfg.training.sessions_per_epoch);
      read_opt(t, "epochs", cfg.training.epochs);
      if (t.contains("exploration")) {
        cfg.training.exploration = exploration_from_string(t.at("exploration").get<std::string>());
      }
    }
    if (j.contains("rewards")) {
      cfg.rewards.clear();
      for (const json& r : j.at("rewards")) {
        RewardSpec spec;
        spec.variant = reward_variant_from_string(r.at("variant").get<std::string>());
        read_opt(r, "beta", spec.beta);
        read_opt(r, "lambda", spec.lambda);
        cfg.rewards.push_back(spec);
      }
    }
    read_opt(j, "num_runs", cfg.num_runs);
    read_opt(j, "clusters", cfg.clusters);
    read_opt(j, "kmeans_restarts", cfg.kmeans_restarts);
    if (j.contains("gp_grid")) {
      const json& g = j.at("gp_grid");
      read_opt(g, "length_scales", cfg.gp_grid.length_scales);
      read_opt(g, "signal_variances", cfg.gp_grid.signal_variances);
      read_opt(g, "noise_variances", cfg.gp_grid.noise_variances);
    }
    if (j.contains("population")) {
      cfg.population.clear();
      for (const json& s : j.at("population")) cfg.population.push_back(spec_from_json(s));
    }
    read_opt(j, "sessions_per_user", cfg.sessions_per_user);
    read_opt(j, "log_dir", cfg.log_dir);
    read_opt(j, "output_dir", cfg.output_dir);
    read_opt(j, "transfer_source", cfg.transfer_source);
    read_opt(j, "transfer_target", cfg.transfer_target);
    read_opt(j, "jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json rewards = json::array();
  for (const auto& r : cfg.rewards) {
    rewards.push_back({{"variant", to_string(r.variant)}, {"beta", r.beta}, {"lambda", r.lambda}});
  }
  json population = json::array();
  for (const auto& s : cfg.population) population.push_back(spec_to_json(s));
  const TrainingConfig& t = cfg.training;
  const json j{
      {"seed", cfg.seed},
      {"game",
       {{"num_levels", cfg.game.num_levels},
        {"sequence_lengths", cfg.game.sequence_lengths},
        {"session_length", cfg.game.session_length},
        {"emotion_pool", cfg.game.emotion_pool}}},
      {"training",
       {{"learning_rate", t.learning_rate},
        {"discount", t.discount},
        {"initial_temperature", t.initial_temperature},
        {"temperature_decay", t.temperature_decay},
        {"min_temperature", t.min_temperature},
        {"session_length", t.session_length},
        {"sessions_per_epoch", t.sessions_per_epoch},
        {"epochs", t.epochs},
        {"exploration", to_string(t.exploration)}}},
      {"rewards", rewards},
      {"num_runs", cfg.num_runs},
      {"clusters", cfg.clusters},
      {"kmeans_restarts", cfg.kmeans_restarts},
      {"gp_grid",
       {{"length_scales", cfg.gp_grid.length_scales},
        {"signal_variances", cfg.gp_grid.signal_variances},
        {"noise_variances", cfg.gp_grid.noise_variances}}},
      {"population", population},
      {"sessions_per_user", cfg.sessions_per_user},
      {"log_dir", cfg.log_dir},
      {"output_dir", cfg.output_dir},
      {"transfer_source", cfg.transfer_source},
      {"transfer_target", cfg.transfer_target},
      {"jobs", cfg.jobs}};
  return j.dump(2) + "\n";
}

std::uint64_t run_seed(std::uint64_t master, SeedStream stream, int model_id,
                       RewardVariant variant, int run) {
  const auto model_key =
      static_cast<std::uint64_t>(model_id) * 8 + static_cast<std::uint64_t>(variant);
  return derive_seed(master, static_cast<std::uint64_t>(stream), model_key,
                     static_cast<std::uint64_t>(run));
}

std::vector<SessionLog> load_population(const ExperimentConfig& cfg) {
  if (!cfg.log_dir.empty()) return ingest_logs(cfg.log_dir);
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::kPopulation)));
  return generate_population(cfg.population, cfg.game, cfg.sessions_per_user, rng);
}

UserModelFit fit_population(const ExperimentConfig& cfg, std::span<const SessionLog> logs) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::kClustering)));
  UserModelingOptions options{cfg.clusters, cfg.kmeans_restarts, cfg.gp_grid};
  return fit_user_models(logs, cfg.game, options, rng);
}

void sort_metrics(MetricsTable& table) {
  std::stable_sort(table.begin(), table.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    const int sa = a.transfer_source.value_or(0);
    const int sb = b.transfer_source.value_or(0);
    return std::tie(a.model_id, a.reward_variant, sa, a.run_id, a.epoch) <
           std::tie(b.model_id, b.reward_variant, sb, b.run_id, b.epoch);
  });
}

std::vector<EpochSummary> summarize(const MetricsTable& table) {
  using Key = std::tuple<int, RewardVariant, int, int>;
  std::map<Key, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : table) {
    groups[{r.model_id, r.reward_variant, r.transfer_source.value_or(0), r.epoch}].push_back(&r);
  }
  std::vector<EpochSummary> out;
  for (const auto& [key, rows] : groups) {
    EpochSummary s;
    s.model_id = std::get<0>(key);
    s.reward_variant = std::get<1>(key);
    if (std::get<2>(key) != 0) s.transfer_source = std::get<2>(key);
    s.epoch = std::get<3>(key);
    s.runs = static_cast<int>(rows.size());
    const double n = s.runs;
    for (const auto* r : rows) {
      s.score_mean += r->mean_score;
      s.engagement_mean += r->mean_engagement;
    }
    s.score_mean /= n;
    s.engagement_mean /= n;
    if (rows.size() > 1) {
      double vs = 0.0, ve = 0.0;
      for (const auto* r : rows) {
        vs += (r->mean_score - s.score_mean) * (r->mean_score - s.score_mean);
        ve += (r->mean_engagement - s.engagement_mean) * (r->mean_engagement - s.engagement_mean);
      }
      s.score_std = std::sqrt(vs / (n - 1));
      s.engagement_std = std::sqrt(ve / (n - 1));
    }
    out.push_back(s);
  }
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (i < failed_index) {
            failed_index = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

MetricsTable rows_from(const TrainingResult& run, int run_id, int model_id, RewardVariant variant,
                       std::optional<int> source) {
  MetricsTable rows;
  for (const auto& e : run.epochs) {
    rows.push_back({run_id, e.epoch, model_id, variant, source, e.mean_score, e.mean_engagement});
  }
  return rows;
}

RewardSpec transfer_reward(const ExperimentConfig& cfg) {
  for (const auto& r : cfg.rewards) {
    if (r.variant == RewardVariant::kRePlusE) return r;
  }
  return RewardSpec{RewardVariant::kRePlusE, 3.0, 3.0};
}

std::vector<TabularResponseModel> tabulate_all(std::span<const NamedModel> models,
                                               const GameConfig& game) {
  std::vector<TabularResponseModel> out;
  for (const auto& m : models) {
    if (m.model == nullptr) throw ValidationError("experiment: null user model");
    out.push_back(TabularResponseModel::tabulate(*m.model, game));
  }
  return out;
}

}  // namespace

MetricsTable run_reward_comparison(const ExperimentConfig& cfg, std::span<const NamedModel> models) {
  cfg.validate();
  if (models.empty()) throw ValidationError("reward comparison: no user models");
  const std::vector<TabularResponseModel> tables = tabulate_all(models, cfg.game);
  const std::size_t runs = static_cast<std::size_t>(cfg.num_runs);
  const std::size_t per_model = cfg.rewards.size() * runs;
  std::vector<MetricsTable> results(models.size() * per_model);
  parallel_for(results.size(), cfg.jobs, [&](std::size_t task) {
    const std::size_t m = task / per_model;
    const RewardSpec& reward = cfg.rewards[(task % per_model) / runs];
    const int run = static_cast<int>(task % runs);
    Rng rng(run_seed(cfg.seed, SeedStream::kRewardComparison, models[m].id, reward.variant, run));
    const TrainingResult trained = train_policy(tables[m], cfg.game, cfg.training, reward, rng);
    results[task] = rows_from(trained, run, models[m].id, reward.variant, std::nullopt);
  });
  MetricsTable table;
  for (auto& rows : results) table.insert(table.end(), rows.begin(), rows.end());
  sort_metrics(table);
  return table;
}

std::vector<TrainingResult> pretrain_source(const ExperimentConfig& cfg, const NamedModel& source) {
  cfg.validate();
  const std::vector<TabularResponseModel> tables = tabulate_all(std::span(&source, 1), cfg.game);
  const RewardSpec reward = transfer_reward(cfg);
  TrainingConfig training = cfg.training;
  training.exploration = ExplorationMode::kSoftmax;
  std::vector<std::optional<TrainingResult>> slots(static_cast<std::size_t>(cfg.num_runs));
  parallel_for(slots.size(), cfg.jobs, [&](std::size_t run) {
    Rng rng(run_seed(cfg.seed, SeedStream::kPretraining, source.id, reward.variant,
                     static_cast<int>(run)));
    slots[run] = train_policy(tables[0], cfg.game, training, reward, rng);
  });
  std::vector<TrainingResult> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

MetricsTable TransferResult::combined() const {
  MetricsTable table = cold_start;
  table.insert(table.end(), transfer.begin(), transfer.end());
  sort_metrics(table);
  return table;
}

TransferResult run_transfer_experiment(const ExperimentConfig& cfg, int source_id,
                                       std::span<const TrainingResult> pretraining,
                                       const NamedModel& target) {
  cfg.validate();
  if (pretraining.empty()) {
    throw ValidationError("transfer: pretraining runs for model " + std::to_string(source_id) +
                          " are missing");
  }
  const RewardSpec reward = transfer_reward(cfg);
  TransferResult result;
  result.selected_run = select_transfer_policy(pretraining);
  for (std::size_t i = 0; i < pretraining.size(); ++i) {
    auto rows = rows_from(pretraining[i], static_cast<int>(i), source_id, reward.variant,
                          std::nullopt);
    result.pretraining.insert(result.pretraining.end(), rows.begin(), rows.end());
  }
  const QTable& initial = pretraining[result.selected_run].q;
  const std::vector<TabularResponseModel> tables = tabulate_all(std::span(&target, 1), cfg.game);

  TrainingConfig cold_cfg = cfg.training;
  cold_cfg.exploration = ExplorationMode::kSoftmax;
  TrainingConfig warm_cfg = cfg.training;
  warm_cfg.exploration = ExplorationMode::kGreedyOnly;

  const auto runs = static_cast<std::size_t>(cfg.num_runs);
  std::vector<MetricsTable> cold(runs), warm(runs);
  parallel_for(2 * runs, cfg.jobs, [&](std::size_t task) {
    const int run = static_cast<int>(task % runs);
    if (task < runs) {
      Rng rng(run_seed(cfg.seed, SeedStream::kColdStart, target.id, reward.variant, run));
      cold[task] = rows_from(train_policy(tables[0], cfg.game, cold_cfg, reward, rng), run,
                             target.id, reward.variant, std::nullopt);
    } else {
      Rng rng(run_seed(cfg.seed, SeedStream::kTransfer, target.id * 64 + source_id, reward.variant,
                       run));
      warm[task - runs] =
          rows_from(train_policy(tables[0], cfg.game, warm_cfg, reward, rng, &initial), run,
                    target.id, reward.variant, source_id);
    }
  });
  for (auto& rows : cold) result.cold_start.insert(result.cold_start.end(), rows.begin(), rows.end());
  for (auto& rows : warm) result.transfer.insert(result.transfer.end(), rows.begin(), rows.end());
  sort_metrics(result.pretraining);
  sort_metrics(result.cold_start);
  sort_metrics(result.transfer);
  return result;
}

std::string metrics_csv(MetricsTable table) {
  if (table.empty()) throw ValidationError("metrics: empty table");
  sort_metrics(table);
  std::string out = "run_id,epoch,model_id,reward_variant,transfer_source,mean_score,mean_engagement\n";
  for (const auto& r : table) {
    out += std::to_string(r.run_id) + "," + std::to_string(r.epoch) + "," +
           std::to_string(r.model_id) + "," + to_string(r.reward_variant) + "," +
           (r.transfer_source ? std::to_string(*r.transfer_source) : std::string()) + "," +
           format_double(r.mean_score) + "," + format_double(r.mean_engagement) + "\n";
  }
  return out;
}

void emit_metrics(const MetricsTable& table, const std::filesystem::path& path) {
  write_file(path, metrics_csv(table));
}

MetricsTable parse_metrics_csv(std::string_view text) {
  MetricsTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 7) {
      throw ValidationError("metrics CSV line " + std::to_string(line_no) + ": expected 7 columns");
    }
    try {
      MetricsRecord r;
      r.run_id = std::stoi(cells[0]);
      r.epoch = std::stoi(cells[1]);
      r.model_id = std::stoi(cells[2]);
      r.reward_variant = reward_variant_from_string(cells[3]);
      if (!cells[4].empty()) r.transfer_source = std::stoi(cells[4]);
      r.mean_score = std::stod(cells[5]);
      r.mean_engagement = std::stod(cells[6]);
      table.push_back(r);
    } catch (const std::logic_error& e) {
      throw ValidationError("metrics CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

std::string summary_csv(const std::vector<EpochSummary>& summary) {
  std::string out =
      "model_id,reward_variant,transfer_source,epoch,runs,score_mean,score_std,engagement_mean,"
      "engagement_std\n";
  for (const auto& s : summary) {
    out += std::to_string(s.model_id) + "," + to_string(s.reward_variant) + "," +
           (s.transfer_source ? std::to_string(*s.transfer_source) : std::string()) + "," +
           std::to_string(s.epoch) + "," + std::to_string(s.runs) + "," +
           format_double(s.score_mean) + "," + format_double(s.score_std) + "," +
           format_double(s.engagement_mean) + "," + format_double(s.engagement_std) + "\n";
  }
  return out;
}

std::string gnuplot_script(const std::vector<EpochSummary>& summary) {
  std::map<std::tuple<int, RewardVariant, int>, std::vector<const EpochSummary*>> series;
  for (const auto& s : summary) {
    series[{s.model_id, s.reward_variant, s.transfer_source.value_or(0)}].push_back(&s);
  }
  std::string out;
  std::vector<std::string> names, titles;
  int k = 0;
  for (const auto& [key, rows] : series) {
    const std::string name = "$s" + std::to_string(k++);
    std::string title = "M" + std::to_string(std::get<0>(key)) + " " + to_string(std::get<1>(key));
    if (std::get<2>(key) != 0) title += " from M" + std::to_string(std::get<2>(key));
    out += name + " << EOD\n";
    for (const auto* s : rows) {
      out += std::to_string(s->epoch) + " " + format_double(s->score_mean) + " " +
             format_double(s->score_std) + " " + format_double(s->engagement_mean) + " " +
             format_double(s->engagement_std) + "\n";
    }
    out += "EOD\n";
    names.push_back(name);
    titles.push_back(title);
  }
  auto plot = [&](int column, const std::string& ylabel) {
    std::string p = "set xlabel 'epoch'\nset ylabel '" + ylabel + "'\nplot ";
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i > 0) p += ", \\\n     ";
      p += names[i] + " using 1:" + std::to_string(column) + " with lines title '" + titles[i] + "'";
    }
    return p + "\n";
  };
  out += "set terminal pngcairo size 1200,500\nset output 'metrics.png'\nset multiplot layout 1,2\n";
  out += "set key bottom right\n";
  out += plot(2, "mean accumulated score");
  out += plot(4, "mean engagement");
  out += "unset multiplot\n";
  return out;
}

}  // namespace adaptrl
