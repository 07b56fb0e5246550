#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptrl/behaviour.hpp"
#include "adaptrl/session_log.hpp"
#include "adaptrl/user_model.hpp"

namespace adaptrl {

// A group of simulated users sharing one behavioural profile. Effects are
// additive and the results are clamped to [0, 1] (success) and [-1, 1]
// (engagement).
struct SyntheticUserSpec {
  std::string group = "user";
  int count = 1;
  std::vector<double> success_probs{0.9, 0.7, 0.5};  // per level
  // Indexed by feedback code (none, encouraging, challenging).
  std::array<double, 3> feedback_success_delta{0.0, 0.0, 0.0};
  std::array<double, 3> feedback_engagement_delta{0.0, 0.0, 0.0};
  std::vector<double> engagement_means{0.5, 0.5, 0.5};  // per level
  // Added on success, subtracted on failure.
  double outcome_engagement_delta = 0.0;
  // Standard deviation of the per-sequence latent engagement.
  double engagement_noise = 0.1;
  // Per-user standard deviation of the success and engagement offsets.
  double user_spread = 0.0;
  std::uint64_t seed = 1;

  void validate(const GameConfig& game) const;
};

// The fixed curriculum of session number `session` (1-based): for every level,
// two sequences without feedback followed by one with feedback, alternating
// encouraging and challenging between levels and sessions. Padded at the top
// level (or truncated) to the session length.
std::vector<std::pair<int, Feedback>> curriculum(int session, const GameConfig& game);

// Simulated sessions for every user in specs. Engagement is sampled at 10 Hz;
// focus periods are the robot's speaking intervals before and after the
// user's answer.
std::vector<SessionLog> generate_population(std::span<const SyntheticUserSpec> specs,
                                            const GameConfig& game, int sessions_per_user,
                                            Rng& rng);

// Generating group of each user id, for comparisons against clusterings.
std::vector<std::string> group_of_users(std::span<const SyntheticUserSpec> specs);

// Two archetypes of 11 and 9 users: similar success rates, clearly different
// engagement.
std::vector<SyntheticUserSpec> default_population();

struct ExperimentConfig {
  std::uint64_t seed = 2022;
  GameConfig game;
  TrainingConfig training;
  std::vector<RewardSpec> rewards{{RewardVariant::kReOnly, 3.0, 3.0},
                                  {RewardVariant::kRePlusE, 3.0, 3.0},
                                  {RewardVariant::kEOnly, 3.0, 3.0}};
  int num_runs = 30;
  int clusters = 2;
  int kmeans_restarts = 10;
  GpGrid gp_grid;
  std::vector<SyntheticUserSpec> population = default_population();
  int sessions_per_user = 2;
  std::string log_dir;  // when set, logs are ingested instead of generated
  std::string output_dir = "out";
  int transfer_source = 1;
  int transfer_target = 2;
  int jobs = 1;

  void validate() const;
};

// Fields mirror ExperimentConfig; omitted fields keep their defaults.
ExperimentConfig experiment_config_from_json(std::string_view text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// Stream identifiers for derive_seed(master, stream, model_key, run).
enum class SeedStream : std::uint64_t {
  kPopulation = 1,
  kClustering = 2,
  kRewardComparison = 3,
  kPretraining = 4,
  kColdStart = 5,
  kTransfer = 6,
  kSingleTraining = 7,
  kSimulation = 8,
};
std::uint64_t run_seed(std::uint64_t master, SeedStream stream, int model_id,
                       RewardVariant variant, int run);

std::vector<SessionLog> load_population(const ExperimentConfig& cfg);
UserModelFit fit_population(const ExperimentConfig& cfg, std::span<const SessionLog> logs);

struct NamedModel {
  int id = 1;
  const UserResponseModel* model = nullptr;
};

struct MetricsRecord {
  int run_id = 0;  // 0-based
  int epoch = 1;   // 1-based
  int model_id = 1;
  RewardVariant reward_variant = RewardVariant::kRePlusE;
  std::optional<int> transfer_source;
  double mean_score = 0.0;
  double mean_engagement = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

using MetricsTable = std::vector<MetricsRecord>;

// Sorts by (model, variant, transfer source, run, epoch); cold-start rows
// (no transfer source) come before transfer rows.
void sort_metrics(MetricsTable& table);

struct EpochSummary {
  int model_id = 1;
  RewardVariant reward_variant = RewardVariant::kRePlusE;
  std::optional<int> transfer_source;
  int epoch = 1;
  int runs = 0;
  double score_mean = 0.0;
  double score_std = 0.0;  // sample (n - 1) convention, 0 for one run
  double engagement_mean = 0.0;
  double engagement_std = 0.0;
};

std::vector<EpochSummary> summarize(const MetricsTable& table);

// Calls fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
// rethrown (the one from the lowest index) after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// num_runs independent train_policy runs per (model, reward variant).
MetricsTable run_reward_comparison(const ExperimentConfig& cfg, std::span<const NamedModel> models);

// RE_plus_E softmax training runs on the source model.
std::vector<TrainingResult> pretrain_source(const ExperimentConfig& cfg, const NamedModel& source);

struct TransferResult {
  std::size_t selected_run = 0;
  MetricsTable pretraining;
  MetricsTable cold_start;  // target trained from zero, RE_plus_E, softmax
  MetricsTable transfer;    // target warm-started, RE_plus_E, greedy only
  MetricsTable combined() const;  // cold_start + transfer, sorted
};

// Throws ValidationError when pretraining is empty.
TransferResult run_transfer_experiment(const ExperimentConfig& cfg, int source_id,
                                       std::span<const TrainingResult> pretraining,
                                       const NamedModel& target);

// Header: run_id,epoch,model_id,reward_variant,transfer_source,mean_score,mean_engagement
// LF line endings, rows sorted as sort_metrics. Throws ValidationError on an
// empty table.
std::string metrics_csv(MetricsTable table);
void emit_metrics(const MetricsTable& table, const std::filesystem::path& path);
MetricsTable parse_metrics_csv(std::string_view text);

std::string summary_csv(const std::vector<EpochSummary>& summary);
// Self-contained gnuplot script (inline data blocks) plotting mean score and
// engagement per epoch with one line per (model, variant, transfer) series.
std::string gnuplot_script(const std::vector<EpochSummary>& summary);

}  // namespace adaptrl
