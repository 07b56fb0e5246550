#include "adaptrl/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptrl/errors.hpp"
#include "adaptrl/harness.hpp"
#include "adaptrl/io.hpp"

namespace adaptrl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)");
  cmd->add_option("--seed", o.seed, "Master seed (overrides ADAPT_RL_SEED and the config)");
  cmd->add_option("--out", o.out, "Output directory (overrides the config)");
  cmd->add_option("--jobs", o.jobs, "Worker threads");
}

// Precedence: --seed, then ADAPT_RL_SEED, then the config file.
ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = experiment_config_from_json(read_file(o.config));
  if (const char* env = std::getenv("ADAPT_RL_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::logic_error&) {
      throw ValidationError(std::string("ADAPT_RL_SEED is not an unsigned integer: ") + env);
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

std::string clusters_json(const UserModelFit& fit) {
  json users = json::array();
  for (std::size_t u = 0; u < fit.user_ids.size(); ++u) {
    users.push_back({{"user_id", fit.user_ids[u]},
                     {"cluster_id", fit.cluster_ids[u]},
                     {"vector", fit.vectors[u].flatten()},
                     {"point", fit.pca.points[u]}});
  }
  const auto& proj = fit.pca.projection;
  const json j{{"users", users},
               {"centroids", fit.centroids},
               {"inertia", fit.kmeans.inertia},
               {"projection",
                {{"mean", proj.mean},
                 {"axes", proj.axes},
                 {"eigenvalues", proj.eigenvalues},
                 {"total_variance", proj.total_variance}}}};
  return j.dump(1) + "\n";
}

void write_models(const UserModelFit& fit, const fs::path& dir) {
  for (const auto& m : fit.models) {
    write_file(dir / "models" / ("model_" + std::to_string(m.cluster_id()) + ".json"),
               user_model_to_json(m));
  }
  write_file(dir / "clusters.json", clusters_json(fit));
}

std::vector<NamedModel> named(const UserModelFit& fit) {
  std::vector<NamedModel> out;
  for (const auto& m : fit.models) out.push_back({m.cluster_id(), &m});
  return out;
}

const UserModel& model_by_id(const UserModelFit& fit, int id) {
  for (const auto& m : fit.models) {
    if (m.cluster_id() == id) return m;
  }
  throw ValidationError("no user model with id " + std::to_string(id));
}

void print_summary(const std::vector<EpochSummary>& summary, std::ostream& out) {
  out << "model variant      source epoch runs   score_mean  score_std  eng_mean  eng_std\n";
  for (const auto& s : summary) {
    out << std::setw(5) << s.model_id << " " << std::left << std::setw(12)
        << to_string(s.reward_variant) << std::right << std::setw(6)
        << (s.transfer_source ? std::to_string(*s.transfer_source) : "-") << std::setw(6)
        << s.epoch << std::setw(5) << s.runs << std::fixed << std::setprecision(3)
        << std::setw(13) << s.score_mean << std::setw(11) << s.score_std << std::setw(10)
        << s.engagement_mean << std::setw(9) << s.engagement_std << "\n";
    out.unsetf(std::ios::fixed);
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

int simulate(const ExperimentConfig& cfg, const UserResponseModel& model, QTable q,
             const RewardSpec& reward, bool explore, std::istream& in, std::ostream& out) {
  TrainingConfig training = cfg.training;
  training.exploration = explore ? ExplorationMode::kSoftmax : ExplorationMode::kGreedyOnly;
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::kSimulation)));
  const GameConfig& game = cfg.game;

  out << "Repeat each sequence by typing the emotions separated by spaces.\n"
      << "Emotions: ";
  for (std::size_t i = 0; i < game.emotion_pool.size(); ++i) {
    out << (i ? ", " : "") << game.emotion_pool[i];
  }
  out << "\n";

  GameState s = initial_state(game);
  int cs = 0;
  int total = 0;
  for (int t = 1; t <= training.session_length; ++t) {
    const ActionId action = choose_action(q, s, training, rng);
    const ActionEffect effect = apply_action(s, action, game);
    if (effect.feedback == Feedback::kEncouraging) {
      out << "Robot: Well done so far, you can do this one too!\n";
    } else if (effect.feedback == Feedback::kChallenging) {
      out << "Robot: Let's see if you can manage this one, it is a tricky one!\n";
    }
    const SequenceSpec seq = sample_sequence(effect.level, game, rng);
    out << "[" << t << "/" << training.session_length << "] level " << effect.level
        << ", robot says:";
    for (const auto& e : seq.emotions) out << " " << e;
    out << "\nYour answer: " << std::flush;
    std::string line;
    if (!std::getline(in, line)) {
      out << "\nSession ended early.\n";
      break;
    }
    std::istringstream words(line);
    std::vector<std::string> answer;
    for (std::string w; words >> w;) answer.push_back(lower(w));
    std::vector<std::string> expected;
    for (const auto& e : seq.emotions) expected.push_back(lower(e));
    const Outcome outcome = answer == expected ? Outcome::kSuccess : Outcome::kFailure;
    const GameState next{effect.level, effect.feedback, cs};
    const double engagement = model.engagement(next, outcome);
    const IterationResult step =
        observe_step(q, s, cs, action, outcome, engagement, training, reward);
    total += step.next_score;
    out << (outcome == Outcome::kSuccess ? "Correct" : "Not quite") << " (score "
        << step.next_score << ", session total " << total << ")\n";
    s = step.next_state;
    cs = step.next_score;
  }
  out << "Final score: " << total << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Personalised difficulty and feedback policies from learned user models",
               "adaptrl"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* gen = app.add_subcommand("gen-population", "Simulate the synthetic population's logs");
  add_common(gen, common);

  auto* fit_cmd = app.add_subcommand("fit-users", "Cluster users and fit per-cluster GP models");
  add_common(fit_cmd, common);
  std::string logs_dir;
  fit_cmd->add_option("--logs", logs_dir, "Directory of JSONL session logs");

  auto* train = app.add_subcommand("train", "Train one policy; writes qtable.json and metrics.csv");
  add_common(train, common);
  std::string model_file, init_qtable, reward_name = "RE_plus_E";
  int model_id = 1;
  int run_index = 0;
  train->add_option("--model", model_file, "User model JSON (default: fit from the config)");
  train->add_option("--model-id", model_id, "Cluster id when fitting from the config");
  train->add_option("--reward", reward_name, "RE_only, RE_plus_E or E_only");
  train->add_option("--run", run_index, "Run index used for seed derivation");
  train->add_option("--init-qtable", init_qtable, "Warm-start Q-table JSON");

  auto* compare = app.add_subcommand("compare-rewards", "Reward-function comparison protocol");
  add_common(compare, common);

  auto* transfer = app.add_subcommand("transfer", "Policy-transfer protocol");
  add_common(transfer, common);
  std::optional<int> source_id, target_id;
  transfer->add_option("--source", source_id, "Cluster id of the pretraining model");
  transfer->add_option("--target", target_id, "Cluster id of the target model");

  auto* report = app.add_subcommand("report", "Print per-epoch summaries of a metrics CSV");
  std::string metrics_file, gnuplot_file, summary_file;
  report->add_option("--metrics", metrics_file, "Metrics CSV")->required();
  report->add_option("--gnuplot", gnuplot_file, "Also write a gnuplot script here");
  report->add_option("--summary", summary_file, "Also write the summary CSV here");

  auto* sim = app.add_subcommand("simulate", "Play one interactive text session");
  add_common(sim, common);
  std::string sim_model, sim_qtable, sim_reward = "RE_plus_E";
  int sim_model_id = 1;
  bool explore = false;
  sim->add_option("--model", sim_model, "User model JSON used for engagement estimates");
  sim->add_option("--model-id", sim_model_id, "Cluster id when fitting from the config");
  sim->add_option("--qtable", sim_qtable, "Policy Q-table JSON (default: all zeros)");
  sim->add_option("--reward", sim_reward, "Reward used for live updates");
  sim->add_flag("--explore", explore, "Use softmax exploration instead of greedy actions");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen) {
      const ExperimentConfig cfg = resolve_config(common);
      const auto logs = load_population(cfg);
      write_logs(logs, fs::path(cfg.output_dir) / "logs");
      out << "wrote " << logs.size() << " sessions to " << (fs::path(cfg.output_dir) / "logs").string()
          << "\n";
    } else if (*fit_cmd) {
      ExperimentConfig cfg = resolve_config(common);
      if (!logs_dir.empty()) cfg.log_dir = logs_dir;
      const auto logs = load_population(cfg);
      const UserModelFit fit = fit_population(cfg, logs);
      write_models(fit, cfg.output_dir);
      for (const auto& m : fit.models) {
        const auto n = std::count(fit.cluster_ids.begin(), fit.cluster_ids.end(), m.cluster_id());
        out << "cluster " << m.cluster_id() << ": " << n << " users\n";
      }
    } else if (*train) {
      const ExperimentConfig cfg = resolve_config(common);
      RewardSpec reward{reward_variant_from_string(reward_name), 3.0, 3.0};
      for (const auto& r : cfg.rewards) {
        if (r.variant == reward.variant) reward = r;
      }
      std::optional<UserModel> loaded;
      std::optional<UserModelFit> fit;
      if (!model_file.empty()) {
        loaded = user_model_from_json(read_file(model_file));
        if (loaded->num_levels() != cfg.game.num_levels) {
          throw ValidationError("model and config disagree on the number of levels");
        }
        model_id = loaded->cluster_id();
      } else {
        fit = fit_population(cfg, load_population(cfg));
      }
      const UserModel& model = loaded ? *loaded : model_by_id(*fit, model_id);
      const TabularResponseModel table = TabularResponseModel::tabulate(model, cfg.game);
      std::optional<QTable> initial;
      if (!init_qtable.empty()) {
        initial = qtable_from_json(read_file(init_qtable), cfg.game, cfg.training);
      }
      Rng rng(run_seed(cfg.seed, SeedStream::kSingleTraining, model_id, reward.variant, run_index));
      const TrainingResult result = train_policy(table, cfg.game, cfg.training, reward, rng,
                                                 initial ? &*initial : nullptr);
      MetricsTable rows;
      for (const auto& e : result.epochs) {
        rows.push_back({run_index, e.epoch, model_id, reward.variant, std::nullopt, e.mean_score,
                        e.mean_engagement});
      }
      const fs::path dir = cfg.output_dir;
      write_file(dir / "qtable.json", qtable_to_json(result.q));
      if (!rows.empty()) emit_metrics(rows, dir / "metrics.csv");
      out << "trained model " << model_id << " with " << to_string(reward.variant) << " for "
          << result.epochs.size() << " epochs\n";
    } else if (*compare) {
      const ExperimentConfig cfg = resolve_config(common);
      const UserModelFit fit = fit_population(cfg, load_population(cfg));
      const fs::path dir = cfg.output_dir;
      write_models(fit, dir);
      const auto models = named(fit);
      const MetricsTable table = run_reward_comparison(cfg, models);
      emit_metrics(table, dir / "metrics.csv");
      const auto summary = summarize(table);
      write_file(dir / "summary.csv", summary_csv(summary));
      print_summary(summary, out);
    } else if (*transfer) {
      ExperimentConfig cfg = resolve_config(common);
      if (source_id) cfg.transfer_source = *source_id;
      if (target_id) cfg.transfer_target = *target_id;
      cfg.validate();
      const UserModelFit fit = fit_population(cfg, load_population(cfg));
      const fs::path dir = cfg.output_dir;
      write_models(fit, dir);
      const NamedModel source{cfg.transfer_source, &model_by_id(fit, cfg.transfer_source)};
      const NamedModel target{cfg.transfer_target, &model_by_id(fit, cfg.transfer_target)};
      const auto pretraining = pretrain_source(cfg, source);
      const TransferResult result =
          run_transfer_experiment(cfg, source.id, pretraining, target);
      emit_metrics(result.pretraining, dir / "pretraining_metrics.csv");
      const MetricsTable combined = result.combined();
      emit_metrics(combined, dir / "transfer_metrics.csv");
      write_file(dir / "selected_qtable.json", qtable_to_json(pretraining[result.selected_run].q));
      const auto summary = summarize(combined);
      write_file(dir / "transfer_summary.csv", summary_csv(summary));
      out << "selected pretraining run " << result.selected_run << "\n";
      print_summary(summary, out);
    } else if (*report) {
      const MetricsTable table = parse_metrics_csv(read_file(metrics_file));
      if (table.empty()) throw ValidationError("metrics file has no rows: " + metrics_file);
      const auto summary = summarize(table);
      print_summary(summary, out);
      if (!gnuplot_file.empty()) write_file(gnuplot_file, gnuplot_script(summary));
      if (!summary_file.empty()) write_file(summary_file, summary_csv(summary));
    } else if (*sim) {
      const ExperimentConfig cfg = resolve_config(common);
      std::optional<UserModel> loaded;
      std::optional<UserModelFit> fit;
      if (!sim_model.empty()) {
        loaded = user_model_from_json(read_file(sim_model));
      } else {
        fit = fit_population(cfg, load_population(cfg));
      }
      const UserModel& model = loaded ? *loaded : model_by_id(*fit, sim_model_id);
      QTable q = sim_qtable.empty()
                     ? QTable(cfg.game, cfg.training.initial_temperature)
                     : qtable_from_json(read_file(sim_qtable), cfg.game, cfg.training);
      RewardSpec reward{reward_variant_from_string(sim_reward), 3.0, 3.0};
      return simulate(cfg, model, std::move(q), reward, explore, in, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace adaptrl
