#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "adaptrl/cli.hpp"
#include "adaptrl/engagement.hpp"
#include "adaptrl/errors.hpp"
#include "adaptrl/game.hpp"
#include "adaptrl/gp.hpp"
#include "adaptrl/harness.hpp"
#include "adaptrl/io.hpp"
#include "adaptrl/oracle.hpp"
#include "adaptrl/user_model.hpp"
#include "adaptrl/user_response.hpp"

namespace py = pybind11;
using namespace adaptrl;

namespace {

std::vector<NamedModel> named(const UserModelFit& fit) {
  std::vector<NamedModel> out;
  for (const auto& m : fit.models) out.push_back({m.cluster_id(), &m});
  return out;
}

const NamedModel& by_id(const std::vector<NamedModel>& models, int id) {
  for (const auto& m : models) {
    if (m.id == id) return m;
  }
  throw ValidationError("no model with id " + std::to_string(id));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive game-difficulty Q-learning with GP user models";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<Feedback>(m, "Feedback")
      .value("NONE", Feedback::kNone)
      .value("ENCOURAGING", Feedback::kEncouraging)
      .value("CHALLENGING", Feedback::kChallenging);
  py::enum_<Outcome>(m, "Outcome")
      .value("FAILURE", Outcome::kFailure)
      .value("SUCCESS", Outcome::kSuccess);
  py::enum_<RewardVariant>(m, "RewardVariant")
      .value("RE_ONLY", RewardVariant::kReOnly)
      .value("RE_PLUS_E", RewardVariant::kRePlusE)
      .value("E_ONLY", RewardVariant::kEOnly);
  py::enum_<ExplorationMode>(m, "ExplorationMode")
      .value("SOFTMAX", ExplorationMode::kSoftmax)
      .value("GREEDY_ONLY", ExplorationMode::kGreedyOnly);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &Rng::next)
      .def("uniform", &Rng::uniform)
      .def("below", &Rng::below)
      .def("normal", &Rng::normal);
  m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("a"), py::arg("b") = 0,
        py::arg("c") = 0);

  // Game core.
  py::class_<GameConfig>(m, "GameConfig")
      .def(py::init<>())
      .def_readwrite("num_levels", &GameConfig::num_levels)
      .def_readwrite("sequence_lengths", &GameConfig::sequence_lengths)
      .def_readwrite("session_length", &GameConfig::session_length)
      .def_readwrite("emotion_pool", &GameConfig::emotion_pool)
      .def("validate", &GameConfig::validate)
      .def("num_actions", &GameConfig::num_actions);
  py::class_<GameState>(m, "GameState")
      .def(py::init<>())
      .def(py::init([](int level, Feedback f, int ps) { return GameState{level, f, ps}; }),
           py::arg("level"), py::arg("feedback"), py::arg("previous_score"))
      .def_readwrite("level", &GameState::level)
      .def_readwrite("feedback", &GameState::feedback)
      .def_readwrite("previous_score", &GameState::previous_score)
      .def("is_initial", &GameState::is_initial)
      .def(py::self == py::self)
      .def("__hash__",
           [](const GameState& s) {
             return py::hash(py::make_tuple(s.level, to_int(s.feedback), s.previous_score));
           })
      .def("__repr__", [](const GameState& s) { return to_string(s); });
  py::class_<ActionEffect>(m, "ActionEffect")
      .def_readonly("level", &ActionEffect::level)
      .def_readonly("feedback", &ActionEffect::feedback);
  py::class_<SequenceSpec>(m, "SequenceSpec")
      .def_readonly("level", &SequenceSpec::level)
      .def_readonly("emotions", &SequenceSpec::emotions);

  // Actions cross the boundary as plain integers 1..l+2.
  m.def("initial_state", &initial_state);
  m.def("valid_actions", [](const GameState& s, const GameConfig& c) {
    std::vector<int> out;
    for (ActionId a : valid_actions(s, c)) out.push_back(a.index);
    return out;
  });
  m.def("is_valid_action",
        [](const GameState& s, int a, const GameConfig& c) { return is_valid_action(s, {a}, c); });
  m.def("apply_action",
        [](const GameState& s, int a, const GameConfig& c) { return apply_action(s, {a}, c); });
  m.def("activity_result", &activity_result);
  m.def("current_score", &current_score);
  m.def("sample_sequence", &sample_sequence);
  m.def("reachable_states", &reachable_states);

  // Engagement.
  py::class_<EngagementSample>(m, "EngagementSample")
      .def(py::init([](double t, int v) { return EngagementSample{t, v}; }))
      .def_readwrite("timestamp", &EngagementSample::timestamp)
      .def_readwrite("value", &EngagementSample::value);
  py::class_<Interval>(m, "Interval")
      .def(py::init([](double a, double b) { return Interval{a, b}; }))
      .def_readwrite("start", &Interval::start)
      .def_readwrite("end", &Interval::end);
  m.def(
      "expected_per_second",
      [](std::vector<EngagementSample> samples, std::vector<Interval> periods) {
        return expected_per_second({std::move(samples), std::move(periods)});
      },
      py::arg("samples"), py::arg("focus_periods") = std::vector<Interval>{});
  m.def("mean_engagement", [](const ExpectedEngagement& e, const std::vector<Interval>& p) {
    return mean_engagement(e, p);
  });

  // Gaussian processes.
  py::class_<GpHyperparameters>(m, "GpHyperparameters")
      .def(py::init<>())
      .def(py::init([](std::vector<double> ls, double sv, double nv) {
             return GpHyperparameters{std::move(ls), sv, nv};
           }),
           py::arg("length_scales"), py::arg("signal_variance") = 1.0,
           py::arg("noise_variance") = 1e-2)
      .def_readwrite("length_scales", &GpHyperparameters::length_scales)
      .def_readwrite("signal_variance", &GpHyperparameters::signal_variance)
      .def_readwrite("noise_variance", &GpHyperparameters::noise_variance);
  py::class_<GpGrid>(m, "GpGrid")
      .def(py::init<>())
      .def_readwrite("length_scales", &GpGrid::length_scales)
      .def_readwrite("signal_variances", &GpGrid::signal_variances)
      .def_readwrite("noise_variances", &GpGrid::noise_variances);
  py::class_<GaussianProcess>(m, "GaussianProcess")
      .def(py::init<std::vector<std::vector<double>>, std::vector<double>, GpHyperparameters>(),
           py::arg("inputs"), py::arg("targets"), py::arg("hyperparameters"))
      .def_static("fit", &GaussianProcess::fit, py::arg("inputs"), py::arg("targets"),
                  py::arg("grid") = GpGrid{})
      .def("mean", [](const GaussianProcess& g, const std::vector<double>& x) { return g.mean(x); })
      .def("variance",
           [](const GaussianProcess& g, const std::vector<double>& x) { return g.variance(x); })
      .def_property_readonly("log_marginal_likelihood", &GaussianProcess::log_marginal_likelihood)
      .def_property_readonly("hyperparameters", &GaussianProcess::hyperparameters)
      .def_property_readonly("jitter", &GaussianProcess::jitter);

  // User models.
  py::class_<UserResponseModel>(m, "UserResponseModel")
      .def("success_probability", &UserResponseModel::success_probability)
      .def("engagement", &UserResponseModel::engagement);
  py::class_<TabularResponseModel, UserResponseModel>(m, "TabularResponseModel")
      .def(py::init<const GameConfig&>())
      .def("set_success", &TabularResponseModel::set_success)
      .def("set_engagement", &TabularResponseModel::set_engagement);
  py::class_<UserModel, UserResponseModel>(m, "UserModel")
      .def_property_readonly("cluster_id", &UserModel::cluster_id)
      .def("predict_success", &UserModel::predict_success)
      .def("predict_engagement", &UserModel::predict_engagement)
      .def("to_json", [](const UserModel& u) { return user_model_to_json(u); });
  m.def("user_model_from_json", [](const std::string& s) { return user_model_from_json(s); });
  py::class_<UserModelFit>(m, "UserModelFit")
      .def_readonly("user_ids", &UserModelFit::user_ids)
      .def_readonly("cluster_ids", &UserModelFit::cluster_ids)
      .def_readonly("centroids", &UserModelFit::centroids)
      .def_readonly("models", &UserModelFit::models);
  m.def("rand_index", [](const std::vector<int>& a, const std::vector<int>& b) {
    return rand_index(a, b);
  });

  // Behaviour.
  py::class_<RewardSpec>(m, "RewardSpec")
      .def(py::init([](RewardVariant v, double beta, double lambda) {
             return RewardSpec{v, beta, lambda};
           }),
           py::arg("variant") = RewardVariant::kRePlusE, py::arg("beta") = 3.0,
           py::arg("lambda_") = 3.0)
      .def_readwrite("variant", &RewardSpec::variant)
      .def_readwrite("beta", &RewardSpec::beta)
      .def_readwrite("lambda_", &RewardSpec::lambda);
  m.def("compute_reward", &compute_reward);
  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
      .def_readwrite("discount", &TrainingConfig::discount)
      .def_readwrite("initial_temperature", &TrainingConfig::initial_temperature)
      .def_readwrite("temperature_decay", &TrainingConfig::temperature_decay)
      .def_readwrite("min_temperature", &TrainingConfig::min_temperature)
      .def_readwrite("session_length", &TrainingConfig::session_length)
      .def_readwrite("sessions_per_epoch", &TrainingConfig::sessions_per_epoch)
      .def_readwrite("epochs", &TrainingConfig::epochs)
      .def_readwrite("exploration", &TrainingConfig::exploration);
  m.def(
      "softmax_probabilities",
      [](const std::vector<double>& q, const std::vector<int>& valid, double t) {
        std::vector<ActionId> ids;
        for (int a : valid) ids.push_back({a});
        return softmax_probabilities(q, ids, t);
      },
      py::arg("q_row"), py::arg("valid"), py::arg("temperature"));
  py::class_<QTable>(m, "QTable")
      .def(py::init<const GameConfig&, double>(), py::arg("game"),
           py::arg("initial_temperature") = 1.0)
      .def("value", [](const QTable& q, const GameState& s, int a) { return q.value(s, {a}); })
      .def("set_value",
           [](QTable& q, const GameState& s, int a, double v) { q.set_value(s, {a}, v); })
      .def("visits", &QTable::visits)
      .def("temperature", &QTable::temperature)
      .def("to_json", [](const QTable& q) { return qtable_to_json(q); });
  m.def("qtable_from_json", [](const std::string& s, const GameConfig& g,
                               const TrainingConfig& t) { return qtable_from_json(s, g, t); });
  py::class_<EpochMetrics>(m, "EpochMetrics")
      .def_readonly("epoch", &EpochMetrics::epoch)
      .def_readonly("mean_score", &EpochMetrics::mean_score)
      .def_readonly("mean_engagement", &EpochMetrics::mean_engagement)
      .def_readonly("mean_reward", &EpochMetrics::mean_reward);
  py::class_<TrainingResult>(m, "TrainingResult")
      .def_readonly("q", &TrainingResult::q)
      .def_readonly("epochs", &TrainingResult::epochs);
  m.def(
      "train_policy",
      [](const UserResponseModel& model, const GameConfig& game, const TrainingConfig& cfg,
         const RewardSpec& reward, std::uint64_t seed, const QTable* initial) {
        Rng rng(seed);
        py::gil_scoped_release release;
        return train_policy(model, game, cfg, reward, rng, initial);
      },
      py::arg("model"), py::arg("game"), py::arg("config"), py::arg("reward"), py::arg("seed"),
      py::arg("initial_q") = nullptr);
  py::class_<Policy>(m, "Policy").def("action", [](const Policy& p, const GameState& s) {
    return p.action(s).index;
  });
  m.def("greedy_policy", &greedy_policy);
  m.def("policy_agreement", &policy_agreement);

  py::class_<OracleSolution>(m, "OracleSolution")
      .def_readonly("session_value", &OracleSolution::session_value)
      .def_readonly("stationary_policy", &OracleSolution::stationary_policy)
      .def_readonly("iterations", &OracleSolution::iterations);
  m.def("value_iteration_oracle",
        [](const UserResponseModel& model, const GameConfig& game, const TrainingConfig& cfg,
           const RewardSpec& reward) { return value_iteration_oracle(model, game, cfg, reward); });

  // Harness.
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("from_json",
                  [](const std::string& s) { return experiment_config_from_json(s); })
      .def("to_json", [](const ExperimentConfig& c) { return experiment_config_to_json(c); })
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("game", &ExperimentConfig::game)
      .def_readwrite("training", &ExperimentConfig::training)
      .def_readwrite("rewards", &ExperimentConfig::rewards)
      .def_readwrite("num_runs", &ExperimentConfig::num_runs)
      .def_readwrite("clusters", &ExperimentConfig::clusters)
      .def_readwrite("jobs", &ExperimentConfig::jobs);
  py::class_<SessionLog>(m, "SessionLog")
      .def_readonly("user_id", &SessionLog::user_id)
      .def_readonly("session_id", &SessionLog::session_id)
      .def("__len__", [](const SessionLog& l) { return l.sequences.size(); });
  m.def("load_population", &load_population);
  m.def("fit_population", [](const ExperimentConfig& cfg, const std::vector<SessionLog>& logs) {
    return fit_population(cfg, logs);
  });
  m.def("compare_rewards", [](const ExperimentConfig& cfg, const UserModelFit& fit) {
    const auto models = named(fit);
    py::gil_scoped_release release;
    return metrics_csv(run_reward_comparison(cfg, models));
  });
  m.def("transfer", [](const ExperimentConfig& cfg, const UserModelFit& fit, int source,
                       int target) {
    const auto models = named(fit);
    py::gil_scoped_release release;
    const auto pre = pretrain_source(cfg, by_id(models, source));
    return metrics_csv(run_transfer_experiment(cfg, source, pre, by_id(models, target)).combined());
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args, const std::string& input) {
        std::istringstream in(input);
        std::ostringstream out, err;
        const int code = run_cli(args, in, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), py::arg("stdin") = "");
}
