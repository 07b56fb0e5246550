#include "adaptrl/behaviour.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "adaptrl/errors.hpp"

namespace adaptrl {

std::string to_string(RewardVariant v) {
  switch (v) {
    case RewardVariant::kReOnly:
      return "RE_only";
    case RewardVariant::kRePlusE:
      return "RE_plus_E";
    case RewardVariant::kEOnly:
      return "E_only";
  }
  return "?";
}

RewardVariant reward_variant_from_string(const std::string& name) {
  if (name == "RE_only") return RewardVariant::kReOnly;
  if (name == "RE_plus_E") return RewardVariant::kRePlusE;
  if (name == "E_only") return RewardVariant::kEOnly;
  throw ValidationError("unknown reward variant '" + name +
                        "' (expected RE_only, RE_plus_E or E_only)");
}

void RewardSpec::validate() const {
  if (variant == RewardVariant::kRePlusE && !(beta > 0.0)) {
    throw ValidationError("reward: beta must be > 0");
  }
  if (variant == RewardVariant::kEOnly && !(lambda > 0.0)) {
    throw ValidationError("reward: lambda must be > 0");
  }
}

double compute_reward(const RewardSpec& spec, double activity_result, double engagement) {
  switch (spec.variant) {
    case RewardVariant::kReOnly:
      return activity_result;
    case RewardVariant::kRePlusE:
      return activity_result + spec.beta * engagement;
    case RewardVariant::kEOnly:
      return spec.lambda * engagement;
  }
  return 0.0;
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ValidationError("training: learning_rate must be in (0, 1]");
  }
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw ValidationError("training: discount must be in [0, 1)");
  }
  if (!(min_temperature > 0.0)) throw ValidationError("training: min_temperature must be > 0");
  if (!(initial_temperature >= min_temperature)) {
    throw ValidationError("training: initial_temperature must be >= min_temperature");
  }
  if (!(temperature_decay > 0.0 && temperature_decay <= 1.0)) {
    throw ValidationError("training: temperature_decay must be in (0, 1]");
  }
  if (session_length < 1) throw ValidationError("training: session_length must be >= 1");
  if (sessions_per_epoch < 1) throw ValidationError("training: sessions_per_epoch must be >= 1");
  if (epochs < 0) throw ValidationError("training: epochs must be >= 0");
}

double temperature_for_visits(std::int64_t visits, const TrainingConfig& cfg) {
  const double t = cfg.initial_temperature *
                   std::pow(cfg.temperature_decay, static_cast<double>(visits));
  return std::max(cfg.min_temperature, t);
}

QTable::QTable(const GameConfig& game, double initial_temperature)
    : game_(game),
      indexer_(game.num_levels),
      num_levels_(game.num_levels),
      num_actions_(game.num_actions()),
      values_(indexer_.size() * static_cast<std::size_t>(num_actions_), 0.0),
      visits_(indexer_.size(), 0),
      temperatures_(indexer_.size(), initial_temperature) {
  if (!(initial_temperature > 0.0)) throw ValidationError("qtable: temperature must be > 0");
}

std::span<const double> QTable::row(const GameState& s) const {
  return std::span<const double>(values_).subspan(
      indexer_.index(s) * static_cast<std::size_t>(num_actions_),
      static_cast<std::size_t>(num_actions_));
}

void QTable::record_visit(const GameState& s, const TrainingConfig& cfg) {
  const std::size_t i = indexer_.index(s);
  ++visits_[i];
  // Never raise a temperature, e.g. one inherited from a transferred table.
  temperatures_[i] = std::min(temperatures_[i], temperature_for_visits(visits_[i], cfg));
}

double QTable::max_value(const GameState& s) const {
  const auto r = row(s);
  const int last = s.is_initial() ? num_levels_ : num_actions_;
  return *std::max_element(r.begin(), r.begin() + last);
}

bool operator==(const QTable& a, const QTable& b) {
  auto same_bits = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() &&
           (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
  };
  return a.num_levels_ == b.num_levels_ && same_bits(a.values_, b.values_) &&
         a.visits_ == b.visits_ && same_bits(a.temperatures_, b.temperatures_);
}

std::vector<double> softmax_probabilities(std::span<const double> q_row,
                                          std::span<const ActionId> valid, double temperature) {
  if (valid.empty()) throw ValidationError("softmax: no valid actions");
  if (!(temperature > 0.0)) throw ValidationError("softmax: temperature must be > 0");
  double max_q = -std::numeric_limits<double>::infinity();
  for (ActionId a : valid) max_q = std::max(max_q, q_row[static_cast<std::size_t>(a.index - 1)]);
  std::vector<double> probs(q_row.size(), 0.0);
  double total = 0.0;
  for (ActionId a : valid) {
    const auto i = static_cast<std::size_t>(a.index - 1);
    probs[i] = std::exp((q_row[i] - max_q) / temperature);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

ActionId softmax_sample(std::span<const double> q_row, std::span<const ActionId> valid,
                        double temperature, Rng& rng) {
  const std::vector<double> probs = softmax_probabilities(q_row, valid, temperature);
  const double u = rng.uniform();
  double acc = 0.0;
  for (ActionId a : valid) {
    acc += probs[static_cast<std::size_t>(a.index - 1)];
    if (u < acc) return a;
  }
  // Rounding left u above the final cumulative sum.
  for (auto it = valid.rbegin(); it != valid.rend(); ++it) {
    if (probs[static_cast<std::size_t>(it->index - 1)] > 0.0) return *it;
  }
  return valid.back();
}

ActionId greedy_action(std::span<const double> q_row, std::span<const ActionId> valid) {
  if (valid.empty()) throw ValidationError("greedy_action: no valid actions");
  ActionId best = valid.front();
  for (ActionId a : valid) {
    if (q_row[static_cast<std::size_t>(a.index - 1)] >
        q_row[static_cast<std::size_t>(best.index - 1)]) {
      best = a;
    }
  }
  return best;
}

ActionId choose_action(const QTable& q, const GameState& s, const TrainingConfig& cfg, Rng& rng) {
  const std::vector<ActionId> valid = valid_actions(s, q.game());
  if (cfg.exploration == ExplorationMode::kGreedyOnly) return greedy_action(q.row(s), valid);
  return softmax_sample(q.row(s), valid, q.temperature(s), rng);
}

IterationResult observe_step(QTable& q, const GameState& s, int cs, ActionId action,
                             Outcome outcome, double engagement, const TrainingConfig& cfg,
                             const RewardSpec& reward) {
  const ActionEffect effect = apply_action(s, action, q.game());
  const GameState next{effect.level, effect.feedback, cs};
  const int re = activity_result(next.level, outcome);
  const double r = compute_reward(reward, re, engagement);

  const double old = q.value(s, action);
  q.set_value(s, action, old + cfg.learning_rate * (r + cfg.discount * q.max_value(next) - old));
  const int next_score = current_score(next.level, outcome);
  q.record_visit(s, cfg);

  IterationResult out;
  out.next_state = next;
  out.next_score = next_score;
  out.record = StepRecord{s, action, next, outcome, re, engagement, r, next_score};
  return out;
}

IterationResult q_iteration(const UserResponseModel& model, QTable& q, const GameState& s, int cs,
                            const TrainingConfig& cfg, const RewardSpec& reward, Rng& rng) {
  const ActionId action = choose_action(q, s, cfg, rng);
  const ActionEffect effect = apply_action(s, action, q.game());
  const GameState next{effect.level, effect.feedback, cs};

  const double p = model.success_probability(next);
  // u in (0, 1], so p = 0 never succeeds and p = 1 always does.
  const double u = 1.0 - rng.uniform();
  const Outcome outcome = p >= u ? Outcome::kSuccess : Outcome::kFailure;
  const double e = model.engagement(next, outcome);
  return observe_step(q, s, cs, action, outcome, e, cfg, reward);
}

SessionResult run_session(const UserResponseModel& model, QTable& q, const TrainingConfig& cfg,
                          const RewardSpec& reward, Rng& rng) {
  SessionResult result;
  result.steps.reserve(static_cast<std::size_t>(cfg.session_length));
  GameState s = initial_state(q.game());
  int cs = 0;
  double engagement_sum = 0.0;
  for (int t = 0; t < cfg.session_length; ++t) {
    IterationResult it = q_iteration(model, q, s, cs, cfg, reward, rng);
    result.accumulated_score += it.next_score;
    result.total_reward += it.record.reward;
    engagement_sum += it.record.engagement;
    s = it.next_state;
    cs = it.next_score;
    result.steps.push_back(it.record);
  }
  result.mean_engagement = engagement_sum / cfg.session_length;
  return result;
}

TrainingResult train_policy(const UserResponseModel& model, const GameConfig& game,
                            const TrainingConfig& cfg, const RewardSpec& reward, Rng& rng,
                            const QTable* initial_q) {
  game.validate();
  cfg.validate();
  reward.validate();
  TrainingResult result{initial_q != nullptr ? *initial_q : QTable(game, cfg.initial_temperature),
                        {}};
  if (result.q.num_levels() != game.num_levels) {
    throw ValidationError("train_policy: initial Q-table has a different number of levels");
  }
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double score = 0.0;
    double engagement = 0.0;
    double reward_sum = 0.0;
    for (int k = 0; k < cfg.sessions_per_epoch; ++k) {
      const SessionResult session = run_session(model, result.q, cfg, reward, rng);
      score += session.accumulated_score;
      engagement += session.mean_engagement;
      reward_sum += session.total_reward;
    }
    const double n = cfg.sessions_per_epoch;
    result.epochs.push_back(EpochMetrics{epoch, score / n, engagement / n, reward_sum / n});
  }
  return result;
}

Policy::Policy(const GameConfig& game)
    : indexer_(game.num_levels), actions_(indexer_.size(), ActionId{1}) {}

Policy greedy_policy(const QTable& q) {
  Policy policy(q.game());
  const StateIndexer& idx = q.indexer();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const GameState s = idx.state(i);
    if (s.level == 0 && (s.feedback != Feedback::kNone || s.previous_score != 0)) continue;
    const std::vector<ActionId> valid = valid_actions(s, q.game());
    policy.set_action(s, greedy_action(q.row(s), valid));
  }
  return policy;
}

std::size_t select_transfer_policy(std::span<const TrainingResult> runs) {
  if (runs.empty()) throw ValidationError("select_transfer_policy: no pretraining runs");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].epochs.empty()) {
      throw ValidationError("select_transfer_policy: run " + std::to_string(i) + " has no epochs");
    }
    const double score = runs[i].epochs.back().mean_score;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace adaptrl
