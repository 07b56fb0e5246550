#pragma once

#include <functional>
#include <vector>

#include "adaptrl/game.hpp"

namespace adaptrl {

// What the behaviour learner needs from a user model: the probability of
// solving the sequence described by a (non-initial) state, and the expected
// engagement once the outcome is known.
class UserResponseModel {
 public:
  virtual ~UserResponseModel() = default;

  virtual double success_probability(const GameState& s) const = 0;
  virtual double engagement(const GameState& s, Outcome o) const = 0;
};

// Lookup table over every indexable state. Used for hand-set stub models and
// to cache a GP-backed model before running many training iterations.
class TabularResponseModel final : public UserResponseModel {
 public:
  explicit TabularResponseModel(const GameConfig& cfg);

  using SuccessFn = std::function<double(const GameState&)>;
  using EngagementFn = std::function<double(const GameState&, Outcome)>;

  // Evaluates both functions at every non-initial state. Values are clamped
  // to [0, 1] and [-1, 1].
  static TabularResponseModel from_functions(const GameConfig& cfg, const SuccessFn& success,
                                             const EngagementFn& engagement);
  static TabularResponseModel tabulate(const UserResponseModel& model, const GameConfig& cfg);

  void set_success(const GameState& s, double p);
  void set_engagement(const GameState& s, Outcome o, double e);

  double success_probability(const GameState& s) const override;
  double engagement(const GameState& s, Outcome o) const override;

 private:
  StateIndexer indexer_;
  std::vector<double> success_;
  std::vector<double> engagement_failure_;
  std::vector<double> engagement_success_;
};

}  // namespace adaptrl
