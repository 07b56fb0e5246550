#include "adaptrl/user_response.hpp"

#include <algorithm>

namespace adaptrl {

TabularResponseModel::TabularResponseModel(const GameConfig& cfg)
    : indexer_(cfg.num_levels),
      success_(indexer_.size(), 0.0),
      engagement_failure_(indexer_.size(), 0.0),
      engagement_success_(indexer_.size(), 0.0) {}

TabularResponseModel TabularResponseModel::from_functions(const GameConfig& cfg,
                                                          const SuccessFn& success,
                                                          const EngagementFn& engagement) {
  TabularResponseModel table(cfg);
  for (std::size_t i = 0; i < table.indexer_.size(); ++i) {
    const GameState s = table.indexer_.state(i);
    if (s.is_initial()) continue;
    table.set_success(s, success(s));
    table.set_engagement(s, Outcome::kFailure, engagement(s, Outcome::kFailure));
    table.set_engagement(s, Outcome::kSuccess, engagement(s, Outcome::kSuccess));
  }
  return table;
}

TabularResponseModel TabularResponseModel::tabulate(const UserResponseModel& model,
                                                    const GameConfig& cfg) {
  return from_functions(
      cfg, [&](const GameState& s) { return model.success_probability(s); },
      [&](const GameState& s, Outcome o) { return model.engagement(s, o); });
}

void TabularResponseModel::set_success(const GameState& s, double p) {
  success_[indexer_.index(s)] = std::clamp(p, 0.0, 1.0);
}

void TabularResponseModel::set_engagement(const GameState& s, Outcome o, double e) {
  auto& table = o == Outcome::kSuccess ? engagement_success_ : engagement_failure_;
  table[indexer_.index(s)] = std::clamp(e, -1.0, 1.0);
}

double TabularResponseModel::success_probability(const GameState& s) const {
  return success_[indexer_.index(s)];
}

double TabularResponseModel::engagement(const GameState& s, Outcome o) const {
  const auto& table = o == Outcome::kSuccess ? engagement_success_ : engagement_failure_;
  return table[indexer_.index(s)];
}

}  // namespace adaptrl
