#pragma once

#include <map>
#include <span>
#include <vector>

namespace adaptrl {

// One binary classifier output: +1 engaged, -1 disengaged.
struct EngagementSample {
  double timestamp = 0.0;  // seconds since the start of the stream
  int value = 1;

  friend bool operator==(const EngagementSample&, const EngagementSample&) = default;
};

// Half-open [start, end) interval in seconds.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  bool contains(double t) const { return t >= start && t < end; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct EngagementSeries {
  std::vector<EngagementSample> samples;
  std::vector<Interval> focus_periods;

  // Non-decreasing timestamps, values in {-1, 1}, ordered disjoint periods.
  void validate() const;
};

// Integer second -> mean engagement of the samples falling in [t, t+1).
using ExpectedEngagement = std::map<long, double>;

ExpectedEngagement expected_per_second(const EngagementSeries& series);

// Mean of the per-second values whose second start lies in one of periods.
// Throws InsufficientDataError if no second qualifies.
double mean_engagement(const ExpectedEngagement& expected, std::span<const Interval> periods);

}  // namespace adaptrl
