#include "adaptrl/engagement.hpp"

#include <cmath>
#include <string>

#include "adaptrl/errors.hpp"

namespace adaptrl {

void EngagementSeries::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].value != 1 && samples[i].value != -1) {
      throw ValidationError("engagement sample " + std::to_string(i) + " has value " +
                            std::to_string(samples[i].value) + ", expected -1 or 1");
    }
    if (!std::isfinite(samples[i].timestamp)) {
      throw ValidationError("engagement sample " + std::to_string(i) + " has a non-finite timestamp");
    }
    if (i > 0 && samples[i].timestamp < samples[i - 1].timestamp) {
      throw ValidationError("engagement timestamps must be non-decreasing");
    }
  }
  for (std::size_t i = 0; i < focus_periods.size(); ++i) {
    if (!(focus_periods[i].start <= focus_periods[i].end)) {
      throw ValidationError("focus period " + std::to_string(i) + " ends before it starts");
    }
    if (i > 0 && focus_periods[i].start < focus_periods[i - 1].end) {
      throw ValidationError("focus periods must be ordered and disjoint");
    }
  }
}

ExpectedEngagement expected_per_second(const EngagementSeries& series) {
  std::map<long, std::pair<double, long>> sums;
  for (const auto& sample : series.samples) {
    auto& [sum, count] = sums[static_cast<long>(std::floor(sample.timestamp))];
    sum += sample.value;
    ++count;
  }
  ExpectedEngagement out;
  for (const auto& [second, acc] : sums) {
    out.emplace_hint(out.end(), second, acc.first / static_cast<double>(acc.second));
  }
  return out;
}

double mean_engagement(const ExpectedEngagement& expected, std::span<const Interval> periods) {
  double sum = 0.0;
  long count = 0;
  for (const auto& [second, value] : expected) {
    const double t = static_cast<double>(second);
    for (const auto& period : periods) {
      if (period.contains(t)) {
        sum += value;
        ++count;
        break;
      }
    }
  }
  if (count == 0) {
    throw InsufficientDataError("no engagement data inside the focus periods");
  }
  return sum / static_cast<double>(count);
}

}  // namespace adaptrl
