#include "adaptrl/user_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "adaptrl/errors.hpp"
#include "adaptrl/linalg.hpp"

namespace adaptrl {

std::vector<double> UserVector::flatten() const {
  std::vector<double> out(success);
  out.insert(out.end(), engagement.begin(), engagement.end());
  return out;
}

UserVector build_user_vector(std::span<const SessionLog> logs, const GameConfig& cfg) {
  const auto l = static_cast<std::size_t>(cfg.num_levels);
  std::vector<int> attempts(l, 0), successes(l, 0), engaged(l, 0);
  std::vector<double> engagement_sum(l, 0.0);
  for (const auto& log : logs) {
    for (const auto& r : log.sequences) {
      if (r.level < 1 || r.level > cfg.num_levels) {
        throw ValidationError("user vector: level " + std::to_string(r.level) + " out of range");
      }
      const auto i = static_cast<std::size_t>(r.level - 1);
      ++attempts[i];
      if (r.outcome == Outcome::kSuccess) ++successes[i];
      if (auto e = sequence_engagement(r)) {
        engagement_sum[i] += *e;
        ++engaged[i];
      }
    }
  }
  UserVector v;
  for (std::size_t i = 0; i < l; ++i) {
    if (attempts[i] == 0) {
      throw InsufficientDataError("user vector: no attempts at level " + std::to_string(i + 1));
    }
    if (engaged[i] == 0) {
      throw InsufficientDataError("user vector: no engagement data at level " +
                                  std::to_string(i + 1));
    }
    v.success.push_back(static_cast<double>(successes[i]) / attempts[i]);
    v.engagement.push_back(engagement_sum[i] / engaged[i]);
  }
  return v;
}

Point2 PcaProjection::project(std::span<const double> x) const {
  Point2 p{0.0, 0.0};
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double centered = x[d] - mean[d];
    p[0] += centered * axes[0][d];
    p[1] += centered * axes[1][d];
  }
  return p;
}

PcaResult pca_project(std::span<const UserVector> vectors) {
  std::vector<std::vector<double>> rows;
  rows.reserve(vectors.size());
  for (const auto& v : vectors) rows.push_back(v.flatten());
  return pca_project(rows);
}

PcaResult pca_project(std::span<const std::vector<double>> rows) {
  if (rows.size() < 3) throw ValidationError("pca: need at least 3 users");
  const std::size_t dim = rows.front().size();
  if (dim < 2) throw ValidationError("pca: need at least 2 dimensions");
  for (const auto& r : rows) {
    if (r.size() != dim) throw ValidationError("pca: vectors differ in dimension");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd data(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd covariance = centered.transpose() * centered / static_cast<double>(n - 1);
  const SymmetricEigen eig = jacobi_eigen(covariance);

  PcaResult result;
  PcaProjection& proj = result.projection;
  proj.mean.assign(mean.data(), mean.data() + d);
  proj.total_variance = covariance.trace();
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd axis = eig.vectors.col(k);
    Eigen::Index largest = 0;
    for (Eigen::Index j = 1; j < d; ++j) {
      if (std::abs(axis(j)) > std::abs(axis(largest))) largest = j;
    }
    if (axis(largest) < 0) axis = -axis;
    proj.axes[static_cast<std::size_t>(k)].assign(axis.data(), axis.data() + d);
    proj.eigenvalues[static_cast<std::size_t>(k)] = eig.values(k);
  }
  result.points.reserve(rows.size());
  for (const auto& r : rows) result.points.push_back(proj.project(r));
  return result;
}

namespace {

double squared_distance(const Point2& a, const Point2& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

struct LloydRun {
  std::vector<int> labels;
  std::vector<Point2> centroids;
  double inertia = 0.0;
  std::vector<double> history;
};

std::vector<Point2> seed_plus_plus(std::span<const Point2> points, int k, Rng& rng) {
  std::vector<Point2> centers;
  centers.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, squared_distance(points[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (u < acc && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(points.size());
    }
    centers.push_back(points[pick]);
  }
  return centers;
}

LloydRun lloyd(std::span<const Point2> points, std::vector<Point2> centroids) {
  constexpr int kMaxIterations = 1000;
  constexpr double kShiftTolerance = 1e-9;
  LloydRun run;
  run.labels.assign(points.size(), 0);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      int best = 0;
      double best_d = squared_distance(points[i], centroids[0]);
      for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double dist = squared_distance(points[i], centroids[c]);
        if (dist < best_d) {
          best_d = dist;
          best = static_cast<int>(c);
        }
      }
      run.labels[i] = best;
      inertia += best_d;
    }
    run.history.push_back(inertia);
    run.inertia = inertia;

    std::vector<Point2> sums(centroids.size(), Point2{0.0, 0.0});
    std::vector<int> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = static_cast<std::size_t>(run.labels[i]);
      sums[c][0] += points[i][0];
      sums[c][1] += points[i][1];
      ++counts[c];
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      const Point2 next{sums[c][0] / counts[c], sums[c][1] / counts[c]};
      max_shift = std::max(max_shift, std::sqrt(squared_distance(next, centroids[c])));
      centroids[c] = next;
    }
    if (max_shift < kShiftTolerance) break;
  }
  // Final inertia against the converged centroids.
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    inertia += squared_distance(points[i], centroids[static_cast<std::size_t>(run.labels[i])]);
  }
  run.inertia = inertia;
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

KMeansResult kmeans_cluster(std::span<const Point2> points, int num_clusters, int restarts,
                            Rng& rng) {
  if (num_clusters < 1) throw ValidationError("kmeans: need at least one cluster");
  if (static_cast<std::size_t>(num_clusters) > points.size()) {
    throw ValidationError("kmeans: more clusters than points");
  }
  if (restarts < 1) throw ValidationError("kmeans: need at least one restart");
  KMeansResult best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    LloydRun run = lloyd(points, seed_plus_plus(points, num_clusters, rng));
    if (!have || run.inertia < best.inertia) {
      best.labels = std::move(run.labels);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
      best.inertia_history = std::move(run.history);
      best.best_restart = r;
      have = true;
    }
  }
  return best;
}

double rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("rand_index: label lists differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::size_t agree = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
      ++pairs;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

std::array<double, 3> encode_performance_input(const GameState& s, int num_levels) {
  const double l = num_levels;
  return {s.level / l, to_int(s.feedback) / 2.0, (s.previous_score + l) / (2.0 * l)};
}

std::array<double, 4> encode_engagement_input(const GameState& s, Outcome o, int num_levels) {
  const auto p = encode_performance_input(s, num_levels);
  return {p[0], p[1], p[2], (to_int(o) + 1) / 2.0};
}

UserModel::UserModel(GaussianProcess performance, GaussianProcess engagement, int cluster_id,
                     int num_levels)
    : performance_(std::move(performance)),
      engagement_(std::move(engagement)),
      cluster_id_(cluster_id),
      num_levels_(num_levels) {
  if (performance_.dimension() != 3 || engagement_.dimension() != 4) {
    throw ValidationError("user model: GP input dimensions must be 3 and 4");
  }
}

double UserModel::predict_success(const GameState& s) const {
  const auto x = encode_performance_input(s, num_levels_);
  return std::clamp(performance_.mean(x), 0.0, 1.0);
}

double UserModel::predict_engagement(const GameState& s, Outcome o) const {
  const auto x = encode_engagement_input(s, o, num_levels_);
  return std::clamp(engagement_.mean(x), -1.0, 1.0);
}

GpTrainingData collect_training_data(std::span<const SessionLog> logs, const GameConfig& cfg) {
  GpTrainingData data;
  for (const auto& log : logs) {
    const std::vector<GameState> states = played_states(log);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const SequenceRecord& r = log.sequences[i];
      const auto xp = encode_performance_input(states[i], cfg.num_levels);
      data.performance_inputs.emplace_back(xp.begin(), xp.end());
      data.performance_targets.push_back(r.outcome == Outcome::kSuccess ? 1.0 : 0.0);
      if (auto e = sequence_engagement(r)) {
        const auto xe = encode_engagement_input(states[i], r.outcome, cfg.num_levels);
        data.engagement_inputs.emplace_back(xe.begin(), xe.end());
        data.engagement_targets.push_back(*e);
      }
    }
  }
  return data;
}

UserModelFit fit_user_models(std::span<const SessionLog> logs, const GameConfig& cfg,
                             const UserModelingOptions& options, Rng& rng) {
  cfg.validate();
  std::map<std::string, std::vector<SessionLog>> by_user;
  for (const auto& log : logs) {
    validate_session(log, &cfg);
    by_user[log.user_id].push_back(log);
  }
  if (static_cast<int>(by_user.size()) < options.num_clusters) {
    throw ValidationError("fit_user_models: fewer users than clusters");
  }

  UserModelFit fit;
  for (const auto& [user, user_logs] : by_user) {
    fit.user_ids.push_back(user);
    fit.vectors.push_back(build_user_vector(user_logs, cfg));
  }
  fit.pca = pca_project(fit.vectors);
  fit.kmeans = kmeans_cluster(fit.pca.points, options.num_clusters, options.kmeans_restarts, rng);

  const auto c = static_cast<std::size_t>(options.num_clusters);
  std::vector<int> sizes(c, 0);
  for (int label : fit.kmeans.labels) ++sizes[static_cast<std::size_t>(label)];
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return fit.kmeans.centroids[a][0] < fit.kmeans.centroids[b][0];
  });
  std::vector<int> id_of(c);
  for (std::size_t rank = 0; rank < c; ++rank) id_of[order[rank]] = static_cast<int>(rank) + 1;
  for (int label : fit.kmeans.labels) fit.cluster_ids.push_back(id_of[static_cast<std::size_t>(label)]);
  fit.centroids.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    fit.centroids[static_cast<std::size_t>(id_of[k] - 1)] = fit.kmeans.centroids[k];
  }

  for (int id = 1; id <= options.num_clusters; ++id) {
    std::vector<SessionLog> members;
    for (std::size_t u = 0; u < fit.user_ids.size(); ++u) {
      if (fit.cluster_ids[u] != id) continue;
      const auto& user_logs = by_user.at(fit.user_ids[u]);
      members.insert(members.end(), user_logs.begin(), user_logs.end());
    }
    GpTrainingData data = collect_training_data(members, cfg);
    if (data.performance_targets.size() < 2 || data.engagement_targets.size() < 2) {
      throw InsufficientDataError("cluster " + std::to_string(id) +
                                  " has too few sequences to fit a user model");
    }
    GaussianProcess performance = GaussianProcess::fit(std::move(data.performance_inputs),
                                                       std::move(data.performance_targets),
                                                       options.grid);
    GaussianProcess engagement = GaussianProcess::fit(std::move(data.engagement_inputs),
                                                      std::move(data.engagement_targets),
                                                      options.grid);
    fit.models.emplace_back(std::move(performance), std::move(engagement), id, cfg.num_levels);
  }
  return fit;
}

}  // namespace adaptrl
