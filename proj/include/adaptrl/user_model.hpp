#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "adaptrl/gp.hpp"
#include "adaptrl/rng.hpp"
#include "adaptrl/session_log.hpp"
#include "adaptrl/user_response.hpp"

namespace adaptrl {

// Per-level success probabilities followed by per-level mean engagement.
struct UserVector {
  std::vector<double> success;
  std::vector<double> engagement;

  std::vector<double> flatten() const;
};

// Throws InsufficientDataError naming the first level without attempts (or
// without any focus-period engagement data).
UserVector build_user_vector(std::span<const SessionLog> logs, const GameConfig& cfg);

using Point2 = std::array<double, 2>;

struct PcaProjection {
  std::vector<double> mean;
  std::array<std::vector<double>, 2> axes;  // unit principal axes
  std::array<double, 2> eigenvalues{};      // descending
  double total_variance = 0.0;              // trace of the sample covariance

  Point2 project(std::span<const double> x) const;
};

struct PcaResult {
  std::vector<Point2> points;
  PcaProjection projection;
};

// Projects onto the top two eigenvectors of the sample covariance (cyclic
// Jacobi). Each axis is signed so its largest-magnitude component is positive.
PcaResult pca_project(std::span<const UserVector> vectors);
PcaResult pca_project(std::span<const std::vector<double>> rows);

struct KMeansResult {
  std::vector<int> labels;  // 0-based cluster index per point
  std::vector<Point2> centroids;
  double inertia = 0.0;
  int best_restart = 0;
  // Inertia after each assignment step of the winning restart.
  std::vector<double> inertia_history;
};

// k-means++ seeding and Lloyd iterations until no centroid moves by 1e-9 or
// more; best of `restarts` by inertia, ties to the lowest restart.
KMeansResult kmeans_cluster(std::span<const Point2> points, int num_clusters, int restarts,
                            Rng& rng);

double rand_index(std::span<const int> a, std::span<const int> b);

// Discrete state components scaled to [0, 1]: L/l, F/2, (PS+l)/(2l), (O+1)/2.
std::array<double, 3> encode_performance_input(const GameState& s, int num_levels);
std::array<double, 4> encode_engagement_input(const GameState& s, Outcome o, int num_levels);

// Performance GP over (L, F, PS) and engagement GP over (L, F, PS, O) for one
// user cluster.
class UserModel final : public UserResponseModel {
 public:
  UserModel(GaussianProcess performance, GaussianProcess engagement, int cluster_id,
            int num_levels);

  // Posterior mean clamped to [0, 1].
  double predict_success(const GameState& s) const;
  // Posterior mean clamped to [-1, 1].
  double predict_engagement(const GameState& s, Outcome o) const;

  double success_probability(const GameState& s) const override { return predict_success(s); }
  double engagement(const GameState& s, Outcome o) const override {
    return predict_engagement(s, o);
  }

  const GaussianProcess& performance() const { return performance_; }
  const GaussianProcess& engagement_gp() const { return engagement_; }
  int cluster_id() const { return cluster_id_; }
  int num_levels() const { return num_levels_; }

 private:
  GaussianProcess performance_;
  GaussianProcess engagement_;
  int cluster_id_;
  int num_levels_;
};

struct UserModelingOptions {
  int num_clusters = 2;
  int kmeans_restarts = 10;
  GpGrid grid;
};

struct UserModelFit {
  std::vector<std::string> user_ids;  // sorted
  std::vector<UserVector> vectors;
  PcaResult pca;
  KMeansResult kmeans;
  // 1-based cluster id per user. Clusters are numbered by decreasing size,
  // then by increasing first principal coordinate of the centroid.
  std::vector<int> cluster_ids;
  std::vector<Point2> centroids;  // indexed by cluster id - 1
  std::vector<UserModel> models;  // models[k] has cluster_id k + 1
};

// Builds user vectors, projects them, clusters, and fits one pair of GPs per
// cluster on the pooled sequence records of its members.
UserModelFit fit_user_models(std::span<const SessionLog> logs, const GameConfig& cfg,
                             const UserModelingOptions& options, Rng& rng);

// Training pairs for one cluster's GPs, exposed for tests.
struct GpTrainingData {
  std::vector<std::vector<double>> performance_inputs;
  std::vector<double> performance_targets;  // 0 or 1
  std::vector<std::vector<double>> engagement_inputs;
  std::vector<double> engagement_targets;
};
GpTrainingData collect_training_data(std::span<const SessionLog> logs, const GameConfig& cfg);

}  // namespace adaptrl
