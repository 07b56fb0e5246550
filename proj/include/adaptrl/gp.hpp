#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace adaptrl {

// Smallest admissible noise variance.
inline constexpr double kNoiseFloor = 1e-10;

// Anisotropic squared-exponential kernel plus white noise:
//   k(x, x') = signal_variance * exp(-0.5 * sum_d ((x_d - x'_d) / length_scale_d)^2)
//              + noise_variance * [x == x' as training indices]
struct GpHyperparameters {
  std::vector<double> length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;

  void validate(std::size_t dimension) const;
};

// Isotropic search grid: each length scale is shared by every input dimension.
struct GpGrid {
  std::vector<double> length_scales{0.1, 0.2, 0.5, 1.0, 2.0};
  std::vector<double> signal_variances{0.25, 1.0, 4.0};
  std::vector<double> noise_variances{1e-4, 1e-2, 1e-1};

  void validate() const;
};

// Zero-mean GP regressor with a cached Cholesky factorization. Immutable after
// construction, so concurrent predictions are safe.
class GaussianProcess {
 public:
  // Inputs must lie in [0, 1] per dimension. Throws NumericalError if the
  // kernel matrix stays non-positive-definite after jitter escalation.
  GaussianProcess(std::vector<std::vector<double>> inputs, std::vector<double> targets,
                  GpHyperparameters hyperparameters);

  // Grid search over hyperparameters by log marginal likelihood. Ties keep
  // the first grid point in (length scale, signal, noise) loop order.
  static GaussianProcess fit(std::vector<std::vector<double>> inputs, std::vector<double> targets,
                             const GpGrid& grid = {});

  double mean(std::span<const double> x) const;
  double variance(std::span<const double> x) const;
  double log_marginal_likelihood() const { return log_marginal_likelihood_; }

  const std::vector<std::vector<double>>& inputs() const { return inputs_; }
  const std::vector<double>& targets() const { return targets_; }
  const GpHyperparameters& hyperparameters() const { return hyperparameters_; }
  // Extra diagonal term added during factorization (0 when none was needed).
  double jitter() const { return jitter_; }
  std::size_t dimension() const { return dimension_; }

 private:
  double kernel(std::span<const double> a, std::span<const double> b) const;

  std::vector<std::vector<double>> inputs_;
  std::vector<double> targets_;
  GpHyperparameters hyperparameters_;
  std::size_t dimension_ = 0;
  std::vector<double> inverse_sq_length_;
  Eigen::LLT<Eigen::MatrixXd> cholesky_;
  Eigen::VectorXd weights_;  // (K + noise I)^-1 y
  double jitter_ = 0.0;
  double log_marginal_likelihood_ = 0.0;
};

// Log marginal likelihood for the given data and hyperparameters, using the
// same jitter escalation as the constructor.
double log_marginal_likelihood(const std::vector<std::vector<double>>& inputs,
                               const std::vector<double>& targets,
                               const GpHyperparameters& hyperparameters);

}  // namespace adaptrl
