#include "adaptrl/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "adaptrl/errors.hpp"

namespace adaptrl {

namespace {

constexpr std::array<double, 6> kJitterSteps{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

void check_data(const std::vector<std::vector<double>>& inputs, const std::vector<double>& targets) {
  if (inputs.size() < 2) throw ValidationError("gp: need at least 2 observations");
  if (inputs.size() != targets.size()) {
    throw ValidationError("gp: inputs and targets differ in length");
  }
  const std::size_t dim = inputs.front().size();
  if (dim == 0) throw ValidationError("gp: inputs must have at least one dimension");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != dim) throw ValidationError("gp: ragged input vectors");
    for (double v : inputs[i]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("gp: input " + std::to_string(i) + " is not normalized to [0, 1]");
      }
    }
    if (!std::isfinite(targets[i])) throw ValidationError("gp: non-finite target");
  }
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> cholesky;
  Eigen::VectorXd weights;
  double jitter = 0.0;
  double log_marginal_likelihood = 0.0;
};

Factorization factorize(const std::vector<std::vector<double>>& inputs,
                        const std::vector<double>& targets, const GpHyperparameters& hp) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  const std::size_t dim = inputs.front().size();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = (inputs[static_cast<std::size_t>(i)][d] -
                             inputs[static_cast<std::size_t>(j)][d]) /
                            hp.length_scales[d];
        r2 += diff * diff;
      }
      k(i, j) = k(j, i) = hp.signal_variance * std::exp(-0.5 * r2);
    }
  }
  k.diagonal().array() += hp.noise_variance;
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);

  for (double jitter : kJitterSteps) {
    Factorization f;
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    f.cholesky.compute(kj);
    if (f.cholesky.info() != Eigen::Success) continue;
    const Eigen::MatrixXd& l = f.cholesky.matrixLLT();
    bool positive = true;
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
        positive = false;
        break;
      }
      log_det_half += std::log(l(i, i));
    }
    if (!positive) continue;
    f.weights = f.cholesky.solve(y);
    f.jitter = jitter;
    f.log_marginal_likelihood = -0.5 * y.dot(f.weights) - log_det_half -
                                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return f;
  }
  throw NumericalError("gp: kernel matrix is singular after jitter escalation");
}

}  // namespace

void GpHyperparameters::validate(std::size_t dimension) const {
  if (length_scales.size() != dimension) {
    throw ValidationError("gp: expected " + std::to_string(dimension) + " length scales");
  }
  for (double ls : length_scales) {
    if (!(ls > 0.0) || !std::isfinite(ls)) throw ValidationError("gp: length scales must be > 0");
  }
  if (!(signal_variance > 0.0)) throw ValidationError("gp: signal variance must be > 0");
  if (!(noise_variance >= kNoiseFloor)) {
    throw ValidationError("gp: noise variance below the floor");
  }
}

void GpGrid::validate() const {
  if (length_scales.empty() || signal_variances.empty() || noise_variances.empty()) {
    throw ValidationError("gp grid: every axis needs at least one value");
  }
}

GaussianProcess::GaussianProcess(std::vector<std::vector<double>> inputs,
                                 std::vector<double> targets, GpHyperparameters hyperparameters)
    : inputs_(std::move(inputs)),
      targets_(std::move(targets)),
      hyperparameters_(std::move(hyperparameters)) {
  check_data(inputs_, targets_);
  dimension_ = inputs_.front().size();
  hyperparameters_.validate(dimension_);
  for (double ls : hyperparameters_.length_scales) inverse_sq_length_.push_back(1.0 / (ls * ls));

  Factorization f = factorize(inputs_, targets_, hyperparameters_);
  cholesky_ = std::move(f.cholesky);
  weights_ = std::move(f.weights);
  jitter_ = f.jitter;
  log_marginal_likelihood_ = f.log_marginal_likelihood;
}

GaussianProcess GaussianProcess::fit(std::vector<std::vector<double>> inputs,
                                     std::vector<double> targets, const GpGrid& grid) {
  check_data(inputs, targets);
  grid.validate();
  const std::size_t dim = inputs.front().size();
  GpHyperparameters best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double ls : grid.length_scales) {
    for (double sv : grid.signal_variances) {
      for (double nv : grid.noise_variances) {
        GpHyperparameters hp{std::vector<double>(dim, ls), sv, nv};
        hp.validate(dim);
        double lml;
        try {
          lml = adaptrl::log_marginal_likelihood(inputs, targets, hp);
        } catch (const NumericalError&) {
          continue;
        }
        if (!found || lml > best_lml) {
          best = hp;
          best_lml = lml;
          found = true;
        }
      }
    }
  }
  if (!found) throw NumericalError("gp: no grid point gave a positive-definite kernel");
  return GaussianProcess(std::move(inputs), std::move(targets), std::move(best));
}

double GaussianProcess::kernel(std::span<const double> a, std::span<const double> b) const {
  double r2 = 0.0;
  for (std::size_t d = 0; d < dimension_; ++d) {
    const double diff = a[d] - b[d];
    r2 += diff * diff * inverse_sq_length_[d];
  }
  return hyperparameters_.signal_variance * std::exp(-0.5 * r2);
}

double GaussianProcess::mean(std::span<const double> x) const {
  if (x.size() != dimension_) throw ValidationError("gp: query has the wrong dimension");
  double sum = 0.0;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    sum += kernel(x, inputs_[i]) * weights_(static_cast<Eigen::Index>(i));
  }
  return sum;
}

double GaussianProcess::variance(std::span<const double> x) const {
  if (x.size() != dimension_) throw ValidationError("gp: query has the wrong dimension");
  Eigen::VectorXd k_star(static_cast<Eigen::Index>(inputs_.size()));
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    k_star(static_cast<Eigen::Index>(i)) = kernel(x, inputs_[i]);
  }
  const Eigen::VectorXd v = cholesky_.matrixL().solve(k_star);
  return std::max(0.0, hyperparameters_.signal_variance - v.squaredNorm());
}

double log_marginal_likelihood(const std::vector<std::vector<double>>& inputs,
                               const std::vector<double>& targets,
                               const GpHyperparameters& hyperparameters) {
  check_data(inputs, targets);
  hyperparameters.validate(inputs.front().size());
  return factorize(inputs, targets, hyperparameters).log_marginal_likelihood;
}

}  // namespace adaptrl
