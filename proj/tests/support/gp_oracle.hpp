#pragma once

// Dense GP posterior computed by explicit matrix inversion in long double,
// used as an independent check of the Cholesky-based implementation.

#include <cmath>
#include <numbers>
#include <vector>

#include "adaptrl/gp.hpp"

namespace gp_oracle {

using adaptrl::GpHyperparameters;

using Matrix = std::vector<std::vector<long double>>;
using Points = std::vector<std::vector<double>>;

// Gauss-Jordan inverse with partial pivoting; also returns log|det|.
inline Matrix invert(Matrix a, long double* log_det) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<long double>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0L;
  long double ld = 0.0L;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    std::swap(inv[c], inv[p]);
    const long double d = a[c][c];
    ld += std::log(std::fabs(d));
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const long double f = a[r][c];
      if (f == 0.0L) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  if (log_det) *log_det = ld;
  return inv;
}

inline long double kern(const std::vector<double>& a, const std::vector<double>& b,
                 const GpHyperparameters& hp) {
  long double r2 = 0.0L;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const long double z = (static_cast<long double>(a[d]) - b[d]) / hp.length_scales[d];
    r2 += z * z;
  }
  return hp.signal_variance * std::exp(-0.5L * r2);
}

struct Posterior {
  double mean;
  double variance;
};

struct Oracle {
  Matrix k_inv;
  long double log_det;
  std::vector<long double> alpha;
};

inline Oracle oracle(const Points& x, const std::vector<double>& y, const GpHyperparameters& hp) {
  const std::size_t n = x.size();
  Matrix k(n, std::vector<long double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i][j] = kern(x[i], x[j], hp);
    k[i][i] += hp.noise_variance;
  }
  Oracle o;
  o.k_inv = invert(k, &o.log_det);
  o.alpha.assign(n, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) o.alpha[i] += o.k_inv[i][j] * y[j];
  }
  return o;
}

inline Posterior oracle_posterior(const Points& x, const std::vector<double>& y,
                           const GpHyperparameters& hp, const std::vector<double>& q) {
  const Oracle o = oracle(x, y, hp);
  const std::size_t n = x.size();
  std::vector<long double> ks(n);
  for (std::size_t i = 0; i < n; ++i) ks[i] = kern(q, x[i], hp);
  long double m = 0.0L, quad = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    m += ks[i] * o.alpha[i];
    for (std::size_t j = 0; j < n; ++j) quad += ks[i] * o.k_inv[i][j] * ks[j];
  }
  return {static_cast<double>(m), static_cast<double>(hp.signal_variance - quad)};
}

inline double oracle_lml(const Points& x, const std::vector<double>& y, const GpHyperparameters& hp) {
  const Oracle o = oracle(x, y, hp);
  long double fit = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) fit += y[i] * o.alpha[i];
  return static_cast<double>(-0.5L * fit - 0.5L * o.log_det -
                             0.5L * x.size() * std::log(2.0L * std::numbers::pi_v<long double>));
}

}  // namespace gp_oracle
