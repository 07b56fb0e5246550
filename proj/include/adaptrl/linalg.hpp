#pragma once

#include <Eigen/Dense>

namespace adaptrl {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // column i pairs with values(i)
  int sweeps = 0;
};

// Cyclic Jacobi rotations on a symmetric matrix. Stops once the off-diagonal
// Frobenius norm falls below tolerance times the matrix Frobenius norm.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, double tolerance = 1e-12,
                            int max_sweeps = 100);

}  // namespace adaptrl
