#pragma once

#include <string>

#include <Eigen/Core>

namespace lcdet::kalman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const MatrixXd& m);

// Throws Error(numeric) naming `what` and the offending eigenvalue when the
// matrix is not positive semi-definite within `tolerance`.
void require_psd(const MatrixXd& m, const std::string& what,
                 double tolerance = 1e-9);

// Predicted covariance F P Fᵀ + G Q Gᵀ, explicitly symmetrized.
MatrixXd predict_covariance(const MatrixXd& p, const MatrixXd& f,
                            const MatrixXd& g, const MatrixXd& q);

struct UpdateResult {
  VectorXd correction;   // K * innovation
  MatrixXd covariance;   // (I - K H) P, symmetrized
  MatrixXd gain;
};

// Measurement update. Throws Error(numeric) carrying the condition number
// when the innovation covariance H P Hᵀ + R is not invertible.
UpdateResult update(const MatrixXd& p, const MatrixXd& h, const MatrixXd& r,
                    const VectorXd& innovation);

}  // namespace lcdet::kalman
