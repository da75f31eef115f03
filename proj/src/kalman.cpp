#include "lcdet/kalman.hpp"

#include <sstream>

#include <Eigen/Dense>

#include "lcdet/error.hpp"

namespace lcdet::kalman {

double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_psd(const MatrixXd& m, const std::string& what, double tolerance) {
  const double lambda_min = min_eigenvalue(m);
  if (!(lambda_min >= -tolerance)) {
    std::ostringstream os;
    os << what << " is not positive semi-definite: min eigenvalue "
       << lambda_min;
    fail(ErrorCode::numeric, os.str());
  }
}

MatrixXd predict_covariance(const MatrixXd& p, const MatrixXd& f,
                            const MatrixXd& g, const MatrixXd& q) {
  MatrixXd out = f * p * f.transpose() + g * q * g.transpose();
  return 0.5 * (out + out.transpose());
}

UpdateResult update(const MatrixXd& p, const MatrixXd& h, const MatrixXd& r,
                    const VectorXd& innovation) {
  MatrixXd s = h * p * h.transpose() + r;
  s = 0.5 * (s + s.transpose());

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  const double lambda_min = es.eigenvalues().minCoeff();
  const double lambda_max = es.eigenvalues().maxCoeff();
  const double condition =
      lambda_min > 0.0 ? lambda_max / lambda_min
                       : std::numeric_limits<double>::infinity();
  if (!(lambda_min > 0.0) || condition > 1e12) {
    std::ostringstream os;
    os << "innovation covariance is not invertible: condition number "
       << condition;
    fail(ErrorCode::numeric, os.str());
  }

  UpdateResult out;
  // K = P Hᵀ S⁻¹, solved as Sᵀ Kᵀ = H Pᵀ.
  out.gain = s.ldlt().solve(h * p).transpose();
  out.correction = out.gain * innovation;
  const MatrixXd identity = MatrixXd::Identity(p.rows(), p.cols());
  MatrixXd cov = (identity - out.gain * h) * p;
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

}  // namespace lcdet::kalman
