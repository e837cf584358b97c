#include "mfgp/linalg.hpp"

#include <cmath>
#include <numbers>

#include "mfgp/errors.hpp"

namespace mfgp {

double JitteredCholesky::log_determinant() const {
  const auto& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
  return 2.0 * log_det;
}

JitteredCholesky factorize_with_jitter(const Eigen::MatrixXd& k) {
  if (k.rows() != k.cols() || k.rows() == 0)
    throw NumericalError("covariance matrix must be square and non-empty");
  const double mean_diag = k.diagonal().mean();
  if (!std::isfinite(mean_diag) || mean_diag <= 0.0)
    throw NumericalError("covariance diagonal is not positive and finite");

  const double max_jitter = 1e-4 * mean_diag;
  JitteredCholesky out;
  for (double jitter = 1e-10 * mean_diag; jitter <= max_jitter * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd shifted = k;
    shifted.diagonal().array() += jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError("Cholesky factorization failed after jitter escalation");
}

double negative_log_marginal(const JitteredCholesky& factor, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  const Eigen::VectorXd alpha = factor.solve(y);
  return 0.5 * y.dot(alpha) + 0.5 * factor.log_determinant() +
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace mfgp
