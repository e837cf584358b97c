#pragma once

#include <Eigen/Dense>

namespace mfgp {

/// Cholesky factor of a covariance matrix together with the diagonal jitter
/// that had to be added to make it factorizable.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  // log |K + jitter I|
  double log_determinant() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }
};

/// Factorizes K + jitter*I. Jitter starts at 1e-10 * mean(diag K) and grows
/// tenfold per failed attempt; throws NumericalError past 1e-4 * mean(diag K).
JitteredCholesky factorize_with_jitter(const Eigen::MatrixXd& k);

/// 0.5 y' K^-1 y + 0.5 log|K| + (n/2) log(2 pi) for a factored K.
double negative_log_marginal(const JitteredCholesky& factor, const Eigen::VectorXd& y);

}  // namespace mfgp
