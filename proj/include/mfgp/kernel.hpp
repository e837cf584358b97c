#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mfgp {

/// Squared-exponential kernel hyperparameters: output variance and lengthscale.
struct SeKernelParams {
  double variance = 1.0;
  double lengthscale = 1.0;

  // Throws std::invalid_argument unless both are strictly positive and finite.
  void validate() const;
};

/// sigma^2 * exp(-(x - x')^2 / (2 l^2))
double se_kernel(double x, double x_prime, const SeKernelParams& params);

/// A non-negative weighted sum of SE kernels. A single unit-weight term is the
/// plain SE kernel; the two-term form {rho^2 * g1, 1 * h} is the high-fidelity
/// marginal covariance of the autoregressive model.
struct KernelSum {
  struct Term {
    double weight = 1.0;
    SeKernelParams params;
  };
  std::vector<Term> terms;

  static KernelSum single(const SeKernelParams& params) { return {{{1.0, params}}}; }

  double operator()(double x, double x_prime) const;
  // k(x, x), independent of x for stationary kernels.
  double diagonal() const;
};

// Gram matrices. The parallel versions split rows across OpenMP threads and
// produce results identical to the serial reference.
Eigen::MatrixXd gram(std::span<const double> xs, std::span<const double> xs_prime,
                     const SeKernelParams& params);
Eigen::MatrixXd gram(std::span<const double> xs, std::span<const double> xs_prime,
                     const KernelSum& kernel);
Eigen::MatrixXd gram_serial(std::span<const double> xs, std::span<const double> xs_prime,
                            const KernelSum& kernel);

}  // namespace mfgp
