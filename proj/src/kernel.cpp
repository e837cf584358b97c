#include "mfgp/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace mfgp {

namespace {

// Below this many entries thread start-up costs more than it saves.
constexpr long kParallelEntryThreshold = 4096;

}  // namespace

void SeKernelParams::validate() const {
  if (!(std::isfinite(variance) && variance > 0.0))
    throw std::invalid_argument("SE kernel variance must be positive and finite");
  if (!(std::isfinite(lengthscale) && lengthscale > 0.0))
    throw std::invalid_argument("SE kernel lengthscale must be positive and finite");
}

double se_kernel(double x, double x_prime, const SeKernelParams& params) {
  const double r = (x - x_prime) / params.lengthscale;
  return params.variance * std::exp(-0.5 * r * r);
}

double KernelSum::operator()(double x, double x_prime) const {
  double k = 0.0;
  for (const auto& term : terms) k += term.weight * se_kernel(x, x_prime, term.params);
  return k;
}

double KernelSum::diagonal() const {
  double k = 0.0;
  for (const auto& term : terms) k += term.weight * term.params.variance;
  return k;
}

Eigen::MatrixXd gram(std::span<const double> xs, std::span<const double> xs_prime,
                     const SeKernelParams& params) {
  return gram(xs, xs_prime, KernelSum::single(params));
}

Eigen::MatrixXd gram_serial(std::span<const double> xs, std::span<const double> xs_prime,
                            const KernelSum& kernel) {
  const auto rows = static_cast<Eigen::Index>(xs.size());
  const auto cols = static_cast<Eigen::Index>(xs_prime.size());
  Eigen::MatrixXd k(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) k(i, j) = kernel(xs[i], xs_prime[j]);
  return k;
}

Eigen::MatrixXd gram(std::span<const double> xs, std::span<const double> xs_prime,
                     const KernelSum& kernel) {
  const auto rows = static_cast<Eigen::Index>(xs.size());
  const auto cols = static_cast<Eigen::Index>(xs_prime.size());
  Eigen::MatrixXd k(rows, cols);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelEntryThreshold)
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) k(i, j) = kernel(xs[i], xs_prime[j]);
  return k;
}

}  // namespace mfgp
