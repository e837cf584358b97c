#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "mfgp/kernel.hpp"
#include "mfgp/linalg.hpp"
#include "mfgp/optimizer.hpp"

namespace mfgp {

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct GpTrainingData {
  std::vector<double> xs;
  std::vector<double> ys;

  void validate() const;
};

/// A zero-mean GP conditioned on data with fixed hyperparameters. Immutable
/// once built; prediction is safe from concurrent readers.
class TrainedGp {
 public:
  TrainedGp(GpTrainingData data, KernelSum kernel, double noise_variance);

  const GpTrainingData& data() const { return data_; }
  const KernelSum& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  const JitteredCholesky& factor() const { return factor_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double nlml() const { return nlml_; }
  // First kernel term; the whole kernel for models produced by gp_fit.
  const SeKernelParams& params() const { return kernel_.terms.front().params; }

 private:
  GpTrainingData data_;
  KernelSum kernel_;
  double noise_variance_;
  JitteredCholesky factor_;
  Eigen::VectorXd alpha_;
  double nlml_;
};

double gp_nlml(const GpTrainingData& data, const SeKernelParams& params, double noise_variance);
double gp_nlml(const GpTrainingData& data, const KernelSum& kernel, double noise_variance);

/// Box over (variance, lengthscale, noise_variance), all log-transformed.
/// Lengthscales span [0.05, 10] x range(x); variance spans [1e-6, 100] x var(y);
/// noise spans [max(noise_floor, 1e-8 var(y)), max(var(y), noise_floor)].
ParameterBox default_gp_box(const GpTrainingData& data, double noise_floor = 0.0);

/// Multi-start NLML minimization over `box` (dimension order as in default_gp_box).
TrainedGp gp_fit(const GpTrainingData& data, const ParameterBox& box,
                 const OptimizerConfig& config);

/// mean = q' K^-1 y; variance = k(x*, x*) + noise - q' K^-1 q with the latent
/// part clamped at zero.
std::vector<Prediction> gp_predict(const TrainedGp& model, std::span<const double> x_star);
std::vector<Prediction> gp_predict_serial(const TrainedGp& model, std::span<const double> x_star);

nlohmann::json to_json(const TrainedGp& model);
// Recomputes the factorization from the stored parameters and data.
TrainedGp gp_from_json(const nlohmann::json& j);

// Scale used for default variance bounds: var(y), falling back to mean(y^2),
// then 1, when the sample variance vanishes.
double output_scale(std::span<const double> ys);
// max(x) - min(x), or 1 when all inputs coincide.
double input_range(std::span<const double> xs);

}  // namespace mfgp
