#pragma once

#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "mfgp/gp.hpp"
#include "mfgp/kernel.hpp"
#include "mfgp/linalg.hpp"
#include "mfgp/optimizer.hpp"

namespace mfgp {

/// Two-fidelity training set. L1 is the plentiful low-fidelity source
/// (simulation / reconstruction), L2 the scarce high-fidelity one (experiment).
struct MfTrainingData {
  std::vector<double> x_l1;
  std::vector<double> y_l1;
  std::vector<double> x_l2;
  std::vector<double> y_l2;

  void validate() const;
  std::size_t size() const { return x_l1.size() + x_l2.size(); }
  // Stacked targets [y_l1; y_l2].
  Eigen::VectorXd stacked_targets() const;
};

/// Autoregressive model f2 = rho * f1 + delta with f1 ~ GP(0, g1) and
/// delta ~ GP(0, h), both SE kernels, plus white noise per fidelity.
struct MfHyperparameters {
  SeKernelParams theta1;
  SeKernelParams theta_d;
  double rho = 1.0;
  double noise1 = 0.0;
  double noise2 = 0.0;

  void validate() const;

  // Packed order used by the optimizer:
  // [theta1.variance, theta1.lengthscale, theta_d.variance, theta_d.lengthscale, rho, noise1, noise2]
  static constexpr int kPackedSize = 7;
  Eigen::VectorXd pack() const;
  static MfHyperparameters unpack(const Eigen::VectorXd& p);
};

/// Marginal covariance of the high-fidelity process: rho^2 g1 + h.
KernelSum high_fidelity_kernel(const MfHyperparameters& params);

/// Joint covariance of [y_l1; y_l2]:
///   [ g1(X1,X1) + s1 I      rho g1(X1,X2)                    ]
///   [ rho g1(X2,X1)         rho^2 g1(X2,X2) + h(X2,X2) + s2 I ]
Eigen::MatrixXd assemble_joint_covariance(const MfTrainingData& data,
                                          const MfHyperparameters& params);

double mf_nlml(const MfTrainingData& data, const MfHyperparameters& params);

/// Groups values by (exactly equal) state.
std::map<double, std::vector<double>> group_by_state(std::span<const double> xs,
                                                     std::span<const double> ys);

/// Three times the largest per-state sample variance of high-fidelity values.
/// Warns and returns 0 when no state has two or more realizations.
double variance_floor(const std::map<double, std::vector<double>>& y_l2_by_state);

/// Box over the packed hyperparameters with both noise variances floored.
ParameterBox default_mf_box(const MfTrainingData& data, double floor);

class TrainedMfGp {
 public:
  TrainedMfGp(MfTrainingData data, MfHyperparameters params, double variance_floor = 0.0);

  const MfTrainingData& data() const { return data_; }
  const MfHyperparameters& params() const { return params_; }
  double variance_floor() const { return floor_; }
  const JitteredCholesky& factor() const { return factor_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double nlml() const { return nlml_; }

 private:
  MfTrainingData data_;
  MfHyperparameters params_;
  double floor_;
  JitteredCholesky factor_;
  Eigen::VectorXd alpha_;
  double nlml_;
};

/// Minimizes the joint NLML with rho started at 1. With no L1 data the model
/// reduces to a single-fidelity GP on the L2 data: the discrepancy kernel and
/// noise2 are fitted by gp_fit, rho is set to 0 and theta1 left at its box centre.
TrainedMfGp mf_fit(const MfTrainingData& data, const ParameterBox& box, double floor,
                   const OptimizerConfig& config);

/// Predictive distribution of the noisy high-fidelity observable at x_star.
/// The latent part is clamped at zero so variance >= noise2 always holds.
std::vector<Prediction> mf_predict(const TrainedMfGp& model, std::span<const double> x_star);
std::vector<Prediction> mf_predict_serial(const TrainedMfGp& model,
                                          std::span<const double> x_star);

nlohmann::json to_json(const MfHyperparameters& params);
MfHyperparameters mf_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainedMfGp& model);
TrainedMfGp mf_from_json(const nlohmann::json& j);

}  // namespace mfgp
