#include "mfgp/mfgp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfgp/errors.hpp"

namespace mfgp {

namespace {

constexpr long kParallelProbeThreshold = 64;
constexpr double kRhoBound = 10.0;

void check_pair(const std::vector<double>& xs, const std::vector<double>& ys, const char* name) {
  if (xs.size() != ys.size())
    throw std::invalid_argument(std::string("MF data: ") + name + " xs and ys lengths differ");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw std::invalid_argument(std::string("MF data: non-finite ") + name + " value");
}

}  // namespace

void MfTrainingData::validate() const {
  check_pair(x_l1, y_l1, "L1");
  check_pair(x_l2, y_l2, "L2");
  if (x_l2.empty()) throw std::invalid_argument("MF data: at least one L2 point required");
}

Eigen::VectorXd MfTrainingData::stacked_targets() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(size()));
  const auto n1 = static_cast<Eigen::Index>(y_l1.size());
  for (Eigen::Index i = 0; i < n1; ++i) y[i] = y_l1[static_cast<std::size_t>(i)];
  for (std::size_t i = 0; i < y_l2.size(); ++i) y[n1 + static_cast<Eigen::Index>(i)] = y_l2[i];
  return y;
}

void MfHyperparameters::validate() const {
  theta1.validate();
  theta_d.validate();
  if (!std::isfinite(rho)) throw std::invalid_argument("rho must be finite");
  if (!(noise1 >= 0.0) || !std::isfinite(noise1) || !(noise2 >= 0.0) || !std::isfinite(noise2))
    throw std::invalid_argument("noise variances must be finite and >= 0");
}

Eigen::VectorXd MfHyperparameters::pack() const {
  Eigen::VectorXd p(kPackedSize);
  p << theta1.variance, theta1.lengthscale, theta_d.variance, theta_d.lengthscale, rho, noise1,
      noise2;
  return p;
}

MfHyperparameters MfHyperparameters::unpack(const Eigen::VectorXd& p) {
  if (p.size() != kPackedSize) throw std::invalid_argument("packed MF parameters need 7 entries");
  return {{p[0], p[1]}, {p[2], p[3]}, p[4], p[5], p[6]};
}

KernelSum high_fidelity_kernel(const MfHyperparameters& params) {
  return {{{params.rho * params.rho, params.theta1}, {1.0, params.theta_d}}};
}

Eigen::MatrixXd assemble_joint_covariance(const MfTrainingData& data,
                                          const MfHyperparameters& params) {
  const auto n1 = static_cast<Eigen::Index>(data.x_l1.size());
  const auto n2 = static_cast<Eigen::Index>(data.x_l2.size());
  Eigen::MatrixXd k(n1 + n2, n1 + n2);
  if (n1 > 0) {
    k.topLeftCorner(n1, n1) = gram(data.x_l1, data.x_l1, params.theta1);
    k.topLeftCorner(n1, n1).diagonal().array() += params.noise1;
    k.topRightCorner(n1, n2) = params.rho * gram(data.x_l1, data.x_l2, params.theta1);
    k.bottomLeftCorner(n2, n1) = k.topRightCorner(n1, n2).transpose();
  }
  k.bottomRightCorner(n2, n2) = gram(data.x_l2, data.x_l2, high_fidelity_kernel(params));
  k.bottomRightCorner(n2, n2).diagonal().array() += params.noise2;
  return k;
}

double mf_nlml(const MfTrainingData& data, const MfHyperparameters& params) {
  const auto factor = factorize_with_jitter(assemble_joint_covariance(data, params));
  return negative_log_marginal(factor, data.stacked_targets());
}

std::map<double, std::vector<double>> group_by_state(std::span<const double> xs,
                                                     std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("group_by_state: length mismatch");
  std::map<double, std::vector<double>> groups;
  for (std::size_t i = 0; i < xs.size(); ++i) groups[xs[i]].push_back(ys[i]);
  return groups;
}

double variance_floor(const std::map<double, std::vector<double>>& y_l2_by_state) {
  bool any_replicated = false;
  double largest = 0.0;
  for (const auto& [state, values] : y_l2_by_state) {
    if (values.size() < 2) continue;
    any_replicated = true;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    largest = std::max(largest, ss / static_cast<double>(values.size() - 1));
  }
  if (!any_replicated) {
    warn("variance floor: no state has two or more L2 realizations; using 0");
    return 0.0;
  }
  return 3.0 * largest;
}

ParameterBox default_mf_box(const MfTrainingData& data, double floor) {
  std::vector<double> all_x = data.x_l1;
  all_x.insert(all_x.end(), data.x_l2.begin(), data.x_l2.end());
  const double range = input_range(all_x);
  const double s2 = output_scale(data.y_l2);
  const double s1 = data.y_l1.empty() ? s2 : output_scale(data.y_l1);
  const double n1_lo = std::max(floor, 1e-8 * s1);
  const double n2_lo = std::max(floor, 1e-8 * s2);
  return {{1e-6 * s1, 0.05 * range, 1e-6 * s2, 0.05 * range, -kRhoBound, n1_lo, n2_lo},
          {100.0 * s1, 10.0 * range, 100.0 * s2, 10.0 * range, kRhoBound, std::max(s1, n1_lo),
           std::max(s2, n2_lo)},
          {Transform::Log, Transform::Log, Transform::Log, Transform::Log, Transform::Linear,
           Transform::Log, Transform::Log}};
}

TrainedMfGp::TrainedMfGp(MfTrainingData data, MfHyperparameters params, double variance_floor)
    : data_(std::move(data)), params_(params), floor_(variance_floor) {
  data_.validate();
  params_.validate();
  factor_ = factorize_with_jitter(assemble_joint_covariance(data_, params_));
  const Eigen::VectorXd y = data_.stacked_targets();
  alpha_ = factor_.solve(y);
  nlml_ = negative_log_marginal(factor_, y);
}

TrainedMfGp mf_fit(const MfTrainingData& data, const ParameterBox& box, double floor,
                   const OptimizerConfig& config) {
  data.validate();
  box.validate();
  if (box.size() != MfHyperparameters::kPackedSize)
    throw std::invalid_argument("MF parameter box must have 7 dimensions");
  if (!(floor >= 0.0)) throw std::invalid_argument("variance floor must be >= 0");

  // The floor is a hard lower bound on both noise variances.
  ParameterBox constrained = box;
  for (std::size_t i : {std::size_t{5}, std::size_t{6}}) {
    constrained.lower[i] = std::max(constrained.lower[i], floor);
    constrained.upper[i] = std::max(constrained.upper[i], constrained.lower[i]);
  }

  if (data.x_l1.empty()) {
    const ParameterBox gp_box{{constrained.lower[2], constrained.lower[3], constrained.lower[6]},
                              {constrained.upper[2], constrained.upper[3], constrained.upper[6]},
                              {Transform::Log, Transform::Log, Transform::Log}};
    const TrainedGp gp = gp_fit({data.x_l2, data.y_l2}, gp_box, config);
    const Eigen::VectorXd centre =
        constrained.to_natural(0.5 * (constrained.search_lower() + constrained.search_upper()));
    MfHyperparameters params{{centre[0], centre[1]}, gp.params(), 0.0, constrained.lower[5],
                             gp.noise_variance()};
    return TrainedMfGp(data, params, floor);
  }

  const Objective objective = [&data](const Eigen::VectorXd& p) {
    return mf_nlml(data, MfHyperparameters::unpack(p));
  };
  Eigen::VectorXd initial =
      constrained.to_natural(0.5 * (constrained.search_lower() + constrained.search_upper()));
  initial[4] = 1.0;
  const MinimizeResult best = minimize(objective, constrained, config, initial);
  return TrainedMfGp(data, MfHyperparameters::unpack(best.argmin), floor);
}

namespace {

Prediction mf_predict_one(const TrainedMfGp& model, const KernelSum& k22, double x) {
  const auto& d = model.data();
  const auto& p = model.params();
  const std::size_t n1 = d.x_l1.size();
  Eigen::VectorXd q(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < n1; ++i)
    q[static_cast<Eigen::Index>(i)] = p.rho * se_kernel(x, d.x_l1[i], p.theta1);
  for (std::size_t i = 0; i < d.x_l2.size(); ++i)
    q[static_cast<Eigen::Index>(n1 + i)] = k22(x, d.x_l2[i]);
  const Eigen::VectorXd v = model.factor().llt.matrixL().solve(q);
  const double latent = std::max(0.0, k22.diagonal() - v.squaredNorm());
  return {q.dot(model.alpha()), latent + p.noise2};
}

}  // namespace

std::vector<Prediction> mf_predict(const TrainedMfGp& model, std::span<const double> x_star) {
  const KernelSum k22 = high_fidelity_kernel(model.params());
  std::vector<Prediction> out(x_star.size());
  const auto n = static_cast<long>(x_star.size());
#pragma omp parallel for schedule(static) if (n >= kParallelProbeThreshold)
  for (long i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = mf_predict_one(model, k22, x_star[i]);
  return out;
}

std::vector<Prediction> mf_predict_serial(const TrainedMfGp& model,
                                          std::span<const double> x_star) {
  const KernelSum k22 = high_fidelity_kernel(model.params());
  std::vector<Prediction> out;
  out.reserve(x_star.size());
  for (double x : x_star) out.push_back(mf_predict_one(model, k22, x));
  return out;
}

nlohmann::json to_json(const MfHyperparameters& params) {
  return {{"theta1",
           {{"variance", params.theta1.variance}, {"lengthscale", params.theta1.lengthscale}}},
          {"theta_d",
           {{"variance", params.theta_d.variance}, {"lengthscale", params.theta_d.lengthscale}}},
          {"rho", params.rho},
          {"noise1", params.noise1},
          {"noise2", params.noise2}};
}

MfHyperparameters mf_params_from_json(const nlohmann::json& j) {
  try {
    MfHyperparameters p;
    p.theta1 = {j.at("theta1").at("variance").get<double>(),
                j.at("theta1").at("lengthscale").get<double>()};
    p.theta_d = {j.at("theta_d").at("variance").get<double>(),
                 j.at("theta_d").at("lengthscale").get<double>()};
    p.rho = j.at("rho").get<double>();
    p.noise1 = j.at("noise1").get<double>();
    p.noise2 = j.at("noise2").get<double>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid MF hyperparameter JSON: ") + e.what());
  }
}

nlohmann::json to_json(const TrainedMfGp& model) {
  nlohmann::json j = to_json(model.params());
  j["floor"] = model.variance_floor();
  j["x_l1"] = model.data().x_l1;
  j["y_l1"] = model.data().y_l1;
  j["x_l2"] = model.data().x_l2;
  j["y_l2"] = model.data().y_l2;
  return j;
}

TrainedMfGp mf_from_json(const nlohmann::json& j) {
  const MfHyperparameters params = mf_params_from_json(j);
  try {
    MfTrainingData data{j.at("x_l1").get<std::vector<double>>(),
                        j.at("y_l1").get<std::vector<double>>(),
                        j.at("x_l2").get<std::vector<double>>(),
                        j.at("y_l2").get<std::vector<double>>()};
    return TrainedMfGp(std::move(data), params, j.at("floor").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid MF model JSON: ") + e.what());
  }
}

}  // namespace mfgp
