#include "mfgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mfgp/errors.hpp"

namespace mfgp {

namespace {

constexpr long kParallelProbeThreshold = 64;

Eigen::VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd noisy_gram(const GpTrainingData& data, const KernelSum& kernel,
                           double noise_variance) {
  Eigen::MatrixXd k = gram(data.xs, data.xs, kernel);
  k.diagonal().array() += noise_variance;
  return k;
}

Prediction predict_one(const TrainedGp& model, double x) {
  const auto& xs = model.data().xs;
  Eigen::VectorXd q(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    q[static_cast<Eigen::Index>(i)] = model.kernel()(x, xs[i]);
  const Eigen::VectorXd v = model.factor().llt.matrixL().solve(q);
  const double latent = std::max(0.0, model.kernel().diagonal() - v.squaredNorm());
  return {q.dot(model.alpha()), latent + model.noise_variance()};
}

}  // namespace

void GpTrainingData::validate() const {
  if (xs.size() != ys.size()) throw std::invalid_argument("GP data: xs and ys lengths differ");
  if (xs.empty()) throw std::invalid_argument("GP data: at least one point required");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw std::invalid_argument("GP data: non-finite value");
}

TrainedGp::TrainedGp(GpTrainingData data, KernelSum kernel, double noise_variance)
    : data_(std::move(data)), kernel_(std::move(kernel)), noise_variance_(noise_variance) {
  data_.validate();
  if (kernel_.terms.empty()) throw std::invalid_argument("kernel has no terms");
  for (const auto& t : kernel_.terms) {
    t.params.validate();
    if (!(t.weight >= 0.0)) throw std::invalid_argument("kernel term weight must be >= 0");
  }
  if (!(noise_variance_ >= 0.0) || !std::isfinite(noise_variance_))
    throw std::invalid_argument("noise variance must be finite and >= 0");
  factor_ = factorize_with_jitter(noisy_gram(data_, kernel_, noise_variance_));
  const Eigen::VectorXd y = as_vector(data_.ys);
  alpha_ = factor_.solve(y);
  nlml_ = negative_log_marginal(factor_, y);
}

double gp_nlml(const GpTrainingData& data, const KernelSum& kernel, double noise_variance) {
  data.validate();
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
  const auto factor = factorize_with_jitter(noisy_gram(data, kernel, noise_variance));
  return negative_log_marginal(factor, as_vector(data.ys));
}

double gp_nlml(const GpTrainingData& data, const SeKernelParams& params, double noise_variance) {
  return gp_nlml(data, KernelSum::single(params), noise_variance);
}

double output_scale(std::span<const double> ys) {
  if (ys.empty()) return 1.0;
  const double n = static_cast<double>(ys.size());
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double ss = 0.0;
  double sq = 0.0;
  for (double y : ys) {
    ss += (y - mean) * (y - mean);
    sq += y * y;
  }
  if (ys.size() > 1 && ss > 0.0) return ss / (n - 1.0);
  if (sq > 0.0) return sq / n;
  return 1.0;
}

double input_range(std::span<const double> xs) {
  if (xs.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *hi > *lo ? *hi - *lo : 1.0;
}

ParameterBox default_gp_box(const GpTrainingData& data, double noise_floor) {
  const double range = input_range(data.xs);
  const double scale = output_scale(data.ys);
  const double noise_lo = std::max(noise_floor, 1e-8 * scale);
  const double noise_hi = std::max(scale, noise_lo);
  return {{1e-6 * scale, 0.05 * range, noise_lo},
          {100.0 * scale, 10.0 * range, noise_hi},
          {Transform::Log, Transform::Log, Transform::Log}};
}

TrainedGp gp_fit(const GpTrainingData& data, const ParameterBox& box,
                 const OptimizerConfig& config) {
  data.validate();
  if (box.size() != 3) throw std::invalid_argument("GP parameter box must have 3 dimensions");
  const Objective objective = [&data](const Eigen::VectorXd& p) {
    return gp_nlml(data, SeKernelParams{p[0], p[1]}, p[2]);
  };
  const MinimizeResult best = minimize(objective, box, config);
  const auto& p = best.argmin;
  return TrainedGp(data, KernelSum::single({p[0], p[1]}), p[2]);
}

std::vector<Prediction> gp_predict(const TrainedGp& model, std::span<const double> x_star) {
  std::vector<Prediction> out(x_star.size());
  const auto n = static_cast<long>(x_star.size());
#pragma omp parallel for schedule(static) if (n >= kParallelProbeThreshold)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict_one(model, x_star[i]);
  return out;
}

std::vector<Prediction> gp_predict_serial(const TrainedGp& model, std::span<const double> x_star) {
  std::vector<Prediction> out;
  out.reserve(x_star.size());
  for (double x : x_star) out.push_back(predict_one(model, x));
  return out;
}

nlohmann::json to_json(const TrainedGp& model) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : model.kernel().terms)
    terms.push_back({{"weight", t.weight},
                     {"variance", t.params.variance},
                     {"lengthscale", t.params.lengthscale}});
  return {{"kernel", terms},
          {"noise_variance", model.noise_variance()},
          {"xs", model.data().xs},
          {"ys", model.data().ys}};
}

TrainedGp gp_from_json(const nlohmann::json& j) {
  try {
    KernelSum kernel;
    for (const auto& t : j.at("kernel"))
      kernel.terms.push_back(
          {t.at("weight").get<double>(),
           {t.at("variance").get<double>(), t.at("lengthscale").get<double>()}});
    GpTrainingData data{j.at("xs").get<std::vector<double>>(),
                        j.at("ys").get<std::vector<double>>()};
    return TrainedGp(std::move(data), std::move(kernel), j.at("noise_variance").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid GP model JSON: ") + e.what());
  }
}

}  // namespace mfgp
