#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mfgp/gp.hpp"
#include "mfgp/mfgp.hpp"
#include "mfgp/synth.hpp"

using namespace mfgp;

namespace {

double se(double a, double b, const SeKernelParams& p) {
  return p.variance * std::exp(-(a - b) * (a - b) / (2.0 * p.lengthscale * p.lengthscale));
}

// Joint covariance written out block by block.
Eigen::MatrixXd joint_oracle(const MfTrainingData& d, const MfHyperparameters& p) {
  const auto n1 = static_cast<Eigen::Index>(d.x_l1.size());
  const auto n2 = static_cast<Eigen::Index>(d.x_l2.size());
  Eigen::MatrixXd k(n1 + n2, n1 + n2);
  for (Eigen::Index i = 0; i < n1 + n2; ++i)
    for (Eigen::Index j = 0; j < n1 + n2; ++j) {
      const bool li = i < n1;
      const bool lj = j < n1;
      const double xi = li ? d.x_l1[i] : d.x_l2[i - n1];
      const double xj = lj ? d.x_l1[j] : d.x_l2[j - n1];
      double v = 0.0;
      if (li && lj) v = se(xi, xj, p.theta1) + (i == j ? p.noise1 : 0.0);
      else if (li != lj) v = p.rho * se(xi, xj, p.theta1);
      else v = p.rho * p.rho * se(xi, xj, p.theta1) + se(xi, xj, p.theta_d) + (i == j ? p.noise2 : 0.0);
      k(i, j) = v;
    }
  return k;
}

// The factorization always adds this fraction of the mean diagonal.
Eigen::MatrixXd jittered(Eigen::MatrixXd k) {
  k.diagonal().array() += 1e-10 * k.diagonal().mean();
  return k;
}

Prediction predict_oracle(const MfTrainingData& d, const MfHyperparameters& p, double x) {
  const Eigen::MatrixXd k_inv = jittered(joint_oracle(d, p)).inverse();
  const auto n1 = d.x_l1.size();
  Eigen::VectorXd q(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < n1; ++i) q[static_cast<Eigen::Index>(i)] = p.rho * se(x, d.x_l1[i], p.theta1);
  for (std::size_t i = 0; i < d.x_l2.size(); ++i)
    q[static_cast<Eigen::Index>(n1 + i)] =
        p.rho * p.rho * se(x, d.x_l2[i], p.theta1) + se(x, d.x_l2[i], p.theta_d);
  const Eigen::VectorXd y = d.stacked_targets();
  const double prior = p.rho * p.rho * p.theta1.variance + p.theta_d.variance;
  return {q.dot(k_inv * y), prior + p.noise2 - q.dot(k_inv * q)};
}

MfTrainingData sample_data() {
  return {{0.0, 0.2, 0.45, 0.7, 1.0}, {-1.0, 0.4, 0.9, 0.1, -0.6},
          {0.1, 0.5, 0.95}, {-1.5, 2.1, -1.2}};
}

MfHyperparameters sample_params() {
  MfHyperparameters p;
  p.theta1 = {1.2, 0.3};
  p.theta_d = {0.4, 0.6};
  p.rho = 1.7;
  p.noise1 = 1e-3;
  p.noise2 = 0.02;
  return p;
}

}  // namespace

TEST_CASE("joint covariance for the two-point case") {
  MfTrainingData d{{0.0}, {0.0}, {0.0}, {0.0}};
  MfHyperparameters p;
  p.theta1 = {1.0, 1.0};
  p.theta_d = {0.5, 1.0};
  p.rho = 2.0;
  p.noise1 = 0.0;
  p.noise2 = 0.0;
  const Eigen::MatrixXd k = assemble_joint_covariance(d, p);
  REQUIRE(k.rows() == 2);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == 2.0);
  CHECK(k(1, 0) == 2.0);
  CHECK(k(1, 1) == 4.5);
}

TEST_CASE("zero rho decouples the fidelities") {
  MfHyperparameters p = sample_params();
  p.rho = 0.0;
  const MfTrainingData d = sample_data();
  const Eigen::MatrixXd k = assemble_joint_covariance(d, p);
  CHECK(k.topRightCorner(5, 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.bottomLeftCorner(3, 5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("joint covariance matches the block formulas") {
  const MfTrainingData d = sample_data();
  const MfHyperparameters p = sample_params();
  CHECK((assemble_joint_covariance(d, p) - joint_oracle(d, p)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("MF NLML matches the dense formula") {
  const MfTrainingData d = sample_data();
  const MfHyperparameters p = sample_params();
  const Eigen::MatrixXd k = jittered(joint_oracle(d, p));
  const Eigen::VectorXd y = d.stacked_targets();
  const double n = static_cast<double>(d.size());
  const double oracle = 0.5 * y.dot(k.inverse() * y) + 0.5 * std::log(k.determinant()) +
                        0.5 * n * std::log(2.0 * M_PI);
  CHECK(mf_nlml(d, p) == doctest::Approx(oracle).epsilon(1e-10));

  MfTrainingData zero = d;
  std::fill(zero.y_l1.begin(), zero.y_l1.end(), 0.0);
  std::fill(zero.y_l2.begin(), zero.y_l2.end(), 0.0);
  CHECK(mf_nlml(zero, p) ==
        doctest::Approx(0.5 * std::log(k.determinant()) + 0.5 * n * std::log(2.0 * M_PI)).epsilon(1e-10));
}

TEST_CASE("MF prediction matches the dense reference") {
  const MfTrainingData d = sample_data();
  const MfHyperparameters p = sample_params();
  const TrainedMfGp model(d, p);
  const auto probes = linspace(-0.3, 1.3, 33);
  const auto preds = mf_predict(model, probes);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Prediction r = predict_oracle(d, p, probes[i]);
    CHECK(preds[i].mean == doctest::Approx(r.mean).epsilon(1e-9));
    CHECK(preds[i].variance == doctest::Approx(r.variance).epsilon(1e-9));
  }
}

TEST_CASE("parallel MF prediction equals the serial reference") {
  const TrainedMfGp model(sample_data(), sample_params());
  const auto probes = linspace(0, 1, 300);
  const auto a = mf_predict(model, probes);
  const auto b = mf_predict_serial(model, probes);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CHECK(a[i].mean == b[i].mean);
    CHECK(a[i].variance == b[i].variance);
  }
}

TEST_CASE("without L1 data the MF model is a GP with the composite kernel") {
  MfTrainingData d{{}, {}, {0.0, 0.3, 0.55, 1.0}, {0.2, -0.8, 1.1, 0.4}};
  const MfHyperparameters p = sample_params();
  const TrainedMfGp mf(d, p);
  const TrainedGp gp({d.x_l2, d.y_l2}, high_fidelity_kernel(p), p.noise2);
  const auto probes = linspace(-0.5, 1.5, 50);
  const auto a = mf_predict(mf, probes);
  const auto b = gp_predict(gp, probes);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CHECK(std::abs(a[i].mean - b[i].mean) <= 1e-8);
    CHECK(std::abs(a[i].variance - b[i].variance) <= 1e-8);
  }
}

TEST_CASE("noiseless MF model interpolates both fidelities at L2 inputs") {
  MfTrainingData d = sample_data();
  MfHyperparameters p = sample_params();
  p.noise1 = 0.0;
  p.noise2 = 0.0;
  const TrainedMfGp model(d, p, 0.0);
  const auto preds = mf_predict(model, d.x_l2);
  for (std::size_t i = 0; i < d.x_l2.size(); ++i) {
    CHECK(std::abs(preds[i].mean - d.y_l2[i]) < 1e-6);
    CHECK(preds[i].variance <= 1e-6);
  }
}

TEST_CASE("MF model reverts to its prior far from data") {
  const MfHyperparameters p = sample_params();
  const TrainedMfGp model(sample_data(), p);
  const double far[] = {100.0};
  const Prediction r = mf_predict(model, far).front();
  CHECK(std::abs(r.mean) < 1e-6);
  const double prior = p.rho * p.rho * p.theta1.variance + p.theta_d.variance + p.noise2;
  CHECK(std::abs(r.variance - prior) < 1e-6);
}

TEST_CASE("variance floor") {
  CHECK(variance_floor({{0.0, {1.0, 3.0}}}) == doctest::Approx(3.0 * 2.0));
  CHECK(variance_floor({{0.0, {2.0, 2.0, 2.0}}, {1.0, {5.0, 5.0}}}) == 0.0);
  // Unbiased variance of {a - d, a + d} is 2 d^2.
  std::map<double, std::vector<double>> groups;
  const double targets[] = {0.1, 0.4, 0.2};
  for (int i = 0; i < 3; ++i) {
    const double half = std::sqrt(targets[i] / 2.0);
    groups[static_cast<double>(i)] = {1.0 - half, 1.0 + half};
  }
  CHECK(variance_floor(groups) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(variance_floor({{0.0, {4.0}}}) == 0.0);
}

TEST_CASE("MF predictive variance never drops below the floored noise") {
  SynthConfig c;
  c.noise_l2 = 0.01;
  c.l2_states = {0.0, 0.4, 0.6, 1.0};
  c.l2_realizations = 4;
  c.n_l1 = 11;
  c.seed = 3;
  const SynthDataset ds = generate(c);
  const double floor = variance_floor(group_by_state(ds.data.x_l2, ds.data.y_l2));
  REQUIRE(floor > 0.0);
  const TrainedMfGp model = mf_fit(ds.data, default_mf_box(ds.data, floor), floor, OptimizerConfig{});
  CHECK(model.params().noise2 >= floor);
  const auto preds = mf_predict(model, linspace(-0.2, 1.2, 200));
  for (const auto& p : preds) CHECK(p.variance >= model.params().noise2 - 1e-10);
}

TEST_CASE("a floor above the data variance pins the noise to the floor") {
  SynthConfig c;
  c.noise_l2 = 0.0;
  c.n_l1 = 8;
  c.n_l2 = 3;
  const SynthDataset ds = generate(c);
  const double floor = 1e3;
  const TrainedMfGp model = mf_fit(ds.data, default_mf_box(ds.data, floor), floor, OptimizerConfig{});
  CHECK(model.params().noise2 == floor);
  CHECK(model.params().noise1 == floor);
}

TEST_CASE("mf_fit recovers the scale factor of a linear pair") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig c;
    c.family = SynthFamily::LinearRho;
    c.rho = 2.0;
    c.offset = 0.5;
    c.n_l1 = 25;
    c.n_l2 = 3;
    c.noise_l2 = 1e-4;
    c.seed = seed;
    const SynthDataset ds = generate(c);
    OptimizerConfig cfg;
    cfg.seed = seed;
    const TrainedMfGp model = mf_fit(ds.data, default_mf_box(ds.data, 0.0), 0.0, cfg);
    CAPTURE(seed);
    CHECK(model.params().rho >= 1.5);
    CHECK(model.params().rho <= 2.5);
  }
}

TEST_CASE("mf_fit without L1 data matches gp_fit") {
  MfTrainingData d{{}, {}, {0.0, 0.3, 0.55, 0.8, 1.0}, {0.2, -0.8, 1.1, 0.9, 0.4}};
  OptimizerConfig cfg;
  cfg.seed = 9;
  const TrainedMfGp mf = mf_fit(d, default_mf_box(d, 0.0), 0.0, cfg);
  const GpTrainingData g{d.x_l2, d.y_l2};
  const TrainedGp gp = gp_fit(g, default_gp_box(g, 0.0), cfg);
  CHECK(mf.nlml() == doctest::Approx(gp.nlml()).epsilon(1e-8));
  const auto probes = linspace(0, 1, 20);
  const auto a = mf_predict(mf, probes);
  const auto b = gp_predict(gp, probes);
  for (std::size_t i = 0; i < probes.size(); ++i)
    CHECK(std::abs(a[i].mean - b[i].mean) < 1e-8);
}

TEST_CASE("mf_fit value is no worse than its starting point") {
  const MfTrainingData d = sample_data();
  const ParameterBox box = default_mf_box(d, 0.0);
  const TrainedMfGp model = mf_fit(d, box, 0.0, OptimizerConfig{});
  Eigen::VectorXd start = box.to_natural(0.5 * (box.search_lower() + box.search_upper()));
  start[4] = 1.0;
  CHECK(model.nlml() <= mf_nlml(d, MfHyperparameters::unpack(start)) + 1e-12);
}

TEST_CASE("MF model JSON round trip") {
  const TrainedMfGp model(sample_data(), sample_params(), 0.01);
  const TrainedMfGp back = mf_from_json(to_json(model));
  CHECK(back.params().rho == model.params().rho);
  CHECK(back.variance_floor() == 0.01);
  CHECK(back.nlml() == model.nlml());
}
