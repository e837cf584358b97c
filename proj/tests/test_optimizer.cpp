#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mfgp/optimizer.hpp"

using namespace mfgp;

namespace {

ParameterBox linear_box(std::vector<double> lo, std::vector<double> hi) {
  std::vector<Transform> t(lo.size(), Transform::Linear);
  return {std::move(lo), std::move(hi), std::move(t)};
}

double rosenbrock(const Eigen::VectorXd& v) {
  return 100.0 * std::pow(v[1] - v[0] * v[0], 2) + std::pow(1.0 - v[0], 2);
}

}  // namespace

TEST_CASE("convex quadratic") {
  const auto r = minimize([](const Eigen::VectorXd& v) { return (v[0] - 3.0) * (v[0] - 3.0); },
                          linear_box({0.0}, {10.0}), OptimizerConfig{});
  CHECK(std::abs(r.argmin[0] - 3.0) < 1e-4);
  CHECK(r.evals > 0);
  CHECK(r.restart_values.size() == 10);
}

TEST_CASE("collapsed box returns its point") {
  const auto r = minimize([](const Eigen::VectorXd& v) { return v.squaredNorm(); },
                          linear_box({2.0, -1.0}, {2.0, -1.0}), OptimizerConfig{});
  CHECK(r.argmin[0] == 2.0);
  CHECK(r.argmin[1] == -1.0);
  CHECK(r.value == 5.0);
}

TEST_CASE("rosenbrock with ten restarts") {
  OptimizerConfig cfg;
  cfg.restarts = 10;
  const auto r = minimize(rosenbrock, linear_box({-2, -2}, {2, 2}), cfg);
  CHECK(r.value < 1e-3);
}

TEST_CASE("minimum on the boundary stays feasible") {
  const ParameterBox box{{1e-3, 0.5}, {1e2, 4.0}, {Transform::Log, Transform::Linear}};
  const auto r = minimize([](const Eigen::VectorXd& v) { return v[0] + (v[1] - 10.0) * (v[1] - 10.0); },
                          box, OptimizerConfig{});
  CHECK(r.argmin[0] >= 1e-3);
  CHECK(r.argmin[0] < 1.1e-3);
  CHECK(r.argmin[1] == 4.0);
}

TEST_CASE("result is no worse than any restart and deterministic") {
  OptimizerConfig cfg;
  cfg.seed = 42;
  cfg.restarts = 6;
  const auto box = linear_box({-2, -2}, {2, 2});
  const auto a = minimize(rosenbrock, box, cfg);
  const auto b = minimize(rosenbrock, box, cfg);
  const auto s = minimize_serial(rosenbrock, box, cfg);
  CHECK(a.value == b.value);
  CHECK(a.argmin == b.argmin);
  CHECK(a.value == s.value);
  CHECK(a.argmin == s.argmin);
  CHECK(a.restart_values == s.restart_values);
  for (double v : a.restart_values) CHECK(a.value <= v);
}

TEST_CASE("non-finite and throwing objectives count as infinitely bad") {
  const auto r = minimize(
      [](const Eigen::VectorXd& v) {
        if (v[0] < 0.0) throw std::runtime_error("no");
        if (v[0] > 5.0) return std::nan("");
        return (v[0] - 1.0) * (v[0] - 1.0);
      },
      linear_box({-5.0}, {10.0}), OptimizerConfig{});
  CHECK(std::abs(r.argmin[0] - 1.0) < 1e-4);
}

TEST_CASE("initial point seeds the first restart") {
  OptimizerConfig cfg;
  cfg.restarts = 1;
  cfg.max_evals = 1;
  Eigen::VectorXd start(1);
  start << 7.0;
  const auto r = minimize([](const Eigen::VectorXd& v) { return v[0]; }, linear_box({0.0}, {10.0}),
                          cfg, start);
  CHECK(r.argmin[0] == 7.0);
}

TEST_CASE("invalid boxes are rejected") {
  CHECK_THROWS_AS(linear_box({1.0}, {0.0}).validate(), std::invalid_argument);
  const ParameterBox bad_log{{0.0}, {1.0}, {Transform::Log}};
  CHECK_THROWS_AS(bad_log.validate(), std::invalid_argument);
}
