// Serial vs OpenMP versions of the hot loops.
#include <benchmark/benchmark.h>

#include <cmath>

#include "mfgp/gp.hpp"
#include "mfgp/kernel.hpp"
#include "mfgp/mfgp.hpp"
#include "mfgp/optimizer.hpp"
#include "mfgp/synth.hpp"

namespace {

std::vector<double> grid(int n) { return mfgp::linspace(0.0, 1.0, n); }

const mfgp::KernelSum kKernel = mfgp::KernelSum::single({1.0, 0.2});

void BM_GramParallel(benchmark::State& state) {
  const auto x = grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mfgp::gram(x, x, kKernel));
}

void BM_GramSerial(benchmark::State& state) {
  const auto x = grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mfgp::gram_serial(x, x, kKernel));
}

mfgp::TrainedMfGp make_model() {
  mfgp::SynthConfig c;
  c.n_l1 = 40;
  c.n_l2 = 8;
  c.noise_l2 = 0.01;
  const auto ds = mfgp::generate(c);
  mfgp::MfHyperparameters p;
  p.theta1 = {20.0, 0.2};
  p.theta_d = {5.0, 0.3};
  p.rho = 2.0;
  p.noise1 = 1e-6;
  p.noise2 = 0.01;
  return mfgp::TrainedMfGp(ds.data, p);
}

void BM_MfPredictParallel(benchmark::State& state) {
  const auto model = make_model();
  const auto probes = grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mfgp::mf_predict(model, probes));
}

void BM_MfPredictSerial(benchmark::State& state) {
  const auto model = make_model();
  const auto probes = grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mfgp::mf_predict_serial(model, probes));
}

double rosenbrock(const Eigen::VectorXd& v) {
  return 100.0 * std::pow(v[1] - v[0] * v[0], 2) + std::pow(1.0 - v[0], 2);
}

mfgp::ParameterBox rosenbrock_box() {
  return {{-2.0, -2.0}, {2.0, 2.0},
          {mfgp::Transform::Linear, mfgp::Transform::Linear}};
}

void BM_MinimizeParallel(benchmark::State& state) {
  mfgp::OptimizerConfig cfg;
  cfg.restarts = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mfgp::minimize(rosenbrock, rosenbrock_box(), cfg));
}

void BM_MinimizeSerial(benchmark::State& state) {
  mfgp::OptimizerConfig cfg;
  cfg.restarts = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(mfgp::minimize_serial(rosenbrock, rosenbrock_box(), cfg));
}

}  // namespace

BENCHMARK(BM_GramParallel)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_GramSerial)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_MfPredictParallel)->Arg(201)->Arg(2001);
BENCHMARK(BM_MfPredictSerial)->Arg(201)->Arg(2001);
BENCHMARK(BM_MinimizeParallel)->Arg(4)->Arg(16);
BENCHMARK(BM_MinimizeSerial)->Arg(4)->Arg(16);

BENCHMARK_MAIN();
