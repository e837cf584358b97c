#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mfgp/active_learning.hpp"
#include "mfgp/synth.hpp"

using namespace mfgp;

namespace {

std::vector<Prediction> preds(std::vector<double> mu, std::vector<double> sd) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < mu.size(); ++i) out.push_back({mu[i], sd[i] * sd[i]});
  return out;
}

}  // namespace

TEST_CASE("L2 loss scores") {
  const auto p = preds({1.0, 2.0, -1.0}, {0.1, 0.1, 0.1});
  const std::vector<double> same{1.0, 2.0, -1.0};
  for (double s : l2_loss_scores(p, same)) CHECK(s == 0.0);

  const auto q = preds({0.0}, {1.0});
  const std::vector<double> one{1.0};
  CHECK(l2_loss_scores(q, one).front() == 1.0);

  const auto r = preds({0.0, 1.0}, {1.0, 1.0});
  const std::vector<double> base{2.0, 0.0};
  const auto s = l2_loss_scores(r, base);
  CHECK(s == std::vector<double>{4.0, 1.0});
  CHECK(argmax(s) == 0);
}

TEST_CASE("max variance prefers empty regions") {
  MfTrainingData d{{0.0, 0.05, 0.1}, {0.0, 0.1, 0.2}, {0.0, 0.1}, {0.0, 0.3}};
  MfHyperparameters p;
  p.theta1 = {1.0, 0.2};
  p.theta_d = {0.5, 0.3};
  p.noise1 = 1e-4;
  p.noise2 = 1e-3;
  const TrainedMfGp model(d, p);
  const double probes[] = {0.05, 0.9};
  const auto s = acq_max_variance(model, probes);
  CHECK(s[1] > s[0]);
}

TEST_CASE("max variance is symmetric for symmetric data") {
  MfTrainingData d{{-1.0, 1.0}, {0.5, 0.5}, {-0.5, 0.5}, {1.0, 1.0}};
  MfHyperparameters p;
  p.theta1 = {1.0, 0.7};
  p.theta_d = {0.5, 0.4};
  p.noise1 = 1e-4;
  p.noise2 = 1e-3;
  const TrainedMfGp model(d, p);
  const auto probes = linspace(-2, 2, 41);
  const auto s = acq_max_variance(model, probes);
  for (std::size_t i = 0; i < probes.size(); ++i)
    CHECK(std::abs(s[i] - s[probes.size() - 1 - i]) < 1e-10);
}

TEST_CASE("UCB scores") {
  const auto p = preds({0.3, -1.0, 2.0}, {1.0, 3.0, 0.5});
  const auto s = ucb_scores(p, 0.0);
  CHECK(s == std::vector<double>{0.3, -1.0, 2.0});

  const auto q = preds({0.0, 1.0}, {2.0, 0.0});
  const auto t = ucb_scores(q, 1.0);
  CHECK(t == std::vector<double>{2.0, 1.0});
  CHECK(argmax(t) == 0);

  const auto big = ucb_scores(p, 1e9);
  CHECK(argmax(big) == argmax(max_variance_scores(p)));
}

TEST_CASE("UCB with zero lambda picks the mean argmax on random inputs") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> mu(25);
    std::vector<double> sd(25);
    for (int i = 0; i < 25; ++i) {
      mu[i] = z(rng);
      sd[i] = std::abs(z(rng));
    }
    const auto s = ucb_scores(preds(mu, sd), 0.0);
    CHECK(argmax(s) == static_cast<std::size_t>(std::max_element(mu.begin(), mu.end()) - mu.begin()));
  }
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement(5.0, 0.0, 1.0, 0.01) == 0.0);
  CHECK(expected_improvement(-5.0, 0.0, 1.0, 0.01) == 0.0);
  const double s = 0.7;
  CHECK(expected_improvement(1.0 + 0.01, s, 1.0, 0.01) == doctest::Approx(0.3989423 * s).epsilon(1e-7));
  const double tiny = expected_improvement(-10.0, 0.1, 1.0, 0.01);
  CHECK(tiny >= 0.0);
  CHECK(tiny < 1e-12);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_real_distribution<double> sd(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) CHECK(expected_improvement(u(rng), sd(rng), u(rng), 0.01) >= 0.0);
}

TEST_CASE("select_next uses the closest unused candidate") {
  CandidatePool pool({2.0, 4.0, 6.0}, {0.0, 0.0, 0.0});
  CHECK(select_next(pool, 4.7) == 1);
  CHECK(select_next(pool, 3.0) == 0);
  CHECK(select_next(pool, -100.0) == 0);
  CHECK(select_next(pool, 100.0) == 2);
  pool.used[1] = true;
  CHECK(select_next(pool, 4.7) == 2);
  CHECK(select_next(pool, 4.0) == 0);
  pool.used = {true, true, true};
  CHECK_THROWS_AS(select_next(pool, 4.0), std::out_of_range);
}

TEST_CASE("select_next tie break goes to the smaller state regardless of order") {
  std::vector<double> states{6.0, 4.0, 2.0};
  std::sort(states.begin(), states.end());
  do {
    CandidatePool pool(states, std::vector<double>(3, 0.0));
    const std::size_t i = select_next(pool, 3.0);
    CHECK(pool.states[i] == 2.0);
    const std::size_t j = select_next(pool, 5.0);
    CHECK(pool.states[j] == 4.0);
  } while (std::next_permutation(states.begin(), states.end()));
}

TEST_CASE("probe grid spans the states") {
  const std::vector<double> states{3.0, -1.0, 2.0};
  const auto g = probe_grid(states);
  CHECK(g.size() == 201);
  CHECK(g.front() == -1.0);
  CHECK(g.back() == 3.0);
}

namespace {

struct LoopFixture {
  SynthDataset ds;
  MfTrainingData initial;
  CandidatePool pool;
  EvaluationSet test;

  explicit LoopFixture(int n_pool) {
    SynthConfig c;
    c.n_l1 = n_pool;
    c.l2_states = {0.0, 0.5, 1.0};
    c.noise_l2 = 0.01;
    c.seed = 2;
    ds = generate(c);
    initial.x_l2 = ds.data.x_l2;
    initial.y_l2 = ds.data.y_l2;
    pool = CandidatePool(ds.data.x_l1, ds.data.y_l1);
    test.xs = linspace(0, 1, 30);
    for (double x : test.xs) test.ys.push_back(ds.truth.high(x));
  }
};

ActiveLoopConfig quick_config() {
  ActiveLoopConfig cfg;
  cfg.optimizer.restarts = 3;
  cfg.optimizer.max_evals = 600;
  return cfg;
}

}  // namespace

TEST_CASE("zero iterations leaves only the baseline") {
  LoopFixture f(5);
  const auto h = run_active_loop(f.initial, f.pool, {}, 0, f.test, quick_config());
  CHECK(h.iterations.empty());
  CHECK(h.baseline_rmse > 0.0);
  CHECK(!h.aborted);
}

TEST_CASE("exhausting the pool uses every candidate once") {
  LoopFixture f(6);
  for (AcquisitionKind kind : {AcquisitionKind::Ucb, AcquisitionKind::MaxVariance,
                               AcquisitionKind::Ei, AcquisitionKind::Random}) {
    AcquisitionSpec spec;
    spec.kind = kind;
    const auto h = run_active_loop(f.initial, f.pool, spec, 6, f.test, quick_config());
    REQUIRE(h.iterations.size() == 6);
    std::set<std::size_t> seen;
    for (const auto& it : h.iterations) seen.insert(it.selected_index);
    CHECK(seen.size() == 6);
  }
  CHECK_THROWS_AS(run_active_loop(f.initial, f.pool, {}, 7, f.test, quick_config()),
                  std::out_of_range);
}

TEST_CASE("L2 loss acquisition follows its base curve") {
  LoopFixture f(9);
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::L2Loss;
  const SynthTruth truth = f.ds.truth;
  spec.base_curve = [truth](double x) { return truth.high(x); };
  const auto h = run_active_loop(f.initial, f.pool, spec, 3, f.test, quick_config());
  CHECK(h.iterations.size() == 3);
  AcquisitionSpec missing;
  missing.kind = AcquisitionKind::L2Loss;
  CHECK_THROWS_AS(run_active_loop(f.initial, f.pool, missing, 1, f.test, quick_config()),
                  std::invalid_argument);
}

TEST_CASE("active loop is deterministic for fixed seeds") {
  LoopFixture f(8);
  for (AcquisitionKind kind : {AcquisitionKind::Ucb, AcquisitionKind::Random}) {
    AcquisitionSpec spec;
    spec.kind = kind;
    auto cfg = quick_config();
    cfg.selection_seed = 5;
    const auto a = run_active_loop(f.initial, f.pool, spec, 4, f.test, cfg);
    const auto b = run_active_loop(f.initial, f.pool, spec, 4, f.test, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.iterations[i].selected_index == b.iterations[i].selected_index);
      CHECK(a.iterations[i].rmse == b.iterations[i].rmse);
    }
  }
}
