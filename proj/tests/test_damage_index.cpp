#include <doctest.h>

#include <cmath>
#include <random>

#include "mfgp/damage_index.hpp"
#include "mfgp/errors.hpp"
#include "test_util.hpp"

using namespace mfgp;

namespace {

Signal make(std::vector<double> v) {
  Signal s;
  s.samples = std::move(v);
  s.sample_rate = 1e6;
  return s;
}

// Literal transcription of the Janapati formula, without normalizing y0 first.
double janapati_oracle(const std::vector<double>& y0, const std::vector<double>& yu) {
  double eu = 0.0;
  for (double v : yu) eu += v * v;
  std::vector<double> Yu(yu.size());
  for (std::size_t t = 0; t < yu.size(); ++t) Yu[t] = yu[t] / std::sqrt(eu);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < y0.size(); ++t) {
    num += y0[t] * Yu[t];
    den += y0[t] * y0[t];
  }
  double di = 0.0;
  for (std::size_t t = 0; t < y0.size(); ++t) {
    const double Y0 = num / den * y0[t];
    di += (Yu[t] - Y0) * (Yu[t] - Y0);
  }
  return di;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("identical signals have zero damage") {
  const Signal s = tone_burst(100e3, 5, 24e6, 1.0);
  CHECK(di_janapati(s, s) == doctest::Approx(0.0).epsilon(1e-14).scale(1.0));
  CHECK(di_rmsd(s, s) == 0.0);
}

TEST_CASE("janapati ignores the scale of the unknown signal") {
  const Signal s = tone_burst(100e3, 5, 24e6, 1.0);
  Signal twice = s;
  for (double& v : twice.samples) v *= 2.0;
  CHECK(std::abs(di_janapati(s, twice)) < 1e-10);

  std::mt19937_64 rng(11);
  const Signal a = make(random_vector(rng, 64));
  const Signal b = make(random_vector(rng, 64));
  Signal b_scaled = b;
  for (double& v : b_scaled.samples) v *= 37.5;
  CHECK(std::abs(di_janapati(a, b) - di_janapati(a, b_scaled)) < 1e-10);
}

TEST_CASE("janapati of orthogonal signals is one") {
  const Signal a = make({1.0, 0.0, 1.0, 0.0});
  const Signal b = make({0.0, 2.0, 0.0, -3.0});
  CHECK(std::abs(di_janapati(a, b) - 1.0) < 1e-10);
}

TEST_CASE("janapati matches the brute-force formula") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto y0 = random_vector(rng, 40);
    const auto yu = random_vector(rng, 40);
    const double di = di_janapati(make(y0), make(yu));
    CHECK(di == doctest::Approx(janapati_oracle(y0, yu)).epsilon(1e-12));
    CHECK(di >= 0.0);
    CHECK(di <= 2.0);
  }
}

TEST_CASE("rmsd closed forms") {
  CHECK(di_rmsd(make({0.6, 0.8}), make({0.8, 0.6})) == doctest::Approx(0.2).epsilon(1e-14));

  std::mt19937_64 rng(2);
  auto y0 = random_vector(rng, 25);
  const Signal base = normalize_energy(make(y0));
  Signal neg = base;
  for (double& v : neg.samples) v = -v;
  CHECK(di_rmsd(base, neg) == doctest::Approx(2.0 / std::sqrt(25.0)).epsilon(1e-13));
}

TEST_CASE("DI inputs of different length are rejected") {
  CHECK_THROWS_AS(di_rmsd(make({1, 2}), make({1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(di_janapati(make({1, 2}), make({1, 2, 3})), std::invalid_argument);
}

TEST_CASE("rmsd spans a larger range than janapati for short, mildly perturbed packets") {
  // Small-angle regime: rmsd ~ theta / sqrt(N) while janapati ~ theta^2, so
  // rmsd dominates whenever theta < 1 / sqrt(N).
  const std::vector<double> base{0.1, 0.5, 0.9, 0.4, -0.3, -0.8, -0.6, -0.1};
  const std::vector<double> bump{0.0, 0.1, -0.2, 0.3, 0.2, -0.1, 0.1, 0.0};
  std::vector<double> rmsd;
  std::vector<double> jan;
  for (double eps : {0.0, 0.05, 0.15}) {
    std::vector<double> u = base;
    for (std::size_t t = 0; t < u.size(); ++t) u[t] += eps * bump[t];
    rmsd.push_back(di_rmsd(make(base), make(u)));
    jan.push_back(di_janapati(make(base), make(u)));
  }
  const double rmsd_range = *std::max_element(rmsd.begin(), rmsd.end()) -
                            *std::min_element(rmsd.begin(), rmsd.end());
  const double jan_range = *std::max_element(jan.begin(), jan.end()) -
                           *std::min_element(jan.begin(), jan.end());
  CHECK(rmsd_range > jan_range);
}

namespace {

SignalSet two_state_set(bool identical) {
  SignalSet set;
  set.manifest.sample_rate_hz = 24e6;
  set.manifest.baseline_state = 0.0;
  set.manifest.state_unit = "mm";
  for (double state : {0.0, 2.0})
    for (int r = 0; r < 2; ++r) {
      const double amp = identical ? 1.0 : 1.0 + 0.1 * state + 0.01 * r;
      Signal s = tone_burst(100e3, 5, 24e6, amp);
      if (!identical)
        for (std::size_t i = 0; i < s.size(); ++i)
          s.samples[i] += 0.01 * state * std::sin(0.01 * static_cast<double>(i));
      set.records.push_back({s, "2-6", state, r, Fidelity::L2});
    }
  return set;
}

}  // namespace

TEST_CASE("DI dataset has one value per record") {
  const SignalSet set = two_state_set(false);
  const DiDataset ds = build_di_dataset(set, "2-6", DiKind::Rmsd);
  CHECK(ds.points.size() == 4);
  CHECK(ds.points[0].value == 0.0);
  CHECK(ds.points[3].value > 0.0);
  CHECK(ds.points[3].state == 2.0);
  CHECK(ds.points[3].realization == 1);
}

TEST_CASE("records identical to the baseline all score zero") {
  const SignalSet set = two_state_set(true);
  for (DiKind kind : {DiKind::Rmsd, DiKind::Janapati})
    for (const auto& p : build_di_dataset(set, "2-6", kind).points)
      CHECK(std::abs(p.value) < 1e-14);
}

TEST_CASE("missing baseline names the path") {
  SignalSet set = two_state_set(false);
  set.manifest.baseline_state = 7.0;
  try {
    build_di_dataset(set, "2-6", DiKind::Rmsd);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("2-6") != std::string::npos);
  }
}

TEST_CASE("DI CSV round trip") {
  TempDir dir("di");
  DiDataset ds;
  ds.kind = DiKind::Janapati;
  ds.points = {{0.0, 0.0, Fidelity::L2, "1-1", 0},
               {2.5, 0.1234567890123456789, Fidelity::L1, "1-1", 0},
               {2.5, 1.0 / 3.0, Fidelity::L2, "1-1", 3}};
  write_di_csv(dir / "di.csv", ds);
  const DiDataset back = read_di_csv(dir / "di.csv", DiKind::Janapati);
  REQUIRE(back.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.points[i].state == ds.points[i].state);
    CHECK(back.points[i].value == ds.points[i].value);
    CHECK(back.points[i].fidelity == ds.points[i].fidelity);
    CHECK(back.points[i].realization == ds.points[i].realization);
  }
  write_di_csv(dir / "again.csv", back);
  CHECK(read_text(dir / "di.csv") == read_text(dir / "again.csv"));
}
