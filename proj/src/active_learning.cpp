#include "mfgp/active_learning.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mfgp/csv.hpp"
#include "mfgp/errors.hpp"
#include "mfgp/evaluation.hpp"
#include "mfgp/synth.hpp"

namespace mfgp {

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::L2Loss: return "l2_loss";
    case AcquisitionKind::MaxVariance: return "max_variance";
    case AcquisitionKind::Ucb: return "ucb";
    case AcquisitionKind::Ei: return "ei";
    case AcquisitionKind::Random: return "random";
  }
  return "ucb";
}

AcquisitionKind parse_acquisition_kind(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "l2_loss") return AcquisitionKind::L2Loss;
  if (lower == "max_variance") return AcquisitionKind::MaxVariance;
  if (lower == "ucb") return AcquisitionKind::Ucb;
  if (lower == "ei") return AcquisitionKind::Ei;
  if (lower == "random") return AcquisitionKind::Random;
  throw std::invalid_argument("unknown acquisition '" + text +
                              "' (expected l2_loss, max_variance, ucb, ei or random)");
}

void AcquisitionSpec::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("UCB lambda must be >= 0");
  if (!(xi >= 0.0)) throw std::invalid_argument("EI xi must be >= 0");
  if ((kind == AcquisitionKind::L2Loss) != static_cast<bool>(base_curve))
    throw std::invalid_argument("a base curve is required for, and only for, L2-loss acquisition");
}

std::vector<double> l2_loss_scores(std::span<const Prediction> preds,
                                   std::span<const double> base_values) {
  if (preds.size() != base_values.size())
    throw std::invalid_argument("L2 loss: base curve and predictions differ in length");
  std::vector<double> s(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = base_values[i] - preds[i].mean;
    s[i] = d * d;
  }
  return s;
}

std::vector<double> max_variance_scores(std::span<const Prediction> preds) {
  std::vector<double> s(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) s[i] = preds[i].variance;
  return s;
}

std::vector<double> ucb_scores(std::span<const Prediction> preds, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("UCB lambda must be >= 0");
  std::vector<double> s(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    s[i] = lambda == 0.0 ? preds[i].mean : preds[i].mean + lambda * std::sqrt(preds[i].variance);
  return s;
}

double expected_improvement(double mean, double sd, double incumbent, double xi) {
  if (!(sd > 0.0)) return 0.0;
  const double improvement = mean - incumbent - xi;
  const double z = improvement / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, improvement * cdf + sd * pdf);
}

std::vector<double> ei_scores(std::span<const Prediction> preds, double xi, double incumbent) {
  if (!(xi >= 0.0)) throw std::invalid_argument("EI xi must be >= 0");
  std::vector<double> s(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    s[i] = expected_improvement(preds[i].mean, std::sqrt(preds[i].variance), incumbent, xi);
  return s;
}

std::vector<double> acq_l2(const TrainedMfGp& model, std::span<const double> probes,
                           const std::function<double(double)>& base_curve) {
  std::vector<double> base(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) base[i] = base_curve(probes[i]);
  return l2_loss_scores(mf_predict(model, probes), base);
}

std::vector<double> acq_max_variance(const TrainedMfGp& model, std::span<const double> probes) {
  return max_variance_scores(mf_predict(model, probes));
}

std::vector<double> acq_ucb(const TrainedMfGp& model, std::span<const double> probes,
                            double lambda) {
  return ucb_scores(mf_predict(model, probes), lambda);
}

std::vector<double> acq_ei(const TrainedMfGp& model, std::span<const double> probes, double xi,
                           double incumbent) {
  return ei_scores(mf_predict(model, probes), xi, incumbent);
}

double ei_incumbent(const TrainedMfGp& model) {
  const auto preds = mf_predict(model, model.data().x_l2);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : preds) best = std::max(best, p.mean);
  return best;
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax of an empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

CandidatePool::CandidatePool(std::vector<double> s, std::vector<double> v)
    : states(std::move(s)), values(std::move(v)), used(states.size(), false) {
  validate();
}

void CandidatePool::validate() const {
  if (states.size() != values.size() || states.size() != used.size())
    throw std::invalid_argument("candidate pool: field lengths differ");
}

std::size_t CandidatePool::available() const {
  return static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
}

std::size_t select_next(const CandidatePool& pool, double target_state) {
  pool.validate();
  std::size_t best = pool.states.size();
  for (std::size_t i = 0; i < pool.states.size(); ++i) {
    if (pool.used[i]) continue;
    if (best == pool.states.size()) {
      best = i;
      continue;
    }
    const double d = std::abs(pool.states[i] - target_state);
    const double d_best = std::abs(pool.states[best] - target_state);
    if (d < d_best || (d == d_best && pool.states[i] < pool.states[best])) best = i;
  }
  if (best == pool.states.size()) throw std::out_of_range("candidate pool is exhausted");
  return best;
}

std::vector<double> probe_grid(std::span<const double> states, int n) {
  if (states.empty()) throw std::invalid_argument("probe grid needs at least one state");
  const auto [lo, hi] = std::minmax_element(states.begin(), states.end());
  return linspace(*lo, *hi, n);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> score(const AcquisitionSpec& spec, const TrainedMfGp& model,
                          std::span<const double> probes) {
  switch (spec.kind) {
    case AcquisitionKind::L2Loss: return acq_l2(model, probes, spec.base_curve);
    case AcquisitionKind::MaxVariance: return acq_max_variance(model, probes);
    case AcquisitionKind::Ucb: return acq_ucb(model, probes, spec.lambda);
    case AcquisitionKind::Ei: return acq_ei(model, probes, spec.xi, ei_incumbent(model));
    case AcquisitionKind::Random: return {};
  }
  return {};
}

struct Metrics {
  double rmse = 0.0;
  double r2 = 0.0;
};

Metrics evaluate(const TrainedMfGp& model, const EvaluationSet& test) {
  const auto preds = mf_predict(model, test.xs);
  std::vector<double> means(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) means[i] = preds[i].mean;
  return {rmse(means, test.ys), r_squared(means, test.ys)};
}

}  // namespace

ActiveLearningHistory run_active_loop(const MfTrainingData& initial, CandidatePool pool,
                                      const AcquisitionSpec& spec, int n_iterations,
                                      const EvaluationSet& test_set,
                                      const ActiveLoopConfig& config) {
  spec.validate();
  pool.validate();
  if (n_iterations < 0) throw std::invalid_argument("iteration count must be >= 0");
  if (static_cast<std::size_t>(n_iterations) > pool.available())
    throw std::out_of_range("more iterations requested than pool candidates available");

  std::vector<double> all_states = initial.x_l1;
  all_states.insert(all_states.end(), initial.x_l2.begin(), initial.x_l2.end());
  all_states.insert(all_states.end(), pool.states.begin(), pool.states.end());
  const auto probes = probe_grid(all_states, config.n_probes);

  ActiveLearningHistory history;
  MfTrainingData data = initial;
  TrainedMfGp model = mf_fit(data, default_mf_box(data, config.floor), config.floor,
                             config.optimizer);
  const Metrics baseline = evaluate(model, test_set);
  history.baseline_rmse = baseline.rmse;
  history.baseline_r2 = baseline.r2;
  history.baseline_params = model.params();

  std::mt19937_64 rng(config.selection_seed);
  double target = std::numeric_limits<double>::quiet_NaN();
  if (spec.kind != AcquisitionKind::Random) target = probes[argmax(score(spec, model, probes))];

  for (int it = 1; it <= n_iterations; ++it) {
    std::size_t index = 0;
    if (spec.kind == AcquisitionKind::Random) {
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < pool.used.size(); ++i)
        if (!pool.used[i]) unused.push_back(i);
      std::uniform_int_distribution<std::size_t> pick(0, unused.size() - 1);
      index = unused[pick(rng)];
    } else {
      index = select_next(pool, target);
    }
    pool.used[index] = true;
    data.x_l1.push_back(pool.states[index]);
    data.y_l1.push_back(pool.values[index]);

    ActiveLearningIteration record;
    record.iteration = it;
    record.selected_index = index;
    record.selected_state = pool.states[index];
    record.target_state = target;
    try {
      const auto fit_start = Clock::now();
      model = mf_fit(data, default_mf_box(data, config.floor), config.floor, config.optimizer);
      record.fit_seconds = seconds_since(fit_start);
    } catch (const NumericalError& e) {
      history.aborted = "iteration " + std::to_string(it) + ": " + e.what();
      warn("active learning aborted at " + *history.aborted);
      break;
    }
    const auto predict_start = Clock::now();
    const Metrics m = evaluate(model, test_set);
    record.predict_seconds = seconds_since(predict_start);
    record.rmse = m.rmse;
    record.r2 = m.r2;
    record.params = model.params();
    history.iterations.push_back(record);

    if (spec.kind != AcquisitionKind::Random && pool.available() > 0)
      target = probes[argmax(score(spec, model, probes))];
  }
  return history;
}

void write_history_csv(const std::filesystem::path& file, const ActiveLearningHistory& history) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write history file " + file.string());
  out << "iteration,selected_state,rmse,r2\n";
  for (const auto& it : history.iterations)
    out << it.iteration << ',' << csv::format_double(it.selected_state) << ','
        << csv::format_double(it.rmse) << ',' << csv::format_double(it.r2) << '\n';
}

nlohmann::json history_params_json(const ActiveLearningHistory& history) {
  nlohmann::json j;
  j["baseline"] = to_json(history.baseline_params);
  j["baseline_rmse"] = history.baseline_rmse;
  j["baseline_r2"] = history.baseline_r2;
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : history.iterations) {
    nlohmann::json row = to_json(it.params);
    row["iteration"] = it.iteration;
    row["selected_state"] = it.selected_state;
    its.push_back(row);
  }
  j["iterations"] = its;
  if (history.aborted) j["aborted"] = *history.aborted;
  return j;
}

}  // namespace mfgp
