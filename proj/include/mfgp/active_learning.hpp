#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfgp/mfgp.hpp"

namespace mfgp {

enum class AcquisitionKind { L2Loss, MaxVariance, Ucb, Ei, Random };

std::string to_string(AcquisitionKind kind);
AcquisitionKind parse_acquisition_kind(const std::string& text);

/// Random is the non-adaptive baseline: it ignores scores and draws an unused
/// pool point uniformly.
struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::Ucb;
  double lambda = 2.0;
  double xi = 0.01;
  std::function<double(double)> base_curve;  // L2Loss only

  void validate() const;
};

// Scores from precomputed predictions. Larger is more desirable.
std::vector<double> l2_loss_scores(std::span<const Prediction> preds,
                                   std::span<const double> base_values);
std::vector<double> max_variance_scores(std::span<const Prediction> preds);
std::vector<double> ucb_scores(std::span<const Prediction> preds, double lambda);
std::vector<double> ei_scores(std::span<const Prediction> preds, double xi, double incumbent);

/// (mu - f+ - xi) Phi(Z) + sigma phi(Z), Z = (mu - f+ - xi) / sigma; 0 when sigma == 0.
double expected_improvement(double mean, double sd, double incumbent, double xi);

std::vector<double> acq_l2(const TrainedMfGp& model, std::span<const double> probes,
                           const std::function<double(double)>& base_curve);
std::vector<double> acq_max_variance(const TrainedMfGp& model, std::span<const double> probes);
std::vector<double> acq_ucb(const TrainedMfGp& model, std::span<const double> probes,
                            double lambda);
std::vector<double> acq_ei(const TrainedMfGp& model, std::span<const double> probes, double xi,
                           double incumbent);

/// Largest predictive mean over the model's L2 training inputs.
double ei_incumbent(const TrainedMfGp& model);

/// First index of the maximum score.
std::size_t argmax(std::span<const double> scores);

/// Low-fidelity points available for addition.
struct CandidatePool {
  std::vector<double> states;
  std::vector<double> values;
  std::vector<bool> used;

  CandidatePool() = default;
  CandidatePool(std::vector<double> states, std::vector<double> values);

  void validate() const;
  std::size_t available() const;
};

/// Unused candidate closest to target_state; ties go to the smaller state.
/// Throws std::out_of_range when the pool is exhausted.
std::size_t select_next(const CandidatePool& pool, double target_state);

/// 201-point (by default) uniform grid over [min, max] of `states`.
std::vector<double> probe_grid(std::span<const double> states, int n = 201);

struct EvaluationSet {
  std::vector<double> xs;
  std::vector<double> ys;
};

struct ActiveLoopConfig {
  OptimizerConfig optimizer;
  double floor = 0.0;
  int n_probes = 201;
  std::uint64_t selection_seed = 0;  // Random acquisition only
};

struct ActiveLearningIteration {
  int iteration = 0;
  std::size_t selected_index = 0;
  double selected_state = 0.0;
  double target_state = 0.0;  // acquisition argmax that led to the selection
  double rmse = 0.0;
  double r2 = 0.0;
  MfHyperparameters params;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct ActiveLearningHistory {
  double baseline_rmse = 0.0;
  double baseline_r2 = 0.0;
  MfHyperparameters baseline_params;
  std::vector<ActiveLearningIteration> iterations;
  std::optional<std::string> aborted;  // reason, when a fit failed mid-loop
};

/// Sequential design loop. A baseline model is fitted on `initial`; each
/// iteration then moves the pool point closest to the previous acquisition
/// argmax into the L1 data, refits, scores the held-out set and re-evaluates
/// the acquisition on the probe grid.
ActiveLearningHistory run_active_loop(const MfTrainingData& initial, CandidatePool pool,
                                      const AcquisitionSpec& spec, int n_iterations,
                                      const EvaluationSet& test_set,
                                      const ActiveLoopConfig& config);

/// `iteration,selected_state,rmse,r2`, one row per completed iteration.
void write_history_csv(const std::filesystem::path& file, const ActiveLearningHistory& history);
nlohmann::json history_params_json(const ActiveLearningHistory& history);

}  // namespace mfgp
