#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfgp/active_learning.hpp"
#include "mfgp/damage_index.hpp"
#include "mfgp/evaluation.hpp"
#include "mfgp/gp.hpp"
#include "mfgp/mfgp.hpp"
#include "mfgp/optimizer.hpp"
#include "mfgp/synth.hpp"

namespace mfgp {

enum class Task { Task1, Task2, Task3, FitGp, FitMfGp, ExtractDi, Synth, Reconstruct };

std::string to_string(Task task);  // CLI verb, e.g. "fit-mfgp"
Task parse_task(const std::string& verb);

struct PacketWindow {
  double start = 0.0;
  double length = 0.0;
  bool taper = false;
};

struct ReconstructSpec {
  nlohmann::json model;  // {a, b, k_phase, segment_lengths}, inline or read from a file
  std::filesystem::path baseline;
  double sample_rate_hz = 0.0;
  std::vector<double> loads;
  double strain_per_load = 0.0;
  std::string path_id = "1-1";
  std::string state_unit = "kN";
};

enum class ReplacementOrder { OutsideIn, InsideOut, Explicit };

/// Everything a command needs, validated against a strict schema before any
/// computation starts.
struct ExperimentConfig {
  Task task = Task::Task1;
  std::uint64_t seed = 0;
  std::filesystem::path output = "results";

  // Data for the regression tasks: a DI CSV or a synthetic generator.
  std::optional<std::filesystem::path> di_csv;
  std::optional<std::string> path_id;
  std::optional<SynthConfig> synth;
  DiKind di_kind = DiKind::Rmsd;
  int n_eval_probes = 100;  // synthetic data: truth evaluated on this many uniform points

  // extract-di
  std::optional<std::filesystem::path> signals_root;
  std::vector<std::string> paths;
  std::optional<PacketWindow> window;

  SplitSpec split;
  std::vector<double> l2_states;
  OptimizerConfig optimizer;

  std::optional<int> task1_max_added;
  ReplacementOrder task2_order = ReplacementOrder::OutsideIn;
  std::vector<double> task2_explicit_order;

  int task3_iterations = 15;
  std::vector<AcquisitionKind> task3_acquisitions{AcquisitionKind::Ucb};
  double task3_lambda = 2.0;
  double task3_xi = 0.01;
  int task3_random_seeds = 10;

  std::optional<ReconstructSpec> reconstruct;

  nlohmann::json raw;  // config as given, copied next to the outputs
};

/// Throws ConfigError on unknown fields, wrong types or missing task inputs.
ExperimentConfig parse_config(const nlohmann::json& j, Task task);
/// Relative paths resolve against the config file's directory. A seed override
/// replaces the top-level seed before derived seeds are filled in.
ExperimentConfig load_config(const std::filesystem::path& file, Task task,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Regression-task inputs after splitting.
struct TaskData {
  std::map<double, std::vector<double>> l2_train;  // by state
  std::vector<double> l1_x;
  std::vector<double> l1_y;
  EvaluationSet test;
  std::vector<double> pinned_states;
  std::function<double(double)> truth;  // synthetic data only
};

TaskData prepare_task_data(const ExperimentConfig& config);
TaskData task_data_from_synth(const SynthDataset& synth, int n_eval_probes,
                              std::vector<double> pinned_states = {});

/// One row of the metrics table.
struct MetricsRow {
  std::string model;
  int n_exp_sets = 0;
  int n_sim_points = 0;
  double rmse = 0.0;
  double r2 = 0.0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

/// Mean and variance on the probe grid for one fitted model.
struct Curve {
  std::string model;
  int n_exp_sets = 0;
  int n_sim_points = 0;
  std::vector<double> xs;
  std::vector<Prediction> preds;
};

struct TaskResult {
  std::vector<MetricsRow> rows;
  std::vector<Curve> curves;
};

/// Farthest-point ordering of `candidates` relative to `anchors`; ties go to
/// the smaller state. Returns candidate indices.
std::vector<std::size_t> farthest_point_order(std::span<const double> candidates,
                                              std::span<const double> anchors);

/// Fixed high-fidelity data, growing low-fidelity data. Row 0 is the GP
/// baseline; MF rows follow for k = 0..max_added added L1 points.
TaskResult run_task1(const TaskData& data, const std::vector<double>& l2_states,
                     std::optional<int> max_added, const OptimizerConfig& optimizer);

/// Interior states in replacement order.
std::vector<double> replacement_order(const std::vector<double>& states,
                                      const std::vector<double>& pinned, ReplacementOrder order,
                                      const std::vector<double>& explicit_order = {});

/// Constant number of states: high-fidelity states are swapped for
/// low-fidelity points one at a time. Rows alternate gp, mfgp per step.
TaskResult run_task2(const TaskData& data, const std::vector<double>& order,
                     const OptimizerConfig& optimizer);

struct Task3Run {
  std::string label;
  std::uint64_t seed = 0;
  ActiveLearningHistory history;
};

struct Task3Result {
  std::vector<Task3Run> runs;
  std::vector<MetricsRow> summary;
};

Task3Result run_task3(const TaskData& data, const std::vector<double>& initial_states,
                      const ExperimentConfig& config);

/// `model,n_exp_sets,n_sim_points,rmse,r2,fit_seconds,predict_seconds`
void write_metrics_csv(const std::filesystem::path& file, const std::vector<MetricsRow>& rows);
/// `model,n_exp_sets,n_sim_points,x,mean,lower,upper` with a 95% band (mean +- 1.96 sd).
void write_curves_csv(const std::filesystem::path& file, const std::vector<Curve>& curves);

/// Creates <root>/<task>/<timestamp>/ (unique) and copies the config there.
std::filesystem::path make_output_dir(const ExperimentConfig& config);

/// Runs one command end to end; returns the output directory.
std::filesystem::path run_command(const ExperimentConfig& config);

}  // namespace mfgp
