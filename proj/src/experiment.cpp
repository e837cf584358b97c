#include "mfgp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "mfgp/csv.hpp"
#include "mfgp/errors.hpp"
#include "mfgp/load_compensation.hpp"
#include "mfgp/signal.hpp"

namespace mfgp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Task task) {
  switch (task) {
    case Task::Task1: return "task1";
    case Task::Task2: return "task2";
    case Task::Task3: return "task3";
    case Task::FitGp: return "fit-gp";
    case Task::FitMfGp: return "fit-mfgp";
    case Task::ExtractDi: return "extract-di";
    case Task::Synth: return "synth";
    case Task::Reconstruct: return "reconstruct";
  }
  return "task1";
}

Task parse_task(const std::string& verb) {
  for (Task t : {Task::Task1, Task::Task2, Task::Task3, Task::FitGp, Task::FitMfGp,
                 Task::ExtractDi, Task::Synth, Task::Reconstruct})
    if (to_string(t) == verb) return t;
  throw ConfigError("unknown task '" + verb + "'");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

// Reads typed fields from one JSON object, rejecting keys outside `allowed`.
class Section {
 public:
  Section(const json& j, std::string name, std::set<std::string> allowed)
      : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
    for (const auto& [key, value] : j_.items())
      if (!allowed.contains(key)) throw ConfigError(name_ + ": unknown field '" + key + "'");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + " is missing or has the wrong type");
    }
  }

  template <typename T>
  void read(const std::string& key, T& target) const {
    if (has(key)) target = get<T>(key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return get<T>(key);
  }

 private:
  const json& j_;
  std::string name_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

SynthConfig parse_synth(const json& j) {
  const Section s(j, "data.synth",
                  {"family", "noise_l2", "n_l1", "n_l2", "seed", "domain", "l2_states",
                   "l2_realizations", "rho", "offset"});
  SynthConfig c;
  try {
    if (s.has("family")) c.family = parse_synth_family(s.get<std::string>("family"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data.synth.family: ") + e.what());
  }
  s.read("noise_l2", c.noise_l2);
  s.read("n_l1", c.n_l1);
  s.read("n_l2", c.n_l2);
  s.read("seed", c.seed);
  s.read("l2_states", c.l2_states);
  s.read("l2_realizations", c.l2_realizations);
  s.read("rho", c.rho);
  s.read("offset", c.offset);
  if (s.has("domain")) {
    const auto d = s.get<std::vector<double>>("domain");
    if (d.size() != 2) throw ConfigError("data.synth.domain must be [lo, hi]");
    c.lo = d[0];
    c.hi = d[1];
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data.synth: ") + e.what());
  }
  return c;
}

DiKind parse_kind_field(const Section& s, const std::string& key) {
  try {
    return parse_di_kind(s.get<std::string>(key));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.path(key) + ": " + e.what());
  }
}

bool needs_regression_data(Task t) {
  return t == Task::Task1 || t == Task::Task2 || t == Task::Task3 || t == Task::FitGp ||
         t == Task::FitMfGp;
}

ExperimentConfig parse_config_at(const json& j, Task task, const fs::path& base) {
  const Section top(j, "config",
                    {"task", "seed", "output", "data", "signals", "split", "l2_states",
                     "optimizer", "task1", "task2", "task3", "reconstruct", "evaluation"});
  ExperimentConfig c;
  c.task = task;
  c.raw = j;
  if (top.has("task") && top.get<std::string>("task") != to_string(task))
    throw ConfigError("config.task '" + top.get<std::string>("task") +
                      "' does not match the command '" + to_string(task) + "'");
  top.read("seed", c.seed);
  if (top.has("output")) c.output = resolve(base, top.get<std::string>("output"));
  top.read("l2_states", c.l2_states);

  if (top.has("data")) {
    const Section d(top.raw("data"), "data", {"di_csv", "path_id", "di_kind", "synth"});
    if (d.has("di_csv")) c.di_csv = resolve(base, d.get<std::string>("di_csv"));
    c.path_id = d.optional<std::string>("path_id");
    if (d.has("di_kind")) c.di_kind = parse_kind_field(d, "di_kind");
    if (d.has("synth")) c.synth = parse_synth(d.raw("synth"));
    if (c.di_csv && c.synth) throw ConfigError("data: give either di_csv or synth, not both");
  }

  if (top.has("signals")) {
    const Section s(top.raw("signals"), "signals", {"root", "paths", "di_kind", "window"});
    if (s.has("root")) c.signals_root = resolve(base, s.get<std::string>("root"));
    s.read("paths", c.paths);
    if (s.has("di_kind")) c.di_kind = parse_kind_field(s, "di_kind");
    if (s.has("window")) {
      const Section w(s.raw("window"), "signals.window", {"start", "length", "taper"});
      PacketWindow pw{w.get<double>("start"), w.get<double>("length"), false};
      w.read("taper", pw.taper);
      if (!(pw.length > 0.0)) throw ConfigError("signals.window.length must be positive");
      c.window = pw;
    }
  }

  bool split_seed_given = false;
  if (top.has("split")) {
    const Section s(top.raw("split"), "split",
                    {"train_fraction", "seed", "always_include_states"});
    s.read("train_fraction", c.split.train_fraction);
    split_seed_given = s.has("seed");
    s.read("seed", c.split.seed);
    s.read("always_include_states", c.split.always_include_states);
  }
  if (!split_seed_given) c.split.seed = c.seed;
  try {
    c.split.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("split: ") + e.what());
  }

  bool optimizer_seed_given = false;
  if (top.has("optimizer")) {
    const Section s(top.raw("optimizer"), "optimizer",
                    {"restarts", "max_evals", "tolerance", "seed"});
    s.read("restarts", c.optimizer.restarts);
    s.read("max_evals", c.optimizer.max_evals);
    s.read("tolerance", c.optimizer.tolerance);
    optimizer_seed_given = s.has("seed");
    s.read("seed", c.optimizer.seed);
  }
  if (!optimizer_seed_given) c.optimizer.seed = c.seed;
  try {
    c.optimizer.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("optimizer: ") + e.what());
  }

  if (top.has("evaluation")) {
    const Section s(top.raw("evaluation"), "evaluation", {"n_probes"});
    s.read("n_probes", c.n_eval_probes);
    if (c.n_eval_probes < 2) throw ConfigError("evaluation.n_probes must be >= 2");
  }

  if (top.has("task1")) {
    const Section s(top.raw("task1"), "task1", {"max_added"});
    c.task1_max_added = s.optional<int>("max_added");
    if (c.task1_max_added && *c.task1_max_added < 0)
      throw ConfigError("task1.max_added must be >= 0");
  }

  if (top.has("task2")) {
    const Section s(top.raw("task2"), "task2", {"order"});
    if (s.has("order")) {
      const auto& o = s.raw("order");
      if (o.is_array()) {
        c.task2_order = ReplacementOrder::Explicit;
        c.task2_explicit_order = s.get<std::vector<double>>("order");
      } else {
        const auto name = s.get<std::string>("order");
        if (name == "outside_in") c.task2_order = ReplacementOrder::OutsideIn;
        else if (name == "inside_out") c.task2_order = ReplacementOrder::InsideOut;
        else throw ConfigError("task2.order must be outside_in, inside_out or a state list");
      }
    }
  }

  if (top.has("task3")) {
    const Section s(top.raw("task3"), "task3",
                    {"iterations", "acquisitions", "lambda", "xi", "random_seeds"});
    s.read("iterations", c.task3_iterations);
    s.read("lambda", c.task3_lambda);
    s.read("xi", c.task3_xi);
    s.read("random_seeds", c.task3_random_seeds);
    if (s.has("acquisitions")) {
      c.task3_acquisitions.clear();
      for (const auto& name : s.get<std::vector<std::string>>("acquisitions")) {
        try {
          c.task3_acquisitions.push_back(parse_acquisition_kind(name));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("task3.acquisitions: ") + e.what());
        }
      }
    }
    if (c.task3_iterations < 0) throw ConfigError("task3.iterations must be >= 0");
    if (c.task3_random_seeds < 0) throw ConfigError("task3.random_seeds must be >= 0");
    if (!(c.task3_lambda >= 0.0) || !(c.task3_xi >= 0.0))
      throw ConfigError("task3.lambda and task3.xi must be >= 0");
  }

  if (top.has("reconstruct")) {
    const Section s(top.raw("reconstruct"), "reconstruct",
                    {"model", "baseline", "sample_rate_hz", "loads", "strain_per_load",
                     "path_id", "state_unit"});
    ReconstructSpec r;
    const auto& m = s.raw("model");
    if (m.is_string()) {
      const auto file = resolve(base, m.get<std::string>());
      std::ifstream in(file);
      if (!in) throw ConfigError("reconstruct.model: cannot open " + file.string());
      try {
        r.model = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("reconstruct.model: " + std::string(e.what()));
      }
    } else {
      r.model = m;
    }
    r.baseline = resolve(base, s.get<std::string>("baseline"));
    r.sample_rate_hz = s.get<double>("sample_rate_hz");
    r.loads = s.get<std::vector<double>>("loads");
    r.strain_per_load = s.get<double>("strain_per_load");
    s.read("path_id", r.path_id);
    s.read("state_unit", r.state_unit);
    if (!(r.sample_rate_hz > 0.0)) throw ConfigError("reconstruct.sample_rate_hz must be > 0");
    if (r.loads.empty()) throw ConfigError("reconstruct.loads must not be empty");
    c.reconstruct = std::move(r);
  }

  if (needs_regression_data(task) && !c.di_csv && !c.synth)
    throw ConfigError(to_string(task) + " needs data.di_csv or data.synth");
  if (task == Task::ExtractDi && !c.signals_root)
    throw ConfigError("extract-di needs signals.root");
  if (task == Task::Synth && !c.synth) throw ConfigError("synth needs data.synth");
  if (task == Task::Reconstruct && !c.reconstruct)
    throw ConfigError("reconstruct needs a reconstruct section");
  return c;
}

}  // namespace

ExperimentConfig parse_config(const json& j, Task task) {
  return parse_config_at(j, task, fs::current_path());
}

ExperimentConfig load_config(const fs::path& file, Task task,
                             std::optional<std::uint64_t> seed_override) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  if (seed_override) {
    if (!j.is_object()) throw ConfigError("config must be an object");
    j["seed"] = *seed_override;
  }
  return parse_config_at(j, task, fs::absolute(file).parent_path());
}

// ---------------------------------------------------------------------------
// Task data

TaskData task_data_from_synth(const SynthDataset& synth, int n_eval_probes,
                              std::vector<double> pinned_states) {
  TaskData td;
  td.l2_train = group_by_state(synth.data.x_l2, synth.data.y_l2);
  td.l1_x = synth.data.x_l1;
  td.l1_y = synth.data.y_l1;
  td.test.xs = linspace(synth.truth.config.lo, synth.truth.config.hi, n_eval_probes);
  for (double x : td.test.xs) td.test.ys.push_back(synth.truth.high(x));
  const SynthTruth truth = synth.truth;
  td.truth = [truth](double x) { return truth.high(x); };
  if (pinned_states.empty() && !td.l2_train.empty())
    pinned_states = {td.l2_train.begin()->first, td.l2_train.rbegin()->first};
  td.pinned_states = std::move(pinned_states);
  return td;
}

TaskData prepare_task_data(const ExperimentConfig& config) {
  if (config.synth)
    return task_data_from_synth(generate(*config.synth), config.n_eval_probes,
                                config.split.always_include_states);
  if (!config.di_csv) throw ConfigError("no regression data configured");

  DiDataset all = read_di_csv(*config.di_csv, config.di_kind);
  std::set<std::string> paths;
  for (const auto& p : all.points) paths.insert(p.path_id);
  if (config.path_id) {
    std::erase_if(all.points, [&](const DiValue& p) { return p.path_id != *config.path_id; });
    if (all.points.empty()) throw DataError("no DI points on path " + *config.path_id);
  } else if (paths.size() > 1) {
    throw ConfigError("DI file holds several paths; set data.path_id");
  }
  all.validate();

  const DatasetSplit split = split_realizations(all, config.split);
  TaskData td;
  for (const auto& p : split.train.points) {
    if (p.fidelity == Fidelity::L2) {
      td.l2_train[p.state].push_back(p.value);
    } else {
      td.l1_x.push_back(p.state);
      td.l1_y.push_back(p.value);
    }
  }
  for (const auto& p : split.test.points) {
    td.test.xs.push_back(p.state);
    td.test.ys.push_back(p.value);
  }
  if (td.l2_train.empty()) throw DataError("split left no L2 training data");
  if (td.test.xs.size() < 2) throw DataError("split left fewer than two L2 test points");
  td.pinned_states = config.split.always_include_states;
  if (td.pinned_states.empty())
    td.pinned_states = {td.l2_train.begin()->first, td.l2_train.rbegin()->first};
  return td;
}

// ---------------------------------------------------------------------------
// Tasks

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::map<double, std::vector<double>> select_states(const TaskData& data,
                                                    const std::vector<double>& states) {
  std::map<double, std::vector<double>> out;
  for (double s : states) {
    const auto it = data.l2_train.find(s);
    if (it == data.l2_train.end())
      throw DataError("no L2 training data at state " + csv::format_double(s));
    out[s] = it->second;
  }
  return out;
}

void append_groups(const std::map<double, std::vector<double>>& groups, std::vector<double>& xs,
                   std::vector<double>& ys) {
  for (const auto& [state, values] : groups)
    for (double v : values) {
      xs.push_back(state);
      ys.push_back(v);
    }
}

std::vector<double> all_states(const TaskData& data) {
  std::vector<double> s = data.l1_x;
  for (const auto& [state, values] : data.l2_train) s.push_back(state);
  return s;
}

double floor_for(const std::map<double, std::vector<double>>& l2) {
  for (const auto& [state, values] : l2)
    if (values.size() >= 2) return variance_floor(l2);
  return 0.0;  // single realizations: no replicate scatter to floor on
}

std::vector<double> means_of(const std::vector<Prediction>& preds) {
  std::vector<double> m(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) m[i] = preds[i].mean;
  return m;
}

struct Fitted {
  MetricsRow row;
  Curve curve;
};

template <typename Model, typename PredictFn>
Fitted score_model(const Model& model, PredictFn predict, const TaskData& data,
                   const std::vector<double>& probes, MetricsRow row) {
  const auto start = Clock::now();
  const auto test_preds = predict(model, data.test.xs);
  row.predict_seconds = seconds_since(start);
  const auto m = means_of(test_preds);
  row.rmse = rmse(m, data.test.ys);
  try {
    row.r2 = r_squared(m, data.test.ys);
  } catch (const std::invalid_argument&) {
    row.r2 = std::numeric_limits<double>::quiet_NaN();
  }
  Curve curve{row.model, row.n_exp_sets, row.n_sim_points, probes, predict(model, probes)};
  return {row, std::move(curve)};
}

Fitted fit_and_score_gp(const std::map<double, std::vector<double>>& l2, double floor,
                        const TaskData& data, const std::vector<double>& probes,
                        const OptimizerConfig& optimizer) {
  GpTrainingData gd;
  append_groups(l2, gd.xs, gd.ys);
  const auto start = Clock::now();
  const TrainedGp gp = gp_fit(gd, default_gp_box(gd, floor), optimizer);
  MetricsRow row{"gp", static_cast<int>(l2.size()), 0, 0.0, 0.0, seconds_since(start), 0.0};
  return score_model(gp, [](const TrainedGp& m, std::span<const double> x) { return gp_predict(m, x); },
                     data, probes, row);
}

Fitted fit_and_score_mf(const std::map<double, std::vector<double>>& l2,
                        const std::vector<double>& l1_x, const std::vector<double>& l1_y,
                        double floor, const TaskData& data, const std::vector<double>& probes,
                        const OptimizerConfig& optimizer) {
  MfTrainingData md;
  md.x_l1 = l1_x;
  md.y_l1 = l1_y;
  append_groups(l2, md.x_l2, md.y_l2);
  const auto start = Clock::now();
  const TrainedMfGp mf = mf_fit(md, default_mf_box(md, floor), floor, optimizer);
  MetricsRow row{"mfgp", static_cast<int>(l2.size()), static_cast<int>(l1_x.size()), 0.0, 0.0,
                 seconds_since(start), 0.0};
  return score_model(mf, [](const TrainedMfGp& m, std::span<const double> x) { return mf_predict(m, x); },
                     data, probes, row);
}

}  // namespace

std::vector<std::size_t> farthest_point_order(std::span<const double> candidates,
                                              std::span<const double> anchors) {
  std::vector<double> min_dist(candidates.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (double a : anchors) min_dist[i] = std::min(min_dist[i], std::abs(candidates[i] - a));

  std::vector<std::size_t> order;
  std::vector<bool> taken(candidates.size(), false);
  while (order.size() < candidates.size()) {
    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (taken[i]) continue;
      if (best == candidates.size() || min_dist[i] > min_dist[best] ||
          (min_dist[i] == min_dist[best] && candidates[i] < candidates[best]))
        best = i;
    }
    taken[best] = true;
    order.push_back(best);
    for (std::size_t i = 0; i < candidates.size(); ++i)
      min_dist[i] = std::min(min_dist[i], std::abs(candidates[i] - candidates[best]));
  }
  return order;
}

TaskResult run_task1(const TaskData& data, const std::vector<double>& l2_states,
                     std::optional<int> max_added, const OptimizerConfig& optimizer) {
  const auto l2 = select_states(data, l2_states);
  const int available = static_cast<int>(data.l1_x.size());
  const int k_max = max_added.value_or(available);
  if (k_max > available)
    throw DataError("task1: asked for " + std::to_string(k_max) + " L1 points but only " +
                    std::to_string(available) + " exist");

  const double floor = floor_for(l2);
  const auto probes = probe_grid(all_states(data), 201);
  const auto order = farthest_point_order(data.l1_x, l2_states);

  TaskResult result;
  auto gp = fit_and_score_gp(l2, floor, data, probes, optimizer);
  result.rows.push_back(gp.row);
  result.curves.push_back(std::move(gp.curve));

  std::vector<double> l1_x;
  std::vector<double> l1_y;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) {
      l1_x.push_back(data.l1_x[order[static_cast<std::size_t>(k - 1)]]);
      l1_y.push_back(data.l1_y[order[static_cast<std::size_t>(k - 1)]]);
    }
    auto mf = fit_and_score_mf(l2, l1_x, l1_y, floor, data, probes, optimizer);
    result.rows.push_back(mf.row);
    result.curves.push_back(std::move(mf.curve));
  }
  return result;
}

std::vector<double> replacement_order(const std::vector<double>& states,
                                      const std::vector<double>& pinned, ReplacementOrder order,
                                      const std::vector<double>& explicit_order) {
  auto is_pinned = [&](double s) {
    return std::find(pinned.begin(), pinned.end(), s) != pinned.end();
  };
  if (order == ReplacementOrder::Explicit) {
    for (double s : explicit_order) {
      if (std::find(states.begin(), states.end(), s) == states.end())
        throw ConfigError("task2.order lists unknown state " + csv::format_double(s));
      if (is_pinned(s)) throw ConfigError("task2.order lists pinned state " + csv::format_double(s));
    }
    return explicit_order;
  }
  if (states.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(states.begin(), states.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> interior;
  for (double s : states)
    if (!is_pinned(s)) interior.push_back(s);
  auto edge_distance = [&](double s) { return std::min(s - lo, hi - s); };
  std::stable_sort(interior.begin(), interior.end(), [&](double a, double b) {
    const double da = edge_distance(a);
    const double db = edge_distance(b);
    return da != db ? da < db : a < b;
  });
  if (order == ReplacementOrder::InsideOut) std::reverse(interior.begin(), interior.end());
  return interior;
}

TaskResult run_task2(const TaskData& data, const std::vector<double>& order,
                     const OptimizerConfig& optimizer) {
  const double floor = floor_for(data.l2_train);
  const auto probes = probe_grid(all_states(data), 201);
  TaskResult result;
  for (std::size_t r = 0; r <= order.size(); ++r) {
    auto l2 = data.l2_train;
    std::vector<double> l1_x;
    std::vector<double> l1_y;
    std::set<double> used_states;
    for (std::size_t k = 0; k < r; ++k) {
      l2.erase(order[k]);
      if (data.l1_x.empty()) continue;
      double nearest = data.l1_x.front();
      for (double x : data.l1_x)
        if (std::abs(x - order[k]) < std::abs(nearest - order[k]) ||
            (std::abs(x - order[k]) == std::abs(nearest - order[k]) && x < nearest))
          nearest = x;
      if (!used_states.insert(nearest).second) continue;
      for (std::size_t i = 0; i < data.l1_x.size(); ++i)
        if (data.l1_x[i] == nearest) {
          l1_x.push_back(data.l1_x[i]);
          l1_y.push_back(data.l1_y[i]);
        }
    }
    if (l2.empty()) throw DataError("task2: replacement removed every L2 state");
    auto gp = fit_and_score_gp(l2, floor, data, probes, optimizer);
    auto mf = fit_and_score_mf(l2, l1_x, l1_y, floor, data, probes, optimizer);
    result.rows.push_back(gp.row);
    result.rows.push_back(mf.row);
    result.curves.push_back(std::move(gp.curve));
    result.curves.push_back(std::move(mf.curve));
  }
  return result;
}

Task3Result run_task3(const TaskData& data, const std::vector<double>& initial_states,
                      const ExperimentConfig& config) {
  const auto l2 = select_states(data, initial_states);
  MfTrainingData initial;
  append_groups(l2, initial.x_l2, initial.y_l2);
  const double floor = floor_for(l2);

  std::function<double(double)> base_curve = data.truth;
  const bool wants_l2_loss =
      std::find(config.task3_acquisitions.begin(), config.task3_acquisitions.end(),
                AcquisitionKind::L2Loss) != config.task3_acquisitions.end();
  if (wants_l2_loss && !base_curve) {
    GpTrainingData all;
    append_groups(data.l2_train, all.xs, all.ys);
    const auto reference = std::make_shared<TrainedGp>(
        gp_fit(all, default_gp_box(all, floor_for(data.l2_train)), config.optimizer));
    base_curve = [reference](double x) {
      const double xs[] = {x};
      return gp_predict(*reference, xs).front().mean;
    };
  }

  Task3Result result;
  auto launch = [&](AcquisitionKind kind, std::uint64_t seed, std::string label) {
    AcquisitionSpec spec{kind, config.task3_lambda, config.task3_xi, {}};
    if (kind == AcquisitionKind::L2Loss) spec.base_curve = base_curve;
    ActiveLoopConfig loop;
    loop.optimizer = config.optimizer;
    loop.optimizer.seed = seed;
    loop.floor = floor;
    loop.selection_seed = seed;
    result.runs.push_back({std::move(label), seed,
                           run_active_loop(initial, CandidatePool(data.l1_x, data.l1_y), spec,
                                           config.task3_iterations, data.test, loop)});
  };
  for (AcquisitionKind kind : config.task3_acquisitions) {
    if (kind == AcquisitionKind::Random) continue;
    launch(kind, config.seed, to_string(kind));
  }
  for (int s = 0; s < config.task3_random_seeds; ++s) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(s);
    launch(AcquisitionKind::Random, seed, "random_s" + std::to_string(seed));
  }

  if (!result.runs.empty()) {
    const auto& h = result.runs.front().history;
    result.summary.push_back({"gp", static_cast<int>(l2.size()), 0, h.baseline_rmse,
                              h.baseline_r2, 0.0, 0.0});
  }
  for (const auto& run : result.runs) {
    const auto& its = run.history.iterations;
    if (its.empty()) continue;
    const auto best = std::min_element(its.begin(), its.end(), [](const auto& a, const auto& b) {
      return a.rmse < b.rmse;
    });
    result.summary.push_back({run.label, static_cast<int>(l2.size()), best->iteration,
                              best->rmse, best->r2, best->fit_seconds, best->predict_seconds});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

void write_metrics_csv(const fs::path& file, const std::vector<MetricsRow>& rows) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << "model,n_exp_sets,n_sim_points,rmse,r2,fit_seconds,predict_seconds\n";
  for (const auto& r : rows)
    out << r.model << ',' << r.n_exp_sets << ',' << r.n_sim_points << ','
        << csv::format_double(r.rmse) << ',' << csv::format_double(r.r2) << ','
        << csv::format_double(r.fit_seconds) << ',' << csv::format_double(r.predict_seconds)
        << '\n';
}

void write_curves_csv(const fs::path& file, const std::vector<Curve>& curves) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << "model,n_exp_sets,n_sim_points,x,mean,lower,upper\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.xs.size(); ++i) {
      const double half = 1.96 * std::sqrt(c.preds[i].variance);
      out << c.model << ',' << c.n_exp_sets << ',' << c.n_sim_points << ','
          << csv::format_double(c.xs[i]) << ',' << csv::format_double(c.preds[i].mean) << ','
          << csv::format_double(c.preds[i].mean - half) << ','
          << csv::format_double(c.preds[i].mean + half) << '\n';
    }
}

fs::path make_output_dir(const ExperimentConfig& config) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream stamp;
  stamp << std::put_time(&tm, "%Y%m%dT%H%M%S") << '_' << std::setw(3) << std::setfill('0') << ms;

  const fs::path parent = config.output / to_string(config.task);
  fs::path dir = parent / stamp.str();
  for (int suffix = 1; fs::exists(dir); ++suffix)
    dir = parent / (stamp.str() + "-" + std::to_string(suffix));
  fs::create_directories(dir);
  std::ofstream(dir / "config.json", std::ios::binary) << config.raw.dump(2) << '\n';
  return dir;
}

namespace {

std::vector<double> default_l2_states(const ExperimentConfig& config, const TaskData& data) {
  if (!config.l2_states.empty()) return config.l2_states;
  if (config.synth && config.task != Task::Task3) {
    std::vector<double> s;
    for (const auto& [state, values] : data.l2_train) s.push_back(state);
    return s;
  }
  return data.pinned_states;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

void run_extract_di(const ExperimentConfig& config, const fs::path& dir) {
  SignalSet set = load_signal_set(*config.signals_root);
  if (config.window) {
    for (auto& r : set.records) {
      try {
        r.signal = extract_first_packet(r.signal, config.window->start, config.window->length,
                                        config.window->taper);
      } catch (const std::out_of_range& e) {
        throw DataError("path " + r.path_id + ", state " + csv::format_double(r.state) + ": " +
                        e.what());
      }
    }
  }
  const auto paths = config.paths.empty() ? set.path_ids() : config.paths;
  json summary = json::object();
  for (const auto& path : paths) {
    const DiDataset ds = build_di_dataset(set, path, config.di_kind);
    write_di_csv(dir / ("di_" + path + ".csv"), ds);

    std::map<std::pair<double, std::string>, std::vector<double>> groups;
    for (const auto& p : ds.points) groups[{p.state, to_string(p.fidelity)}].push_back(p.value);
    json states = json::array();
    for (const auto& [key, values] : groups) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double var = values.size() > 1 ? ss / static_cast<double>(values.size() - 1) : 0.0;
      states.push_back({{"state", key.first},
                        {"fidelity", key.second},
                        {"count", values.size()},
                        {"mean", mean},
                        {"variance", var}});
    }
    summary[path] = {{"di_kind", to_string(config.di_kind)}, {"states", states}};
  }
  write_json(dir / "summary.json", summary);
}

void run_reconstruct(const ExperimentConfig& config, const fs::path& dir) {
  const auto& spec = *config.reconstruct;
  const CompensationModel model = compensation_from_json(spec.model);
  const Signal baseline = read_waveform_csv(spec.baseline, spec.sample_rate_hz);
  json records = json::array();
  for (std::size_t i = 0; i < spec.loads.size(); ++i) {
    const auto strain = StrainState::uniform(spec.loads[i], spec.strain_per_load,
                                             model.segment_lengths.size());
    Signal packet;
    try {
      packet = reconstruct(model, baseline, strain);
    } catch (const std::invalid_argument& e) {
      throw DataError("load " + csv::format_double(spec.loads[i]) + ": " + e.what());
    }
    const std::string file = "rec_" + std::to_string(i) + ".csv";
    write_waveform_csv(dir / file, packet);
    records.push_back({{"file", file},
                       {"path_id", spec.path_id},
                       {"state", spec.loads[i]},
                       {"realization", 0},
                       {"fidelity", "L1"}});
  }
  write_json(dir / "manifest.json", {{"sample_rate_hz", spec.sample_rate_hz},
                                     {"state_unit", spec.state_unit},
                                     {"records", records}});
}

}  // namespace

fs::path run_command(const ExperimentConfig& config) {
  const fs::path dir = make_output_dir(config);
  switch (config.task) {
    case Task::ExtractDi:
      run_extract_di(config, dir);
      break;
    case Task::Synth: {
      auto ds = to_di_dataset(generate(*config.synth));
      ds.kind = config.di_kind;
      write_di_csv(dir / "di.csv", ds);
      break;
    }
    case Task::Reconstruct:
      run_reconstruct(config, dir);
      break;
    case Task::FitGp: {
      const TaskData data = prepare_task_data(config);
      GpTrainingData gd;
      append_groups(data.l2_train, gd.xs, gd.ys);
      const TrainedGp gp = gp_fit(gd, default_gp_box(gd, floor_for(data.l2_train)),
                                  config.optimizer);
      write_json(dir / "model.json", to_json(gp));
      const auto probes = probe_grid(all_states(data), 201);
      auto f = score_model(gp, [](const TrainedGp& m, std::span<const double> x) { return gp_predict(m, x); },
                           data, probes, {"gp", static_cast<int>(data.l2_train.size()), 0});
      write_metrics_csv(dir / "metrics.csv", {f.row});
      write_curves_csv(dir / "curves.csv", {f.curve});
      break;
    }
    case Task::FitMfGp: {
      const TaskData data = prepare_task_data(config);
      MfTrainingData md{data.l1_x, data.l1_y, {}, {}};
      append_groups(data.l2_train, md.x_l2, md.y_l2);
      const double floor = floor_for(data.l2_train);
      const TrainedMfGp mf = mf_fit(md, default_mf_box(md, floor), floor, config.optimizer);
      write_json(dir / "model.json", to_json(mf));
      const auto probes = probe_grid(all_states(data), 201);
      auto f = score_model(mf, [](const TrainedMfGp& m, std::span<const double> x) { return mf_predict(m, x); },
                           data, probes,
                           {"mfgp", static_cast<int>(data.l2_train.size()),
                            static_cast<int>(data.l1_x.size())});
      write_metrics_csv(dir / "metrics.csv", {f.row});
      write_curves_csv(dir / "curves.csv", {f.curve});
      break;
    }
    case Task::Task1: {
      const TaskData data = prepare_task_data(config);
      const auto result = run_task1(data, default_l2_states(config, data),
                                    config.task1_max_added, config.optimizer);
      write_metrics_csv(dir / "metrics.csv", result.rows);
      write_curves_csv(dir / "curves.csv", result.curves);
      break;
    }
    case Task::Task2: {
      const TaskData data = prepare_task_data(config);
      std::vector<double> states;
      for (const auto& [state, values] : data.l2_train) states.push_back(state);
      const auto order = replacement_order(states, data.pinned_states, config.task2_order,
                                           config.task2_explicit_order);
      const auto result = run_task2(data, order, config.optimizer);
      write_metrics_csv(dir / "metrics.csv", result.rows);
      write_curves_csv(dir / "curves.csv", result.curves);
      break;
    }
    case Task::Task3: {
      const TaskData data = prepare_task_data(config);
      const auto result = run_task3(data, default_l2_states(config, data), config);
      std::ofstream trend(dir / "trend.csv", std::ios::binary);
      trend << "run,iteration,selected_state,rmse,r2\n";
      for (const auto& run : result.runs) {
        write_history_csv(dir / ("history_" + run.label + ".csv"), run.history);
        write_json(dir / ("history_" + run.label + "_params.json"),
                   history_params_json(run.history));
        for (const auto& it : run.history.iterations)
          trend << run.label << ',' << it.iteration << ',' << csv::format_double(it.selected_state)
                << ',' << csv::format_double(it.rmse) << ',' << csv::format_double(it.r2) << '\n';
      }
      write_metrics_csv(dir / "summary.csv", result.summary);
      break;
    }
  }
  return dir;
}

}  // namespace mfgp
