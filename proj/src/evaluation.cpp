#include "mfgp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mfgp/csv.hpp"
#include "mfgp/errors.hpp"

namespace mfgp {

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("rmse: length mismatch");
  if (pred.empty()) throw std::invalid_argument("rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

double r_squared(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("r_squared: length mismatch");
  if (truth.size() < 2) throw std::invalid_argument("r_squared: need at least two points");
  const double mean =
      std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw std::invalid_argument("r_squared: truth vector is constant");
  return 1.0 - ss_res / ss_tot;
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
}

DatasetSplit split_realizations(const DiDataset& dataset, const SplitSpec& spec) {
  spec.validate();
  std::map<double, std::vector<std::size_t>> by_state;
  for (std::size_t i = 0; i < dataset.points.size(); ++i)
    if (dataset.points[i].fidelity == Fidelity::L2) by_state[dataset.points[i].state].push_back(i);

  std::vector<bool> to_train(dataset.points.size(), true);
  DatasetSplit out{{{}, dataset.kind}, {{}, dataset.kind}, {}};
  std::mt19937_64 rng(spec.seed);
  for (auto& [state, indices] : by_state) {
    // Shuffle by realization order so results do not depend on file order.
    std::stable_sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return dataset.points[a].realization < dataset.points[b].realization;
    });
    std::shuffle(indices.begin(), indices.end(), rng);
    const auto n_train =
        static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(indices.size())));
    for (std::size_t k = n_train; k < indices.size(); ++k) to_train[indices[k]] = false;
    if (n_train == 0 || n_train == indices.size())
      out.warnings.push_back("state " + csv::format_double(state) + ": " +
                             (n_train == 0 ? "no training" : "no test") + " realizations");
  }
  for (const auto& w : out.warnings) warn("split: " + w);
  for (std::size_t i = 0; i < dataset.points.size(); ++i)
    (to_train[i] ? out.train : out.test).points.push_back(dataset.points[i]);
  return out;
}

}  // namespace mfgp
