#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfgp/damage_index.hpp"

namespace mfgp {

double rmse(std::span<const double> pred, std::span<const double> truth);

/// 1 - SS_res / SS_tot, with SS_tot about the mean of `truth`.
double r_squared(std::span<const double> pred, std::span<const double> truth);

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
  // States whose high-fidelity data is always used for training downstream.
  // The split itself treats them like any other state.
  std::vector<double> always_include_states;

  void validate() const;
};

struct DatasetSplit {
  DiDataset train;
  DiDataset test;
  std::vector<std::string> warnings;
};

/// Per L2 state, a seeded shuffle of its realizations sends
/// floor(train_fraction * count) to train and the rest to test. L1 points are
/// train-only. Output order follows the input order within each side.
DatasetSplit split_realizations(const DiDataset& dataset, const SplitSpec& spec);

}  // namespace mfgp
