#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfgp/damage_index.hpp"
#include "mfgp/mfgp.hpp"

namespace mfgp {

enum class SynthFamily { Forrester, LinearRho, DiLike };

std::string to_string(SynthFamily family);
SynthFamily parse_synth_family(const std::string& text);

struct SynthConfig {
  SynthFamily family = SynthFamily::Forrester;
  double noise_l2 = 0.0;  // variance of the additive L2 noise
  int n_l1 = 11;
  int n_l2 = 4;
  std::uint64_t seed = 0;
  double lo = 0.0;
  double hi = 1.0;
  // Explicit L2 states; when non-empty they replace the n_l2 uniform states.
  std::vector<double> l2_states;
  int l2_realizations = 1;
  // LinearRho family: f2 = rho * f1 + offset.
  double rho = 2.0;
  double offset = 0.5;

  void validate() const;
};

/// Noise-free response curves of one family, evaluated on the configured domain.
struct SynthTruth {
  SynthConfig config;
  double high(double x) const;
  double low(double x) const;
};

struct SynthDataset {
  MfTrainingData data;
  SynthTruth truth;
};

/// Uniform L1 states (noise-free) and L2 states with l2_realizations noisy
/// draws each. Forrester on the unit interval:
///   f2(x) = (6x - 2)^2 sin(12x - 4),  f1(x) = 0.5 f2(x) + 10 (x - 0.5) - 5.
/// Other domains are mapped affinely onto [0, 1].
SynthDataset generate(const SynthConfig& config);

/// n points from lo to hi inclusive (lo alone when n == 1).
std::vector<double> linspace(double lo, double hi, int n);

/// Exports generated data in the DI dataset layout (path_id "synth").
DiDataset to_di_dataset(const SynthDataset& synth);

}  // namespace mfgp
