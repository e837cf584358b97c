#include "mfgp/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mfgp {

std::string to_string(SynthFamily family) {
  switch (family) {
    case SynthFamily::Forrester: return "forrester";
    case SynthFamily::LinearRho: return "linear_rho";
    case SynthFamily::DiLike: return "di_like";
  }
  return "forrester";
}

SynthFamily parse_synth_family(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "forrester") return SynthFamily::Forrester;
  if (lower == "linear_rho") return SynthFamily::LinearRho;
  if (lower == "di_like") return SynthFamily::DiLike;
  throw std::invalid_argument("unknown synthetic family '" + text + "'");
}

void SynthConfig::validate() const {
  if (!(lo < hi)) throw std::invalid_argument("synth domain needs lo < hi");
  if (l2_states.empty() && n_l2 < 1) throw std::invalid_argument("synth needs n_l2 >= 1");
  if (n_l1 < 0) throw std::invalid_argument("synth needs n_l1 >= 0");
  if (l2_realizations < 1) throw std::invalid_argument("synth needs l2_realizations >= 1");
  if (!(noise_l2 >= 0.0)) throw std::invalid_argument("synth noise_l2 must be >= 0");
}

namespace {

double forrester_high(double u) {
  const double a = 6.0 * u - 2.0;
  return a * a * std::sin(12.0 * u - 4.0);
}

// Monotone growth plus a localized bump, on the scale of guided-wave DIs.
double di_trend(double u) { return 0.04 * u * u + 0.01 * u; }
double di_bump(double u) {
  const double r = (u - 0.45) / 0.08;
  return 0.006 * std::exp(-0.5 * r * r);
}

double linear_rho_low(double u) { return std::sin(2.0 * 3.141592653589793 * u) + u; }

}  // namespace

double SynthTruth::high(double x) const {
  const double u = (x - config.lo) / (config.hi - config.lo);
  switch (config.family) {
    case SynthFamily::Forrester: return forrester_high(u);
    case SynthFamily::LinearRho: return config.rho * linear_rho_low(u) + config.offset;
    case SynthFamily::DiLike: return di_trend(u) + di_bump(u);
  }
  return 0.0;
}

double SynthTruth::low(double x) const {
  const double u = (x - config.lo) / (config.hi - config.lo);
  switch (config.family) {
    case SynthFamily::Forrester: return 0.5 * forrester_high(u) + 10.0 * (u - 0.5) - 5.0;
    case SynthFamily::LinearRho: return linear_rho_low(u);
    case SynthFamily::DiLike: return 0.8 * di_trend(u) + 0.5 * di_bump(u) + 0.003;
  }
  return 0.0;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs;
  if (n <= 0) return xs;
  if (n == 1) return {lo};
  xs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    xs.push_back(i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  return xs;
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  SynthDataset out{{}, SynthTruth{config}};
  for (double x : linspace(config.lo, config.hi, config.n_l1)) {
    out.data.x_l1.push_back(x);
    out.data.y_l1.push_back(out.truth.low(x));
  }
  const auto l2_states =
      config.l2_states.empty() ? linspace(config.lo, config.hi, config.n_l2) : config.l2_states;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sd = std::sqrt(config.noise_l2);
  for (double x : l2_states) {
    for (int r = 0; r < config.l2_realizations; ++r) {
      out.data.x_l2.push_back(x);
      out.data.y_l2.push_back(out.truth.high(x) + sd * noise(rng));
    }
  }
  return out;
}

DiDataset to_di_dataset(const SynthDataset& synth) {
  DiDataset ds{{}, DiKind::Rmsd};
  const auto& d = synth.data;
  for (std::size_t i = 0; i < d.x_l1.size(); ++i)
    ds.points.push_back({d.x_l1[i], d.y_l1[i], Fidelity::L1, "synth", 0});
  int realization = 0;
  for (std::size_t i = 0; i < d.x_l2.size(); ++i) {
    realization = (i > 0 && d.x_l2[i] == d.x_l2[i - 1]) ? realization + 1 : 0;
    ds.points.push_back({d.x_l2[i], d.y_l2[i], Fidelity::L2, "synth", realization});
  }
  return ds;
}

}  // namespace mfgp
