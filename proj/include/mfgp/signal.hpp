#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfgp {

enum class Fidelity { L1, L2 };

std::string to_string(Fidelity f);
// Accepts "L1"/"L2" (case-insensitive); throws std::invalid_argument otherwise.
Fidelity parse_fidelity(const std::string& text);

/// Uniformly sampled waveform. samples in volts, sample_rate in Hz, t0 in s.
struct Signal {
  std::vector<double> samples;
  double sample_rate = 1.0;
  double t0 = 0.0;

  // Throws std::invalid_argument on empty samples, non-positive rate or
  // non-finite values.
  void validate() const;
  std::size_t size() const { return samples.size(); }
  double energy() const;
};

struct SignalRecord {
  Signal signal;
  std::string path_id;
  double state = 0.0;
  int realization = 0;
  Fidelity fidelity = Fidelity::L2;
};

struct SignalManifest {
  double sample_rate_hz = 0.0;
  double baseline_state = 0.0;
  std::string state_unit;
};

struct SignalSet {
  std::vector<SignalRecord> records;
  SignalManifest manifest;

  // Records on one path, in manifest order.
  std::vector<const SignalRecord*> on_path(const std::string& path_id) const;
  std::vector<std::string> path_ids() const;
};

/// Hann-windowed sinusoid spanning n_peaks cycles of center_freq.
Signal tone_burst(double center_freq, int n_peaks, double sample_rate, double amplitude);

/// Clips [window_start, window_start + window_len) (absolute time, seconds).
/// With `taper`, a cosine taper is applied over 10% of the window
/// (5% at each edge).
Signal extract_first_packet(const Signal& signal, double window_start, double window_len,
                            bool taper = false);

/// Scales to unit energy.
Signal normalize_energy(const Signal& signal);

/// Reads <root>/manifest.json and every waveform CSV it references.
SignalSet load_signal_set(const std::filesystem::path& root_path);

/// Waveform CSV with header `sample_index,amplitude`.
Signal read_waveform_csv(const std::filesystem::path& file, double sample_rate);
void write_waveform_csv(const std::filesystem::path& file, const Signal& signal);

}  // namespace mfgp
