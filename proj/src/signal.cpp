#include "mfgp/signal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "mfgp/csv.hpp"
#include "mfgp/errors.hpp"

namespace mfgp {

namespace {

constexpr double kMinSamplesPerCycle = 10.0;
constexpr double kTaperFraction = 0.1;

const std::set<std::string> kStateUnits{"mm", "m", "N", "kN", "none"};

}  // namespace

std::string to_string(Fidelity f) { return f == Fidelity::L1 ? "L1" : "L2"; }

Fidelity parse_fidelity(const std::string& text) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "L1") return Fidelity::L1;
  if (upper == "L2") return Fidelity::L2;
  throw std::invalid_argument("unknown fidelity '" + text + "' (expected L1 or L2)");
}

void Signal::validate() const {
  if (samples.empty()) throw std::invalid_argument("signal has no samples");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw std::invalid_argument("signal sample rate must be positive");
  for (double s : samples)
    if (!std::isfinite(s)) throw std::invalid_argument("signal contains a non-finite sample");
}

double Signal::energy() const {
  double e = 0.0;
  for (double s : samples) e += s * s;
  return e;
}

std::vector<const SignalRecord*> SignalSet::on_path(const std::string& path_id) const {
  std::vector<const SignalRecord*> out;
  for (const auto& r : records)
    if (r.path_id == path_id) out.push_back(&r);
  return out;
}

std::vector<std::string> SignalSet::path_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : records)
    if (std::find(ids.begin(), ids.end(), r.path_id) == ids.end()) ids.push_back(r.path_id);
  return ids;
}

Signal tone_burst(double center_freq, int n_peaks, double sample_rate, double amplitude) {
  if (!(center_freq > 0.0) || n_peaks < 1 || !(sample_rate > 0.0) || !(amplitude >= 0.0))
    throw std::invalid_argument("tone_burst: frequency, peaks and rate must be positive");
  if (sample_rate < kMinSamplesPerCycle * center_freq)
    throw std::invalid_argument("tone_burst: sample rate below 10x the centre frequency");

  const double duration = n_peaks / center_freq;
  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  Signal s{std::vector<double>(n), sample_rate, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double window = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / duration));
    s.samples[i] = amplitude * window * std::sin(2.0 * std::numbers::pi * center_freq * t);
  }
  return s;
}

Signal extract_first_packet(const Signal& signal, double window_start, double window_len,
                            bool taper) {
  signal.validate();
  const long length = std::lround(window_len * signal.sample_rate);
  const long first = std::lround((window_start - signal.t0) * signal.sample_rate);
  if (!(window_len > 0.0) || length < 1)
    throw std::out_of_range("extract_first_packet: window length must cover at least one sample");
  if (first < 0 || first + length > static_cast<long>(signal.size()))
    throw std::out_of_range("extract_first_packet: window lies outside the signal");

  Signal out{std::vector<double>(signal.samples.begin() + first,
                                 signal.samples.begin() + first + length),
             signal.sample_rate, signal.t0 + static_cast<double>(first) / signal.sample_rate};
  if (taper) {
    const auto edge = static_cast<std::size_t>(std::floor(0.5 * kTaperFraction * length));
    for (std::size_t i = 0; i < edge; ++i) {
      const double w =
          0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(edge)));
      out.samples[i] *= w;
      out.samples[out.size() - 1 - i] *= w;
    }
  }
  return out;
}

Signal normalize_energy(const Signal& signal) {
  signal.validate();
  const double e = signal.energy();
  if (!(e > 0.0)) throw std::invalid_argument("normalize_energy: signal has zero energy");
  const double scale = 1.0 / std::sqrt(e);
  Signal out = signal;
  for (double& s : out.samples) s *= scale;
  return out;
}

Signal read_waveform_csv(const std::filesystem::path& file, double sample_rate) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open waveform file " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(file.string() + ": empty file");
  if (csv::split_line(line) != std::vector<std::string>{"sample_index", "amplitude"})
    throw DataError(file.string() + ": header must be 'sample_index,amplitude'");

  Signal s{{}, sample_rate, 0.0};
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_line(line);
    long index = 0;
    double amplitude = 0.0;
    if (fields.size() != 2 || !csv::parse_int(fields[0], index) ||
        !csv::parse_double(fields[1], amplitude))
      throw DataError(file.string() + ": malformed row " + std::to_string(row));
    if (!std::isfinite(amplitude))
      throw DataError(file.string() + ": non-finite amplitude at row " + std::to_string(row));
    if (index != static_cast<long>(s.samples.size()))
      throw DataError(file.string() + ": sample_index out of sequence at row " +
                      std::to_string(row));
    s.samples.push_back(amplitude);
  }
  if (s.samples.empty()) throw DataError(file.string() + ": no samples");
  return s;
}

void write_waveform_csv(const std::filesystem::path& file, const Signal& signal) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write waveform file " + file.string());
  out << "sample_index,amplitude\n";
  for (std::size_t i = 0; i < signal.size(); ++i)
    out << i << ',' << csv::format_double(signal.samples[i]) << '\n';
}

namespace {

void reject_unknown(const nlohmann::json& object, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : object.items())
    if (!allowed.contains(key)) throw DataError(where + ": unknown field '" + key + "'");
}

}  // namespace

SignalSet load_signal_set(const std::filesystem::path& root_path) {
  const auto manifest_path = root_path / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("missing manifest " + manifest_path.string());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }

  SignalSet set;
  std::set<std::tuple<std::string, double, int, Fidelity>> keys;
  try {
    if (!j.is_object()) throw DataError(manifest_path.string() + ": manifest must be an object");
    reject_unknown(j, {"sample_rate_hz", "baseline_state", "state_unit", "records"},
                   manifest_path.string());
    set.manifest.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    set.manifest.state_unit = j.at("state_unit").get<std::string>();
    if (!(set.manifest.sample_rate_hz > 0.0))
      throw DataError(manifest_path.string() + ": sample_rate_hz must be positive");
    if (!kStateUnits.contains(set.manifest.state_unit))
      throw DataError(manifest_path.string() + ": unsupported state_unit '" +
                      set.manifest.state_unit + "'");

    for (const auto& r : j.at("records")) {
      reject_unknown(r, {"file", "path_id", "state", "realization", "fidelity"},
                     manifest_path.string() + " record");
      SignalRecord rec;
      const auto file = r.at("file").get<std::string>();
      rec.path_id = r.at("path_id").get<std::string>();
      rec.state = r.at("state").get<double>();
      rec.realization = r.at("realization").get<int>();
      rec.fidelity = parse_fidelity(r.at("fidelity").get<std::string>());
      if (rec.realization < 0)
        throw DataError(manifest_path.string() + ": negative realization for " + file);
      if (!keys.emplace(rec.path_id, rec.state, rec.realization, rec.fidelity).second)
        throw DataError(manifest_path.string() + ": duplicate record key for " + file);
      const auto file_path = root_path / file;
      if (!std::filesystem::exists(file_path))
        throw DataError("manifest references missing file " + file_path.string());
      rec.signal = read_waveform_csv(file_path, set.manifest.sample_rate_hz);
      set.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }

  if (set.records.empty()) throw DataError(manifest_path.string() + ": no records");
  if (j.contains("baseline_state")) {
    if (!j["baseline_state"].is_number())
      throw DataError(manifest_path.string() + ": baseline_state must be a number");
    set.manifest.baseline_state = j["baseline_state"].get<double>();
  } else {
    set.manifest.baseline_state =
        std::min_element(set.records.begin(), set.records.end(),
                         [](const auto& a, const auto& b) { return a.state < b.state; })
            ->state;
  }
  return set;
}

}  // namespace mfgp
