#include "mfgp/damage_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "mfgp/csv.hpp"
#include "mfgp/errors.hpp"

namespace mfgp {

std::string to_string(DiKind kind) { return kind == DiKind::Janapati ? "janapati" : "rmsd"; }

DiKind parse_di_kind(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "janapati") return DiKind::Janapati;
  if (lower == "rmsd") return DiKind::Rmsd;
  throw std::invalid_argument("unknown DI kind '" + text + "' (expected janapati or rmsd)");
}

void DiDataset::validate() const {
  const bool has_l2 = std::any_of(points.begin(), points.end(),
                                  [](const DiValue& p) { return p.fidelity == Fidelity::L2; });
  if (!has_l2) throw DataError("DI dataset has no L2 points");
}

namespace {

void check_lengths(const Signal& a, const Signal& b, std::size_t min_length) {
  if (a.size() != b.size()) throw std::invalid_argument("DI: signal lengths differ");
  if (a.size() < min_length) throw std::invalid_argument("DI: signals are too short");
}

}  // namespace

double di_janapati(const Signal& baseline, const Signal& unknown) {
  check_lengths(baseline, unknown, 2);
  const auto y0 = normalize_energy(baseline).samples;
  const auto yu = normalize_energy(unknown).samples;

  double cross = 0.0;
  double base_energy = 0.0;
  for (std::size_t t = 0; t < y0.size(); ++t) {
    cross += y0[t] * yu[t];
    base_energy += y0[t] * y0[t];
  }
  const double coeff = cross / base_energy;
  double di = 0.0;
  for (std::size_t t = 0; t < y0.size(); ++t) {
    const double r = yu[t] - coeff * y0[t];
    di += r * r;
  }
  return di;
}

double di_rmsd(const Signal& baseline, const Signal& unknown) {
  check_lengths(baseline, unknown, 1);
  const auto y0 = normalize_energy(baseline).samples;
  const auto yu = normalize_energy(unknown).samples;
  double ss = 0.0;
  for (std::size_t t = 0; t < y0.size(); ++t) ss += (y0[t] - yu[t]) * (y0[t] - yu[t]);
  return std::sqrt(ss / static_cast<double>(y0.size()));
}

double damage_index(DiKind kind, const Signal& baseline, const Signal& unknown) {
  return kind == DiKind::Janapati ? di_janapati(baseline, unknown) : di_rmsd(baseline, unknown);
}

DiDataset build_di_dataset(const SignalSet& signals, const std::string& path_id, DiKind kind) {
  const auto records = signals.on_path(path_id);
  if (records.empty()) throw DataError("no records on path " + path_id);

  const double rate = records.front()->signal.sample_rate;
  for (const auto* r : records)
    if (r->signal.sample_rate != rate)
      throw DataError("path " + path_id + " mixes sample rates");

  std::map<Fidelity, const SignalRecord*> baselines;
  for (const auto* r : records) {
    if (r->state != signals.manifest.baseline_state) continue;
    auto& slot = baselines[r->fidelity];
    if (slot == nullptr || r->realization < slot->realization) slot = r;
  }

  DiDataset out{{}, kind};
  for (const auto* r : records) {
    const auto it = baselines.find(r->fidelity);
    if (it == baselines.end())
      throw DataError("path " + path_id + ": no " + to_string(r->fidelity) +
                      " baseline record at state " +
                      csv::format_double(signals.manifest.baseline_state));
    double value = 0.0;
    try {
      value = damage_index(kind, it->second->signal, r->signal);
    } catch (const std::invalid_argument& e) {
      throw DataError("path " + path_id + ", state " + csv::format_double(r->state) +
                      ", realization " + std::to_string(r->realization) + ": " + e.what());
    }
    out.points.push_back({r->state, value, r->fidelity, r->path_id, r->realization});
  }
  return out;
}

void write_di_csv(const std::filesystem::path& file, const DiDataset& dataset) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write DI file " + file.string());
  out << "state,value,fidelity,path_id,realization\n";
  for (const auto& p : dataset.points)
    out << csv::format_double(p.state) << ',' << csv::format_double(p.value) << ','
        << to_string(p.fidelity) << ',' << p.path_id << ',' << p.realization << '\n';
}

DiDataset read_di_csv(const std::filesystem::path& file, DiKind kind) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open DI file " + file.string());
  std::string line;
  if (!std::getline(in, line) ||
      csv::split_line(line) !=
          std::vector<std::string>{"state", "value", "fidelity", "path_id", "realization"})
    throw DataError(file.string() + ": header must be 'state,value,fidelity,path_id,realization'");

  DiDataset out{{}, kind};
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    DiValue v;
    long realization = 0;
    const auto where = file.string() + ": row " + std::to_string(row);
    if (f.size() != 5 || !csv::parse_double(f[0], v.state) || !csv::parse_double(f[1], v.value) ||
        !csv::parse_int(f[4], realization))
      throw DataError(where + " is malformed");
    if (!std::isfinite(v.state) || !std::isfinite(v.value))
      throw DataError(where + " has a non-finite value");
    try {
      v.fidelity = parse_fidelity(f[2]);
    } catch (const std::invalid_argument& e) {
      throw DataError(where + ": " + e.what());
    }
    v.path_id = f[3];
    v.realization = static_cast<int>(realization);
    out.points.push_back(std::move(v));
  }
  return out;
}

}  // namespace mfgp
