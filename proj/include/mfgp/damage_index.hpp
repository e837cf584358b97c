#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfgp/signal.hpp"

namespace mfgp {

enum class DiKind { Janapati, Rmsd };

std::string to_string(DiKind kind);
DiKind parse_di_kind(const std::string& text);

struct DiValue {
  double state = 0.0;
  double value = 0.0;
  Fidelity fidelity = Fidelity::L2;
  std::string path_id;
  int realization = 0;
};

struct DiDataset {
  std::vector<DiValue> points;
  DiKind kind = DiKind::Rmsd;

  void validate() const;  // requires at least one L2 point
};

// Both DIs operate on energy-normalized copies of their inputs, so they are
// invariant to the amplitude of either signal.

/// Janapati DI. The unknown signal is normalized, projected onto the baseline
/// direction, and the residual energy is returned: 1 - cos^2 of the angle
/// between the two signals, so always within [0, 1].
double di_janapati(const Signal& baseline, const Signal& unknown);

/// Root-mean-square deviation between the normalized signals.
double di_rmsd(const Signal& baseline, const Signal& unknown);

double damage_index(DiKind kind, const Signal& baseline, const Signal& unknown);

/// One DI per record on `path_id`. Each fidelity level is compared with its
/// own baseline: the lowest-realization record at the manifest's baseline
/// state. The baseline record itself yields DI 0.
DiDataset build_di_dataset(const SignalSet& signals, const std::string& path_id, DiKind kind);

/// CSV with header `state,value,fidelity,path_id,realization`.
void write_di_csv(const std::filesystem::path& file, const DiDataset& dataset);
DiDataset read_di_csv(const std::filesystem::path& file, DiKind kind = DiKind::Rmsd);

}  // namespace mfgp
