#pragma once

#include <vector>

#include <json.hpp>

#include "mfgp/signal.hpp"

namespace mfgp {

/// Linear load-compensation model for first-arrival packets: amplitude changes
/// with actuator/sensor strain (coefficients A, B) and time of arrival shifts
/// with strain integrated along the path segments (K_phase).
struct CompensationModel {
  double a_coeff = 0.0;
  double b_coeff = 0.0;
  double k_phase = 0.0;                 // s per (m * strain)
  std::vector<double> segment_lengths;  // m

  void validate() const;
};

struct StrainState {
  double eps_actuator = 0.0;
  double eps_sensor = 0.0;
  std::vector<double> eps_segments;

  // Uniform strain `load * strain_per_load` everywhere on the path.
  static StrainState uniform(double load, double strain_per_load, std::size_t n_segments);
};

/// 1 + A eps_act + B eps_sen
double amplitude_ratio(const CompensationModel& model, const StrainState& strain);

/// K_phase * sum_i d_i eps_i, seconds.
double delta_toa(const CompensationModel& model, const StrainState& strain);

/// Number of taps of the windowed-sinc interpolator used for fractional shifts.
inline constexpr int kInterpolatorTaps = 8;

/// Samples of `signal` delayed by `delay` seconds (positive = later arrival),
/// zero outside the original support. Integer-sample delays are exact.
Signal fractional_delay(const Signal& signal, double delay, double kaiser_beta = 5.0);

/// Baseline scaled by amplitude_ratio and delayed by delta_toa, same length.
Signal reconstruct(const CompensationModel& model, const Signal& baseline_packet,
                   const StrainState& strain);

struct CalibrationObservation {
  StrainState strain;
  double amplitude_ratio = 1.0;
  double delta_toa = 0.0;
};

struct CalibrationResult {
  CompensationModel model;
  double amplitude_rms_residual = 0.0;
  double toa_rms_residual = 0.0;
};

/// Least-squares fit of (A, B) from the amplitude relation and K_phase from
/// the arrival-time relation. Throws NumericalError when the strain design is
/// rank deficient.
CalibrationResult calibrate(const std::vector<CalibrationObservation>& observations,
                            const std::vector<double>& segment_lengths);

nlohmann::json to_json(const CompensationModel& model);
CompensationModel compensation_from_json(const nlohmann::json& j);

}  // namespace mfgp
