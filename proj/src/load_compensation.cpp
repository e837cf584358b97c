#include "mfgp/load_compensation.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "mfgp/errors.hpp"

namespace mfgp {

void CompensationModel::validate() const {
  if (!std::isfinite(a_coeff) || !std::isfinite(b_coeff) || !std::isfinite(k_phase))
    throw std::invalid_argument("compensation coefficients must be finite");
  if (segment_lengths.empty()) throw std::invalid_argument("compensation model has no segments");
  for (double d : segment_lengths)
    if (!(d > 0.0) || !std::isfinite(d))
      throw std::invalid_argument("segment lengths must be positive");
}

StrainState StrainState::uniform(double load, double strain_per_load, std::size_t n_segments) {
  const double eps = load * strain_per_load;
  return {eps, eps, std::vector<double>(n_segments, eps)};
}

double amplitude_ratio(const CompensationModel& model, const StrainState& strain) {
  return 1.0 + model.a_coeff * strain.eps_actuator + model.b_coeff * strain.eps_sensor;
}

double delta_toa(const CompensationModel& model, const StrainState& strain) {
  if (strain.eps_segments.size() != model.segment_lengths.size())
    throw std::invalid_argument("strain segments do not match model segments");
  double sum = 0.0;
  for (std::size_t i = 0; i < model.segment_lengths.size(); ++i)
    sum += model.segment_lengths[i] * strain.eps_segments[i];
  return model.k_phase * sum;
}

namespace {

double sinc(double u) {
  if (u == 0.0) return 1.0;
  const double x = std::numbers::pi * u;
  return std::sin(x) / x;
}

double kaiser(double u, double half_width, double beta) {
  const double r = u / half_width;
  if (std::abs(r) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace

Signal fractional_delay(const Signal& signal, double delay, double kaiser_beta) {
  signal.validate();
  const auto n = static_cast<long>(signal.size());
  const double shift = delay * signal.sample_rate;
  if (!std::isfinite(shift) || std::abs(shift) >= static_cast<double>(n))
    throw std::invalid_argument("time shift exceeds the packet length");

  constexpr int half = kInterpolatorTaps / 2;
  Signal out{std::vector<double>(signal.size(), 0.0), signal.sample_rate, signal.t0};
  const double whole = std::floor(shift);
  const double frac = shift - whole;
  const auto offset = static_cast<long>(whole);

  if (frac == 0.0) {
    for (long i = 0; i < n; ++i) {
      const long src = i - offset;
      if (src >= 0 && src < n) out.samples[i] = signal.samples[src];
    }
    return out;
  }

  // Reading position i - shift = (i - offset - 1) + (1 - frac).
  const double u0 = 1.0 - frac;
  double taps[kInterpolatorTaps];
  double tap_sum = 0.0;
  for (int k = 0; k < kInterpolatorTaps; ++k) {
    const double u = u0 - static_cast<double>(k - half + 1);
    taps[k] = sinc(u) * kaiser(u, static_cast<double>(half), kaiser_beta);
    tap_sum += taps[k];
  }
  for (double& t : taps) t /= tap_sum;

  for (long i = 0; i < n; ++i) {
    const long base = i - offset - 1;
    double acc = 0.0;
    for (int k = 0; k < kInterpolatorTaps; ++k) {
      const long src = base + k - half + 1;
      if (src >= 0 && src < n) acc += taps[k] * signal.samples[src];
    }
    out.samples[i] = acc;
  }
  return out;
}

Signal reconstruct(const CompensationModel& model, const Signal& baseline_packet,
                   const StrainState& strain) {
  model.validate();
  const double ratio = amplitude_ratio(model, strain);
  Signal out = fractional_delay(baseline_packet, delta_toa(model, strain));
  for (double& s : out.samples) s *= ratio;
  return out;
}

CalibrationResult calibrate(const std::vector<CalibrationObservation>& observations,
                            const std::vector<double>& segment_lengths) {
  const auto m = static_cast<Eigen::Index>(observations.size());
  if (m < 2) throw NumericalError("calibration needs at least two observations for A and B");

  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd amplitude_target(m);
  Eigen::VectorXd path_strain(m);
  Eigen::VectorXd toa(m);
  const CompensationModel unit{0.0, 0.0, 1.0, segment_lengths};
  unit.validate();
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& obs = observations[static_cast<std::size_t>(i)];
    design(i, 0) = obs.strain.eps_actuator;
    design(i, 1) = obs.strain.eps_sensor;
    amplitude_target[i] = obs.amplitude_ratio - 1.0;
    path_strain[i] = delta_toa(unit, obs.strain);
    toa[i] = obs.delta_toa;
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw NumericalError("calibration strain design is rank deficient");
  const Eigen::Vector2d ab = qr.solve(amplitude_target);

  const double denom = path_strain.squaredNorm();
  if (!(denom > 0.0)) throw NumericalError("calibration has no path strain to fit K_phase");
  const double k_phase = path_strain.dot(toa) / denom;

  CalibrationResult result;
  result.model = {ab[0], ab[1], k_phase, segment_lengths};
  const double md = static_cast<double>(m);
  result.amplitude_rms_residual = std::sqrt((design * ab - amplitude_target).squaredNorm() / md);
  result.toa_rms_residual = std::sqrt((k_phase * path_strain - toa).squaredNorm() / md);
  return result;
}

nlohmann::json to_json(const CompensationModel& model) {
  return {{"a", model.a_coeff},
          {"b", model.b_coeff},
          {"k_phase", model.k_phase},
          {"segment_lengths", model.segment_lengths}};
}

CompensationModel compensation_from_json(const nlohmann::json& j) {
  try {
    for (const auto& [key, value] : j.items())
      if (!std::set<std::string>{"a", "b", "k_phase", "segment_lengths"}.contains(key))
        throw DataError("compensation model: unknown field '" + key + "'");
    CompensationModel m{j.at("a").get<double>(), j.at("b").get<double>(),
                        j.at("k_phase").get<double>(),
                        j.at("segment_lengths").get<std::vector<double>>()};
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid compensation model JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid compensation model: ") + e.what());
  }
}

}  // namespace mfgp
