#include "mfgp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mfgp/errors.hpp"

namespace mfgp {

void ParameterBox::validate() const {
  if (lower.size() != upper.size() || lower.size() != transform.size())
    throw std::invalid_argument("parameter box dimensions disagree");
  if (lower.empty()) throw std::invalid_argument("parameter box is empty");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw std::invalid_argument("parameter box bounds must be finite");
    if (lower[i] > upper[i]) throw std::invalid_argument("parameter box has lower > upper");
    if (transform[i] == Transform::Log && lower[i] <= 0.0)
      throw std::invalid_argument("log-transformed dimension needs a positive lower bound");
  }
}

Eigen::VectorXd ParameterBox::to_search(const Eigen::VectorXd& natural) const {
  Eigen::VectorXd s(natural.size());
  for (Eigen::Index i = 0; i < natural.size(); ++i)
    s[i] = transform[i] == Transform::Log ? std::log(natural[i]) : natural[i];
  return s;
}

Eigen::VectorXd ParameterBox::search_lower() const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i)
    s[i] = transform[i] == Transform::Log ? std::log(lower[i]) : lower[i];
  return s;
}

Eigen::VectorXd ParameterBox::search_upper() const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i)
    s[i] = transform[i] == Transform::Log ? std::log(upper[i]) : upper[i];
  return s;
}

Eigen::VectorXd ParameterBox::to_natural(const Eigen::VectorXd& search) const {
  const Eigen::VectorXd lo = search_lower();
  const Eigen::VectorXd hi = search_upper();
  Eigen::VectorXd x(search.size());
  for (Eigen::Index i = 0; i < search.size(); ++i) {
    if (search[i] <= lo[i]) {
      x[i] = lower[i];
    } else if (search[i] >= hi[i]) {
      x[i] = upper[i];
    } else {
      x[i] = transform[i] == Transform::Log ? std::exp(search[i]) : search[i];
      x[i] = std::clamp(x[i], lower[i], upper[i]);
    }
  }
  return x;
}

void OptimizerConfig::validate() const {
  if (restarts < 1) throw std::invalid_argument("optimizer restarts must be >= 1");
  if (max_evals < 1) throw std::invalid_argument("optimizer max_evals must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("optimizer tolerance must be positive");
}

namespace {

constexpr double kInitialStepFraction = 0.05;
constexpr int kPolishRounds = 3;

struct RestartResult {
  Eigen::VectorXd best;  // search space
  double value = std::numeric_limits<double>::infinity();
  long evals = 0;
};

class NelderMead {
 public:
  NelderMead(const Objective& objective, const ParameterBox& box, const OptimizerConfig& config)
      : objective_(objective),
        box_(box),
        config_(config),
        lo_(box.search_lower()),
        hi_(box.search_upper()) {
    for (Eigen::Index i = 0; i < lo_.size(); ++i)
      if (hi_[i] > lo_[i]) free_.push_back(i);
  }

  RestartResult run(Eigen::VectorXd start) {
    RestartResult result;
    start = clamp(start);
    result.best = start;
    result.value = evaluate(start);
    if (free_.empty()) {
      result.evals = evals_;
      return result;
    }
    for (int round = 0; round < kPolishRounds && evals_ < config_.max_evals; ++round) {
      const double before = result.value;
      descend(result);
      if (round > 0 && before - result.value <= config_.tolerance * (1.0 + std::abs(before)))
        break;
    }
    result.evals = evals_;
    return result;
  }

 private:
  Eigen::VectorXd clamp(Eigen::VectorXd s) const { return s.cwiseMax(lo_).cwiseMin(hi_); }

  double evaluate(const Eigen::VectorXd& s) {
    ++evals_;
    double v = std::numeric_limits<double>::infinity();
    try {
      v = objective_(box_.to_natural(s));
    } catch (const std::exception&) {
      v = std::numeric_limits<double>::infinity();
    }
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  // One Nelder-Mead descent from result.best, updating it in place.
  void descend(RestartResult& result) {
    const std::size_t dim = free_.size();
    std::vector<Eigen::VectorXd> simplex{result.best};
    std::vector<double> values{result.value};
    for (Eigen::Index i : free_) {
      Eigen::VectorXd vertex = result.best;
      const double step = kInitialStepFraction * (hi_[i] - lo_[i]);
      vertex[i] = vertex[i] + step <= hi_[i] ? vertex[i] + step : vertex[i] - step;
      simplex.push_back(clamp(vertex));
      values.push_back(evaluate(simplex.back()));
    }

    std::vector<std::size_t> order(dim + 1);
    while (evals_ < config_.max_evals) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second_worst = order[dim - 1];

      const double spread = values[worst] - values[best];
      double diameter = 0.0;
      for (const auto& v : simplex)
        diameter = std::max(diameter, (v - simplex[best]).lpNorm<Eigen::Infinity>());
      if (std::isfinite(spread) &&
          spread <= config_.tolerance * (1.0 + std::abs(values[best])) &&
          diameter <= std::sqrt(config_.tolerance))
        break;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(lo_.size());
      for (std::size_t k = 0; k <= dim; ++k)
        if (k != worst) centroid += simplex[k];
      centroid /= static_cast<double>(dim);

      const Eigen::VectorXd reflected = clamp(centroid + (centroid - simplex[worst]));
      const double f_reflected = evaluate(reflected);
      if (f_reflected < values[best]) {
        const Eigen::VectorXd expanded = clamp(centroid + 2.0 * (centroid - simplex[worst]));
        const double f_expanded = evaluate(expanded);
        if (f_expanded < f_reflected) {
          simplex[worst] = expanded;
          values[worst] = f_expanded;
        } else {
          simplex[worst] = reflected;
          values[worst] = f_reflected;
        }
        continue;
      }
      if (f_reflected < values[second_worst]) {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
        continue;
      }
      const bool outside = f_reflected < values[worst];
      const Eigen::VectorXd contracted =
          outside ? clamp(centroid + 0.5 * (reflected - centroid))
                  : clamp(centroid + 0.5 * (simplex[worst] - centroid));
      const double f_contracted = evaluate(contracted);
      if (f_contracted < (outside ? f_reflected : values[worst])) {
        simplex[worst] = contracted;
        values[worst] = f_contracted;
        continue;
      }
      for (std::size_t k = 0; k <= dim; ++k) {
        if (k == best) continue;
        simplex[k] = clamp(simplex[best] + 0.5 * (simplex[k] - simplex[best]));
        values[k] = evaluate(simplex[k]);
      }
    }

    for (std::size_t k = 0; k <= dim; ++k) {
      if (values[k] < result.value) {
        result.value = values[k];
        result.best = simplex[k];
      }
    }
  }

  const Objective& objective_;
  const ParameterBox& box_;
  const OptimizerConfig& config_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  std::vector<Eigen::Index> free_;
  long evals_ = 0;
};

Eigen::VectorXd start_point(const ParameterBox& box, const OptimizerConfig& config, int restart,
                            const std::optional<Eigen::VectorXd>& initial) {
  const Eigen::VectorXd lo = box.search_lower();
  const Eigen::VectorXd hi = box.search_upper();
  if (restart == 0) {
    if (!initial) return 0.5 * (lo + hi);
    Eigen::VectorXd x = *initial;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = std::clamp(x[i], box.lower[static_cast<std::size_t>(i)],
                        box.upper[static_cast<std::size_t>(i)]);
    return box.to_search(x);
  }
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd s(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) s[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
  return s;
}

RestartResult run_restart(const Objective& objective, const ParameterBox& box,
                          const OptimizerConfig& config, int restart,
                          const std::optional<Eigen::VectorXd>& initial) {
  NelderMead nm(objective, box, config);
  return nm.run(start_point(box, config, restart, initial));
}

MinimizeResult reduce(const ParameterBox& box, const std::vector<RestartResult>& restarts) {
  MinimizeResult out;
  std::size_t best = restarts.size();
  for (std::size_t r = 0; r < restarts.size(); ++r) {
    out.evals += restarts[r].evals;
    out.restart_values.push_back(restarts[r].value);
    if (std::isfinite(restarts[r].value) &&
        (best == restarts.size() || restarts[r].value < restarts[best].value))
      best = r;
  }
  if (best == restarts.size())
    throw NumericalError("objective was non-finite at every optimizer start point");
  out.argmin = box.to_natural(restarts[best].best);
  out.value = restarts[best].value;
  return out;
}

void check_inputs(const ParameterBox& box, const OptimizerConfig& config,
                  const std::optional<Eigen::VectorXd>& initial) {
  box.validate();
  config.validate();
  if (initial && static_cast<std::size_t>(initial->size()) != box.size())
    throw std::invalid_argument("initial point dimension does not match the box");
}

}  // namespace

MinimizeResult minimize(const Objective& objective, const ParameterBox& box,
                        const OptimizerConfig& config,
                        const std::optional<Eigen::VectorXd>& initial) {
  check_inputs(box, config, initial);
  std::vector<RestartResult> restarts(static_cast<std::size_t>(config.restarts));
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < config.restarts; ++r)
    restarts[static_cast<std::size_t>(r)] = run_restart(objective, box, config, r, initial);
  return reduce(box, restarts);
}

MinimizeResult minimize_serial(const Objective& objective, const ParameterBox& box,
                               const OptimizerConfig& config,
                               const std::optional<Eigen::VectorXd>& initial) {
  check_inputs(box, config, initial);
  std::vector<RestartResult> restarts;
  for (int r = 0; r < config.restarts; ++r)
    restarts.push_back(run_restart(objective, box, config, r, initial));
  return reduce(box, restarts);
}

}  // namespace mfgp
