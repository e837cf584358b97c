#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace mfgp {

enum class Transform { Linear, Log };

/// Box bounds in the natural parameter space. Search runs in transformed
/// space (log for Transform::Log dimensions).
struct ParameterBox {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Transform> transform;

  std::size_t size() const { return lower.size(); }
  void validate() const;

  Eigen::VectorXd to_search(const Eigen::VectorXd& natural) const;
  // Clamps into the box; boundary values map back to the exact bound.
  Eigen::VectorXd to_natural(const Eigen::VectorXd& search) const;
  Eigen::VectorXd search_lower() const;
  Eigen::VectorXd search_upper() const;
};

struct OptimizerConfig {
  int restarts = 10;
  int max_evals = 2000;  // per restart
  double tolerance = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MinimizeResult {
  Eigen::VectorXd argmin;  // natural space
  double value = 0.0;
  long evals = 0;
  // Best value found by each restart, ordered by restart index.
  std::vector<double> restart_values;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Multi-start Nelder-Mead over a box. Restart 0 starts from `initial` (box
/// centre if absent); the remaining starts are drawn uniformly in search space
/// from a generator seeded by (seed, restart index). Non-finite objective
/// values and exceptions count as +inf. Restarts run in parallel; the
/// reduction picks the lowest value, then the lowest restart index.
MinimizeResult minimize(const Objective& objective, const ParameterBox& box,
                        const OptimizerConfig& config,
                        const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Same search with restarts evaluated in order on the calling thread.
MinimizeResult minimize_serial(const Objective& objective, const ParameterBox& box,
                               const OptimizerConfig& config,
                               const std::optional<Eigen::VectorXd>& initial = std::nullopt);

}  // namespace mfgp
