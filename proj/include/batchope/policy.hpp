#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace batchope {

using Covariate = std::span<const double>;

/// Conditional action distribution pi(a | x) over K actions.
///
/// Cheap to copy; the underlying function is shared and must be pure.
class Policy {
 public:
  using Fn = std::function<std::vector<double>(Covariate)>;

  Policy(std::size_t num_actions, Fn fn);

  static Policy constant(std::vector<double> probs);
  static Policy uniform(std::size_t num_actions);
  /// Puts all mass on choose(x).
  static Policy deterministic(std::size_t num_actions,
                              std::function<std::size_t(Covariate)> choose);

  std::size_t num_actions() const noexcept { return num_actions_; }

  /// Row of probabilities at x. Only the length is checked here.
  std::vector<double> probabilities(Covariate x) const;
  /// Like probabilities(), but also throws unless the row is a distribution.
  std::vector<double> checked_probabilities(Covariate x) const;

 private:
  std::size_t num_actions_;
  Fn fn_;
};

/// Throws ValidationError unless p is non-negative and sums to 1 within tol.
void validate_distribution(std::span<const double> p, double tol = 1e-10);

/// Pointwise weight * deterministic + (1 - weight) * uniform.
Policy mix_policies(const Policy& deterministic, const Policy& uniform, double weight);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

}  // namespace batchope
