#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace batchope {

/// Batch weights summing to one.
class WeightVector {
 public:
  /// Throws ValidationError unless the entries are finite and sum to 1 within 1e-10.
  explicit WeightVector(std::vector<double> weights);

  static WeightVector equal(std::size_t batches);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_.at(i); }
  const std::vector<double>& values() const noexcept { return w_; }
  bool all_positive() const noexcept;

  /// sum_tau w_tau * d_tau.
  double dot(std::span<const double> d) const;
  /// sum_tau w_tau^2 * v_tau.
  double combined_variance(std::span<const double> variances) const;

 private:
  std::vector<double> w_;
};

/// Variances below this are raised to it before inversion.
inline constexpr double kVarianceFloor = 1e-12;

/// w_tau proportional to 1 / sigma^2_tau.
WeightVector efficient_weights(std::span<const double> variances);

/// Efficient weights of sigma^2_tau + alpha * drift_tau. alpha must be > 0.
WeightVector stability_weights(std::span<const double> variances, std::span<const double> drift,
                               double alpha);

/// Weight vector induced by a GMM weight matrix W: (1' W 1)^-1 1' W.
WeightVector weights_from_matrix(const Eigen::MatrixXd& matrix);

}  // namespace batchope
