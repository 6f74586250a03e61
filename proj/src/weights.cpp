#include "batchope/weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "batchope/errors.hpp"

namespace batchope {

WeightVector::WeightVector(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) throw ValidationError("weight vector is empty");
  double sum = 0.0;
  for (double v : w_) {
    if (!std::isfinite(v)) throw ValidationError("non-finite weight");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-10) {
    throw ValidationError("weights sum to " + std::to_string(sum) + ", not 1");
  }
}

WeightVector WeightVector::equal(std::size_t batches) {
  if (batches == 0) throw ValidationError("weight vector is empty");
  return WeightVector(std::vector<double>(batches, 1.0 / static_cast<double>(batches)));
}

bool WeightVector::all_positive() const noexcept {
  return std::all_of(w_.begin(), w_.end(), [](double v) { return v > 0.0; });
}

double WeightVector::dot(std::span<const double> d) const {
  if (d.size() != w_.size()) {
    throw ValidationError("expected " + std::to_string(w_.size()) + " batch values, got " +
                          std::to_string(d.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * d[i];
  return s;
}

double WeightVector::combined_variance(std::span<const double> variances) const {
  if (variances.size() != w_.size()) throw ValidationError("variance vector has wrong length");
  double s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * w_[i] * variances[i];
  return s;
}

WeightVector efficient_weights(std::span<const double> variances) {
  if (variances.empty()) throw ValidationError("no variances given");
  std::vector<double> inv(variances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < variances.size(); ++i) {
    if (!std::isfinite(variances[i]) || variances[i] < 0.0) {
      throw ValidationError("variances must be finite and non-negative");
    }
    total += inv[i] = 1.0 / std::max(variances[i], kVarianceFloor);
  }
  for (double& v : inv) v /= total;
  return WeightVector(std::move(inv));
}

WeightVector stability_weights(std::span<const double> variances, std::span<const double> drift,
                               double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be positive");
  if (drift.size() != variances.size()) throw ValidationError("drift vector has wrong length");
  std::vector<double> inflated(variances.size());
  for (std::size_t i = 0; i < variances.size(); ++i) {
    if (!(drift[i] >= 0.0)) throw ValidationError("drift must be non-negative");
    inflated[i] = variances[i] + alpha * drift[i];
  }
  return efficient_weights(inflated);
}

WeightVector weights_from_matrix(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
    throw ValidationError("weight matrix must be square and non-empty");
  }
  const Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(matrix.rows()) * matrix;
  const double scale = row.sum();
  if (!(std::abs(scale) > 0.0) || !std::isfinite(scale)) {
    throw NumericalError("1' W 1 is zero; weight matrix does not identify theta");
  }
  std::vector<double> w(static_cast<std::size_t>(matrix.rows()));
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) w[static_cast<std::size_t>(i)] = row(i) / scale;
  return WeightVector(std::move(w));
}

}  // namespace batchope
