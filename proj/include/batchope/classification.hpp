#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "batchope/behavior.hpp"
#include "batchope/log.hpp"
#include "batchope/policy.hpp"

namespace batchope {

/// Multiclass dataset with dense features.
struct LabeledDataset {
  /// Class of each row, 0-based (the 1..K remap shifted down by one).
  std::vector<std::size_t> labels;
  /// Distinct original labels in ascending order; class k was original_labels[k].
  std::vector<long long> original_labels;
  std::vector<std::vector<double>> features;
  std::size_t dimension = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_classes() const noexcept { return original_labels.size(); }
  /// Rows at the given indices, keeping the class coding.
  LabeledDataset subset(std::span<const std::size_t> rows) const;
};

/// Reads "<label> <idx>:<val> ..." lines with 1-based ascending indices.
/// Blank lines and '#' comments are skipped. Throws ParseError with the line
/// number on malformed input.
LabeledDataset parse_libsvm(std::istream& in);

/// Turns a classification dataset into a bandit log: rows are shuffled once
/// with the seed and streamed; the reward is 1 when the action equals the label.
BanditLog classification_to_bandit(const LabeledDataset& data, const BehaviorGenerator& behavior,
                                   const BatchSchedule& schedule, std::uint64_t seed);

/// Exact value of a policy on a labeled set: mean over rows of pi(label | x).
double classification_policy_value(const LabeledDataset& data, const Policy& policy);

struct SoftmaxOptions {
  double l2 = 1e-3;
  double learning_rate = 0.5;
  std::size_t iterations = 300;
};

/// Multinomial logistic regression on standardized features, trained by
/// full-batch gradient descent from zero weights (fully deterministic).
class SoftmaxClassifier {
 public:
  static SoftmaxClassifier fit(const LabeledDataset& data, const SoftmaxOptions& options = {});

  std::size_t num_classes() const noexcept { return weights_.size(); }
  std::vector<double> scores(Covariate x) const;
  std::size_t predict(Covariate x) const;
  double accuracy(const LabeledDataset& data) const;

  /// Deterministic policy choosing the predicted class.
  Policy as_policy() const;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<std::vector<double>> weights_;  // [class][1 + dim]
};

}  // namespace batchope
