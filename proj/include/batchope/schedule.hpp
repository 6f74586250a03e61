#pragma once

#include <cstddef>
#include <vector>

namespace batchope {

/// Partition of rounds 0..T-1 into M consecutive batches.
///
/// Boundaries follow the usual t_0 = 0 < t_1 < ... < t_M = T convention. Batch
/// b (0-based) holds the 0-based rounds [t_b, t_{b+1}); the policy used in it
/// may depend only on rounds before t_b.
class BatchSchedule {
 public:
  explicit BatchSchedule(std::vector<std::size_t> boundaries);

  /// M batches whose sizes differ by at most one (earlier batches larger).
  static BatchSchedule equal(std::size_t total, std::size_t batches);

  std::size_t total() const noexcept { return boundaries_.back(); }
  std::size_t num_batches() const noexcept { return boundaries_.size() - 1; }
  std::size_t begin(std::size_t batch) const { return boundaries_.at(batch); }
  std::size_t end(std::size_t batch) const { return boundaries_.at(batch + 1); }
  std::size_t size(std::size_t batch) const { return end(batch) - begin(batch); }
  /// r_tau = n_tau / T.
  double fraction(std::size_t batch) const;
  std::size_t batch_of(std::size_t round) const;

  const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }

  friend bool operator==(const BatchSchedule&, const BatchSchedule&) = default;

 private:
  std::vector<std::size_t> boundaries_;
};

}  // namespace batchope
