#include "batchope/schedule.hpp"

#include <algorithm>
#include <string>

#include "batchope/errors.hpp"

namespace batchope {

BatchSchedule::BatchSchedule(std::vector<std::size_t> boundaries)
    : boundaries_(std::move(boundaries)) {
  if (boundaries_.size() < 2) {
    throw ValidationError("schedule needs at least one batch");
  }
  if (boundaries_.front() != 0) {
    throw ValidationError("schedule boundaries must start at 0");
  }
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    if (boundaries_[i] <= boundaries_[i - 1]) {
      throw ValidationError("schedule boundaries must be strictly increasing (batch " +
                            std::to_string(i) + " is empty)");
    }
  }
}

BatchSchedule BatchSchedule::equal(std::size_t total, std::size_t batches) {
  if (batches == 0 || total < batches) {
    throw ValidationError("cannot split " + std::to_string(total) + " rounds into " +
                          std::to_string(batches) + " non-empty batches");
  }
  std::vector<std::size_t> bounds{0};
  const std::size_t base = total / batches;
  const std::size_t extra = total % batches;
  for (std::size_t b = 0; b < batches; ++b) {
    bounds.push_back(bounds.back() + base + (b < extra ? 1 : 0));
  }
  return BatchSchedule(std::move(bounds));
}

double BatchSchedule::fraction(std::size_t batch) const {
  return static_cast<double>(size(batch)) / static_cast<double>(total());
}

std::size_t BatchSchedule::batch_of(std::size_t round) const {
  if (round >= total()) {
    throw ValidationError("round " + std::to_string(round) + " outside schedule of " +
                          std::to_string(total()) + " rounds");
  }
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), round);
  return static_cast<std::size_t>(it - boundaries_.begin()) - 1;
}

}  // namespace batchope
