#pragma once

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "batchope/schedule.hpp"

namespace batchope {

/// One logged round. Actions are 0-based in memory and 1-based on disk.
struct Record {
  std::vector<double> x;
  std::size_t action = 0;
  double reward = 0.0;
  /// Behavior distribution in force when the action was drawn.
  std::vector<double> behavior;
  std::size_t batch = 0;
};

/// Time-ordered contextual bandit log collected under a batch schedule.
///
/// A log may be a prefix (fewer than T rounds) while it is being generated or
/// when handed to a behavior policy as history. Estimators require complete().
class BanditLog {
 public:
  BanditLog(BatchSchedule schedule, std::size_t num_actions);

  /// Appends the next round; throws if it breaks any log invariant.
  void append(Record record);

  const BatchSchedule& schedule() const noexcept { return schedule_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool complete() const noexcept { return records_.size() == schedule_.total(); }
  std::size_t dimension() const noexcept;

  const Record& operator[](std::size_t round) const { return records_[round]; }
  std::span<const Record> records() const noexcept { return records_; }
  /// Records of one batch that are present in this (possibly partial) log.
  std::span<const Record> batch(std::size_t b) const;

  /// First n rounds as a new log with the same schedule.
  BanditLog prefix(std::size_t n) const;

  void require_complete() const;

 private:
  BatchSchedule schedule_;
  std::size_t num_actions_;
  std::vector<Record> records_;
};

/// JSON-lines log: header {"T","M","boundaries","K"} then one record per round
/// {"t","batch","x","a","y","pb"}; t, batch and a are 1-based. Floats are
/// written with 17 significant digits so a read-back is bit-exact.
void write_log(std::ostream& out, const BanditLog& log);
BanditLog read_log(std::istream& in);

}  // namespace batchope
