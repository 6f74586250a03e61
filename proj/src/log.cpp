#include "batchope/log.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "batchope/errors.hpp"
#include "batchope/policy.hpp"

namespace batchope {

BanditLog::BanditLog(BatchSchedule schedule, std::size_t num_actions)
    : schedule_(std::move(schedule)), num_actions_(num_actions) {
  if (num_actions_ == 0) throw ValidationError("log needs at least one action");
}

void BanditLog::append(Record record) {
  const std::size_t round = records_.size();
  if (round >= schedule_.total()) {
    throw ValidationError("log already holds all " + std::to_string(schedule_.total()) +
                          " rounds");
  }
  if (record.batch != schedule_.batch_of(round)) {
    throw ValidationError("round " + std::to_string(round + 1) + " tagged with batch " +
                          std::to_string(record.batch + 1) + ", schedule says " +
                          std::to_string(schedule_.batch_of(round) + 1));
  }
  if (record.action >= num_actions_) {
    throw ValidationError("action " + std::to_string(record.action + 1) + " out of range");
  }
  if (record.behavior.size() != num_actions_) {
    throw ValidationError("behavior row has wrong length at round " + std::to_string(round + 1));
  }
  try {
    validate_distribution(record.behavior, 1e-9);
  } catch (const ValidationError& e) {
    throw ValidationError("round " + std::to_string(round + 1) + ": " + e.what());
  }
  if (!(record.behavior[record.action] > 0.0)) {
    throw ValidationError("logged action has zero behavior probability at round " +
                          std::to_string(round + 1));
  }
  if (!std::isfinite(record.reward)) {
    throw ValidationError("non-finite reward at round " + std::to_string(round + 1));
  }
  if (!records_.empty() && record.x.size() != records_.front().x.size()) {
    throw ValidationError("covariate dimension changes at round " + std::to_string(round + 1));
  }
  records_.push_back(std::move(record));
}

std::size_t BanditLog::dimension() const noexcept {
  return records_.empty() ? 0 : records_.front().x.size();
}

std::span<const Record> BanditLog::batch(std::size_t b) const {
  const std::size_t lo = std::min(schedule_.begin(b), records_.size());
  const std::size_t hi = std::min(schedule_.end(b), records_.size());
  return std::span<const Record>(records_).subspan(lo, hi - lo);
}

BanditLog BanditLog::prefix(std::size_t n) const {
  BanditLog out(schedule_, num_actions_);
  const std::size_t count = std::min(n, records_.size());
  out.records_.assign(records_.begin(), records_.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

void BanditLog::require_complete() const {
  if (!complete()) {
    throw ValidationError("log holds " + std::to_string(records_.size()) + " of " +
                          std::to_string(schedule_.total()) + " rounds");
  }
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

void put_array(std::ostream& out, const std::vector<double>& values) {
  out << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    put_double(out, values[i]);
  }
  out << ']';
}

std::vector<double> doubles(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw ParseError(line, std::string("missing array field \"") + key + "\"");
  }
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ParseError(line, std::string("non-numeric entry in \"") + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

std::size_t positive(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 1) {
    throw ParseError(line, std::string("field \"") + key + "\" must be a positive integer");
  }
  return j[key].get<std::size_t>();
}

}  // namespace

void write_log(std::ostream& out, const BanditLog& log) {
  const auto& s = log.schedule();
  out << "{\"T\":" << s.total() << ",\"M\":" << s.num_batches() << ",\"boundaries\":[";
  for (std::size_t i = 0; i < s.boundaries().size(); ++i) {
    if (i) out << ',';
    out << s.boundaries()[i];
  }
  out << "],\"K\":" << log.num_actions() << "}\n";
  for (std::size_t t = 0; t < log.size(); ++t) {
    const Record& r = log[t];
    out << "{\"t\":" << t + 1 << ",\"batch\":" << r.batch + 1 << ",\"x\":";
    put_array(out, r.x);
    out << ",\"a\":" << r.action + 1 << ",\"y\":";
    put_double(out, r.reward);
    out << ",\"pb\":";
    put_array(out, r.behavior);
    out << "}\n";
  }
}

BanditLog read_log(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  auto parse = [&](const std::string& s) {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
  };

  do {
    if (!std::getline(in, text)) throw ParseError(line, "missing log header");
    ++line;
  } while (text.find_first_not_of(" \t\r") == std::string::npos);

  const auto header = parse(text);
  const std::size_t total = positive(header, "T", line);
  const std::size_t batches = positive(header, "M", line);
  const std::size_t actions = positive(header, "K", line);
  if (!header.contains("boundaries") || !header["boundaries"].is_array()) {
    throw ParseError(line, "missing \"boundaries\"");
  }
  std::vector<std::size_t> bounds;
  for (const auto& b : header["boundaries"]) {
    if (!b.is_number_integer() || b.get<long long>() < 0) {
      throw ParseError(line, "boundaries must be non-negative integers");
    }
    bounds.push_back(b.get<std::size_t>());
  }
  std::optional<BanditLog> log;
  try {
    BatchSchedule schedule(std::move(bounds));
    if (schedule.total() != total || schedule.num_batches() != batches) {
      throw ParseError(line, "header T/M disagree with boundaries");
    }
    log.emplace(std::move(schedule), actions);
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }

  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = parse(text);
    const std::size_t t = positive(j, "t", line);
    if (t != log->size() + 1) {
      throw ParseError(line, "expected round " + std::to_string(log->size() + 1) + ", got " +
                                 std::to_string(t));
    }
    Record r;
    r.batch = positive(j, "batch", line) - 1;
    r.action = positive(j, "a", line) - 1;
    if (!j.contains("y") || !j["y"].is_number()) throw ParseError(line, "missing reward \"y\"");
    r.reward = j["y"].get<double>();
    r.x = doubles(j, "x", line);
    r.behavior = doubles(j, "pb", line);
    try {
      log->append(std::move(r));
    } catch (const ValidationError& e) {
      throw ParseError(line, e.what());
    }
  }
  if (!log->complete()) {
    throw ParseError(line, "log ends after " + std::to_string(log->size()) + " of " +
                               std::to_string(total) + " rounds");
  }
  return std::move(*log);
}

}  // namespace batchope
