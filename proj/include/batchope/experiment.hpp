#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "batchope/classification.hpp"
#include "batchope/config.hpp"
#include "batchope/environment.hpp"
#include "batchope/estimators.hpp"
#include "batchope/log.hpp"
#include "batchope/opl.hpp"
#include "batchope/nuisance.hpp"
#include "batchope/policy.hpp"

namespace batchope {

struct ReplicationRow {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::string estimator;
  double estimate = 0.0;
  double variance = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double squared_error = 0.0;
  bool covered = false;
  std::size_t iterations = 0;
};

struct EstimatorSummary {
  std::string name;
  std::size_t replications = 0;
  double mse = 0.0;
  /// Sample standard deviation of the squared errors.
  double sd_squared_error = 0.0;
  double coverage = 0.0;
  double mean_ci_width = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
};

struct OplCandidateSummary {
  std::string id;
  double value = 0.0;  // reference value of the candidate
  std::size_t times_chosen = 0;
};

struct OplReport {
  std::string estimator;
  std::vector<OplCandidateSummary> candidates;
  std::vector<std::size_t> choices;  // per replication
  double mean_chosen_value = 0.0;
  double mean_regret = 0.0;
};

struct ExperimentReport {
  nlohmann::json config;
  double reference = 0.0;
  std::string reference_source;
  nlohmann::json setup;
  std::vector<EstimatorSummary> summaries;
  std::vector<ReplicationRow> rows;
  std::optional<OplReport> opl;
  double wall_clock_seconds = 0.0;
};

/// Aggregates raw rows into per-estimator summaries, in first-seen order.
std::vector<EstimatorSummary> summarize_rows(const std::vector<ReplicationRow>& rows);

/// Seed for an auxiliary stream derived from a replication seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Resolved experiment: environment or dataset split, evaluation policy and
/// reference value. Immutable after construction and safe to share across
/// replication workers.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  const Policy& evaluation_policy() const noexcept { return *evaluation_; }
  double reference_value() const noexcept { return reference_; }
  /// "oracle", "monte_carlo" or "held_out_mean".
  const std::string& reference_source() const noexcept { return reference_source_; }
  /// Split sizes, classifier accuracy and nuisance choices recorded in reports.
  const nlohmann::json& setup() const noexcept { return setup_; }

  BanditLog simulate(std::uint64_t seed) const;
  NuisanceSequence nuisances(const BanditLog& log) const;
  std::vector<EstimatorResult> estimate(const BanditLog& log) const;
  ExperimentReport run() const;

 private:
  double value_of(const Policy& policy) const;
  std::unique_ptr<BehaviorGenerator> behavior(std::uint64_t seed) const;

  ExperimentConfig config_;
  std::shared_ptr<const Environment> env_;
  std::optional<LabeledDataset> pool_;
  std::size_t num_actions_ = 0;
  std::optional<Policy> deterministic_;
  std::optional<Policy> evaluation_;
  double reference_ = 0.0;
  std::string reference_source_;
  nlohmann::json setup_;
  std::vector<PolicyCandidate> candidates_;
  std::vector<double> candidate_values_;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Runs every configured estimator on a log file.
std::vector<EstimatorResult> estimate_once(const ExperimentConfig& config,
                                           const std::string& log_path);

/// Writes one simulated log in the JSON-lines format.
void simulate_to_file(const ExperimentConfig& config, std::uint64_t seed, const std::string& path);

}  // namespace batchope
