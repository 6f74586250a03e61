#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "batchope/environment.hpp"
#include "batchope/estimators.hpp"
#include "batchope/nuisance.hpp"
#include "batchope/schedule.hpp"

namespace batchope {

struct EnvSpec {
  enum class Kind { Discrete, Logistic, Classification };
  Kind kind = Kind::Discrete;
  // discrete
  std::vector<std::vector<double>> covariates;
  std::vector<double> weights;
  std::vector<std::vector<double>> mean_rewards;
  RewardLaw law = RewardLaw::Bernoulli;
  // logistic
  std::size_t actions = 0;
  std::size_t dimension = 0;
  std::uint64_t coefficient_seed = 0;
  std::size_t reference_draws = 200000;
  // classification
  std::string path;
  /// Rows held out to train the deterministic classifier; 0 means all rows
  /// beyond T.
  std::size_t train_rows = 0;
};

struct BehaviorSpec {
  enum class Kind { RandomWalk, Ucb, Fixed };
  Kind kind = Kind::RandomWalk;
  /// Random-walk seed shared by every replication; unset derives one per replication.
  std::optional<std::uint64_t> seed;
  double noise = 0.01;
  double exploit = 0.8;
  std::size_t buckets = 16;
  /// Fixed: one covariate-independent distribution per batch, or a single one.
  std::vector<std::vector<double>> per_batch;
};

struct EvaluationSpec {
  enum class Kind { Mixture, Fixed, Uniform };
  Kind kind = Kind::Mixture;
  /// Weight of the deterministic policy (the rest is uniform).
  double weight = 0.9;
  std::vector<double> probs;
};

struct OplSpec {
  bool enabled = false;
  std::vector<double> mixture_weights{1.0, 0.9, 0.7, 0.5};
  std::string estimator = "PBA2IPW";
};

/// Everything needed to run simulations, estimates and replicated experiments.
/// The original JSON document is kept verbatim for report provenance.
struct ExperimentConfig {
  EnvSpec env;
  std::vector<std::size_t> boundaries;  // t_0 = 0 < ... < t_M = T
  BehaviorSpec behavior;
  EvaluationSpec evaluation;
  NuisanceOptions nuisance;
  std::string nuisance_method = "nw";
  std::vector<std::string> estimators;
  EstimatorSettings settings;
  OplSpec opl;
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  /// Worker threads; 0 picks the hardware concurrency.
  std::size_t threads = 1;
  std::string report_path;
  std::string csv_path;
  nlohmann::json source;

  BatchSchedule schedule() const { return BatchSchedule(boundaries); }
};

/// Parses and validates a config document; throws ValidationError naming the
/// offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

}  // namespace batchope
