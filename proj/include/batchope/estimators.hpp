#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "batchope/log.hpp"
#include "batchope/nuisance.hpp"
#include "batchope/policy.hpp"
#include "batchope/scores.hpp"
#include "batchope/weights.hpp"

namespace batchope {

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double value) const noexcept { return lo <= value && value <= hi; }
  double width() const noexcept { return hi - lo; }
};

/// Two-sided normal quantile for the supported levels 0.90, 0.95 (1.96) and 0.99.
double z_value(double level);

/// estimate +- z * sqrt(variance / rounds).
ConfidenceInterval confidence_interval(double estimate, double variance, std::size_t rounds,
                                       double level = 0.95);

struct EstimatorResult {
  std::string name;
  double estimate = 0.0;
  /// Batch weights (arm-major (arm, batch) weights for BA2IPWIS); empty for
  /// plain sample averages.
  std::vector<double> weights;
  /// Estimated asymptotic variance of sqrt(T) * (estimate - theta).
  double variance = 0.0;
  ConfidenceInterval interval;
  std::size_t rounds = 0;
  std::optional<MomentSummary> diagnostics;
  /// Reweighting iterations performed (N-step estimators).
  std::size_t iterations = 0;
  /// w^(0), w^(1), ... as computed by the N-step loop.
  std::vector<std::vector<double>> weight_history;
};

enum class VarianceSource { Hat, Tilde };
enum class WeightRule { Efficient, Stability };

/// theta = w . d with variance sum w^2 sigma^2 taken from the summary.
EstimatorResult estimate_ba2ipw(const MomentSummary& summary, const WeightVector& weights,
                                VarianceSource source = VarianceSource::Hat,
                                std::string name = "BA2IPW");

struct NStepOptions {
  std::size_t steps = 10;
  WeightRule rule = WeightRule::Efficient;
  VarianceSource source = VarianceSource::Hat;
  /// Stability-rule drift multiplier.
  double alpha = 1.0;
  /// Stop early once the weights move by less than this (max norm).
  double tolerance = 1e-10;
};

/// Iterated reweighting starting from equal weights: theta^(i) = w^(i-1) . d,
/// then w^(i) from the batch variances evaluated at theta^(i). steps = 1
/// returns the equal-weight estimate.
EstimatorResult n_step_estimate(const ScoreSet& scores, const NStepOptions& options,
                                std::string name = "EBA2IPW");

/// Mean of per-round terms with their sample variance.
EstimatorResult sample_average(std::string name, std::span<const double> terms);

/// Sample-average baselines. DM and AIPW use the terminal outcome models,
/// AdaDM the models of each round's batch, IPW none.
EstimatorResult estimate_dm(const BanditLog& log, const NuisanceSequence& nuisances,
                            const Policy& evaluation);
EstimatorResult estimate_ipw(const BanditLog& log, const NuisanceSequence& nuisances,
                             const Policy& evaluation);
EstimatorResult estimate_aipw(const BanditLog& log, const NuisanceSequence& nuisances,
                              const Policy& evaluation);
EstimatorResult estimate_adadm(const BanditLog& log, const NuisanceSequence& nuisances,
                               const Policy& evaluation);

/// DM, IPW, AIPW and AdaDM, in that order.
std::vector<EstimatorResult> baseline_estimators(const BanditLog& log,
                                                 const NuisanceSequence& nuisances,
                                                 const Policy& evaluation);

/// BA2IPW pipeline with the fitted propensities in the score denominators.
EstimatorResult estimate_badr(const BanditLog& log, const NuisanceSequence& nuisances,
                              const Policy& evaluation, const NStepOptions& options);

struct EstimatorSettings {
  /// Iterations of EBA2IPW, EBA2IPW' and SBA2IPW.
  std::size_t steps = 10;
  double alpha = 1.0;
  /// BADR reweighting: 1 keeps equal weights.
  std::size_t badr_steps = 1;
  /// BA2IPWIS folds: weights for each fold come from the other folds. Capped
  /// at the smallest batch size; 1 uses the same-sample plug-in weights.
  std::size_t ba2ipwis_folds = 5;
};

/// Names accepted by EstimatorSuite::run, in reporting order.
const std::vector<std::string>& estimator_names();

/// Runs named estimators on one log, sharing the per-round scores.
class EstimatorSuite {
 public:
  EstimatorSuite(const BanditLog& log, const NuisanceSequence& nuisances, const Policy& evaluation,
                 EstimatorSettings settings = {});

  EstimatorResult run(const std::string& name);
  std::vector<EstimatorResult> run(std::span<const std::string> names);

 private:
  const ScoreSet& aipw();
  const ScoreSet& ipw();

  const BanditLog& log_;
  const NuisanceSequence& nuisances_;
  Policy evaluation_;
  EstimatorSettings settings_;
  std::optional<ScoreSet> aipw_;
  std::optional<ScoreSet> ipw_;
};

}  // namespace batchope
