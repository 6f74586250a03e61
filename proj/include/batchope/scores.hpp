#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "batchope/log.hpp"
#include "batchope/nuisance.hpp"
#include "batchope/policy.hpp"
#include "batchope/schedule.hpp"

namespace batchope {

/// Augmented IPW score of one round:
///   sum_a pe[a] * (1[action == a] * (reward - f[a]) / pb[a] + f[a]).
/// Throws SupportError if the logged action has zero behavior probability or
/// any action with pe[a] > 0 has pb[a] == 0.
double phi(std::span<const double> evaluation, std::span<const double> behavior,
           std::span<const double> fitted, std::size_t action, double reward);

enum class ScoreKind {
  Aipw,  // fitted outcome models
  Ipw,   // outcome models replaced by 0
};

enum class Denominator {
  Logged,     // the logged behavior probabilities
  Estimated,  // the nuisance sequence's propensity models
};

/// Per-round scores of a complete log.
struct ScoreSet {
  BatchSchedule schedule;
  /// phi_t with the outcome models of the round's batch.
  std::vector<double> adaptive;
  /// phi_t with the terminal outcome models.
  std::vector<double> terminal;
  /// (f_batch(A_t, X_t) - f_terminal(A_t, X_t))^2.
  std::vector<double> drift;
};

ScoreSet compute_scores(const BanditLog& log, const NuisanceSequence& nuisances,
                        const Policy& evaluation, ScoreKind kind = ScoreKind::Aipw,
                        Denominator denominator = Denominator::Logged);

/// Batch-level moments at a given value of theta.
struct MomentSummary {
  /// d_tau: batch means of the adaptive scores.
  std::vector<double> means;
  std::vector<std::size_t> sizes;
  std::vector<double> fractions;
  /// sigma-hat^2_tau from adaptive scores, sigma-tilde^2_tau from terminal ones.
  std::vector<double> var_hat;
  std::vector<double> var_tilde;
  /// Batch mean of the drift term.
  std::vector<double> drift;
  /// theta at which the variances were evaluated.
  double theta = 0.0;

  std::size_t num_batches() const noexcept { return means.size(); }
  std::size_t total() const noexcept;
};

/// (1 / r) * mean((scores - theta)^2).
double batch_variance(std::span<const double> scores, double theta, double fraction);

std::vector<double> batch_means(const ScoreSet& scores);
MomentSummary summarize(const ScoreSet& scores, double theta);

/// Scores then summary at the equal-weight estimate.
MomentSummary batch_means(const BanditLog& log, const NuisanceSequence& nuisances,
                          const Policy& evaluation, ScoreKind kind = ScoreKind::Aipw);

}  // namespace batchope
