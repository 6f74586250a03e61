#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "batchope/estimators.hpp"
#include "batchope/log.hpp"
#include "batchope/nuisance.hpp"
#include "batchope/policy.hpp"

namespace batchope {

struct ArmBatch {
  std::size_t action = 0;
  std::size_t batch = 0;
};

/// Per-(arm, batch) score means for logs where some arms are switched off in
/// some batches.
///
/// A pair is live when the arm had positive logged probability in every round
/// of the batch. For a live pair the per-round score is
///   pe[a] * (1[A = a] * (y - f(a, x)) / pb[a] + f(a, x))
/// with the batch's outcome model, and `means` holds its batch average.
struct DeficientMoments {
  std::size_t num_actions = 0;
  std::size_t num_batches = 0;
  std::size_t rounds = 0;
  /// means[a][b]; 0 for dead pairs.
  std::vector<std::vector<double>> means;
  std::vector<std::vector<bool>> live;
  /// Live pairs, arm-major; indexes the covariance rows.
  std::vector<ArmBatch> pairs;
  /// Asymptotic covariance of sqrt(T) * means over live pairs, plus ridge * I.
  /// Block-diagonal across batches.
  Eigen::MatrixXd covariance;
  double ridge = 0.0;
};

/// Which rounds of each batch enter the means and covariance. Rounds are
/// dealt to `folds` folds by their offset in the batch (offset % folds); the
/// subset is fold `index`, or every other fold when `complement` is set.
/// Liveness always uses every round.
struct RoundFold {
  std::size_t folds = 1;
  std::size_t index = 0;
  bool complement = false;
};

/// Throws SupportError if some arm is live in no batch.
DeficientMoments deficient_moments(const BanditLog& log, const NuisanceSequence& nuisances,
                                   const Policy& evaluation, RoundFold fold = {});

struct DeficientWeights {
  /// zeta[a][b]; 0 for dead pairs. Each arm's row sums to 1.
  std::vector<std::vector<double>> zeta;
  /// Lagrange multipliers, one per arm.
  Eigen::VectorXd multipliers;
  /// Max-norm residual of the stationarity rows 2 S z + A' mu.
  double kkt_residual = 0.0;
  /// Max-norm residual of the constraints A z = 1.
  double constraint_residual = 0.0;
};

/// Minimizes z' S z subject to sum_b z[a][b] = 1 for every arm, over the live
/// pairs, by solving the KKT system [2S A'; A 0][z; mu] = [0; 1].
DeficientWeights deficient_weights(const Eigen::MatrixXd& covariance,
                                   std::span<const ArmBatch> pairs, std::size_t num_actions,
                                   std::size_t num_batches);

/// sum over live pairs of zeta * mean, with variance zeta' S zeta.
EstimatorResult estimate_ba2ipwis(const DeficientMoments& moments,
                                  const DeficientWeights& weights);

/// Cross-fitted BA2IPWIS. For each fold, weights solved on the other folds
/// are applied to that fold's means; the estimate averages over folds. The
/// reported weights are the average solution and the variance uses them with
/// the full-sample covariance. Needs at least `folds` rounds per batch.
EstimatorResult estimate_ba2ipwis_cross_fit(const BanditLog& log, const NuisanceSequence& nuisances,
                                            const Policy& evaluation, std::size_t folds = 2);

}  // namespace batchope
