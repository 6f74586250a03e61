#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "batchope/log.hpp"
#include "batchope/policy.hpp"

namespace batchope {

/// Produces the behavior policy for each batch.
///
/// Implementations must be pure: the policy for batch b is a function of the
/// generator's configuration and of `history`, which holds exactly the rounds
/// before the batch starts.
class BehaviorGenerator {
 public:
  virtual ~BehaviorGenerator() = default;
  virtual std::size_t num_actions() const = 0;
  virtual Policy policy_for_batch(std::size_t batch, const BanditLog& history) const = 0;
};

/// Fixed policies, one per batch, or a single policy used for every batch.
class FixedBehavior final : public BehaviorGenerator {
 public:
  explicit FixedBehavior(std::vector<Policy> per_batch);
  explicit FixedBehavior(Policy policy) : FixedBehavior(std::vector<Policy>{std::move(policy)}) {}

  std::size_t num_actions() const override { return policies_.front().num_actions(); }
  Policy policy_for_batch(std::size_t batch, const BanditLog& history) const override;

 private:
  std::vector<Policy> policies_;
};

struct RwPolicyState {
  std::vector<double> scores;
  double noise_scale = 0.01;
  std::mt19937_64 rng;
};

/// Initial scores drawn Uniform(0, 1), one per action.
RwPolicyState make_rw_state(std::size_t num_actions, std::uint64_t seed, double noise_scale = 0.01);

/// Maps raw scores to a strictly positive distribution: if any score is <= 0,
/// shift all by (0.01 - min); then divide by the sum.
std::vector<double> standardize_scores(std::span<const double> scores);

/// One random-walk step: scores += noise_scale * N(0, 1), then standardize.
/// The returned policy ignores the covariate.
std::pair<Policy, RwPolicyState> rw_next_policy(RwPolicyState state);

/// Non-converging random-walk behavior. Batch b uses the policy after b + 1
/// walk steps from the seeded initial scores.
class RandomWalkBehavior final : public BehaviorGenerator {
 public:
  RandomWalkBehavior(std::size_t num_actions, std::uint64_t seed, double noise_scale = 0.01);

  std::size_t num_actions() const override { return num_actions_; }
  Policy policy_for_batch(std::size_t batch, const BanditLog& history) const override;

 private:
  std::size_t num_actions_;
  std::uint64_t seed_;
  double noise_scale_;
};

/// Greedy-with-exploration behavior on covariate buckets.
struct UcbBehaviorState {
  std::size_t num_actions = 0;
  double exploit_mass = 0.8;
  std::size_t max_buckets = 16;
  /// Fit on the first batch's covariates; empty means one global bucket.
  std::vector<std::vector<double>> centroids;
  /// estimates[bucket][action]: empirical mean reward, 0 when unseen.
  std::vector<std::vector<double>> estimates;

  std::size_t bucket_of(Covariate x) const;
};

/// Refits the state on `history` and returns the policy giving exploit_mass to
/// the estimated best arm of x's bucket (lowest index on ties) and spreading
/// the rest evenly. With K = 1 the policy is [1].
Policy ucb_next_policy(UcbBehaviorState& state, const BanditLog& history);

/// Lloyd's k-means with deterministic initialization (first distinct points).
std::vector<std::vector<double>> fit_centroids(std::span<const std::vector<double>> points,
                                               std::size_t max_clusters,
                                               std::size_t iterations = 50);

class UcbBehavior final : public BehaviorGenerator {
 public:
  explicit UcbBehavior(std::size_t num_actions, double exploit_mass = 0.8,
                       std::size_t max_buckets = 16);

  std::size_t num_actions() const override { return num_actions_; }
  Policy policy_for_batch(std::size_t batch, const BanditLog& history) const override;

 private:
  std::size_t num_actions_;
  double exploit_mass_;
  std::size_t max_buckets_;
};

}  // namespace batchope
