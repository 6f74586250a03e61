#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "batchope/log.hpp"
#include "batchope/policy.hpp"

namespace batchope {

using Rng = std::mt19937_64;

class BehaviorGenerator;
class DiscreteEnvironment;

/// Synthetic data-generating process: x ~ p(x), y ~ p(y | a, x).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t num_actions() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> sample_covariate(Rng& rng) const = 0;
  /// f*(a, x).
  virtual double mean_reward(std::size_t action, Covariate x) const = 0;
  /// v*(a, x).
  virtual double reward_variance(std::size_t action, Covariate x) const = 0;
  virtual double sample_reward(std::size_t action, Covariate x, Rng& rng) const = 0;
  /// C2: every sampled reward satisfies |y| <= reward_bound().
  virtual double reward_bound() const = 0;

  virtual const DiscreteEnvironment* as_discrete() const noexcept { return nullptr; }
};

enum class RewardLaw {
  Bernoulli,      // y ~ Bernoulli(f*), v* = f*(1 - f*)
  Deterministic,  // y = f*, v* = 0
};

/// Finite covariate support with known tables, so every expectation can be
/// enumerated exactly.
class DiscreteEnvironment final : public Environment {
 public:
  /// mean_rewards[i][a] = f*(a, covariates[i]).
  DiscreteEnvironment(std::vector<std::vector<double>> covariates, std::vector<double> weights,
                      std::vector<std::vector<double>> mean_rewards,
                      RewardLaw law = RewardLaw::Bernoulli);

  std::size_t num_actions() const override { return mean_rewards_.front().size(); }
  std::size_t dimension() const override { return covariates_.front().size(); }
  std::vector<double> sample_covariate(Rng& rng) const override;
  double mean_reward(std::size_t action, Covariate x) const override;
  double reward_variance(std::size_t action, Covariate x) const override;
  double sample_reward(std::size_t action, Covariate x, Rng& rng) const override;
  double reward_bound() const override;
  const DiscreteEnvironment* as_discrete() const noexcept override { return this; }

  std::size_t support_size() const noexcept { return covariates_.size(); }
  const std::vector<double>& covariate(std::size_t i) const { return covariates_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }
  RewardLaw law() const noexcept { return law_; }
  /// Index of x in the support; throws if x is not a support point.
  std::size_t index_of(Covariate x) const;

 private:
  std::vector<std::vector<double>> covariates_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<std::vector<double>> mean_rewards_;
  RewardLaw law_;
};

/// Continuous covariates x ~ Uniform[-1, 1]^d with Bernoulli rewards of mean
/// sigmoid(coef[a][0] + coef[a][1..d] . x).
class LogisticEnvironment final : public Environment {
 public:
  explicit LogisticEnvironment(std::vector<std::vector<double>> coefficients);
  /// Coefficients drawn i.i.d. N(0, 1) from the seed.
  static LogisticEnvironment random(std::size_t num_actions, std::size_t dimension,
                                    std::uint64_t seed);

  std::size_t num_actions() const override { return coef_.size(); }
  std::size_t dimension() const override { return coef_.front().size() - 1; }
  std::vector<double> sample_covariate(Rng& rng) const override;
  double mean_reward(std::size_t action, Covariate x) const override;
  double reward_variance(std::size_t action, Covariate x) const override;
  double sample_reward(std::size_t action, Covariate x, Rng& rng) const override;
  double reward_bound() const override { return 1.0; }

 private:
  std::vector<std::vector<double>> coef_;
};

/// Draws one action from p by inverse CDF.
std::size_t draw_action(std::span<const double> p, Rng& rng);

/// Samples a complete log. Within batch b, rounds are i.i.d. from
/// p(x) pi_b(a | x) p(y | a, x), with pi_b produced by the generator from the
/// rounds before the batch only. Same seed gives an identical log.
BanditLog sample_batched_log(const Environment& env, const BatchSchedule& schedule,
                             const BehaviorGenerator& behavior, std::uint64_t seed);

/// Exact sum_x p(x) sum_a pi(a | x) f*(a, x). Throws for non-discrete envs.
double true_policy_value(const Environment& env, const Policy& policy);

/// Monte-Carlo sum_a pi(a | x) f*(a, x) averaged over `draws` covariates.
double monte_carlo_policy_value(const Environment& env, const Policy& policy, std::size_t draws,
                                std::uint64_t seed);

}  // namespace batchope
