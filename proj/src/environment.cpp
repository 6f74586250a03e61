#include "batchope/environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "batchope/behavior.hpp"
#include "batchope/errors.hpp"

namespace batchope {

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

DiscreteEnvironment::DiscreteEnvironment(std::vector<std::vector<double>> covariates,
                                         std::vector<double> weights,
                                         std::vector<std::vector<double>> mean_rewards,
                                         RewardLaw law)
    : covariates_(std::move(covariates)),
      weights_(std::move(weights)),
      mean_rewards_(std::move(mean_rewards)),
      law_(law) {
  if (covariates_.empty()) throw ValidationError("discrete environment needs covariates");
  if (weights_.size() != covariates_.size() || mean_rewards_.size() != covariates_.size()) {
    throw ValidationError("covariate, weight and reward tables must have equal length");
  }
  validate_distribution(weights_, 1e-10);
  const std::size_t dim = covariates_.front().size();
  const std::size_t k = mean_rewards_.front().size();
  if (k == 0) throw ValidationError("discrete environment needs at least one action");
  for (std::size_t i = 0; i < covariates_.size(); ++i) {
    if (covariates_[i].size() != dim) throw ValidationError("covariate dimensions differ");
    if (mean_rewards_[i].size() != k) throw ValidationError("reward rows differ in length");
    for (double f : mean_rewards_[i]) {
      if (!std::isfinite(f)) throw ValidationError("non-finite mean reward");
      if (law_ == RewardLaw::Bernoulli && (f < 0.0 || f > 1.0)) {
        throw ValidationError("Bernoulli mean reward outside [0, 1]");
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (covariates_[j] == covariates_[i]) throw ValidationError("duplicate support point");
    }
  }
  double acc = 0.0;
  for (double w : weights_) cumulative_.push_back(acc += w);
}

std::vector<double> DiscreteEnvironment::sample_covariate(Rng& rng) const {
  const double u = uniform01(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t i = std::min<std::size_t>(it - cumulative_.begin(), covariates_.size() - 1);
  while (weights_[i] == 0.0 && i > 0) --i;
  return covariates_[i];
}

std::size_t DiscreteEnvironment::index_of(Covariate x) const {
  for (std::size_t i = 0; i < covariates_.size(); ++i) {
    if (std::equal(x.begin(), x.end(), covariates_[i].begin(), covariates_[i].end())) return i;
  }
  throw ValidationError("covariate is not a support point of the discrete environment");
}

double DiscreteEnvironment::mean_reward(std::size_t action, Covariate x) const {
  return mean_rewards_[index_of(x)].at(action);
}

double DiscreteEnvironment::reward_variance(std::size_t action, Covariate x) const {
  if (law_ == RewardLaw::Deterministic) return 0.0;
  const double f = mean_reward(action, x);
  return f * (1.0 - f);
}

double DiscreteEnvironment::sample_reward(std::size_t action, Covariate x, Rng& rng) const {
  const double f = mean_reward(action, x);
  if (law_ == RewardLaw::Deterministic) return f;
  return uniform01(rng) < f ? 1.0 : 0.0;
}

double DiscreteEnvironment::reward_bound() const {
  if (law_ == RewardLaw::Bernoulli) return 1.0;
  double bound = 0.0;
  for (const auto& row : mean_rewards_) {
    for (double f : row) bound = std::max(bound, std::abs(f));
  }
  return bound;
}

LogisticEnvironment::LogisticEnvironment(std::vector<std::vector<double>> coefficients)
    : coef_(std::move(coefficients)) {
  if (coef_.empty() || coef_.front().empty()) {
    throw ValidationError("logistic environment needs coefficients for at least one action");
  }
  for (const auto& row : coef_) {
    if (row.size() != coef_.front().size()) throw ValidationError("coefficient rows differ");
    for (double c : row) {
      if (!std::isfinite(c)) throw ValidationError("non-finite coefficient");
    }
  }
}

LogisticEnvironment LogisticEnvironment::random(std::size_t num_actions, std::size_t dimension,
                                                std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> coef(num_actions, std::vector<double>(dimension + 1));
  for (auto& row : coef) {
    for (double& c : row) c = normal(rng);
  }
  return LogisticEnvironment(std::move(coef));
}

std::vector<double> LogisticEnvironment::sample_covariate(Rng& rng) const {
  std::vector<double> x(dimension());
  for (double& v : x) v = 2.0 * uniform01(rng) - 1.0;
  return x;
}

double LogisticEnvironment::mean_reward(std::size_t action, Covariate x) const {
  const auto& c = coef_.at(action);
  if (x.size() + 1 != c.size()) throw ValidationError("covariate dimension mismatch");
  double z = c[0];
  for (std::size_t j = 0; j < x.size(); ++j) z += c[j + 1] * x[j];
  return sigmoid(z);
}

double LogisticEnvironment::reward_variance(std::size_t action, Covariate x) const {
  const double f = mean_reward(action, x);
  return f * (1.0 - f);
}

double LogisticEnvironment::sample_reward(std::size_t action, Covariate x, Rng& rng) const {
  return uniform01(rng) < mean_reward(action, x) ? 1.0 : 0.0;
}

std::size_t draw_action(std::span<const double> p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_live = p.size();
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    last_live = a;
    acc += p[a];
    if (u < acc) return a;
  }
  if (last_live == p.size()) throw ValidationError("no action has positive probability");
  return last_live;
}

BanditLog sample_batched_log(const Environment& env, const BatchSchedule& schedule,
                             const BehaviorGenerator& behavior, std::uint64_t seed) {
  if (behavior.num_actions() != env.num_actions()) {
    throw ValidationError("behavior policy and environment disagree on the number of actions");
  }
  Rng rng(seed);
  BanditLog log(schedule, env.num_actions());
  for (std::size_t b = 0; b < schedule.num_batches(); ++b) {
    const Policy policy = behavior.policy_for_batch(b, log);
    if (policy.num_actions() != env.num_actions()) {
      throw ValidationError("behavior policy for batch " + std::to_string(b + 1) +
                            " has the wrong number of actions");
    }
    for (std::size_t t = schedule.begin(b); t < schedule.end(b); ++t) {
      Record r;
      r.x = env.sample_covariate(rng);
      r.behavior = policy.checked_probabilities(r.x);
      r.action = draw_action(r.behavior, rng);
      r.reward = env.sample_reward(r.action, r.x, rng);
      r.batch = b;
      log.append(std::move(r));
    }
  }
  return log;
}

double true_policy_value(const Environment& env, const Policy& policy) {
  const DiscreteEnvironment* d = env.as_discrete();
  if (d == nullptr) {
    throw ValidationError("exact policy value needs a discrete environment; use a Monte-Carlo "
                          "estimate for continuous covariates");
  }
  if (policy.num_actions() != d->num_actions()) {
    throw ValidationError("policy and environment disagree on the number of actions");
  }
  double value = 0.0;
  for (std::size_t i = 0; i < d->support_size(); ++i) {
    const auto& x = d->covariate(i);
    const auto p = policy.probabilities(x);
    double inner = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) inner += p[a] * d->mean_reward(a, x);
    value += d->weight(i) * inner;
  }
  return value;
}

double monte_carlo_policy_value(const Environment& env, const Policy& policy, std::size_t draws,
                                std::uint64_t seed) {
  if (draws == 0) throw ValidationError("Monte-Carlo value needs at least one draw");
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto x = env.sample_covariate(rng);
    const auto p = policy.probabilities(x);
    double inner = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) inner += p[a] * env.mean_reward(a, x);
    sum += inner;
  }
  return sum / static_cast<double>(draws);
}

}  // namespace batchope
