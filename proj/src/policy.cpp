#include "batchope/policy.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "batchope/errors.hpp"

namespace batchope {

Policy::Policy(std::size_t num_actions, Fn fn) : num_actions_(num_actions), fn_(std::move(fn)) {
  if (num_actions_ == 0) throw ValidationError("policy needs at least one action");
  if (!fn_) throw ValidationError("policy function is empty");
}

Policy Policy::constant(std::vector<double> probs) {
  validate_distribution(probs);
  const std::size_t k = probs.size();
  auto shared = std::make_shared<const std::vector<double>>(std::move(probs));
  return Policy(k, [shared](Covariate) { return *shared; });
}

Policy Policy::uniform(std::size_t num_actions) {
  if (num_actions == 0) throw ValidationError("policy needs at least one action");
  return Policy(num_actions, [num_actions](Covariate) {
    return std::vector<double>(num_actions, 1.0 / static_cast<double>(num_actions));
  });
}

Policy Policy::deterministic(std::size_t num_actions,
                             std::function<std::size_t(Covariate)> choose) {
  return Policy(num_actions, [num_actions, choose = std::move(choose)](Covariate x) {
    const std::size_t a = choose(x);
    if (a >= num_actions) throw ValidationError("deterministic policy chose an invalid action");
    std::vector<double> p(num_actions, 0.0);
    p[a] = 1.0;
    return p;
  });
}

std::vector<double> Policy::probabilities(Covariate x) const {
  auto p = fn_(x);
  if (p.size() != num_actions_) {
    throw ValidationError("policy returned " + std::to_string(p.size()) +
                          " probabilities, expected " + std::to_string(num_actions_));
  }
  return p;
}

std::vector<double> Policy::checked_probabilities(Covariate x) const {
  auto p = probabilities(x);
  validate_distribution(p);
  return p;
}

void validate_distribution(std::span<const double> p, double tol) {
  if (p.empty()) throw ValidationError("empty probability vector");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("probabilities must be finite and non-negative");
    }
    sum += v;
  }
  if (sum == 0.0) throw ValidationError("probability row puts zero mass on every action");
  if (std::abs(sum - 1.0) > tol) {
    throw ValidationError("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

Policy mix_policies(const Policy& deterministic, const Policy& uniform, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw ValidationError("mixture weight must lie in [0, 1]");
  }
  if (deterministic.num_actions() != uniform.num_actions()) {
    throw ValidationError("mixed policies must share the number of actions");
  }
  return Policy(deterministic.num_actions(), [deterministic, uniform, weight](Covariate x) {
    auto p = deterministic.probabilities(x);
    if (weight == 1.0) return p;
    const auto q = uniform.probabilities(x);
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = weight * p[a] + (1.0 - weight) * q[a];
    return p;
  });
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ValidationError("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace batchope
