#include "batchope/diagnostics.hpp"

#include <string>

#include "batchope/errors.hpp"

namespace batchope {

double semiparametric_bound(const Environment& env, const Policy& evaluation,
                            const Policy& behavior, double theta) {
  const DiscreteEnvironment* d = env.as_discrete();
  if (d == nullptr) throw ValidationError("the variance bound needs a discrete environment");
  if (evaluation.num_actions() != d->num_actions() || behavior.num_actions() != d->num_actions()) {
    throw ValidationError("policies and environment disagree on the number of actions");
  }
  double bound = 0.0;
  for (std::size_t i = 0; i < d->support_size(); ++i) {
    const auto& x = d->covariate(i);
    const auto pe = evaluation.checked_probabilities(x);
    const auto pb = behavior.checked_probabilities(x);
    double noise = 0.0;
    double mean = 0.0;
    for (std::size_t a = 0; a < pe.size(); ++a) {
      mean += pe[a] * d->mean_reward(a, x);
      if (pe[a] == 0.0) continue;
      if (!(pb[a] > 0.0)) {
        throw SupportError("behavior gives zero probability to action " + std::to_string(a + 1));
      }
      noise += pe[a] * pe[a] * d->reward_variance(a, x) / pb[a];
    }
    bound += d->weight(i) * (noise + (mean - theta) * (mean - theta));
  }
  return bound;
}

double semiparametric_bound(const Environment& env, const Policy& evaluation,
                            const Policy& behavior) {
  return semiparametric_bound(env, evaluation, behavior, true_policy_value(env, evaluation));
}

double batch_score_variance(const Environment& env, const Policy& evaluation,
                            const Policy& behavior, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("fraction outside (0, 1]");
  return semiparametric_bound(env, evaluation, behavior) / fraction;
}

}  // namespace batchope
