#pragma once

#include "batchope/environment.hpp"
#include "batchope/policy.hpp"

namespace batchope {

/// Variance floor for i.i.d. logging under `behavior`, by enumeration:
///   E[ sum_a pe(a|X)^2 v*(a,X) / pb(a|X) + (sum_a pe(a|X) f*(a,X) - theta)^2 ].
/// Throws for non-discrete environments, and SupportError when pe > 0 meets pb = 0.
double semiparametric_bound(const Environment& env, const Policy& evaluation,
                            const Policy& behavior, double theta);
double semiparametric_bound(const Environment& env, const Policy& evaluation,
                            const Policy& behavior);

/// sigma^2_tau of a batch logged under `behavior` that holds a fraction r of
/// the rounds, with the outcome model equal to f*: the bound divided by r.
double batch_score_variance(const Environment& env, const Policy& evaluation,
                            const Policy& behavior, double fraction);

}  // namespace batchope
