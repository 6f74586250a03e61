#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "batchope/estimators.hpp"
#include "batchope/log.hpp"
#include "batchope/nuisance.hpp"
#include "batchope/policy.hpp"

namespace batchope {

struct PolicyCandidate {
  std::string id;
  Policy policy;
};

struct PolicySelection {
  std::size_t chosen = 0;
  std::string chosen_id;
  /// One result per candidate, in candidate order.
  std::vector<EstimatorResult> results;
};

/// Evaluates every candidate with the named estimator and picks the largest
/// estimate (lowest index on ties).
PolicySelection select_policy(const BanditLog& log, const NuisanceSequence& nuisances,
                              std::span<const PolicyCandidate> candidates,
                              const std::string& estimator, const EstimatorSettings& settings = {});

}  // namespace batchope
