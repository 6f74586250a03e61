#include "batchope/opl.hpp"

#include "batchope/errors.hpp"

namespace batchope {

PolicySelection select_policy(const BanditLog& log, const NuisanceSequence& nuisances,
                              std::span<const PolicyCandidate> candidates,
                              const std::string& estimator, const EstimatorSettings& settings) {
  if (candidates.empty()) throw ValidationError("policy selection needs at least one candidate");
  PolicySelection out;
  std::vector<double> values;
  for (const auto& c : candidates) {
    if (c.policy.num_actions() != log.num_actions()) {
      throw ValidationError("candidate '" + c.id + "' has the wrong number of actions");
    }
    EstimatorSuite suite(log, nuisances, c.policy, settings);
    out.results.push_back(suite.run(estimator));
    values.push_back(out.results.back().estimate);
  }
  out.chosen = argmax(values);
  out.chosen_id = candidates[out.chosen].id;
  return out;
}

}  // namespace batchope
