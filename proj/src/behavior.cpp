#include "batchope/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "batchope/errors.hpp"

namespace batchope {

FixedBehavior::FixedBehavior(std::vector<Policy> per_batch) : policies_(std::move(per_batch)) {
  if (policies_.empty()) throw ValidationError("fixed behavior needs at least one policy");
  for (const auto& p : policies_) {
    if (p.num_actions() != policies_.front().num_actions()) {
      throw ValidationError("fixed behavior policies disagree on the number of actions");
    }
  }
}

Policy FixedBehavior::policy_for_batch(std::size_t batch, const BanditLog&) const {
  if (policies_.size() == 1) return policies_.front();
  if (batch >= policies_.size()) {
    throw ValidationError("no fixed behavior policy for batch " + std::to_string(batch + 1));
  }
  return policies_[batch];
}

RwPolicyState make_rw_state(std::size_t num_actions, std::uint64_t seed, double noise_scale) {
  if (num_actions == 0) throw ValidationError("random walk needs at least one action");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw ValidationError("random-walk noise scale must be finite and non-negative");
  }
  RwPolicyState state;
  state.rng.seed(seed);
  state.noise_scale = noise_scale;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  state.scores.resize(num_actions);
  for (double& s : state.scores) s = uniform(state.rng);
  return state;
}

std::vector<double> standardize_scores(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("no scores to standardize");
  std::vector<double> p(scores.begin(), scores.end());
  const double lo = *std::min_element(p.begin(), p.end());
  if (lo <= 0.0) {
    for (double& v : p) v += 0.01 - lo;
  }
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return p;
}

std::pair<Policy, RwPolicyState> rw_next_policy(RwPolicyState state) {
  for (double s : state.scores) {
    if (!std::isfinite(s)) throw ValidationError("random-walk scores must be finite");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  if (state.noise_scale > 0.0) {
    for (double& s : state.scores) s += state.noise_scale * normal(state.rng);
  }
  Policy policy = Policy::constant(standardize_scores(state.scores));
  return {std::move(policy), std::move(state)};
}

RandomWalkBehavior::RandomWalkBehavior(std::size_t num_actions, std::uint64_t seed,
                                       double noise_scale)
    : num_actions_(num_actions), seed_(seed), noise_scale_(noise_scale) {
  make_rw_state(num_actions, seed, noise_scale);  // validates
}

Policy RandomWalkBehavior::policy_for_batch(std::size_t batch, const BanditLog&) const {
  auto state = make_rw_state(num_actions_, seed_, noise_scale_);
  for (std::size_t step = 0;; ++step) {
    auto [policy, next] = rw_next_policy(std::move(state));
    if (step == batch) return policy;
    state = std::move(next);
  }
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    d += diff * diff;
  }
  return d;
}

std::size_t nearest(std::span<const std::vector<double>> centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(centroids[c], x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

std::vector<std::vector<double>> fit_centroids(std::span<const std::vector<double>> points,
                                               std::size_t max_clusters, std::size_t iterations) {
  std::vector<std::vector<double>> centroids;
  if (points.empty() || max_clusters == 0 || points.front().empty()) return centroids;
  for (const auto& p : points) {
    if (centroids.size() == max_clusters) break;
    if (std::find(centroids.begin(), centroids.end(), p) == centroids.end()) centroids.push_back(p);
  }
  const std::size_t dim = points.front().size();
  std::vector<std::size_t> assign(points.size(), 0);
  for (std::size_t it = 0; it < iterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = nearest(centroids, points[i]);
      changed = changed || c != assign[i];
      assign[i] = c;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[assign[i]][j] += points[i][j];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) continue;  // keep an emptied centroid where it was
      for (std::size_t j = 0; j < dim; ++j) {
        centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
  }
  return centroids;
}

std::size_t UcbBehaviorState::bucket_of(Covariate x) const {
  if (centroids.empty()) return 0;
  return nearest(centroids, x);
}

Policy ucb_next_policy(UcbBehaviorState& state, const BanditLog& history) {
  const std::size_t k = state.num_actions;
  if (k == 0) throw ValidationError("UCB behavior needs at least one action");
  if (history.num_actions() != k) {
    throw ValidationError("history and UCB state disagree on the number of actions");
  }
  if (k == 1) return Policy::constant({1.0});
  if (!(state.exploit_mass > 0.0 && state.exploit_mass <= 1.0)) {
    throw ValidationError("UCB exploitation mass must lie in (0, 1]");
  }

  state.centroids.clear();
  if (history.size() > 0 && history.dimension() > 0) {
    std::vector<std::vector<double>> first;
    for (const auto& r : history.batch(0)) first.push_back(r.x);
    state.centroids = fit_centroids(first, state.max_buckets);
  }
  const std::size_t buckets = std::max<std::size_t>(1, state.centroids.size());
  std::vector<std::vector<double>> sums(buckets, std::vector<double>(k, 0.0));
  std::vector<std::vector<std::size_t>> counts(buckets, std::vector<std::size_t>(k, 0));
  for (const auto& r : history.records()) {
    const std::size_t b = state.bucket_of(r.x);
    sums[b][r.action] += r.reward;
    ++counts[b][r.action];
  }
  state.estimates.assign(buckets, std::vector<double>(k, 0.0));
  for (std::size_t b = 0; b < buckets; ++b) {
    for (std::size_t a = 0; a < k; ++a) {
      if (counts[b][a] > 0) state.estimates[b][a] = sums[b][a] / static_cast<double>(counts[b][a]);
    }
  }

  auto frozen = std::make_shared<const UcbBehaviorState>(state);
  return Policy(k, [frozen](Covariate x) {
    const std::size_t kk = frozen->num_actions;
    const std::size_t best = argmax(frozen->estimates[frozen->bucket_of(x)]);
    std::vector<double> p(kk, (1.0 - frozen->exploit_mass) / static_cast<double>(kk - 1));
    p[best] = frozen->exploit_mass;
    return p;
  });
}

UcbBehavior::UcbBehavior(std::size_t num_actions, double exploit_mass, std::size_t max_buckets)
    : num_actions_(num_actions), exploit_mass_(exploit_mass), max_buckets_(max_buckets) {
  if (num_actions == 0) throw ValidationError("UCB behavior needs at least one action");
  if (!(exploit_mass > 0.0 && exploit_mass <= 1.0)) {
    throw ValidationError("UCB exploitation mass must lie in (0, 1]");
  }
}

Policy UcbBehavior::policy_for_batch(std::size_t, const BanditLog& history) const {
  UcbBehaviorState state;
  state.num_actions = num_actions_;
  state.exploit_mass = exploit_mass_;
  state.max_buckets = max_buckets_;
  return ucb_next_policy(state, history);
}

}  // namespace batchope
