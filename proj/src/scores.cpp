#include "batchope/scores.hpp"

#include <string>

#include "batchope/errors.hpp"
#include "batchope/weights.hpp"

namespace batchope {

double phi(std::span<const double> evaluation, std::span<const double> behavior,
           std::span<const double> fitted, std::size_t action, double reward) {
  const std::size_t k = evaluation.size();
  if (behavior.size() != k || fitted.size() != k || action >= k) {
    throw ValidationError("score inputs disagree on the number of actions");
  }
  if (!(behavior[action] > 0.0)) {
    throw SupportError("logged action " + std::to_string(action + 1) +
                       " has zero behavior probability");
  }
  double value = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    if (evaluation[a] == 0.0) continue;
    if (!(behavior[a] > 0.0)) {
      throw SupportError("zero behavior probability for action " + std::to_string(a + 1) +
                         " which the evaluation policy plays with probability " +
                         std::to_string(evaluation[a]));
    }
    double term = fitted[a];
    if (a == action) term += (reward - fitted[a]) / behavior[a];
    value += evaluation[a] * term;
  }
  return value;
}

ScoreSet compute_scores(const BanditLog& log, const NuisanceSequence& nuisances,
                        const Policy& evaluation, ScoreKind kind, Denominator denominator) {
  log.require_complete();
  const std::size_t k = log.num_actions();
  if (evaluation.num_actions() != k) {
    throw ValidationError("evaluation policy and log disagree on the number of actions");
  }
  if (nuisances.num_actions() != k ||
      nuisances.num_batches() != log.schedule().num_batches()) {
    throw ValidationError("nuisance sequence is not aligned with the log");
  }
  if (denominator == Denominator::Estimated && !nuisances.has_propensity()) {
    throw ValidationError("estimated propensities requested but none were fitted");
  }

  ScoreSet out{log.schedule(), {}, {}, {}};
  out.adaptive.reserve(log.size());
  out.terminal.reserve(log.size());
  out.drift.reserve(log.size());
  const std::vector<double> zeros(k, 0.0);
  for (std::size_t t = 0; t < log.size(); ++t) {
    const Record& r = log[t];
    const auto pe = evaluation.checked_probabilities(r.x);
    const auto pb = denominator == Denominator::Logged ? r.behavior
                                                       : nuisances.propensity(r.batch).probabilities(r.x);
    const auto f_batch = nuisances.predict_all(r.batch, r.x, t);
    const auto f_term = nuisances.predict_terminal(r.x, t);
    const bool ipw = kind == ScoreKind::Ipw;
    out.adaptive.push_back(phi(pe, pb, ipw ? zeros : f_batch, r.action, r.reward));
    out.terminal.push_back(phi(pe, pb, ipw ? zeros : f_term, r.action, r.reward));
    const double diff = ipw ? 0.0 : f_batch[r.action] - f_term[r.action];
    out.drift.push_back(diff * diff);
  }
  return out;
}

std::size_t MomentSummary::total() const noexcept {
  std::size_t n = 0;
  for (std::size_t s : sizes) n += s;
  return n;
}

double batch_variance(std::span<const double> scores, double theta, double fraction) {
  if (scores.empty()) throw ValidationError("variance of an empty batch");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("batch fraction outside (0, 1]");
  double ss = 0.0;
  for (double s : scores) ss += (s - theta) * (s - theta);
  return ss / static_cast<double>(scores.size()) / fraction;
}

std::vector<double> batch_means(const ScoreSet& scores) {
  const auto& s = scores.schedule;
  std::vector<double> means(s.num_batches());
  for (std::size_t b = 0; b < s.num_batches(); ++b) {
    double sum = 0.0;
    for (std::size_t t = s.begin(b); t < s.end(b); ++t) sum += scores.adaptive[t];
    means[b] = sum / static_cast<double>(s.size(b));
  }
  return means;
}

MomentSummary summarize(const ScoreSet& scores, double theta) {
  const auto& s = scores.schedule;
  if (scores.adaptive.size() != s.total() || scores.terminal.size() != s.total() ||
      scores.drift.size() != s.total()) {
    throw ValidationError("score set does not cover the schedule");
  }
  MomentSummary m;
  m.theta = theta;
  m.means = batch_means(scores);
  const std::span<const double> adaptive(scores.adaptive);
  const std::span<const double> terminal(scores.terminal);
  for (std::size_t b = 0; b < s.num_batches(); ++b) {
    const std::size_t lo = s.begin(b);
    const std::size_t n = s.size(b);
    m.sizes.push_back(n);
    m.fractions.push_back(s.fraction(b));
    m.var_hat.push_back(batch_variance(adaptive.subspan(lo, n), theta, s.fraction(b)));
    m.var_tilde.push_back(batch_variance(terminal.subspan(lo, n), theta, s.fraction(b)));
    double drift = 0.0;
    for (std::size_t t = lo; t < lo + n; ++t) drift += scores.drift[t];
    m.drift.push_back(drift / static_cast<double>(n));
  }
  return m;
}

MomentSummary batch_means(const BanditLog& log, const NuisanceSequence& nuisances,
                          const Policy& evaluation, ScoreKind kind) {
  const ScoreSet scores = compute_scores(log, nuisances, evaluation, kind);
  const auto means = batch_means(scores);
  return summarize(scores, WeightVector::equal(means.size()).dot(means));
}

}  // namespace batchope
