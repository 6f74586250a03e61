#include "batchope/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "batchope/deficient.hpp"
#include "batchope/errors.hpp"

namespace batchope {

double z_value(double level) {
  if (std::abs(level - 0.95) < 1e-12) return 1.96;
  if (std::abs(level - 0.90) < 1e-12) return 1.6448536269514722;
  if (std::abs(level - 0.99) < 1e-12) return 2.5758293035489004;
  throw ValidationError("unsupported confidence level " + std::to_string(level) +
                        " (use 0.90, 0.95 or 0.99)");
}

ConfidenceInterval confidence_interval(double estimate, double variance, std::size_t rounds,
                                       double level) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw ValidationError("variance must be finite and non-negative");
  }
  if (rounds == 0) throw ValidationError("confidence interval needs at least one round");
  const double half = z_value(level) * std::sqrt(variance / static_cast<double>(rounds));
  return {estimate - half, estimate + half};
}

EstimatorResult estimate_ba2ipw(const MomentSummary& summary, const WeightVector& weights,
                                VarianceSource source, std::string name) {
  if (weights.size() != summary.num_batches()) {
    throw ValidationError("expected " + std::to_string(summary.num_batches()) +
                          " batch weights, got " + std::to_string(weights.size()));
  }
  EstimatorResult r;
  r.name = std::move(name);
  r.estimate = weights.dot(summary.means);
  r.weights = weights.values();
  r.variance = weights.combined_variance(source == VarianceSource::Hat ? summary.var_hat
                                                                       : summary.var_tilde);
  r.rounds = summary.total();
  r.interval = confidence_interval(r.estimate, r.variance, r.rounds);
  r.diagnostics = summary;
  return r;
}

EstimatorResult n_step_estimate(const ScoreSet& scores, const NStepOptions& options,
                                std::string name) {
  if (options.steps == 0) throw ValidationError("N-step estimation needs N >= 1");
  const std::vector<double> d = batch_means(scores);
  auto next_weights = [&](const MomentSummary& s) {
    const auto& var = options.source == VarianceSource::Hat ? s.var_hat : s.var_tilde;
    return options.rule == WeightRule::Efficient ? efficient_weights(var)
                                                 : stability_weights(var, s.drift, options.alpha);
  };

  WeightVector w = WeightVector::equal(d.size());
  std::vector<std::vector<double>> history{w.values()};
  std::size_t iterations = 0;
  double theta = 0.0;
  for (std::size_t i = 1; i <= options.steps; ++i) {
    theta = w.dot(d);
    iterations = i;
    if (i == options.steps) break;
    WeightVector updated = next_weights(summarize(scores, theta));
    double change = 0.0;
    for (std::size_t b = 0; b < d.size(); ++b) change = std::max(change, std::abs(updated[b] - w[b]));
    w = std::move(updated);
    history.push_back(w.values());
    if (change < options.tolerance) {
      theta = w.dot(d);
      iterations = i + 1;
      break;
    }
  }
  EstimatorResult r = estimate_ba2ipw(summarize(scores, theta), w, options.source, std::move(name));
  r.iterations = iterations;
  r.weight_history = std::move(history);
  return r;
}

EstimatorResult sample_average(std::string name, std::span<const double> terms) {
  if (terms.empty()) throw ValidationError("sample average of no terms");
  double mean = 0.0;
  for (double v : terms) mean += v;
  mean /= static_cast<double>(terms.size());
  double ss = 0.0;
  for (double v : terms) ss += (v - mean) * (v - mean);
  EstimatorResult r;
  r.name = std::move(name);
  r.estimate = mean;
  r.variance = ss / static_cast<double>(terms.size());
  r.rounds = terms.size();
  r.interval = confidence_interval(r.estimate, r.variance, r.rounds);
  return r;
}

namespace {

enum class Baseline { Dm, Ipw, Aipw, AdaDm };

EstimatorResult baseline(Baseline which, const BanditLog& log, const NuisanceSequence& nuisances,
                         const Policy& evaluation) {
  log.require_complete();
  if (evaluation.num_actions() != log.num_actions() ||
      nuisances.num_actions() != log.num_actions()) {
    throw ValidationError("log, nuisances and evaluation policy disagree on the number of actions");
  }
  std::vector<double> terms(log.size());
  const std::vector<double> zeros(log.num_actions(), 0.0);
  for (std::size_t t = 0; t < log.size(); ++t) {
    const Record& r = log[t];
    const auto pe = evaluation.checked_probabilities(r.x);
    switch (which) {
      case Baseline::Ipw:
        terms[t] = phi(pe, r.behavior, zeros, r.action, r.reward);
        break;
      case Baseline::Aipw:
        terms[t] = phi(pe, r.behavior, nuisances.predict_terminal(r.x, t), r.action, r.reward);
        break;
      case Baseline::Dm:
      case Baseline::AdaDm: {
        const auto f = which == Baseline::Dm ? nuisances.predict_terminal(r.x, t)
                                             : nuisances.predict_all(r.batch, r.x, t);
        double v = 0.0;
        for (std::size_t a = 0; a < pe.size(); ++a) v += pe[a] * f[a];
        terms[t] = v;
        break;
      }
    }
  }
  static constexpr const char* names[] = {"DM", "IPW", "AIPW", "AdaDM"};
  return sample_average(names[static_cast<int>(which)], terms);
}

}  // namespace

EstimatorResult estimate_dm(const BanditLog& log, const NuisanceSequence& nuisances,
                            const Policy& evaluation) {
  return baseline(Baseline::Dm, log, nuisances, evaluation);
}

EstimatorResult estimate_ipw(const BanditLog& log, const NuisanceSequence& nuisances,
                             const Policy& evaluation) {
  return baseline(Baseline::Ipw, log, nuisances, evaluation);
}

EstimatorResult estimate_aipw(const BanditLog& log, const NuisanceSequence& nuisances,
                              const Policy& evaluation) {
  return baseline(Baseline::Aipw, log, nuisances, evaluation);
}

EstimatorResult estimate_adadm(const BanditLog& log, const NuisanceSequence& nuisances,
                               const Policy& evaluation) {
  return baseline(Baseline::AdaDm, log, nuisances, evaluation);
}

std::vector<EstimatorResult> baseline_estimators(const BanditLog& log,
                                                 const NuisanceSequence& nuisances,
                                                 const Policy& evaluation) {
  return {estimate_dm(log, nuisances, evaluation), estimate_ipw(log, nuisances, evaluation),
          estimate_aipw(log, nuisances, evaluation), estimate_adadm(log, nuisances, evaluation)};
}

EstimatorResult estimate_badr(const BanditLog& log, const NuisanceSequence& nuisances,
                              const Policy& evaluation, const NStepOptions& options) {
  const ScoreSet scores =
      compute_scores(log, nuisances, evaluation, ScoreKind::Aipw, Denominator::Estimated);
  return n_step_estimate(scores, options, "BADR");
}

const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names{
      "PBA2IPW", "EBA2IPW", "EBA2IPW'", "SBA2IPW", "BAdaIPW", "BADR",
      "BA2IPWIS", "AdaDM", "AIPW", "IPW", "DM"};
  return names;
}

EstimatorSuite::EstimatorSuite(const BanditLog& log, const NuisanceSequence& nuisances,
                               const Policy& evaluation, EstimatorSettings settings)
    : log_(log), nuisances_(nuisances), evaluation_(evaluation), settings_(settings) {}

const ScoreSet& EstimatorSuite::aipw() {
  if (!aipw_) aipw_ = compute_scores(log_, nuisances_, evaluation_, ScoreKind::Aipw);
  return *aipw_;
}

const ScoreSet& EstimatorSuite::ipw() {
  if (!ipw_) ipw_ = compute_scores(log_, nuisances_, evaluation_, ScoreKind::Ipw);
  return *ipw_;
}

EstimatorResult EstimatorSuite::run(const std::string& name) {
  NStepOptions opts;
  opts.steps = settings_.steps;
  opts.alpha = settings_.alpha;
  if (name == "PBA2IPW") {
    opts.steps = 1;
    return n_step_estimate(aipw(), opts, name);
  }
  if (name == "EBA2IPW") return n_step_estimate(aipw(), opts, name);
  if (name == "EBA2IPW'") {
    opts.source = VarianceSource::Tilde;
    return n_step_estimate(aipw(), opts, name);
  }
  if (name == "SBA2IPW") {
    opts.rule = WeightRule::Stability;
    return n_step_estimate(aipw(), opts, name);
  }
  if (name == "BAdaIPW") {
    opts.steps = 1;
    return n_step_estimate(ipw(), opts, name);
  }
  if (name == "BADR") {
    opts.steps = settings_.badr_steps;
    return estimate_badr(log_, nuisances_, evaluation_, opts);
  }
  if (name == "BA2IPWIS") {
    std::size_t folds = settings_.ba2ipwis_folds;
    for (std::size_t b = 0; b < log_.schedule().num_batches(); ++b) {
      folds = std::min(folds, log_.schedule().size(b));
    }
    if (folds > 1) return estimate_ba2ipwis_cross_fit(log_, nuisances_, evaluation_, folds);
    const auto moments = deficient_moments(log_, nuisances_, evaluation_);
    const auto zeta = deficient_weights(moments.covariance, moments.pairs, moments.num_actions,
                                        moments.num_batches);
    return estimate_ba2ipwis(moments, zeta);
  }
  if (name == "DM") return estimate_dm(log_, nuisances_, evaluation_);
  if (name == "IPW") return estimate_ipw(log_, nuisances_, evaluation_);
  if (name == "AIPW") return estimate_aipw(log_, nuisances_, evaluation_);
  if (name == "AdaDM") return estimate_adadm(log_, nuisances_, evaluation_);
  throw ValidationError("unknown estimator '" + name + "'");
}

std::vector<EstimatorResult> EstimatorSuite::run(std::span<const std::string> names) {
  std::vector<EstimatorResult> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(run(n));
  return out;
}

}  // namespace batchope
