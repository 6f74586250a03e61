#include "batchope/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "batchope/errors.hpp"

namespace batchope {

namespace {

void check_training_set(std::span<const std::vector<double>> covariates,
                        std::span<const double> targets) {
  if (covariates.size() != targets.size()) {
    throw ValidationError("covariates and targets differ in length");
  }
  for (double y : targets) {
    if (!std::isfinite(y)) throw ValidationError("non-finite regression target");
  }
  for (const auto& x : covariates) {
    if (x.size() != covariates.front().size()) throw ValidationError("covariate dimensions differ");
    for (double v : x) {
      if (!std::isfinite(v)) throw ValidationError("non-finite covariate");
    }
  }
}

}  // namespace

std::vector<double> silverman_bandwidth(std::span<const std::vector<double>> covariates) {
  if (covariates.empty()) return {};
  const std::size_t d = covariates.front().size();
  const double n = static_cast<double>(covariates.size());
  std::vector<double> h(d, 1.0);
  if (covariates.size() < 2) return h;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& x : covariates) mean += x[j];
    mean /= n;
    double ss = 0.0;
    for (const auto& x : covariates) ss += (x[j] - mean) * (x[j] - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd > 0.0) h[j] = 1.06 * sd * std::pow(n, -0.2);
  }
  return h;
}

KernelRegressor KernelRegressor::fit(std::span<const std::vector<double>> covariates,
                                     std::span<const double> targets,
                                     std::vector<double> bandwidth) {
  check_training_set(covariates, targets);
  KernelRegressor model;
  if (covariates.empty()) return model;
  const std::size_t d = covariates.front().size();
  if (bandwidth.size() != d) throw ValidationError("bandwidth length must equal the dimension");
  for (double h : bandwidth) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("bandwidth must be positive");
  }
  model.bandwidth_ = std::move(bandwidth);
  std::map<std::vector<double>, std::size_t> slot;
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(covariates[i], model.points_.size());
    if (inserted) {
      model.points_.push_back(covariates[i]);
      model.target_sums_.push_back(0.0);
      model.counts_.push_back(0.0);
    }
    model.target_sums_[it->second] += targets[i];
    model.counts_[it->second] += 1.0;
  }
  return model;
}

double KernelRegressor::predict(Covariate x) const {
  if (points_.empty()) return 0.0;
  if (x.size() != bandwidth_.size()) throw ValidationError("query has wrong dimension");
  thread_local std::vector<double> logw;
  logw.resize(points_.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double z = (x[j] - points_[i][j]) / bandwidth_[j];
      q += z * z;
    }
    logw[i] = -0.5 * q;
    top = std::max(top, logw[i]);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double w = std::exp(logw[i] - top);
    num += w * target_sums_[i];
    den += w * counts_[i];
  }
  return num / den;
}

KernelRegressor fit_nw(std::span<const std::vector<double>> covariates,
                       std::span<const double> targets, std::span<const double> bandwidth) {
  if (covariates.empty()) return KernelRegressor::fit(covariates, targets, {});
  const std::size_t d = covariates.front().size();
  std::vector<double> h;
  if (bandwidth.empty()) {
    check_training_set(covariates, targets);
    h = silverman_bandwidth(covariates);
  } else if (bandwidth.size() == 1) {
    h.assign(d, bandwidth.front());
  } else {
    h.assign(bandwidth.begin(), bandwidth.end());
  }
  return KernelRegressor::fit(covariates, targets, std::move(h));
}

KnnRegressor KnnRegressor::fit(std::span<const std::vector<double>> covariates,
                               std::span<const double> targets, std::size_t k) {
  if (k == 0) throw ValidationError("k-NN needs k >= 1");
  check_training_set(covariates, targets);
  KnnRegressor model;
  model.points_.assign(covariates.begin(), covariates.end());
  model.targets_.assign(targets.begin(), targets.end());
  model.k_ = k;
  return model;
}

double KnnRegressor::predict(Covariate x) const {
  if (points_.empty()) return 0.0;
  if (x.size() != points_.front().size()) throw ValidationError("query has wrong dimension");
  std::vector<std::pair<double, std::size_t>> dist(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - points_[i][j];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  const std::size_t m = std::min(k_, points_.size());
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m - 1), dist.end());
  std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m));
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += targets_[dist[i].second];
  return sum / static_cast<double>(m);
}

std::vector<double> clip_renormalize(std::span<const double> p, double floor) {
  validate_distribution(p, 1e-6);
  if (!(floor > 0.0) || floor * static_cast<double>(p.size()) > 1.0 + 1e-12) {
    throw ValidationError("propensity floor must lie in (0, 1/K]");
  }
  std::vector<double> q(p.begin(), p.end());
  if (std::all_of(q.begin(), q.end(), [floor](double v) { return v >= floor; }) &&
      std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) <= 1e-12) {
    return q;  // already feasible
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& v : q) v /= total;
  for (int it = 0; it < 100000; ++it) {
    std::vector<double> r(q.size());
    double sum = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) sum += (r[a] = std::max(q[a], floor));
    double change = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) {
      r[a] /= sum;
      change = std::max(change, std::abs(r[a] - q[a]));
    }
    q = std::move(r);
    if (change < 1e-12) break;
  }
  return q;
}

PropensityModel::PropensityModel(std::size_t num_actions, double floor)
    : num_actions_(num_actions),
      floor_(floor),
      fixed_(num_actions, 1.0 / static_cast<double>(num_actions)) {}

PropensityModel PropensityModel::frequency(std::vector<double> frequencies, double floor) {
  PropensityModel m(frequencies.size(), floor);
  m.fixed_ = clip_renormalize(frequencies, floor);
  return m;
}

PropensityModel PropensityModel::kernel(std::vector<KernelRegressor> indicator_models,
                                        double floor) {
  PropensityModel m(indicator_models.size(), floor);
  m.kernels_ = std::move(indicator_models);
  return m;
}

PropensityModel PropensityModel::known(Policy policy, double floor) {
  PropensityModel m(policy.num_actions(), floor);
  m.known_ = std::move(policy);
  return m;
}

std::vector<double> PropensityModel::probabilities(Covariate x) const {
  if (known_) return clip_renormalize(known_->checked_probabilities(x), floor_);
  if (kernels_.empty()) return fixed_;
  std::vector<double> raw(num_actions_);
  for (std::size_t a = 0; a < num_actions_; ++a) raw[a] = kernels_[a].predict(x);
  return clip_renormalize(raw, floor_);
}

PropensityModel fit_propensity(const BanditLog& history, PropensityMethod method, double floor,
                               std::span<const double> bandwidth) {
  const std::size_t k = history.num_actions();
  if (!(floor > 0.0) || floor * static_cast<double>(k) > 1.0 + 1e-12) {
    throw ValidationError("propensity floor must lie in (0, 1/K]");
  }
  if (method == PropensityMethod::None || method == PropensityMethod::Known) {
    throw ValidationError("fit_propensity needs the frequency or kernel method");
  }
  if (history.size() == 0) return PropensityModel(k, floor);
  if (method == PropensityMethod::Frequency) {
    std::vector<double> freq(k, 0.0);
    for (const auto& r : history.records()) freq[r.action] += 1.0;
    for (double& f : freq) f /= static_cast<double>(history.size());
    return PropensityModel::frequency(std::move(freq), floor);
  }
  std::vector<std::vector<double>> xs;
  for (const auto& r : history.records()) xs.push_back(r.x);
  std::vector<KernelRegressor> models;
  for (std::size_t a = 0; a < k; ++a) {
    std::vector<double> ind;
    for (const auto& r : history.records()) ind.push_back(r.action == a ? 1.0 : 0.0);
    models.push_back(fit_nw(xs, ind, bandwidth));
  }
  return PropensityModel::kernel(std::move(models), floor);
}

std::vector<double> NuisanceSequence::predict_all(std::size_t batch, Covariate x) const {
  std::vector<double> f(num_actions());
  for (std::size_t a = 0; a < f.size(); ++a) f[a] = outcome(batch, a).predict(x);
  return f;
}

std::vector<double> NuisanceSequence::predict_terminal(Covariate x) const {
  std::vector<double> f(num_actions());
  for (std::size_t a = 0; a < f.size(); ++a) f[a] = terminal(a).predict(x);
  return f;
}

std::vector<double> NuisanceSequence::predict_all(std::size_t batch, Covariate x,
                                              std::size_t round) const {
  if (round < fitted_x_.size() && fitted_batch_[round] == batch &&
      std::equal(x.begin(), x.end(), fitted_x_[round].begin(), fitted_x_[round].end())) {
    return fitted_adaptive_[round];
  }
  return predict_all(batch, x);
}

std::vector<double> NuisanceSequence::predict_terminal(Covariate x, std::size_t round) const {
  if (round < fitted_x_.size() &&
      std::equal(x.begin(), x.end(), fitted_x_[round].begin(), fitted_x_[round].end())) {
    return fitted_terminal_[round];
  }
  return predict_terminal(x);
}

namespace {

std::shared_ptr<const OutcomeModel> fit_outcome(const BanditLog& log, std::size_t action,
                                                std::span<const std::size_t> rounds,
                                                const NuisanceOptions& options) {
  switch (options.method) {
    case OutcomeMethod::Zero:
      return std::make_shared<FunctionModel>([](Covariate) { return 0.0; });
    case OutcomeMethod::Oracle: {
      auto oracle = options.oracle;
      return std::make_shared<FunctionModel>(
          [oracle, action](Covariate x) { return oracle(action, x); });
    }
    case OutcomeMethod::NadarayaWatson:
    case OutcomeMethod::Knn:
      break;
  }
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  xs.reserve(rounds.size());
  ys.reserve(rounds.size());
  for (std::size_t t : rounds) {
    xs.push_back(log[t].x);
    ys.push_back(log[t].reward);
  }
  if (options.method == OutcomeMethod::Knn) {
    return std::make_shared<KnnRegressor>(KnnRegressor::fit(xs, ys, options.k));
  }
  return std::make_shared<KernelRegressor>(fit_nw(xs, ys, options.bandwidth));
}

}  // namespace

NuisanceSequence build_nuisance_sequence(const BanditLog& log, const NuisanceOptions& options) {
  log.require_complete();
  if (options.method == OutcomeMethod::Oracle && !options.oracle) {
    throw ValidationError("oracle nuisance requested without an oracle function");
  }
  if (options.propensity == PropensityMethod::Known) {
    if (!options.known_propensity) {
      throw ValidationError("known propensities requested without a policy");
    }
    const double floor = options.propensity_floor;
    if (!(floor > 0.0) || floor * static_cast<double>(log.num_actions()) > 1.0 + 1e-12) {
      throw ValidationError("propensity floor must lie in (0, 1/K]");
    }
  }
  if (options.method == OutcomeMethod::Knn && options.k == 0) {
    throw ValidationError("k-NN needs k >= 1");
  }
  const bool uses_data = options.method == OutcomeMethod::NadarayaWatson ||
                         options.method == OutcomeMethod::Knn;
  const auto& schedule = log.schedule();
  const std::size_t k = log.num_actions();

  NuisanceSequence seq;
  std::vector<std::vector<std::size_t>> seen(k);
  auto fit_all = [&](std::vector<std::shared_ptr<const OutcomeModel>>& models,
                     std::vector<std::vector<std::size_t>>* training) {
    for (std::size_t a = 0; a < k; ++a) {
      const auto& rounds = uses_data ? seen[a] : std::vector<std::size_t>{};
      models.push_back(fit_outcome(log, a, rounds, options));
      if (training) training->push_back(rounds);
    }
  };

  for (std::size_t b = 0; b < schedule.num_batches(); ++b) {
    if (b > 0) {
      for (std::size_t t = schedule.begin(b - 1); t < schedule.end(b - 1); ++t) {
        seen[log[t].action].push_back(t);
      }
    }
    seq.outcome_.emplace_back();
    seq.training_.emplace_back();
    fit_all(seq.outcome_.back(), &seq.training_.back());
    if (options.propensity == PropensityMethod::Known) {
      Policy known = options.known_propensity(b);
      if (known.num_actions() != k) {
        throw ValidationError("known propensity policy has the wrong number of actions");
      }
      seq.propensity_.push_back(PropensityModel::known(std::move(known), options.propensity_floor));
    } else if (options.propensity != PropensityMethod::None) {
      seq.propensity_.push_back(fit_propensity(log.prefix(schedule.begin(b)), options.propensity,
                                               options.propensity_floor, options.bandwidth));
    }
  }
  const std::size_t last = schedule.num_batches() - 1;
  for (std::size_t t = schedule.begin(last); t < schedule.end(last); ++t) {
    seen[log[t].action].push_back(t);
  }
  fit_all(seq.terminal_, nullptr);

  for (const Record& r : log.records()) {
    seq.fitted_x_.push_back(r.x);
    seq.fitted_batch_.push_back(r.batch);
    seq.fitted_adaptive_.push_back(seq.predict_all(r.batch, r.x));
    seq.fitted_terminal_.push_back(seq.predict_terminal(r.x));
  }
  return seq;
}

}  // namespace batchope
