#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "batchope/log.hpp"
#include "batchope/policy.hpp"

namespace batchope {

/// Regression model for f(a, x) of a single action.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;
  virtual double predict(Covariate x) const = 0;
};

/// Gaussian-kernel Nadaraya-Watson regression with one bandwidth per dimension.
///
/// Predictions are convex combinations of the training targets. An empty
/// model predicts 0. Repeated covariates are pooled internally, which leaves
/// predictions unchanged.
class KernelRegressor final : public OutcomeModel {
 public:
  KernelRegressor() = default;

  static KernelRegressor fit(std::span<const std::vector<double>> covariates,
                             std::span<const double> targets,
                             std::vector<double> bandwidth);

  double predict(Covariate x) const override;

  bool empty() const noexcept { return points_.empty(); }
  const std::vector<double>& bandwidth() const noexcept { return bandwidth_; }

 private:
  std::vector<std::vector<double>> points_;  // distinct covariates
  std::vector<double> target_sums_;
  std::vector<double> counts_;
  std::vector<double> bandwidth_;
};

/// Silverman's rule h_j = 1.06 * sd_j * n^(-1/5); dimensions with zero spread
/// (or n < 2) get h_j = 1.
std::vector<double> silverman_bandwidth(std::span<const std::vector<double>> covariates);

/// Convenience: Silverman bandwidth when `bandwidth` is empty, a broadcast
/// scalar when it has one entry, otherwise per-dimension values.
KernelRegressor fit_nw(std::span<const std::vector<double>> covariates,
                       std::span<const double> targets, std::span<const double> bandwidth = {});

/// k-nearest-neighbour regression (Euclidean). Predicts the mean target of the
/// min(k, n) nearest points, ties broken by training order. Empty predicts 0.
class KnnRegressor final : public OutcomeModel {
 public:
  KnnRegressor() = default;
  static KnnRegressor fit(std::span<const std::vector<double>> covariates,
                          std::span<const double> targets, std::size_t k);

  double predict(Covariate x) const override;

 private:
  std::vector<std::vector<double>> points_;
  std::vector<double> targets_;
  std::size_t k_ = 1;
};

/// Wraps a known function, e.g. the true f* of a synthetic environment.
class FunctionModel final : public OutcomeModel {
 public:
  explicit FunctionModel(std::function<double(Covariate)> fn) : fn_(std::move(fn)) {}
  double predict(Covariate x) const override { return fn_(x); }

 private:
  std::function<double(Covariate)> fn_;
};

enum class OutcomeMethod { NadarayaWatson, Knn, Oracle, Zero };
enum class PropensityMethod {
  None,
  Frequency,       // pre-batch action frequencies, covariate-free
  NadarayaWatson,  // kernel regression of action indicators
  Known,           // NuisanceOptions::known_propensity, e.g. the logged behavior policy
};

/// Iterated clip-to-floor and renormalize until the row changes by < 1e-12.
std::vector<double> clip_renormalize(std::span<const double> p, double floor);

/// Estimate g(a | x) of a batch's behavior policy, clipped at a floor.
class PropensityModel {
 public:
  PropensityModel(std::size_t num_actions, double floor);  // uniform
  static PropensityModel frequency(std::vector<double> frequencies, double floor);
  static PropensityModel kernel(std::vector<KernelRegressor> indicator_models, double floor);
  static PropensityModel known(Policy policy, double floor);

  std::vector<double> probabilities(Covariate x) const;
  double floor() const noexcept { return floor_; }

 private:
  std::size_t num_actions_;
  double floor_;
  std::vector<double> fixed_;
  std::vector<KernelRegressor> kernels_;
  std::optional<Policy> known_;
};

/// Fits g on every round of `history` (the rounds before some batch). Empty
/// history gives the uniform distribution. floor must lie in (0, 1/K].
PropensityModel fit_propensity(const BanditLog& history, PropensityMethod method, double floor,
                               std::span<const double> bandwidth = {});

struct NuisanceOptions {
  OutcomeMethod method = OutcomeMethod::NadarayaWatson;
  /// NW bandwidth; empty selects Silverman's rule per fitted model.
  std::vector<double> bandwidth;
  std::size_t k = 10;
  /// Required for OutcomeMethod::Oracle: (action, x) -> f*(a, x).
  std::function<double(std::size_t, Covariate)> oracle;
  PropensityMethod propensity = PropensityMethod::None;
  /// Policy of batch b, for PropensityMethod::Known.
  std::function<Policy(std::size_t)> known_propensity;
  double propensity_floor = 0.01;
};

/// Per-batch outcome models fit only on rounds before the batch, plus the
/// terminal models fit on the whole log.
class NuisanceSequence {
 public:
  std::size_t num_batches() const noexcept { return outcome_.size(); }
  std::size_t num_actions() const noexcept { return terminal_.size(); }

  const OutcomeModel& outcome(std::size_t batch, std::size_t action) const {
    return *outcome_.at(batch).at(action);
  }
  const OutcomeModel& terminal(std::size_t action) const { return *terminal_.at(action); }

  /// Rounds (0-based) used to train outcome(batch, action).
  const std::vector<std::size_t>& training_rounds(std::size_t batch, std::size_t action) const {
    return training_.at(batch).at(action);
  }

  bool has_propensity() const noexcept { return !propensity_.empty(); }
  const PropensityModel& propensity(std::size_t batch) const { return propensity_.at(batch); }

  /// Predictions f(a, x) of every action from one batch's models.
  std::vector<double> predict_all(std::size_t batch, Covariate x) const;
  std::vector<double> predict_terminal(Covariate x) const;
  /// Same values, served from the fit-time table when `x` is the covariate of
  /// round `round` of the log the sequence was built from.
  std::vector<double> predict_all(std::size_t batch, Covariate x, std::size_t round) const;
  std::vector<double> predict_terminal(Covariate x, std::size_t round) const;

 private:
  friend NuisanceSequence build_nuisance_sequence(const BanditLog&, const NuisanceOptions&);

  std::vector<std::vector<std::shared_ptr<const OutcomeModel>>> outcome_;
  std::vector<std::shared_ptr<const OutcomeModel>> terminal_;
  std::vector<std::vector<std::vector<std::size_t>>> training_;
  std::vector<PropensityModel> propensity_;
  std::vector<std::vector<double>> fitted_x_;
  std::vector<std::size_t> fitted_batch_;
  std::vector<std::vector<double>> fitted_adaptive_;
  std::vector<std::vector<double>> fitted_terminal_;
};

NuisanceSequence build_nuisance_sequence(const BanditLog& log, const NuisanceOptions& options);

}  // namespace batchope
