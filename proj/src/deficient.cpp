#include "batchope/deficient.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "batchope/errors.hpp"

namespace batchope {

DeficientMoments deficient_moments(const BanditLog& log, const NuisanceSequence& nuisances,
                                   const Policy& evaluation, RoundFold fold) {
  log.require_complete();
  const auto& schedule = log.schedule();
  const std::size_t k = log.num_actions();
  if (fold.folds == 0 || fold.index >= fold.folds) throw ValidationError("invalid round fold");
  const std::size_t m = schedule.num_batches();
  if (evaluation.num_actions() != k || nuisances.num_actions() != k ||
      nuisances.num_batches() != m) {
    throw ValidationError("log, nuisances and evaluation policy are not aligned");
  }

  DeficientMoments out;
  out.num_actions = k;
  out.num_batches = m;
  out.rounds = log.size();
  out.means.assign(k, std::vector<double>(m, 0.0));
  out.live.assign(k, std::vector<bool>(m, true));
  for (std::size_t t = 0; t < log.size(); ++t) {
    for (std::size_t a = 0; a < k; ++a) {
      if (!(log[t].behavior[a] > 0.0)) out.live[a][log[t].batch] = false;
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (std::none_of(out.live[a].begin(), out.live[a].end(), [](bool v) { return v; })) {
      throw SupportError("action " + std::to_string(a + 1) +
                         " has zero behavior probability in every batch");
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (out.live[a][b]) out.pairs.push_back({a, b});
    }
  }

  const auto dim = static_cast<Eigen::Index>(out.pairs.size());
  out.covariance = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t b = 0; b < m; ++b) {
    std::vector<Eigen::Index> rows;
    std::vector<std::size_t> arms;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (out.pairs[static_cast<std::size_t>(i)].batch == b) {
        rows.push_back(i);
        arms.push_back(out.pairs[static_cast<std::size_t>(i)].action);
      }
    }
    std::vector<std::size_t> rounds;
    for (std::size_t t = schedule.begin(b); t < schedule.end(b); ++t) {
      const bool in_fold = (t - schedule.begin(b)) % fold.folds == fold.index;
      if (in_fold != fold.complement) rounds.push_back(t);
    }
    const std::size_t n = rounds.size();
    if (n == 0) throw ValidationError("batch " + std::to_string(b + 1) + " has no rounds in the fold");
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(arms.size()));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = rounds[i];
      const Record& r = log[t];
      const auto pe = evaluation.checked_probabilities(r.x);
      const auto f = nuisances.predict_all(b, r.x, t);
      for (std::size_t j = 0; j < arms.size(); ++j) {
        const std::size_t a = arms[j];
        double term = f[a];
        if (r.action == a) term += (r.reward - f[a]) / r.behavior[a];
        scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            pe[a] * term;
      }
    }
    const Eigen::RowVectorXd mean = scores.colwise().mean();
    for (std::size_t j = 0; j < arms.size(); ++j) {
      out.means[arms[j]][b] = mean(static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXd centered = scores.rowwise() - mean;
    const Eigen::MatrixXd block =
        (centered.transpose() * centered) / static_cast<double>(n) / schedule.fraction(b);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows.size(); ++j) {
        out.covariance(rows[i], rows[j]) =
            block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  const double scale = dim > 0 ? out.covariance.trace() / static_cast<double>(dim) : 0.0;
  out.ridge = 1e-8 * (scale > 0.0 ? scale : 1.0);
  out.covariance.diagonal().array() += out.ridge;
  return out;
}

DeficientWeights deficient_weights(const Eigen::MatrixXd& covariance,
                                   std::span<const ArmBatch> pairs, std::size_t num_actions,
                                   std::size_t num_batches) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  const auto k = static_cast<Eigen::Index>(num_actions);
  if (covariance.rows() != n || covariance.cols() != n) {
    throw ValidationError("covariance does not match the live pairs");
  }
  if (!covariance.isApprox(covariance.transpose(), 1e-12)) {
    throw ValidationError("covariance must be symmetric");
  }
  Eigen::MatrixXd constraints = Eigen::MatrixXd::Zero(k, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    if (p.action >= num_actions || p.batch >= num_batches) {
      throw ValidationError("live pair out of range");
    }
    constraints(static_cast<Eigen::Index>(p.action), i) = 1.0;
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    if (constraints.row(a).sum() == 0.0) {
      throw SupportError("action " + std::to_string(a + 1) + " has no live batch");
    }
  }

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = 2.0 * covariance;
  kkt.topRightCorner(n, k) = constraints.transpose();
  kkt.bottomLeftCorner(k, n) = constraints;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
  rhs.tail(k).setOnes();

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) throw NumericalError("KKT system is singular");
  const Eigen::VectorXd solution = lu.solve(rhs);
  const Eigen::VectorXd zeta = solution.head(n);

  DeficientWeights out;
  out.multipliers = solution.tail(k);
  out.kkt_residual =
      (2.0 * covariance * zeta + constraints.transpose() * out.multipliers).cwiseAbs().maxCoeff();
  out.constraint_residual = (constraints * zeta - Eigen::VectorXd::Ones(k)).cwiseAbs().maxCoeff();
  if (!std::isfinite(out.kkt_residual) || out.kkt_residual > 1e-6) {
    throw NumericalError("KKT solve is inaccurate (residual " + std::to_string(out.kkt_residual) +
                         ")");
  }
  out.zeta.assign(num_actions, std::vector<double>(num_batches, 0.0));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    out.zeta[p.action][p.batch] = zeta(i);
  }
  return out;
}

EstimatorResult estimate_ba2ipwis(const DeficientMoments& moments,
                                  const DeficientWeights& weights) {
  if (weights.zeta.size() != moments.num_actions) {
    throw ValidationError("weights do not match the moments");
  }
  const auto n = static_cast<Eigen::Index>(moments.pairs.size());
  Eigen::VectorXd z(n);
  double estimate = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = moments.pairs[static_cast<std::size_t>(i)];
    z(i) = weights.zeta.at(p.action).at(p.batch);
    estimate += z(i) * moments.means[p.action][p.batch];
  }
  EstimatorResult r;
  r.name = "BA2IPWIS";
  r.estimate = estimate;
  r.variance = std::max(0.0, z.dot(moments.covariance * z));
  r.rounds = moments.rounds;
  r.interval = confidence_interval(r.estimate, r.variance, r.rounds);
  for (const auto& row : weights.zeta) r.weights.insert(r.weights.end(), row.begin(), row.end());
  return r;
}

EstimatorResult estimate_ba2ipwis_cross_fit(const BanditLog& log, const NuisanceSequence& nuisances,
                                            const Policy& evaluation, std::size_t folds) {
  if (folds < 2) throw ValidationError("cross-fitting needs at least two folds");
  const auto full = deficient_moments(log, nuisances, evaluation);
  DeficientWeights averaged;
  averaged.zeta.assign(full.num_actions, std::vector<double>(full.num_batches, 0.0));
  double estimate = 0.0;
  const double share = 1.0 / static_cast<double>(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    const auto held = deficient_moments(log, nuisances, evaluation, {folds, f, false});
    const auto rest = deficient_moments(log, nuisances, evaluation, {folds, f, true});
    const auto z = deficient_weights(rest.covariance, rest.pairs, rest.num_actions, rest.num_batches);
    for (const auto& p : full.pairs) {
      estimate += share * z.zeta[p.action][p.batch] * held.means[p.action][p.batch];
      averaged.zeta[p.action][p.batch] += share * z.zeta[p.action][p.batch];
    }
  }
  EstimatorResult r = estimate_ba2ipwis(full, averaged);
  r.estimate = estimate;
  r.interval = confidence_interval(r.estimate, r.variance, r.rounds);
  return r;
}

}  // namespace batchope
