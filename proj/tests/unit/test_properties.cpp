#include <doctest.h>

#include <cmath>
#include <random>

#include "batchope/behavior.hpp"
#include "batchope/deficient.hpp"
#include "batchope/environment.hpp"
#include "batchope/estimators.hpp"
#include "batchope/weights.hpp"
#include "support.hpp"

using namespace batchope;

namespace {

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  double s = 0.0;
  for (double& v : w) s += (v = e(rng));
  for (double& v : w) v /= s;
  return w;
}

double combined(const std::vector<double>& w, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * w[i] * v[i];
  return s;
}

BanditLog shifted(const BanditLog& log, double c) {
  BanditLog out(log.schedule(), log.num_actions());
  for (const auto& r : log.records()) {
    Record s = r;
    s.reward += c;
    out.append(std::move(s));
  }
  return out;
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("efficient weights beat random simplex weights") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + trial % 9;
    std::vector<double> var(m);
    for (double& v : var) v = u(rng);
    const auto best = efficient_weights(var);
    const double floor = best.combined_variance(var);
    double inv = 0.0;
    for (double v : var) inv += 1.0 / v;
    CHECK(floor == doctest::Approx(1.0 / inv).epsilon(1e-12));
    for (int i = 0; i < 1000; ++i) {
      CHECK(floor <= combined(random_simplex(m, rng), var) + 1e-15);
    }
  }
}

TEST_CASE("produced weight vectors stay on the simplex") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> var(7), drift(7);
    for (std::size_t i = 0; i < 7; ++i) {
      var[i] = trial % 5 == 0 && i == 2 ? 0.0 : u(rng);
      drift[i] = u(rng);
    }
    for (const auto& w : {efficient_weights(var), stability_weights(var, drift, 0.5)}) {
      double s = 0.0;
      for (double v : w.values()) s += v;
      CHECK(std::abs(s - 1.0) < 1e-10);
      CHECK(w.all_positive());
    }
  }
}

TEST_CASE("affine equivariance under a reward shift") {
  const auto env = fixtures::two_cell_env();
  const Policy logger = Policy::constant({0.4, 0.6});
  const auto log = sample_batched_log(env, BatchSchedule::equal(400, 4),
                                      RandomWalkBehavior(2, 3), 12);
  const double c = 2.5;
  const auto moved = shifted(log, c);
  auto oracle = [&env](double shift) {
    NuisanceOptions o;
    o.method = OutcomeMethod::Oracle;
    o.oracle = [&env, shift](std::size_t a, Covariate x) { return env.mean_reward(a, x) + 0.1 + shift; };
    return o;
  };
  const auto base = build_nuisance_sequence(log, oracle(0.0));
  const auto up = build_nuisance_sequence(moved, oracle(c));
  const Policy pe = Policy::constant({0.7, 0.3});
  EstimatorSuite a(log, base, pe);
  EstimatorSuite b(moved, up, pe);
  for (const std::string name : {"DM", "AdaDM", "AIPW", "PBA2IPW", "EBA2IPW", "EBA2IPW'", "SBA2IPW"}) {
    CAPTURE(name);
    CHECK(b.run(name).estimate - a.run(name).estimate == doctest::Approx(c).epsilon(1e-12));
  }
  // IPW shifts by exactly c when the evaluation policy is the logger
  const auto fixed = sample_batched_log(env, BatchSchedule::equal(400, 4), FixedBehavior(logger), 5);
  NuisanceOptions zero;
  zero.method = OutcomeMethod::Zero;
  const auto f0 = build_nuisance_sequence(fixed, zero);
  const auto moved_fixed = shifted(fixed, c);
  const auto f1 = build_nuisance_sequence(moved_fixed, zero);
  CHECK(estimate_ipw(moved_fixed, f1, logger).estimate - estimate_ipw(fixed, f0, logger).estimate ==
        doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("one arm with full support reduces the QP to efficient weights") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (std::size_t m = 1; m <= 8; ++m) {
    std::vector<double> var(m);
    std::vector<ArmBatch> pairs;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t b = 0; b < m; ++b) {
      var[b] = u(rng);
      s(b, b) = var[b];
      pairs.push_back({0, b});
    }
    const auto z = deficient_weights(s, pairs, 1, m);
    const auto w = efficient_weights(var);
    for (std::size_t b = 0; b < m; ++b) CHECK(std::abs(z.zeta[0][b] - w[b]) < 1e-10);
  }
}

TEST_CASE("KKT residuals stay small on random covariances") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + trial % 4, m = 1 + trial % 6;
    std::vector<ArmBatch> pairs;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        if (b == 0 || n(rng) > -0.8) pairs.push_back({a, b});
      }
    }
    const auto dim = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd g(dim, dim + 3);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = n(rng);
    }
    const Eigen::MatrixXd s = g * g.transpose() / static_cast<double>(g.cols()) +
                              1e-3 * Eigen::MatrixXd::Identity(dim, dim);
    const auto z = deficient_weights(s, pairs, k, m);
    CHECK(z.kkt_residual <= 1e-8);
    CHECK(z.constraint_residual <= 1e-10);
    for (std::size_t a = 0; a < k; ++a) {
      double sum = 0.0;
      for (double v : z.zeta[a]) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("BADR equals BA2IPW when the propensity model is the logged truth") {
  const auto env = LogisticEnvironment::random(3, 2, 2);
  const RandomWalkBehavior rw(3, 17);
  const auto log = sample_batched_log(env, BatchSchedule::equal(500, 5), rw, 1);
  NuisanceOptions opts;
  opts.propensity = PropensityMethod::Known;
  opts.known_propensity = [&](std::size_t b) { return rw.policy_for_batch(b, log.prefix(0)); };
  const auto nuis = build_nuisance_sequence(log, opts);
  const Policy pe = Policy::constant({0.2, 0.5, 0.3});
  const auto logged = compute_scores(log, nuis, pe, ScoreKind::Aipw, Denominator::Logged);
  const auto est = compute_scores(log, nuis, pe, ScoreKind::Aipw, Denominator::Estimated);
  for (std::size_t t = 0; t < log.size(); ++t) {
    CHECK(std::abs(logged.adaptive[t] - est.adaptive[t]) <= 1e-12);
  }
  for (std::size_t steps : {1, 10}) {
    NStepOptions o;
    o.steps = steps;
    CHECK(std::abs(estimate_badr(log, nuis, pe, o).estimate - n_step_estimate(logged, o).estimate) <=
          1e-12);
  }
}

TEST_CASE("estimates are deterministic") {
  const auto env = LogisticEnvironment::random(3, 2, 6);
  const auto log = sample_batched_log(env, BatchSchedule::equal(300, 5), UcbBehavior(3), 2);
  NuisanceOptions opts;
  opts.propensity = PropensityMethod::Frequency;
  const auto n1 = build_nuisance_sequence(log, opts);
  const auto n2 = build_nuisance_sequence(log, opts);
  const Policy pe = Policy::uniform(3);
  EstimatorSuite a(log, n1, pe), b(log, n2, pe);
  const auto ra = a.run(estimator_names());
  const auto rb = b.run(estimator_names());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].estimate == rb[i].estimate);
    CHECK(ra[i].variance == rb[i].variance);
    CHECK(ra[i].weights == rb[i].weights);
  }
}

}  // TEST_SUITE
