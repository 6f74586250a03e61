// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "batchope/behavior.hpp"
#include "batchope/config.hpp"
#include "batchope/deficient.hpp"
#include "batchope/diagnostics.hpp"
#include "batchope/environment.hpp"
#include "batchope/errors.hpp"
#include "batchope/estimators.hpp"
#include "batchope/experiment.hpp"
#include "batchope/scores.hpp"
#include "support.hpp"

using namespace batchope;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Five covariate cells, three arms, Bernoulli rewards.
DiscreteEnvironment five_cell_env() {
  return DiscreteEnvironment({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}}, {0.1, 0.2, 0.3, 0.25, 0.15},
                             {{0.2, 0.5, 0.7},
                              {0.6, 0.3, 0.4},
                              {0.5, 0.8, 0.1},
                              {0.3, 0.3, 0.9},
                              {0.9, 0.4, 0.2}});
}

/// 0.9 * (best arm) + 0.1 * uniform.
Policy mixture_policy(const Environment& env) {
  const Policy best = Policy::deterministic(env.num_actions(), [&env](Covariate x) {
    std::vector<double> f(env.num_actions());
    for (std::size_t a = 0; a < f.size(); ++a) f[a] = env.mean_reward(a, x);
    return argmax(f);
  });
  return mix_policies(best, Policy::uniform(env.num_actions()), 0.9);
}

/// Sum_x p(x) sum_a pe(a|x) f*(a,x), enumerated here rather than via the library.
double enumerated_value(const DiscreteEnvironment& env, const Policy& pe) {
  double v = 0.0;
  for (std::size_t i = 0; i < env.support_size(); ++i) {
    const auto& x = env.covariate(i);
    const auto p = pe.probabilities(x);
    for (std::size_t a = 0; a < p.size(); ++a) v += env.weight(i) * p[a] * env.mean_reward(a, x);
  }
  return v;
}

NuisanceOptions oracle_options(const Environment& env) {
  NuisanceOptions o;
  o.method = OutcomeMethod::Oracle;
  o.oracle = [&env](std::size_t a, Covariate x) { return env.mean_reward(a, x); };
  return o;
}

double estimate_with(const BanditLog& log, const NuisanceOptions& opts, const Policy& pe,
                     const std::string& name) {
  const auto nuis = build_nuisance_sequence(log, opts);
  EstimatorSuite suite(log, nuis, pe);
  return suite.run(name).estimate;
}

// 1. Score unbiasedness by enumeration and by simulation.
Outcome score_unbiasedness() {
  const DiscreteEnvironment env({{0.0}, {1.0}}, {0.35, 0.65}, {{0.2, 0.7}, {0.6, 0.3}});
  const Policy pe(2, [](Covariate x) {
    return x[0] < 0.5 ? std::vector<double>{0.8, 0.2} : std::vector<double>{0.25, 0.75};
  });
  const Policy pb(2, [](Covariate x) {
    return x[0] < 0.5 ? std::vector<double>{0.3, 0.7} : std::vector<double>{0.6, 0.4};
  });
  const double theta = enumerated_value(env, pe);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  std::vector<std::vector<double>> f_first;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> f(2, std::vector<double>(2));
    for (auto& row : f) {
      for (double& v : row) v = u(rng);
    }
    if (trial == 0) f_first = f;
    double expectation = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& x = env.covariate(i);
      const auto e = pe.probabilities(x), b = pb.probabilities(x);
      for (std::size_t a = 0; a < 2; ++a) {
        const double mu = env.mean_reward(a, x);
        for (double y : {0.0, 1.0}) {
          const double py = y == 1.0 ? mu : 1.0 - mu;
          expectation += env.weight(i) * b[a] * py * phi(e, b, f[i], a, y);
        }
      }
    }
    worst = std::max(worst, std::abs(expectation - theta));
  }

  const std::size_t t = 100000;
  const auto log = sample_batched_log(env, BatchSchedule::equal(t, 10), FixedBehavior(pb), 7);
  std::vector<double> s;
  for (const auto& r : log.records()) {
    const std::size_t i = env.index_of(r.x);
    s.push_back(phi(pe.probabilities(r.x), r.behavior, f_first[i], r.action, r.reward));
  }
  const double se = fixtures::sample_sd(s) / std::sqrt(static_cast<double>(t));
  const double gap = std::abs(fixtures::mean(s) - theta);
  return {worst <= 1e-12 && gap < 3.0 * se,
          fmt("max |E[phi] - theta0| = %.2e (tol 1e-12); MC gap %.2e < 3 SE = %.2e", worst, gap,
              3.0 * se)};
}

// 2. Root-T consistency of PBA2IPW under random-walk logging.
Outcome consistency() {
  const auto env = five_cell_env();
  const Policy pe = mixture_policy(env);
  const double theta = enumerated_value(env, pe);
  std::vector<double> rmse;
  for (std::size_t t : {1500, 6000, 24000}) {
    double se = 0.0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      const auto log = sample_batched_log(env, BatchSchedule::equal(t, 10),
                                          RandomWalkBehavior(3, derive_seed(rep, 2)), rep);
      const double e = estimate_with(log, NuisanceOptions{}, pe, "PBA2IPW") - theta;
      se += e * e;
    }
    rmse.push_back(std::sqrt(se / 100.0));
  }
  const double r1 = rmse[0] / rmse[1], r2 = rmse[1] / rmse[2];
  const bool ok = r1 >= 1.4 && r1 <= 2.8 && r2 >= 1.4 && r2 <= 2.8;
  return {ok, fmt("RMSE %.5f / %.5f / %.5f at T = 1500 / 6000 / 24000; ratios %.3f, %.3f (need [1.4, 2.8])",
                  rmse[0], rmse[1], rmse[2], r1, r2)};
}

// 3. Coverage of the 95% interval with oracle nuisances.
Outcome coverage() {
  const auto env = five_cell_env();
  const Policy pe = mixture_policy(env);
  const double theta = enumerated_value(env, pe);
  const auto opts = oracle_options(env);
  int covered = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto log = sample_batched_log(env, BatchSchedule::equal(6000, 10),
                                        RandomWalkBehavior(3, derive_seed(rep, 2)), rep);
    const auto nuis = build_nuisance_sequence(log, opts);
    EstimatorSuite suite(log, nuis, pe);
    covered += suite.run("PBA2IPW").interval.contains(theta) ? 1 : 0;
  }
  const double rate = covered / 200.0;
  return {rate >= 0.90 && rate <= 0.99, fmt("coverage %.3f over 200 replications (need [0.90, 0.99])", rate)};
}

// 4. Empirical variance of sqrt(T)(theta_hat - theta0) against sum w^2 sigma^2.
Outcome variance_formula() {
  const auto env = five_cell_env();
  const Policy pe = mixture_policy(env);
  const double theta = enumerated_value(env, pe);
  const auto schedule = BatchSchedule::equal(6000, 10);
  const RandomWalkBehavior rw(3, 2024);  // one behavior path for every replication
  const BanditLog none(schedule, 3);
  double predicted = 0.0;
  for (std::size_t b = 0; b < 10; ++b) {
    const double w = 0.1;
    predicted += w * w * batch_score_variance(env, pe, rw.policy_for_batch(b, none), schedule.fraction(b));
  }
  const auto opts = oracle_options(env);
  std::vector<double> z;
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    const auto log = sample_batched_log(env, schedule, rw, 1000 + rep);
    z.push_back(std::sqrt(6000.0) * (estimate_with(log, opts, pe, "PBA2IPW") - theta));
  }
  double m2 = 0.0;
  for (double v : z) m2 += v * v;
  const double empirical = m2 / static_cast<double>(z.size());  // theta0 is known
  const double rel = std::abs(empirical - predicted) / predicted;
  return {rel <= 0.20, fmt("empirical %.5f vs formula %.5f, relative error %.3f (tol 0.20)", empirical,
                           predicted, rel)};
}

// 5. Efficient weights beat equal weights when batches differ in quality.
Outcome efficient_weighting() {
  const auto env = fixtures::two_cell_env();
  const Policy pe = Policy::constant({0.1, 0.9});
  const double theta = enumerated_value(env, pe);
  std::vector<Policy> per_batch;
  for (std::size_t b = 0; b < 10; ++b) {
    per_batch.push_back(b % 2 == 0 ? Policy::constant({0.5, 0.5}) : Policy::constant({0.95, 0.05}));
  }
  const FixedBehavior behavior(per_batch);
  double mse_e = 0.0, mse_p = 0.0;
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    const auto log = sample_batched_log(env, BatchSchedule::equal(6000, 10), behavior, rep);
    const auto nuis = build_nuisance_sequence(log, NuisanceOptions{});
    EstimatorSuite suite(log, nuis, pe);
    const double e = suite.run("EBA2IPW").estimate - theta;
    const double p = suite.run("PBA2IPW").estimate - theta;
    mse_e += e * e / 500.0;
    mse_p += p * p / 500.0;
  }
  return {mse_e <= mse_p, fmt("MSE EBA2IPW %.3e <= PBA2IPW %.3e", mse_e, mse_p)};
}

// 6. Deficient support.
Outcome deficient_support() {
  const auto env = five_cell_env();
  const Policy pe = mixture_policy(env);
  const double theta = enumerated_value(env, pe);
  std::vector<Policy> per_batch;
  for (std::size_t b = 0; b < 10; ++b) {
    per_batch.push_back(b < 5 ? Policy::constant({0.5, 0.0, 0.5}) : Policy::constant({0.3, 0.4, 0.3}));
  }
  const FixedBehavior behavior(per_batch);
  std::vector<double> est;
  bool aipw_raises = true;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto log = sample_batched_log(env, BatchSchedule::equal(20000, 10), behavior, rep);
    const auto nuis = build_nuisance_sequence(log, NuisanceOptions{});
    EstimatorSuite suite(log, nuis, pe);
    est.push_back(suite.run("BA2IPWIS").estimate);
    if (rep < 5) {
      try {
        (void)suite.run("AIPW");
        aipw_raises = false;
      } catch (const SupportError&) {
      }
    }
  }
  const double bias = fixtures::mean(est) - theta;
  const double mcse = fixtures::sample_sd(est) / std::sqrt(200.0);
  return {std::abs(bias) < 2.0 * mcse && aipw_raises,
          fmt("BA2IPWIS bias %.2e vs 2 MC SE %.2e; AIPW %s", bias, 2.0 * mcse,
              aipw_raises ? "raises SupportError" : "did NOT raise")};
}

// 7. BADR equivalence with the true propensities, and consistency with estimated ones.
Outcome badr() {
  const auto env = five_cell_env();
  const Policy pe = mixture_policy(env);
  const double theta = enumerated_value(env, pe);

  const RandomWalkBehavior rw(3, 5);
  const auto log = sample_batched_log(env, BatchSchedule::equal(6000, 10), rw, 3);
  NuisanceOptions known;
  known.propensity = PropensityMethod::Known;
  known.known_propensity = [&](std::size_t b) { return rw.policy_for_batch(b, log.prefix(0)); };
  const auto nuis = build_nuisance_sequence(log, known);
  const auto logged = compute_scores(log, nuis, pe, ScoreKind::Aipw, Denominator::Logged);
  const auto fitted = compute_scores(log, nuis, pe, ScoreKind::Aipw, Denominator::Estimated);
  double pointwise = 0.0;
  for (std::size_t t = 0; t < log.size(); ++t) {
    pointwise = std::max(pointwise, std::abs(logged.adaptive[t] - fitted.adaptive[t]));
  }
  NStepOptions opts;
  opts.steps = 1;
  const double gap = std::abs(estimate_badr(log, nuis, pe, opts).estimate -
                              n_step_estimate(logged, opts).estimate);

  NuisanceOptions freq;
  freq.propensity = PropensityMethod::Frequency;
  freq.propensity_floor = 0.01;
  const FixedBehavior uniform(Policy::uniform(3));
  std::vector<double> est;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto l = sample_batched_log(env, BatchSchedule::equal(20000, 10), uniform, rep);
    est.push_back(estimate_with(l, freq, pe, "BADR"));
  }
  const double bias = fixtures::mean(est) - theta;
  const double mcse = fixtures::sample_sd(est) / std::sqrt(200.0);
  return {pointwise <= 1e-12 && gap <= 1e-12 && std::abs(bias) < 2.0 * mcse,
          fmt("true g: max score gap %.1e, estimate gap %.1e (tol 1e-12); estimated g: |bias| %.2e < 2 MC SE %.2e",
              pointwise, gap, std::abs(bias), 2.0 * mcse)};
}

// 8. The equality-constrained QP.
Outcome qp() {
  const auto env = five_cell_env();
  const Policy pe = mixture_policy(env);
  std::vector<Policy> per_batch;
  for (std::size_t b = 0; b < 6; ++b) {
    per_batch.push_back(b < 3 ? Policy::constant({0.5, 0.0, 0.5}) : Policy::constant({0.2, 0.5, 0.3}));
  }
  const auto log = sample_batched_log(env, BatchSchedule::equal(3000, 6), FixedBehavior(per_batch), 4);
  const auto nuis = build_nuisance_sequence(log, NuisanceOptions{});
  const auto m = deficient_moments(log, nuis, pe);
  const auto z = deficient_weights(m.covariance, m.pairs, m.num_actions, m.num_batches);
  double residual = std::max(z.kkt_residual, z.constraint_residual);

  // diagonal covariances against inverse-variance weights, several arms
  double diag_gap = 0.0;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 1 + trial % 3, mm = 2 + trial % 5;
    std::vector<ArmBatch> pairs;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < mm; ++b) pairs.push_back({a, b});
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(pairs.size(), pairs.size());
    std::vector<std::vector<double>> var(k, std::vector<double>(mm));
    for (std::size_t i = 0; i < pairs.size(); ++i) s(i, i) = var[pairs[i].action][pairs[i].batch] = u(rng);
    const auto zz = deficient_weights(s, pairs, k, mm);
    residual = std::max({residual, zz.kkt_residual, zz.constraint_residual});
    for (std::size_t a = 0; a < k; ++a) {
      double inv = 0.0;
      for (double v : var[a]) inv += 1.0 / v;
      for (std::size_t b = 0; b < mm; ++b) {
        diag_gap = std::max(diag_gap, std::abs(zz.zeta[a][b] - (1.0 / var[a][b]) / inv));
      }
    }
  }

  // one arm, full support: the QP weights are the efficient weights of the same variances
  const DiscreteEnvironment one({{0.0}, {1.0}}, {0.5, 0.5}, {{0.3}, {0.8}});
  const auto log1 = sample_batched_log(one, BatchSchedule::equal(1000, 5), FixedBehavior(Policy::uniform(1)), 2);
  const auto n1 = build_nuisance_sequence(log1, NuisanceOptions{});
  const auto m1 = deficient_moments(log1, n1, Policy::uniform(1));
  const auto z1 = deficient_weights(m1.covariance, m1.pairs, 1, 5);
  std::vector<double> diag;
  for (std::size_t b = 0; b < 5; ++b) diag.push_back(m1.covariance(b, b));
  const auto w1 = efficient_weights(diag);
  double one_gap = 0.0;
  for (std::size_t b = 0; b < 5; ++b) one_gap = std::max(one_gap, std::abs(z1.zeta[0][b] - w1[b]));

  return {residual <= 1e-8 && diag_gap <= 1e-10 && one_gap <= 1e-10,
          fmt("KKT residual %.1e (tol 1e-8); diagonal gap %.1e, one-arm gap %.1e (tol 1e-10)", residual,
              diag_gap, one_gap)};
}

// 9. Algorithm 1.
Outcome n_step() {
  const auto env = five_cell_env();
  const Policy pe = mixture_policy(env);
  const auto log = sample_batched_log(env, BatchSchedule::equal(3000, 10), RandomWalkBehavior(3, 8), 8);
  const auto nuis = build_nuisance_sequence(log, NuisanceOptions{});
  const auto plain = estimate_ba2ipw(batch_means(log, nuis, pe), WeightVector::equal(10));
  NStepOptions one;
  one.steps = 1;
  const auto r1 = n_step_estimate(compute_scores(log, nuis, pe), one);
  const bool identical = r1.estimate == plain.estimate && r1.variance == plain.variance &&
                         r1.weights == plain.weights;

  NStepOptions ten;
  ten.steps = 10;
  const auto r10 = n_step_estimate(compute_scores(log, nuis, pe), ten);
  std::size_t converged_at = 0;
  double last_change = 0.0;
  for (std::size_t i = 1; i < r10.weight_history.size(); ++i) {
    double change = 0.0;
    for (std::size_t b = 0; b < 10; ++b) {
      change = std::max(change, std::abs(r10.weight_history[i][b] - r10.weight_history[i - 1][b]));
    }
    last_change = change;
    if (change < 1e-6) {
      converged_at = i;
      break;
    }
  }
  const bool converged = converged_at > 0 && converged_at <= 10;
  return {identical && converged,
          fmt("N = 1 %s PBA2IPW; weights settle (max change %.1e) at iteration %zu of 10",
              identical ? "bit-identical to" : "DIFFERS from", last_change, converged_at)};
}

// 10. Benchmark-style run on a public multiclass dataset.
Outcome benchmark() {
  nlohmann::json doc = {
      {"env", {{"type", "classification"}, {"path", std::string(BATCHOPE_DATA_DIR) + "/digits.libsvm"}}},
      {"schedule", {{"T", 1500}, {"M", 10}}},
      {"behavior", {{"type", "rw"}}},
      {"evaluation", {{"type", "mixture"}, {"weight", 0.9}}},
      {"nuisance", {{"method", "nw"}}},
      {"estimators", {"PBA2IPW", "EBA2IPW", "EBA2IPW'", "SBA2IPW", "BAdaIPW", "BADR", "BA2IPWIS", "AIPW"}},
      {"replications", 100},
      {"seed", 0}};
  const auto report = run_experiment(parse_config(doc));
  double aipw = 0.0;
  for (const auto& s : report.summaries) {
    if (s.name == "AIPW") aipw = s.mse;
  }
  bool ok = aipw > 0.0;
  std::string detail = fmt("AIPW MSE %.4f;", aipw);
  for (const auto& s : report.summaries) {
    if (s.name == "AIPW") continue;
    const double ratio = s.mse / aipw;
    ok = ok && ratio >= 0.1 && ratio <= 10.0;
    detail += fmt(" %s %.2fx", s.name.c_str(), ratio);
  }
  return {ok, detail + " (need within [0.1x, 10x])"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"score unbiasedness", score_unbiasedness},
      {"root-T consistency", consistency},
      {"CI coverage", coverage},
      {"variance formula", variance_formula},
      {"efficient weighting", efficient_weighting},
      {"deficient support", deficient_support},
      {"BADR", badr},
      {"QP correctness", qp},
      {"N-step algorithm", n_step},
      {"benchmark run", benchmark},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && only.count(i + 1) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
