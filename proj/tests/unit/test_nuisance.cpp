#include <doctest.h>

#include <cmath>

#include "batchope/behavior.hpp"
#include "batchope/environment.hpp"
#include "batchope/errors.hpp"
#include "batchope/nuisance.hpp"
#include "support.hpp"

using namespace batchope;

namespace {

using Points = std::vector<std::vector<double>>;

BanditLog logistic_log(std::size_t t, std::size_t m, std::uint64_t seed) {
  const auto env = LogisticEnvironment::random(3, 2, 5);
  return sample_batched_log(env, BatchSchedule::equal(t, m), RandomWalkBehavior(3, seed), seed);
}

}  // namespace

TEST_SUITE("nuisance") {

TEST_CASE("Nadaraya-Watson examples") {
  const Points xs{{0.0}, {1.0}};
  const std::vector<double> h{1.0};
  const std::vector<double> q0{0.0};
  SUBCASE("hand-evaluated kernel weights") {
    const auto nw = fit_nw(xs, std::vector<double>{0.0, 1.0}, h);
    const double w = std::exp(-0.5);
    CHECK(nw.predict(q0) == doctest::Approx(w / (1.0 + w)).epsilon(1e-14));
    CHECK(nw.predict(q0) == doctest::Approx(0.37754).epsilon(1e-5));
  }
  SUBCASE("constant targets") {
    const auto nw = fit_nw(xs, std::vector<double>{0.7, 0.7}, h);
    for (double x : {-3.0, 0.2, 40.0}) CHECK(nw.predict(std::vector<double>{x}) == doctest::Approx(0.7));
  }
  SUBCASE("single point") {
    const auto nw = fit_nw(Points{{2.0}}, std::vector<double>{0.3}, h);
    CHECK(nw.predict(std::vector<double>{-100.0}) == doctest::Approx(0.3));
  }
  SUBCASE("empty regressor predicts zero") {
    const auto nw = fit_nw(Points{}, std::vector<double>{}, h);
    CHECK(nw.predict(q0) == 0.0);
    CHECK(nw.empty());
  }
  SUBCASE("far queries stay within the target range") {
    const auto nw = fit_nw(xs, std::vector<double>{-1.0, 2.0}, h);
    for (double x : {-1e4, -30.0, 0.5, 30.0, 1e4}) {
      const double p = nw.predict(std::vector<double>{x});
      CHECK(std::isfinite(p));
      CHECK(p >= -1.0);
      CHECK(p <= 2.0);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(fit_nw(xs, std::vector<double>{0.0, NAN}, h), ValidationError);
    CHECK_THROWS_AS(fit_nw(xs, std::vector<double>{0.0, 1.0}, std::vector<double>{0.0}),
                    ValidationError);
    const auto nw = fit_nw(xs, std::vector<double>{0.0, 1.0}, h);
    CHECK_THROWS_AS(nw.predict(std::vector<double>{0.0, 1.0}), ValidationError);
  }
}

TEST_CASE("duplicate covariates are pooled without changing predictions") {
  const Points xs{{0.0}, {0.0}, {1.0}};
  const std::vector<double> ys{1.0, 0.0, 1.0};
  const auto nw = fit_nw(xs, ys, std::vector<double>{0.7});
  const double x = 0.3;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z = (x - xs[i][0]) / 0.7;
    num += std::exp(-0.5 * z * z) * ys[i];
    den += std::exp(-0.5 * z * z);
  }
  CHECK(nw.predict(std::vector<double>{x}) == doctest::Approx(num / den).epsilon(1e-13));
}

TEST_CASE("Silverman bandwidth") {
  const Points xs{{0.0, 5.0}, {1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
  const auto h = silverman_bandwidth(xs);
  const double sd = std::sqrt(5.0 / 3.0);  // sample sd of 0..3
  CHECK(h[0] == doctest::Approx(1.06 * sd * std::pow(4.0, -0.2)));
  CHECK(h[1] == 1.0);  // constant dimension falls back to 1
}

TEST_CASE("k-NN examples") {
  const Points xs{{0.0}, {1.0}, {1.0}, {5.0}};
  const std::vector<double> ys{0.0, 1.0, 0.0, 9.0};
  CHECK(KnnRegressor::fit(xs, ys, 1).predict(std::vector<double>{5.0}) == 9.0);
  // two equidistant nearest points with targets {1, 0}
  CHECK(KnnRegressor::fit(xs, ys, 2).predict(std::vector<double>{1.0}) == doctest::Approx(0.5));
  // k beyond n averages everything
  CHECK(KnnRegressor::fit(xs, ys, 10).predict(std::vector<double>{0.0}) == doctest::Approx(2.5));
  // three points tie at distance 0.5; the two lowest indices win
  CHECK(KnnRegressor::fit(xs, ys, 2).predict(std::vector<double>{0.5}) == doctest::Approx(0.5));
  CHECK(KnnRegressor::fit(Points{}, std::vector<double>{}, 3).predict(std::vector<double>{0.0}) ==
        0.0);
  CHECK_THROWS_AS(KnnRegressor::fit(xs, ys, 0), ValidationError);
}

TEST_CASE("clip and renormalize reaches the floor fixed point") {
  const auto p = clip_renormalize(std::vector<double>{0.001, 0.999}, 0.01);
  CHECK(p[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.99).epsilon(1e-12));
  const auto q = clip_renormalize(std::vector<double>{0.0, 0.0, 1.0}, 0.05);
  for (double v : q) CHECK(v >= 0.05 - 1e-12);
  CHECK(q[0] + q[1] + q[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("propensity models") {
  const BanditLog empty(BatchSchedule::equal(4, 2), 4);
  const auto uniform = fit_propensity(empty, PropensityMethod::Frequency, 0.01);
  for (double v : uniform.probabilities(std::vector<double>{0.0})) CHECK(v == doctest::Approx(0.25));
  CHECK_THROWS_AS(fit_propensity(empty, PropensityMethod::Frequency, 0.3), ValidationError);
  CHECK_THROWS_AS(fit_propensity(empty, PropensityMethod::Frequency, 0.0), ValidationError);

  SUBCASE("frequencies track a covariate-independent logger") {
    const auto env = fixtures::two_cell_env();
    const std::size_t t = 20000;
    const auto log = sample_batched_log(env, BatchSchedule::equal(t, 2),
                                        FixedBehavior(Policy::constant({0.3, 0.7})), 6);
    const auto g = fit_propensity(log, PropensityMethod::Frequency, 0.01);
    const auto p = g.probabilities(std::vector<double>{0.0});
    CHECK(std::abs(p[0] - 0.3) < 3.0 * std::sqrt(0.21 / static_cast<double>(t)));
  }
  SUBCASE("kernel propensities respect the floor") {
    const auto log = logistic_log(200, 2, 3);
    const auto g = fit_propensity(log, PropensityMethod::NadarayaWatson, 0.05);
    for (const auto& r : log.records()) {
      const auto p = g.probabilities(r.x);
      double s = 0.0;
      for (double v : p) {
        CHECK(v >= 0.05 - 1e-12);
        s += v;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("nuisance sequence training sets stop before each batch") {
  const auto log = logistic_log(300, 5, 2);
  NuisanceOptions opts;
  const auto seq = build_nuisance_sequence(log, opts);
  const auto& s = log.schedule();
  REQUIRE(seq.num_batches() == 5);
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t a = 0; a < 3; ++a) {
      std::vector<std::size_t> expected;
      for (std::size_t t = 0; t < s.begin(b); ++t) {
        if (log[t].action == a) expected.push_back(t);
      }
      CHECK(seq.training_rounds(b, a) == expected);
    }
  }
  // batch 1 uses the empty-data default
  for (const auto& r : log.batch(0)) {
    for (double f : seq.predict_all(0, r.x)) CHECK(f == 0.0);
  }
}

TEST_CASE("one batch: empty-data models and a terminal fit on everything") {
  const auto log = logistic_log(50, 1, 4);
  const auto seq = build_nuisance_sequence(log, NuisanceOptions{});
  for (const auto& r : log.records()) {
    for (double f : seq.predict_all(0, r.x)) CHECK(f == 0.0);
  }
  double terminal_abs = 0.0;
  for (const auto& r : log.records()) {
    for (double f : seq.predict_terminal(r.x)) terminal_abs += std::abs(f);
  }
  CHECK(terminal_abs > 0.0);
}

TEST_CASE("constant per-action rewards are recovered after one batch") {
  DiscreteEnvironment env({{0.0}, {1.0}, {2.0}}, {0.3, 0.3, 0.4}, {{0.25, 0.75}, {0.25, 0.75}, {0.25, 0.75}},
                          RewardLaw::Deterministic);
  const auto log = sample_batched_log(env, BatchSchedule::equal(40, 2),
                                      FixedBehavior(Policy::uniform(2)), 1);
  for (auto method : {OutcomeMethod::NadarayaWatson, OutcomeMethod::Knn}) {
    NuisanceOptions opts;
    opts.method = method;
    const auto seq = build_nuisance_sequence(log, opts);
    for (const auto& r : log.batch(1)) {
      const auto f = seq.predict_all(1, r.x);
      CHECK(f[0] == doctest::Approx(0.25));
      CHECK(f[1] == doctest::Approx(0.75));
    }
  }
}

TEST_CASE("perturbing later rewards leaves earlier-batch models unchanged") {
  const auto log = logistic_log(200, 4, 9);
  BanditLog changed(log.schedule(), log.num_actions());
  for (std::size_t t = 0; t < log.size(); ++t) {
    Record r = log[t];
    if (r.batch >= 1) r.reward = 1.0 - r.reward + 0.5;
    changed.append(r);
  }
  const auto a = build_nuisance_sequence(log, NuisanceOptions{});
  const auto b = build_nuisance_sequence(changed, NuisanceOptions{});
  for (const auto& r : log.batch(1)) CHECK(a.predict_all(1, r.x) == b.predict_all(1, r.x));
  bool differs = false;
  for (const auto& r : log.batch(2)) differs = differs || a.predict_all(2, r.x) != b.predict_all(2, r.x);
  CHECK(differs);
}

TEST_CASE("fitted values are bounded by the largest training target") {
  const auto log = logistic_log(300, 3, 12);
  for (auto method : {OutcomeMethod::NadarayaWatson, OutcomeMethod::Knn}) {
    NuisanceOptions opts;
    opts.method = method;
    const auto seq = build_nuisance_sequence(log, opts);
    double cf = 0.0;
    for (const auto& r : log.records()) cf = std::max(cf, std::abs(r.reward));
    for (std::size_t b = 0; b < 3; ++b) {
      for (const auto& r : log.records()) {
        for (double f : seq.predict_all(b, r.x)) CHECK(std::abs(f) <= cf + 1e-12);
      }
    }
  }
}

TEST_CASE("nuisance sequence is deterministic and the cached table matches") {
  const auto log = logistic_log(120, 3, 13);
  const auto a = build_nuisance_sequence(log, NuisanceOptions{});
  const auto b = build_nuisance_sequence(log, NuisanceOptions{});
  for (std::size_t t = 0; t < log.size(); ++t) {
    const auto& r = log[t];
    CHECK(a.predict_all(r.batch, r.x) == b.predict_all(r.batch, r.x));
    CHECK(a.predict_all(r.batch, r.x, t) == a.predict_all(r.batch, r.x));
    CHECK(a.predict_terminal(r.x, t) == a.predict_terminal(r.x));
  }
  // a covariate that is not the round's falls back to a fresh prediction
  const std::vector<double> other{0.123, -0.456};
  CHECK(a.predict_terminal(other, 0) == a.predict_terminal(other));
}

TEST_CASE("oracle nuisance needs a function") {
  const auto log = logistic_log(20, 2, 1);
  NuisanceOptions opts;
  opts.method = OutcomeMethod::Oracle;
  CHECK_THROWS_AS(build_nuisance_sequence(log, opts), ValidationError);
  opts.oracle = [](std::size_t a, Covariate) { return 0.1 * static_cast<double>(a); };
  const auto seq = build_nuisance_sequence(log, opts);
  CHECK(seq.predict_all(0, log[0].x) == std::vector<double>{0.0, 0.1, 0.2});
  CHECK(seq.training_rounds(1, 0).empty());
}

}  // TEST_SUITE
