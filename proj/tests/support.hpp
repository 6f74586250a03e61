#pragma once

// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// The oracles restate formulas directly rather than calling library code.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "batchope/environment.hpp"
#include "batchope/log.hpp"
#include "batchope/policy.hpp"

namespace fixtures {

using batchope::BanditLog;
using batchope::BatchSchedule;
using batchope::DiscreteEnvironment;
using batchope::Record;

/// |X| = 2, K = 2, Bernoulli rewards.
inline DiscreteEnvironment two_cell_env() {
  return DiscreteEnvironment({{0.0}, {1.0}}, {0.4, 0.6}, {{0.2, 0.7}, {0.6, 0.3}});
}

/// Sum_x p(x) sum_a pe(a|x) f*(a,x) for the two-cell env, written out.
inline double two_cell_value(const std::vector<double>& pe_x0, const std::vector<double>& pe_x1) {
  return 0.4 * (pe_x0[0] * 0.2 + pe_x0[1] * 0.7) + 0.6 * (pe_x1[0] * 0.6 + pe_x1[1] * 0.3);
}

/// Four rounds, K = 2, batches {0,1} and {2,3}.
inline BanditLog four_records() {
  BanditLog log(BatchSchedule({0, 2, 4}), 2);
  log.append({{0.0}, 0, 1.0, {0.5, 0.5}, 0});
  log.append({{1.0}, 1, 0.0, {0.5, 0.5}, 0});
  log.append({{0.0}, 1, 1.0, {0.25, 0.75}, 1});
  log.append({{1.0}, 0, 0.5, {0.25, 0.75}, 1});
  return log;
}

/// Outcome table used with the four-record fixture: f(a, x) = 0.2 + 0.1 a + 0.3 x.
inline double four_records_f(std::size_t a, double x) { return 0.2 + 0.1 * a + 0.3 * x; }

/// Direct evaluation of the doubly robust score.
inline double score(const std::vector<double>& pe, const std::vector<double>& pb,
                    const std::vector<double>& f, std::size_t logged, double y) {
  double s = 0.0;
  for (std::size_t a = 0; a < pe.size(); ++a) {
    s += pe[a] * f[a];
    if (a == logged) s += pe[a] * (y - f[a]) / pb[a];
  }
  return s;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace fixtures
