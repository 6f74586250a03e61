#include "batchope/classification.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "batchope/environment.hpp"
#include "batchope/errors.hpp"

namespace batchope {

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.original_labels = original_labels;
  out.dimension = dimension;
  for (std::size_t r : rows) {
    out.labels.push_back(labels.at(r));
    out.features.push_back(features.at(r));
  }
  return out;
}

namespace {

double parse_number(const std::string& token, std::size_t line) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw ParseError(line, "bad number '" + token + "'");
  }
  return v;
}

}  // namespace

LabeledDataset parse_libsvm(std::istream& in) {
  struct Row {
    long long label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t dim = 0;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
    std::istringstream tokens(text);
    std::string token;
    if (!(tokens >> token)) continue;
    const double label = parse_number(token, line);
    if (label != std::floor(label)) throw ParseError(line, "label must be an integer");
    Row row{static_cast<long long>(label), {}};
    std::size_t previous = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || colon == 0) {
        throw ParseError(line, "expected <index>:<value>, got '" + token + "'");
      }
      const double idx = parse_number(token.substr(0, colon), line);
      if (idx < 1 || idx != std::floor(idx)) throw ParseError(line, "indices are 1-based integers");
      const auto index = static_cast<std::size_t>(idx);
      if (index <= previous) throw ParseError(line, "feature indices must be ascending");
      previous = index;
      row.entries.emplace_back(index, parse_number(token.substr(colon + 1), line));
      dim = std::max(dim, index);
    }
    rows.push_back(std::move(row));
  }

  LabeledDataset data;
  data.dimension = dim;
  for (const auto& r : rows) data.original_labels.push_back(r.label);
  std::sort(data.original_labels.begin(), data.original_labels.end());
  data.original_labels.erase(std::unique(data.original_labels.begin(), data.original_labels.end()),
                             data.original_labels.end());
  for (const auto& r : rows) {
    auto it = std::lower_bound(data.original_labels.begin(), data.original_labels.end(), r.label);
    data.labels.push_back(static_cast<std::size_t>(it - data.original_labels.begin()));
    std::vector<double> x(dim, 0.0);
    for (const auto& [index, value] : r.entries) x[index - 1] = value;
    data.features.push_back(std::move(x));
  }
  return data;
}

BanditLog classification_to_bandit(const LabeledDataset& data, const BehaviorGenerator& behavior,
                                   const BatchSchedule& schedule, std::uint64_t seed) {
  const std::size_t k = data.num_classes();
  if (behavior.num_actions() != k) {
    throw ValidationError("behavior has " + std::to_string(behavior.num_actions()) +
                          " actions but the dataset has " + std::to_string(k) + " classes");
  }
  if (schedule.total() > data.size()) {
    throw ValidationError("requested " + std::to_string(schedule.total()) +
                          " rounds from a dataset of " + std::to_string(data.size()) + " rows");
  }
  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  BanditLog log(schedule, k);
  std::size_t next = 0;
  for (std::size_t b = 0; b < schedule.num_batches(); ++b) {
    const Policy policy = behavior.policy_for_batch(b, log);
    for (std::size_t t = schedule.begin(b); t < schedule.end(b); ++t) {
      const std::size_t row = order[next++];
      Record r;
      r.x = data.features[row];
      r.behavior = policy.checked_probabilities(r.x);
      r.action = draw_action(r.behavior, rng);
      r.reward = r.action == data.labels[row] ? 1.0 : 0.0;
      r.batch = b;
      log.append(std::move(r));
    }
  }
  return log;
}

double classification_policy_value(const LabeledDataset& data, const Policy& policy) {
  if (data.size() == 0) throw ValidationError("policy value on an empty dataset");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sum += policy.probabilities(data.features[i]).at(data.labels[i]);
  }
  return sum / static_cast<double>(data.size());
}

SoftmaxClassifier SoftmaxClassifier::fit(const LabeledDataset& data,
                                         const SoftmaxOptions& options) {
  if (data.size() == 0) throw ValidationError("cannot train a classifier on no rows");
  const std::size_t n = data.size();
  const std::size_t d = data.dimension;
  const std::size_t k = data.num_classes();

  SoftmaxClassifier model;
  model.mean_.assign(d, 0.0);
  model.scale_.assign(d, 1.0);
  for (const auto& x : data.features) {
    for (std::size_t j = 0; j < d; ++j) model.mean_[j] += x[j] / static_cast<double>(n);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double ss = 0.0;
    for (const auto& x : data.features) ss += (x[j] - model.mean_[j]) * (x[j] - model.mean_[j]);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    model.scale_[j] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(d + 1, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      z[i][j + 1] = (data.features[i][j] - model.mean_[j]) / model.scale_[j];
    }
  }

  model.weights_.assign(k, std::vector<double>(d + 1, 0.0));
  std::vector<std::vector<double>> grad(k, std::vector<double>(d + 1));
  std::vector<double> logits(k);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        logits[c] = std::inner_product(z[i].begin(), z[i].end(), model.weights_[c].begin(), 0.0);
        top = std::max(top, logits[c]);
      }
      double norm = 0.0;
      for (double& l : logits) norm += (l = std::exp(l - top));
      for (std::size_t c = 0; c < k; ++c) {
        const double residual = logits[c] / norm - (data.labels[i] == c ? 1.0 : 0.0);
        for (std::size_t j = 0; j <= d; ++j) grad[c][j] += residual * z[i][j];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j <= d; ++j) {
        const double penalty = j == 0 ? 0.0 : options.l2 * model.weights_[c][j];
        model.weights_[c][j] -= options.learning_rate * (grad[c][j] / static_cast<double>(n) + penalty);
      }
    }
  }
  return model;
}

std::vector<double> SoftmaxClassifier::scores(Covariate x) const {
  if (x.size() != mean_.size()) throw ValidationError("classifier input has wrong dimension");
  std::vector<double> out(weights_.size());
  for (std::size_t c = 0; c < weights_.size(); ++c) {
    double s = weights_[c][0];
    for (std::size_t j = 0; j < x.size(); ++j) s += weights_[c][j + 1] * (x[j] - mean_[j]) / scale_[j];
    out[c] = s;
  }
  return out;
}

std::size_t SoftmaxClassifier::predict(Covariate x) const { return argmax(scores(x)); }

double SoftmaxClassifier::accuracy(const LabeledDataset& data) const {
  if (data.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += predict(data.features[i]) == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Policy SoftmaxClassifier::as_policy() const {
  auto shared = std::make_shared<const SoftmaxClassifier>(*this);
  return Policy::deterministic(num_classes(), [shared](Covariate x) { return shared->predict(x); });
}

}  // namespace batchope
