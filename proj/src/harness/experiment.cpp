#include "batchope/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "batchope/behavior.hpp"
#include "batchope/errors.hpp"
#include "batchope/opl.hpp"

namespace batchope {
namespace {

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kBehaviorStream = 2;
constexpr std::uint64_t kReferenceStream = 3;

std::string weight_label(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mixture_%.2f", w);
  return buf;
}

struct Replication {
  std::vector<EstimatorResult> results;
  std::optional<std::size_t> choice;
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<EstimatorSummary> summarize_rows(const std::vector<ReplicationRow>& rows) {
  std::vector<EstimatorSummary> out;
  std::map<std::string, std::vector<const ReplicationRow*>> groups;
  for (const auto& row : rows) {
    auto& g = groups[row.estimator];
    if (g.empty()) out.push_back(EstimatorSummary{row.estimator});
    g.push_back(&row);
  }
  for (auto& s : out) {
    const auto& g = groups[s.name];
    const double n = static_cast<double>(g.size());
    s.replications = g.size();
    double se = 0.0, covered = 0.0, width = 0.0, est = 0.0;
    for (const auto* r : g) {
      se += r->squared_error;
      covered += r->covered ? 1.0 : 0.0;
      width += r->hi - r->lo;
      est += r->estimate;
    }
    s.mse = se / n;
    s.coverage = covered / n;
    s.mean_ci_width = width / n;
    s.mean_estimate = est / n;
    double ss = 0.0;
    for (const auto* r : g) ss += (r->squared_error - s.mse) * (r->squared_error - s.mse);
    s.sd_squared_error = g.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return out;
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  const EnvSpec& spec = config_.env;
  const BatchSchedule schedule = config_.schedule();
  setup_ = nlohmann::json::object();

  switch (spec.kind) {
    case EnvSpec::Kind::Discrete:
      env_ = std::make_shared<DiscreteEnvironment>(spec.covariates, spec.weights,
                                                   spec.mean_rewards, spec.law);
      break;
    case EnvSpec::Kind::Logistic:
      env_ = std::make_shared<LogisticEnvironment>(
          LogisticEnvironment::random(spec.actions, spec.dimension, spec.coefficient_seed));
      break;
    case EnvSpec::Kind::Classification: {
      std::ifstream in(spec.path);
      if (!in) throw ValidationError("cannot open dataset " + spec.path);
      LabeledDataset data = parse_libsvm(in);
      const std::size_t total = schedule.total();
      std::size_t train = spec.train_rows;
      if (train == 0) {
        if (data.size() <= total) {
          throw ValidationError("dataset " + spec.path + " has " + std::to_string(data.size()) +
                                " rows, leaving none to train the classifier after " +
                                std::to_string(total) + " rounds");
        }
        train = data.size() - total;
      }
      if (train >= data.size() || data.size() - train < total) {
        throw ValidationError("train_rows " + std::to_string(train) + " leaves fewer than " +
                              std::to_string(total) + " rows of " + spec.path +
                              " for the bandit log");
      }
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(config_.seed, kSplitStream));
      std::shuffle(order.begin(), order.end(), rng);
      const std::vector<std::size_t> train_idx(order.begin(), order.begin() + train);
      const std::vector<std::size_t> pool_idx(order.begin() + train, order.end());
      LabeledDataset train_set = data.subset(train_idx);
      pool_ = data.subset(pool_idx);
      const auto clf = SoftmaxClassifier::fit(train_set);
      num_actions_ = data.num_classes();
      deterministic_ = clf.as_policy();
      setup_["train_rows"] = train;
      setup_["pool_rows"] = pool_->size();
      setup_["classes"] = num_actions_;
      setup_["classifier_train_accuracy"] = clf.accuracy(train_set);
      setup_["classifier_pool_accuracy"] = clf.accuracy(*pool_);
      break;
    }
  }
  if (env_) {
    num_actions_ = env_->num_actions();
    auto env = env_;
    deterministic_ = Policy::deterministic(num_actions_, [env](Covariate x) {
      std::vector<double> means(env->num_actions());
      for (std::size_t a = 0; a < means.size(); ++a) means[a] = env->mean_reward(a, x);
      return argmax(means);
    });
  }

  if (config_.behavior.kind == BehaviorSpec::Kind::Fixed) {
    for (const auto& row : config_.behavior.per_batch) {
      if (row.size() != num_actions_) {
        throw ValidationError("config: behavior.probs: length must equal the number of actions");
      }
    }
  }
  switch (config_.evaluation.kind) {
    case EvaluationSpec::Kind::Mixture:
      evaluation_ = mix_policies(*deterministic_, Policy::uniform(num_actions_),
                                 config_.evaluation.weight);
      break;
    case EvaluationSpec::Kind::Fixed:
      if (config_.evaluation.probs.size() != num_actions_) {
        throw ValidationError("config: evaluation.probs: length must equal the number of actions");
      }
      evaluation_ = Policy::constant(config_.evaluation.probs);
      break;
    case EvaluationSpec::Kind::Uniform:
      evaluation_ = Policy::uniform(num_actions_);
      break;
  }

  if (pool_) {
    reference_source_ = "held_out_mean";
  } else if (env_->as_discrete() != nullptr) {
    reference_source_ = "oracle";
  } else {
    reference_source_ = "monte_carlo";
  }
  reference_ = value_of(*evaluation_);

  if (config_.nuisance.method == OutcomeMethod::Oracle) {
    auto env = env_;
    config_.nuisance.oracle = [env](std::size_t a, Covariate x) { return env->mean_reward(a, x); };
  }
  if (config_.opl.enabled) {
    for (double w : config_.opl.mixture_weights) {
      candidates_.push_back(
          {weight_label(w), mix_policies(*deterministic_, Policy::uniform(num_actions_), w)});
      candidate_values_.push_back(value_of(candidates_.back().policy));
    }
  }

  setup_["actions"] = num_actions_;
  setup_["rounds"] = schedule.total();
  setup_["batches"] = schedule.num_batches();
  setup_["nuisance"] = config_.nuisance_method;
  setup_["reference_source"] = reference_source_;
}

double Experiment::value_of(const Policy& policy) const {
  if (pool_) return classification_policy_value(*pool_, policy);
  if (env_->as_discrete() != nullptr) return true_policy_value(*env_, policy);
  return monte_carlo_policy_value(*env_, policy, config_.env.reference_draws,
                                  derive_seed(config_.seed, kReferenceStream));
}

std::unique_ptr<BehaviorGenerator> Experiment::behavior(std::uint64_t seed) const {
  const BehaviorSpec& b = config_.behavior;
  switch (b.kind) {
    case BehaviorSpec::Kind::RandomWalk:
      return std::make_unique<RandomWalkBehavior>(
          num_actions_, b.seed.value_or(derive_seed(seed, kBehaviorStream)), b.noise);
    case BehaviorSpec::Kind::Ucb:
      return std::make_unique<UcbBehavior>(num_actions_, b.exploit, b.buckets);
    case BehaviorSpec::Kind::Fixed: {
      std::vector<Policy> per_batch;
      for (const auto& p : b.per_batch) per_batch.push_back(Policy::constant(p));
      return std::make_unique<FixedBehavior>(std::move(per_batch));
    }
  }
  throw ValidationError("unknown behavior kind");
}

BanditLog Experiment::simulate(std::uint64_t seed) const {
  const auto gen = behavior(seed);
  if (pool_) return classification_to_bandit(*pool_, *gen, config_.schedule(), seed);
  return sample_batched_log(*env_, config_.schedule(), *gen, seed);
}

NuisanceSequence Experiment::nuisances(const BanditLog& log) const {
  return build_nuisance_sequence(log, config_.nuisance);
}

std::vector<EstimatorResult> Experiment::estimate(const BanditLog& log) const {
  if (log.num_actions() != num_actions_) {
    throw ValidationError("log has " + std::to_string(log.num_actions()) +
                          " actions but the config describes " + std::to_string(num_actions_));
  }
  log.require_complete();
  const NuisanceSequence nuis = nuisances(log);
  EstimatorSuite suite(log, nuis, *evaluation_, config_.settings);
  return suite.run(config_.estimators);
}

ExperimentReport Experiment::run() const {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t reps = config_.replications;
  std::vector<Replication> out(reps);
  std::vector<std::exception_ptr> errors(reps);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= reps || failed.load()) return;
      try {
        const std::uint64_t seed = config_.seed + i;
        const BanditLog log = simulate(seed);
        const NuisanceSequence nuis = nuisances(log);
        EstimatorSuite suite(log, nuis, *evaluation_, config_.settings);
        out[i].results = suite.run(config_.estimators);
        if (!candidates_.empty()) {
          out[i].choice =
              select_policy(log, nuis, candidates_, config_.opl.estimator, config_.settings).chosen;
        }
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };

  std::size_t threads = config_.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, reps);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentReport report;
  report.config = config_.source;
  report.reference = reference_;
  report.reference_source = reference_source_;
  report.setup = setup_;
  for (std::size_t i = 0; i < reps; ++i) {
    for (const auto& r : out[i].results) {
      ReplicationRow row;
      row.replication = i;
      row.seed = config_.seed + i;
      row.estimator = r.name;
      row.estimate = r.estimate;
      row.variance = r.variance;
      row.lo = r.interval.lo;
      row.hi = r.interval.hi;
      row.squared_error = (r.estimate - reference_) * (r.estimate - reference_);
      row.covered = r.interval.contains(reference_);
      row.iterations = r.iterations;
      report.rows.push_back(std::move(row));
    }
  }
  report.summaries = summarize_rows(report.rows);
  for (auto& s : report.summaries) s.bias = s.mean_estimate - reference_;

  if (!candidates_.empty()) {
    OplReport opl;
    opl.estimator = config_.opl.estimator;
    const double best = *std::max_element(candidate_values_.begin(), candidate_values_.end());
    for (std::size_t c = 0; c < candidates_.size(); ++c) {
      opl.candidates.push_back({candidates_[c].id, candidate_values_[c], 0});
    }
    double chosen = 0.0, regret = 0.0;
    for (const auto& rep : out) {
      opl.choices.push_back(*rep.choice);
      ++opl.candidates[*rep.choice].times_chosen;
      chosen += candidate_values_[*rep.choice];
      regret += best - candidate_values_[*rep.choice];
    }
    opl.mean_chosen_value = chosen / static_cast<double>(reps);
    opl.mean_regret = regret / static_cast<double>(reps);
    report.opl = std::move(opl);
  }

  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return Experiment(config).run();
}

std::vector<EstimatorResult> estimate_once(const ExperimentConfig& config,
                                           const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw ValidationError("cannot open log " + log_path);
  const BanditLog log = read_log(in);
  if (config.estimators.empty()) return {};
  return Experiment(config).estimate(log);
}

void simulate_to_file(const ExperimentConfig& config, std::uint64_t seed, const std::string& path) {
  const BanditLog log = Experiment(config).simulate(seed);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  write_log(out, log);
  if (!out) throw Error("write to " + path + " failed");
}

}  // namespace batchope
