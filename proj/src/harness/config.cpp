#include "batchope/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string_view>

#include "batchope/errors.hpp"

namespace batchope {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ValidationError("config: " + key + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(where + key, "wrong type");
  }
}

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

std::size_t get_count(const json& obj, const std::string& key, const std::string& where,
                      std::size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!is_count(*it)) fail(where + key, "expected a non-negative integer");
  return it->get<std::size_t>();
}

std::uint64_t get_seed(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return 0;
  if (!is_count(*it)) fail(where + key, "expected a non-negative integer");
  return it->get<std::uint64_t>();
}

double get_number(const json& obj, const std::string& key, const std::string& where,
                  double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail(where + key, "expected a number");
  return it->get<double>();
}

std::vector<double> number_list(const json& v, const std::string& key) {
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> matrix(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : v) out.push_back(number_list(row, key));
  return out;
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where + key, "missing");
  return *it;
}

std::string kind_of(const json& obj, const std::string& where) {
  const json& t = require(obj, "type", where + ".");
  if (!t.is_string()) fail(where + ".type", "expected a string");
  return t.get<std::string>();
}

EnvSpec parse_env(const json& v) {
  EnvSpec env;
  const std::string type = kind_of(v, "env");
  if (type == "discrete") {
    reject_unknown(v, "env", {"type", "covariates", "weights", "mean_rewards", "reward"});
    env.kind = EnvSpec::Kind::Discrete;
    env.covariates = matrix(require(v, "covariates", "env."), "env.covariates");
    env.mean_rewards = matrix(require(v, "mean_rewards", "env."), "env.mean_rewards");
    if (v.contains("weights")) {
      env.weights = number_list(v["weights"], "env.weights");
    } else {
      env.weights.assign(env.covariates.size(), 1.0 / static_cast<double>(env.covariates.size()));
    }
    const auto law = get<std::string>(v, "reward", "env.", "bernoulli");
    if (law == "bernoulli") {
      env.law = RewardLaw::Bernoulli;
    } else if (law == "deterministic") {
      env.law = RewardLaw::Deterministic;
    } else {
      fail("env.reward", "expected \"bernoulli\" or \"deterministic\"");
    }
    env.actions = env.mean_rewards.front().size();
  } else if (type == "logistic") {
    reject_unknown(v, "env", {"type", "actions", "dimension", "seed", "reference_draws"});
    env.kind = EnvSpec::Kind::Logistic;
    env.actions = get_count(v, "actions", "env.", 3);
    env.dimension = get_count(v, "dimension", "env.", 2);
    env.coefficient_seed = get_seed(v, "seed", "env.");
    env.reference_draws = get_count(v, "reference_draws", "env.", env.reference_draws);
    if (env.actions == 0) fail("env.actions", "must be at least 1");
    if (env.dimension == 0) fail("env.dimension", "must be at least 1");
    if (env.reference_draws == 0) fail("env.reference_draws", "must be at least 1");
  } else if (type == "classification") {
    reject_unknown(v, "env", {"type", "path", "train_rows"});
    env.kind = EnvSpec::Kind::Classification;
    const json& path = require(v, "path", "env.");
    if (!path.is_string() || path.get<std::string>().empty()) fail("env.path", "expected a path");
    env.path = path.get<std::string>();
    env.train_rows = get_count(v, "train_rows", "env.", 0);
  } else {
    fail("env.type", "expected \"discrete\", \"logistic\" or \"classification\"");
  }
  return env;
}

std::vector<std::size_t> parse_schedule(const json& v) {
  reject_unknown(v, "schedule", {"T", "M", "boundaries"});
  if (v.contains("boundaries")) {
    if (v.contains("T") || v.contains("M")) fail("schedule", "give either boundaries or T/M");
    const json& b = v["boundaries"];
    if (!b.is_array()) fail("schedule.boundaries", "expected an array");
    std::vector<std::size_t> out;
    for (const auto& e : b) {
      if (!is_count(e)) fail("schedule.boundaries", "expected non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
    try {
      (void)BatchSchedule(out);
    } catch (const ValidationError& e) {
      fail("schedule.boundaries", e.what());
    }
    return out;
  }
  const std::size_t total = get_count(v, "T", "schedule.", 1500);
  const std::size_t m = get_count(v, "M", "schedule.", 10);
  try {
    return BatchSchedule::equal(total, m).boundaries();
  } catch (const ValidationError& e) {
    fail("schedule", e.what());
  }
}

BehaviorSpec parse_behavior(const json& v) {
  BehaviorSpec b;
  const std::string type = kind_of(v, "behavior");
  if (type == "rw") {
    reject_unknown(v, "behavior", {"type", "noise", "seed"});
    b.kind = BehaviorSpec::Kind::RandomWalk;
    b.noise = get_number(v, "noise", "behavior.", b.noise);
    if (!(b.noise >= 0.0)) fail("behavior.noise", "must be non-negative");
    if (v.contains("seed")) b.seed = get_seed(v, "seed", "behavior.");
  } else if (type == "ucb") {
    reject_unknown(v, "behavior", {"type", "exploit", "buckets"});
    b.kind = BehaviorSpec::Kind::Ucb;
    b.exploit = get_number(v, "exploit", "behavior.", b.exploit);
    b.buckets = get_count(v, "buckets", "behavior.", b.buckets);
    if (!(b.exploit > 0.0 && b.exploit < 1.0)) fail("behavior.exploit", "must lie in (0, 1)");
    if (b.buckets == 0) fail("behavior.buckets", "must be at least 1");
  } else if (type == "fixed") {
    reject_unknown(v, "behavior", {"type", "probs"});
    b.kind = BehaviorSpec::Kind::Fixed;
    const json& p = require(v, "probs", "behavior.");
    if (p.is_array() && !p.empty() && p.front().is_number()) {
      b.per_batch.push_back(number_list(p, "behavior.probs"));
    } else {
      b.per_batch = matrix(p, "behavior.probs");
    }
    for (const auto& row : b.per_batch) {
      try {
        validate_distribution(row, 1e-9);
      } catch (const ValidationError& e) {
        fail("behavior.probs", e.what());
      }
    }
  } else {
    fail("behavior.type", "expected \"rw\", \"ucb\" or \"fixed\"");
  }
  return b;
}

EvaluationSpec parse_evaluation(const json& v) {
  EvaluationSpec e;
  const std::string type = kind_of(v, "evaluation");
  if (type == "mixture") {
    reject_unknown(v, "evaluation", {"type", "weight"});
    e.kind = EvaluationSpec::Kind::Mixture;
    e.weight = get_number(v, "weight", "evaluation.", e.weight);
    if (!(e.weight >= 0.0 && e.weight <= 1.0)) fail("evaluation.weight", "must lie in [0, 1]");
  } else if (type == "fixed") {
    reject_unknown(v, "evaluation", {"type", "probs"});
    e.kind = EvaluationSpec::Kind::Fixed;
    e.probs = number_list(require(v, "probs", "evaluation."), "evaluation.probs");
    try {
      validate_distribution(e.probs, 1e-9);
    } catch (const ValidationError& err) {
      fail("evaluation.probs", err.what());
    }
  } else if (type == "uniform") {
    reject_unknown(v, "evaluation", {"type"});
    e.kind = EvaluationSpec::Kind::Uniform;
  } else {
    fail("evaluation.type", "expected \"mixture\", \"fixed\" or \"uniform\"");
  }
  return e;
}

void parse_nuisance(const json& v, ExperimentConfig& cfg) {
  reject_unknown(v, "nuisance", {"method", "bandwidth", "k", "propensity", "propensity_floor"});
  NuisanceOptions& n = cfg.nuisance;
  cfg.nuisance_method = get<std::string>(v, "method", "nuisance.", "nw");
  if (cfg.nuisance_method == "nw") {
    n.method = OutcomeMethod::NadarayaWatson;
  } else if (cfg.nuisance_method == "knn") {
    n.method = OutcomeMethod::Knn;
  } else if (cfg.nuisance_method == "oracle") {
    n.method = OutcomeMethod::Oracle;
  } else if (cfg.nuisance_method == "zero") {
    n.method = OutcomeMethod::Zero;
  } else {
    fail("nuisance.method", "expected \"nw\", \"knn\", \"oracle\" or \"zero\"");
  }
  if (v.contains("bandwidth")) {
    const json& bw = v["bandwidth"];
    n.bandwidth = bw.is_number() ? std::vector<double>{bw.get<double>()}
                                 : number_list(bw, "nuisance.bandwidth");
    for (double h : n.bandwidth) {
      if (!(h > 0.0)) fail("nuisance.bandwidth", "must be positive");
    }
  }
  n.k = get_count(v, "k", "nuisance.", n.k);
  if (n.k == 0) fail("nuisance.k", "must be at least 1");
  const auto prop = get<std::string>(v, "propensity", "nuisance.", "frequency");
  if (prop == "none") {
    n.propensity = PropensityMethod::None;
  } else if (prop == "frequency") {
    n.propensity = PropensityMethod::Frequency;
  } else if (prop == "nw") {
    n.propensity = PropensityMethod::NadarayaWatson;
  } else {
    fail("nuisance.propensity", "expected \"none\", \"frequency\" or \"nw\"");
  }
  n.propensity_floor = get_number(v, "propensity_floor", "nuisance.", n.propensity_floor);
  if (!(n.propensity_floor > 0.0 && n.propensity_floor <= 1.0)) {
    fail("nuisance.propensity_floor", "must lie in (0, 1]");
  }
}

OplSpec parse_opl(const json& v) {
  reject_unknown(v, "opl", {"enabled", "weights", "estimator"});
  OplSpec o;
  o.enabled = get<bool>(v, "enabled", "opl.", true);
  if (v.contains("weights")) o.mixture_weights = number_list(v["weights"], "opl.weights");
  if (o.mixture_weights.empty()) fail("opl.weights", "needs at least one candidate");
  for (double w : o.mixture_weights) {
    if (!(w >= 0.0 && w <= 1.0)) fail("opl.weights", "each weight must lie in [0, 1]");
  }
  o.estimator = get<std::string>(v, "estimator", "opl.", o.estimator);
  const auto& names = estimator_names();
  if (std::find(names.begin(), names.end(), o.estimator) == names.end()) {
    fail("opl.estimator", "unknown estimator \"" + o.estimator + "\"");
  }
  return o;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc, "",
                 {"env", "schedule", "behavior", "evaluation", "nuisance", "estimators", "n_steps",
                  "alpha", "badr_steps", "ba2ipwis_folds", "replications", "seed", "threads",
                  "output", "opl"});
  ExperimentConfig cfg;
  cfg.source = doc;
  cfg.env = parse_env(require(doc, "env", ""));
  cfg.boundaries = parse_schedule(doc.value("schedule", json::object()));
  cfg.behavior = parse_behavior(doc.value("behavior", json{{"type", "rw"}}));
  cfg.evaluation = parse_evaluation(doc.value("evaluation", json{{"type", "mixture"}}));
  parse_nuisance(doc.value("nuisance", json::object()), cfg);

  const auto& names = estimator_names();
  if (doc.contains("estimators")) {
    const json& list = doc["estimators"];
    if (!list.is_array()) fail("estimators", "expected an array of names");
    std::set<std::string> seen;
    for (const auto& e : list) {
      if (!e.is_string()) fail("estimators", "expected an array of names");
      auto name = e.get<std::string>();
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        fail("estimators", "unknown estimator \"" + name + "\"");
      }
      if (!seen.insert(name).second) fail("estimators", "duplicate \"" + name + "\"");
      cfg.estimators.push_back(std::move(name));
    }
  } else {
    cfg.estimators = names;
  }

  cfg.settings.steps = get_count(doc, "n_steps", "", cfg.settings.steps);
  cfg.settings.badr_steps = get_count(doc, "badr_steps", "", cfg.settings.badr_steps);
  cfg.settings.alpha = get_number(doc, "alpha", "", cfg.settings.alpha);
  cfg.settings.ba2ipwis_folds = get_count(doc, "ba2ipwis_folds", "", cfg.settings.ba2ipwis_folds);
  if (cfg.settings.steps == 0) fail("n_steps", "must be at least 1");
  if (cfg.settings.badr_steps == 0) fail("badr_steps", "must be at least 1");
  if (cfg.settings.ba2ipwis_folds == 0) fail("ba2ipwis_folds", "must be at least 1");
  if (!(cfg.settings.alpha > 0.0)) fail("alpha", "must be positive");

  cfg.replications = get_count(doc, "replications", "", cfg.replications);
  if (cfg.replications == 0) fail("replications", "must be at least 1");
  cfg.seed = get_seed(doc, "seed", "");
  cfg.threads = get_count(doc, "threads", "", cfg.threads);

  if (cfg.nuisance.propensity == PropensityMethod::None &&
      std::find(cfg.estimators.begin(), cfg.estimators.end(), "BADR") != cfg.estimators.end()) {
    fail("nuisance.propensity", "BADR needs a propensity model");
  }

  if (doc.contains("output")) {
    const json& out = doc["output"];
    reject_unknown(out, "output", {"report", "csv"});
    cfg.report_path = get<std::string>(out, "report", "output.", "");
    cfg.csv_path = get<std::string>(out, "csv", "output.", "");
  }
  if (doc.contains("opl")) cfg.opl = parse_opl(doc["opl"]);

  // Cross-field checks.
  const std::size_t k = cfg.env.actions;
  if (cfg.env.kind != EnvSpec::Kind::Classification) {
    if (cfg.behavior.kind == BehaviorSpec::Kind::Fixed) {
      for (const auto& row : cfg.behavior.per_batch) {
        if (row.size() != k) fail("behavior.probs", "length must equal the number of actions");
      }
    }
    if (cfg.evaluation.kind == EvaluationSpec::Kind::Fixed && cfg.evaluation.probs.size() != k) {
      fail("evaluation.probs", "length must equal the number of actions");
    }
  } else if (cfg.nuisance.method == OutcomeMethod::Oracle) {
    fail("nuisance.method", "oracle outcomes need a synthetic env");
  }
  const std::size_t m = cfg.boundaries.size() - 1;
  if (cfg.behavior.kind == BehaviorSpec::Kind::Fixed && cfg.behavior.per_batch.size() != 1 &&
      cfg.behavior.per_batch.size() != m) {
    fail("behavior.probs", "give one distribution or one per batch");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + path + ": " + e.what());
  }
  ExperimentConfig cfg = parse_config(doc);
  // Dataset paths are relative to the config file.
  if (cfg.env.kind == EnvSpec::Kind::Classification) {
    const std::filesystem::path data(cfg.env.path);
    if (data.is_relative()) {
      cfg.env.path = (std::filesystem::path(path).parent_path() / data).lexically_normal().string();
    }
  }
  return cfg;
}

}  // namespace batchope
