#include "batchope/report.hpp"

#include <cstdio>

#include "batchope/errors.hpp"

namespace batchope {
namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json to_json(const EstimatorResult& r) {
  json j;
  j["name"] = r.name;
  j["estimate"] = r.estimate;
  j["variance"] = r.variance;
  j["ci"] = {r.interval.lo, r.interval.hi};
  j["rounds"] = r.rounds;
  j["weights"] = r.weights;
  j["iterations"] = r.iterations;
  if (!r.weight_history.empty()) j["weight_history"] = r.weight_history;
  if (r.diagnostics) {
    const MomentSummary& m = *r.diagnostics;
    j["diagnostics"] = {{"batch_means", m.means},   {"batch_sizes", m.sizes},
                        {"var_hat", m.var_hat},     {"var_tilde", m.var_tilde},
                        {"drift", m.drift},         {"theta", m.theta}};
  }
  return j;
}

json to_json(const std::vector<EstimatorResult>& results) {
  json arr = json::array();
  for (const auto& r : results) arr.push_back(to_json(r));
  return arr;
}

json to_json(const ExperimentReport& report) {
  json j;
  j["config"] = report.config;
  j["reference"] = report.reference;
  j["reference_source"] = report.reference_source;
  j["setup"] = report.setup;
  j["wall_clock_seconds"] = report.wall_clock_seconds;
  json summaries = json::array();
  for (const auto& s : report.summaries) {
    summaries.push_back({{"estimator", s.name},
                         {"replications", s.replications},
                         {"mse", s.mse},
                         {"sd_squared_error", s.sd_squared_error},
                         {"coverage", s.coverage},
                         {"mean_ci_width", s.mean_ci_width},
                         {"mean_estimate", s.mean_estimate},
                         {"bias", s.bias}});
  }
  j["summary"] = std::move(summaries);
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"replication", r.replication},
                    {"seed", r.seed},
                    {"estimator", r.estimator},
                    {"estimate", r.estimate},
                    {"variance", r.variance},
                    {"ci", {r.lo, r.hi}},
                    {"squared_error", r.squared_error},
                    {"covered", r.covered},
                    {"iterations", r.iterations}});
  }
  j["rows"] = std::move(rows);
  if (report.opl) {
    const OplReport& o = *report.opl;
    json cands = json::array();
    for (const auto& c : o.candidates) {
      cands.push_back({{"id", c.id}, {"value", c.value}, {"times_chosen", c.times_chosen}});
    }
    j["opl"] = {{"estimator", o.estimator},
                {"candidates", std::move(cands)},
                {"choices", o.choices},
                {"mean_chosen_value", o.mean_chosen_value},
                {"mean_regret", o.mean_regret}};
  }
  return j;
}

ExperimentReport report_from_json(const json& doc) {
  ExperimentReport report;
  try {
    report.config = doc.at("config");
    report.reference = doc.at("reference").get<double>();
    report.reference_source = doc.at("reference_source").get<std::string>();
    report.setup = doc.value("setup", json::object());
    report.wall_clock_seconds = doc.value("wall_clock_seconds", 0.0);
    for (const auto& r : doc.at("rows")) {
      ReplicationRow row;
      row.replication = r.at("replication").get<std::size_t>();
      row.seed = r.at("seed").get<std::uint64_t>();
      row.estimator = r.at("estimator").get<std::string>();
      row.estimate = r.at("estimate").get<double>();
      row.variance = r.at("variance").get<double>();
      row.lo = r.at("ci").at(0).get<double>();
      row.hi = r.at("ci").at(1).get<double>();
      row.squared_error = r.at("squared_error").get<double>();
      row.covered = r.at("covered").get<bool>();
      row.iterations = r.at("iterations").get<std::size_t>();
      report.rows.push_back(std::move(row));
    }
    report.summaries = summarize_rows(report.rows);
    for (auto& s : report.summaries) s.bias = s.mean_estimate - report.reference;
    if (doc.contains("opl")) {
      const json& o = doc["opl"];
      OplReport opl;
      opl.estimator = o.at("estimator").get<std::string>();
      for (const auto& c : o.at("candidates")) {
        opl.candidates.push_back({c.at("id").get<std::string>(), c.at("value").get<double>(),
                                  c.at("times_chosen").get<std::size_t>()});
      }
      opl.choices = o.at("choices").get<std::vector<std::size_t>>();
      opl.mean_chosen_value = o.at("mean_chosen_value").get<double>();
      opl.mean_regret = o.at("mean_regret").get<double>();
      report.opl = std::move(opl);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string summary_csv(const ExperimentReport& report) {
  std::string out =
      "estimator,replications,mse,sd_squared_error,coverage,mean_ci_width,mean_estimate,bias\n";
  for (const auto& s : report.summaries) {
    out += s.name + "," + std::to_string(s.replications) + "," + num(s.mse) + "," +
           num(s.sd_squared_error) + "," + num(s.coverage) + "," + num(s.mean_ci_width) + "," +
           num(s.mean_estimate) + "," + num(s.bias) + "\n";
  }
  return out;
}

std::string rows_csv(const ExperimentReport& report) {
  std::string out =
      "replication,seed,estimator,estimate,variance,lo,hi,squared_error,covered,iterations\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.replication) + "," + std::to_string(r.seed) + "," + r.estimator + "," +
           num(r.estimate) + "," + num(r.variance) + "," + num(r.lo) + "," + num(r.hi) + "," +
           num(r.squared_error) + "," + (r.covered ? "1" : "0") + "," +
           std::to_string(r.iterations) + "\n";
  }
  return out;
}

std::string format_summary(const ExperimentReport& report) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "reference %.6f (%s)\n", report.reference,
                report.reference_source.c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-10s %12s %12s %9s %10s\n", "estimator", "MSE", "SD",
                "coverage", "CI width");
  out += line;
  for (const auto& s : report.summaries) {
    std::snprintf(line, sizeof line, "%-10s %12.6f %12.6f %9.3f %10.5f\n", s.name.c_str(), s.mse,
                  s.sd_squared_error, s.coverage, s.mean_ci_width);
    out += line;
  }
  if (report.opl) {
    std::snprintf(line, sizeof line, "policy learning (%s): mean value %.6f, regret %.6f\n",
                  report.opl->estimator.c_str(), report.opl->mean_chosen_value,
                  report.opl->mean_regret);
    out += line;
    for (const auto& c : report.opl->candidates) {
      std::snprintf(line, sizeof line, "  %-14s value %.6f chosen %zu\n", c.id.c_str(), c.value,
                    c.times_chosen);
      out += line;
    }
  }
  return out;
}

}  // namespace batchope
