// Command-line front end: simulate, estimate, experiment, report.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "batchope/config.hpp"
#include "batchope/errors.hpp"
#include "batchope/experiment.hpp"
#include "batchope/report.hpp"

namespace {

constexpr int kValidation = 1;
constexpr int kRuntime = 2;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw batchope::ValidationError("cannot write " + path);
  out << text;
  if (!out) throw batchope::Error("write to " + path + " failed");
}

batchope::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed,
                                std::optional<std::size_t> replications) {
  auto cfg = batchope::load_config(path);
  if (seed) {
    cfg.seed = *seed;
    cfg.source["seed"] = *seed;
  }
  if (replications) {
    if (*replications == 0) throw batchope::ValidationError("--replications must be at least 1");
    cfg.replications = *replications;
    cfg.source["replications"] = *replications;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation for batched contextual-bandit logs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::string log_path;
  std::string report_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;

  auto* sim = app.add_subcommand("simulate", "Write one simulated log (JSON lines)");
  sim->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sim->add_option("--seed", seed, "Log seed (defaults to the config seed)");
  sim->add_option("--out", out_path, "Log path; stdout when omitted");

  auto* est = app.add_subcommand("estimate", "Run the configured estimators on a log");
  est->add_option("--config", config_path, "Experiment config (JSON)")->required();
  est->add_option("--log", log_path, "Log file (JSON lines)")->required();
  est->add_option("--out", out_path, "Result path; stdout when omitted");

  auto* exp = app.add_subcommand("experiment", "Replicated experiment with summary tables");
  exp->add_option("--config", config_path, "Experiment config (JSON)")->required();
  exp->add_option("--seed", seed, "Base seed; replication i uses seed + i");
  exp->add_option("--replications", replications, "Override the replication count");
  exp->add_option("--out", out_path, "JSON report path (defaults to output.report)");
  exp->add_option("--csv", csv_path, "CSV summary path (defaults to output.csv)");

  auto* rep = app.add_subcommand("report", "Summarize an existing JSON report");
  rep->add_option("--in", report_path, "JSON report")->required();
  rep->add_option("--out", out_path, "CSV summary path; a table on stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  try {
    if (*sim) {
      const auto cfg = load(config_path, seed, std::nullopt);
      const std::uint64_t s = seed.value_or(cfg.seed);
      if (out_path.empty() || out_path == "-") {
        const auto log = batchope::Experiment(cfg).simulate(s);
        batchope::write_log(std::cout, log);
      } else {
        batchope::simulate_to_file(cfg, s, out_path);
      }
    } else if (*est) {
      const auto cfg = load(config_path, std::nullopt, std::nullopt);
      const auto results = batchope::estimate_once(cfg, log_path);
      write_text(out_path, batchope::to_json(results).dump(2) + "\n");
    } else if (*exp) {
      const auto cfg = load(config_path, seed, replications);
      const auto report = batchope::run_experiment(cfg);
      const std::string json_path = out_path.empty() ? cfg.report_path : out_path;
      const std::string csv = csv_path.empty() ? cfg.csv_path : csv_path;
      if (!json_path.empty()) write_text(json_path, batchope::to_json(report).dump(2) + "\n");
      if (!csv.empty()) write_text(csv, batchope::summary_csv(report));
      std::cout << batchope::format_summary(report);
    } else if (*rep) {
      std::ifstream in(report_path);
      if (!in) throw batchope::ValidationError("cannot open " + report_path);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw batchope::ValidationError(report_path + ": " + e.what());
      }
      const auto report = batchope::report_from_json(doc);
      if (out_path.empty()) {
        std::cout << batchope::format_summary(report);
      } else {
        write_text(out_path, batchope::summary_csv(report));
      }
    }
  } catch (const batchope::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const batchope::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}
