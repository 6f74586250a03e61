#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "batchope/estimators.hpp"
#include "batchope/experiment.hpp"

namespace batchope {

nlohmann::json to_json(const EstimatorResult& result);
nlohmann::json to_json(const std::vector<EstimatorResult>& results);

/// Canonical report document. Keys are sorted, so equal reports serialize to
/// equal bytes apart from "wall_clock_seconds".
nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& doc);

/// One line per estimator: estimator,replications,mse,sd_squared_error,
/// coverage,mean_ci_width,mean_estimate,bias.
std::string summary_csv(const ExperimentReport& report);
std::string rows_csv(const ExperimentReport& report);
/// Fixed-width table for terminals.
std::string format_summary(const ExperimentReport& report);

}  // namespace batchope
