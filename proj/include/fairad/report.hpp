#pragma once

#include <nlohmann/json.hpp>

#include "fairad/scoring.hpp"
#include "fairad/theory.hpp"
#include "fairad/trainer.hpp"

namespace fairad {

// JSON views of the report types. Keys are snake_case and stable; every
// number a table prints comes from these objects.

nlohmann::json to_json(const LossReport& r);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const FairnessAuditReport& r);
nlohmann::json to_json(const TvBoundReport& r);
nlohmann::json to_json(const ExperimentConfig& c);
nlohmann::json to_json(const RunReport& r);
nlohmann::json to_json(const TheoryAuditReport& r);

/// Summary table of a run, one line per (seed, k) plus mean/std rows.
std::string run_report_csv(const RunReport& r);

/// Copy of a report's JSON with wall-clock fields removed; two runs of the
/// same config and seed must agree on this view byte for byte.
nlohmann::json without_timing(nlohmann::json j);

}  // namespace fairad
