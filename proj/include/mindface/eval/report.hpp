#pragma once

// Report export: CSV tables plus a versioned JSON summary.
//   <dir>/summary.json
//   <dir>/targets.csv    one row per target
//   <dir>/curve.csv      one row per iteration
//   <dir>/ablation.csv   one row per (label, logged step), when present

#include "mindface/eval/study.hpp"

#include <json.hpp>

#include <filesystem>

namespace mindface::eval {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json report_summary(const StudyReport& report);
// Aggregates only: per-target rows are not part of the summary.
StudyReport report_from_summary(const nlohmann::json& summary);

void export_report(const StudyReport& report, const std::filesystem::path& dir);
StudyReport read_report_summary(const std::filesystem::path& dir);

}  // namespace mindface::eval
