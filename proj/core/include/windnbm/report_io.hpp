#ifndef WINDNBM_REPORT_IO_HPP
#define WINDNBM_REPORT_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include "windnbm/evaluation.hpp"

namespace windnbm {

inline constexpr int kReportSchemaVersion = 1;

/// Serialized report document (schema in docs/report_schema.md): sorted
/// keys, two-space indent, trailing newline, shortest round-trip numbers.
/// Identical reports serialize to identical bytes.
std::string render_report_json(const ComparisonReport& report);

void write_report_json(const ComparisonReport& report, const std::filesystem::path& path);

/// Restores everything except per-case outcomes, which live in
/// outcomes.csv; loaded blocks carry empty outcome vectors.
ComparisonReport load_report_json(const std::filesystem::path& path);

/// One row per case x model x criterion, block order then grid order.
/// Undefined delay/stability fields are left empty.
void write_outcomes_csv(const ComparisonReport& report, std::ostream& out);

void write_slope_summary_csv(const ComparisonReport& report, std::ostream& out);

void write_ttests_csv(const ComparisonReport& report, std::ostream& out);

}  // namespace windnbm

#endif
