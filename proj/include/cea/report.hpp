#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace cea {

using ReportValue = std::variant<std::int64_t, double, std::string>;

/// Column-ordered table written as CSV or JSON. Doubles are written with six
/// significant digits.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<ReportValue>> rows;

  void add_row(std::vector<ReportValue> row);
  friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

enum class ReportFormat { Csv, Json };

/// "csv" or "json"; anything else throws std::invalid_argument.
ReportFormat parse_report_format(const std::string& name);

inline constexpr int kReportSchemaVersion = 1;

std::string format_value(const ReportValue& v);
std::string to_csv(const ReportTable& table);
std::string to_json(const ReportTable& table);

/// JSON layout: {"schema": "cea-report", "version": 1, "columns": [...],
/// "rows": [[...], ...]}.
void emit_report(const ReportTable& table, ReportFormat format, const std::filesystem::path& path);

/// Inverse of emit_report. CSV cells are typed as integer, then double, then string.
ReportTable parse_report(const std::filesystem::path& path, ReportFormat format);

}  // namespace cea
