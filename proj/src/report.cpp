#include "cea/report.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cea {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  std::string s(buf);
  // Keep doubles recognisable as doubles when the value happens to be integral.
  if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

ReportValue infer_value(const std::string& cell) {
  if (cell.empty()) return cell;
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(cell.c_str(), &end, 10);
  if (errno == 0 && end == cell.c_str() + cell.size()) return static_cast<std::int64_t>(i);
  errno = 0;
  const double d = std::strtod(cell.c_str(), &end);
  if (errno == 0 && end == cell.c_str() + cell.size()) return d;
  return cell;
}

double round_significant(double v) { return std::strtod(format_double(v).c_str(), nullptr); }

}  // namespace

void ReportTable::add_row(std::vector<ReportValue> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " cells, table has " +
                                std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw std::invalid_argument("unknown report format '" + name + "' (expected csv or json)");
}

std::string format_value(const ReportValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<std::string>(v);
}

std::string to_csv(const ReportTable& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << csv_escape(table.columns[c]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_escape(format_value(row[c]));
    out << '\n';
  }
  return out.str();
}

std::string to_json(const ReportTable& table) {
  nlohmann::ordered_json doc;
  doc["schema"] = "cea-report";
  doc["version"] = kReportSchemaVersion;
  doc["columns"] = table.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& v : row) {
      if (const auto* i = std::get_if<std::int64_t>(&v)) {
        r.push_back(*i);
      } else if (const auto* d = std::get_if<double>(&v)) {
        if (std::isfinite(*d)) {
          r.push_back(round_significant(*d));
        } else {
          r.push_back(format_double(*d));
        }
      } else {
        r.push_back(std::get<std::string>(v));
      }
    }
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

void emit_report(const ReportTable& table, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << (format == ReportFormat::Csv ? to_csv(table) : to_json(table));
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ReportTable parse_report(const std::filesystem::path& path, ReportFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ReportTable table;
  if (format == ReportFormat::Csv) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + " is empty");
    table.columns = csv_split(line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<ReportValue> row;
      for (const auto& cell : csv_split(line)) row.push_back(infer_value(cell));
      table.add_row(std::move(row));
    }
    return table;
  }
  const auto doc = nlohmann::json::parse(in);
  if (doc.value("schema", "") != "cea-report") throw std::runtime_error("not a cea report");
  if (doc.value("version", 0) != kReportSchemaVersion) {
    throw std::runtime_error("unsupported report schema version");
  }
  table.columns = doc.at("columns").get<std::vector<std::string>>();
  for (const auto& r : doc.at("rows")) {
    std::vector<ReportValue> row;
    for (const auto& v : r) {
      if (v.is_number_integer()) {
        row.emplace_back(v.get<std::int64_t>());
      } else if (v.is_number_float()) {
        row.emplace_back(v.get<double>());
      } else if (v.is_string()) {
        row.emplace_back(v.get<std::string>());
      } else {
        throw std::runtime_error("unexpected JSON cell type");
      }
    }
    table.add_row(std::move(row));
  }
  return table;
}

}  // namespace cea
