#include "cli/report.hpp"

#include <algorithm>
#include <ctime>

#include "forge/error.hpp"
#include "forge/model_io.hpp"
#include "forge/text_format.hpp"

namespace forge::cli {

std::string tool_version() { return "0.3.0"; }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Report::Report(std::string command, Json config) : start_(std::chrono::steady_clock::now()) {
  doc_["schema"] = kReportSchema;
  doc_["schema_version"] = kReportSchemaVersion;
  doc_["tool_version"] = tool_version();
  doc_["command"] = std::move(command);
  doc_["config"] = std::move(config);
  doc_["summary"] = Json::object();
  doc_["sections"] = Json::object();
  doc_["tables"] = Json::object();
  doc_["meta"]["started_at"] = utc_timestamp();
}

Json& Report::table(const std::string& name) {
  Json& t = doc_["tables"][name];
  if (t.is_null()) t = Json::array();
  return t;
}

Json Report::finish() {
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  doc_["meta"]["finished_at"] = utc_timestamp();
  doc_["meta"]["wall_seconds"] = elapsed;
  return doc_;
}

void write_report(const Json& report, const std::filesystem::path& path) { write_file(path, report.dump(2) + "\n"); }

Json parse_report(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != kReportSchema)
    throw ParseError("not a forge report (missing schema tag)", 0);
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
    throw ParseError("report has no integer schema_version", 0);
  const int version = doc["schema_version"].get<int>();
  if (version != kReportSchemaVersion) throw VersionError(kReportSchema, kReportSchemaVersion, version);
  for (const char* key : {"command", "config", "summary", "sections", "tables"})
    if (!doc.contains(key)) throw ParseError(std::string("report is missing '") + key + "'", 0);
  if (!doc["tables"].is_object()) throw ParseError("report 'tables' must be an object", 0);
  for (const auto& [name, rows] : doc["tables"].items()) {
    if (!rows.is_array()) throw ParseError("table '" + name + "' must be an array", 0);
    for (const auto& row : rows)
      if (!row.is_object()) throw ParseError("table '" + name + "' has a non-object row", 0);
  }
  return doc;
}

Json read_report(const std::filesystem::path& path) { return parse_report(read_file(path)); }

Json report_payload(const Json& report) {
  Json out = report;
  out.erase("meta");
  return out;
}

namespace {

std::string csv_cell(const Json& v) {
  std::string s;
  if (v.is_null()) return "";
  if (v.is_string()) s = v.get<std::string>();
  else if (v.is_number_float()) s = text::format_double(v.get<double>());
  else s = v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

std::string table_to_csv(const Json& rows) {
  if (!rows.is_array() || rows.empty()) return "";
  std::vector<std::string> columns;
  for (const auto& row : rows)
    for (const auto& [key, _] : row.items())
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_cell(columns[i]);
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      if (row.contains(columns[i])) out += csv_cell(row[columns[i]]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace forge::cli
