#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace forge::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "forge-report";
inline constexpr int kReportSchemaVersion = 1;

// A report is a JSON document:
//   schema, schema_version, tool_version, command, config, summary,
//   sections, tables {name: [flat row objects]}, meta {timestamps}.
// Everything except `meta` is deterministic for a fixed seed.
class Report {
 public:
  Report(std::string command, Json config);

  Json& summary() { return doc_["summary"]; }
  Json& sections() { return doc_["sections"]; }
  Json& table(const std::string& name);
  void set_meta(const std::string& key, Json value) { doc_["meta"][key] = std::move(value); }

  // Stamps the finish time and wall-clock duration.
  Json finish();
  const Json& document() const { return doc_; }

 private:
  Json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::string utc_timestamp();
std::string tool_version();

void write_report(const Json& report, const std::filesystem::path& path);
Json parse_report(const std::string& text);
Json read_report(const std::filesystem::path& path);
Json report_payload(const Json& report);

// One CSV document per table; rows must be flat objects.
std::string table_to_csv(const Json& rows);

}  // namespace forge::cli
