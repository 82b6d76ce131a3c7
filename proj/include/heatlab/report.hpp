#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heatlab/asymptotics.hpp"

namespace heatlab {

inline constexpr const char* kToolVersion = "heatlab 0.1.0";

struct ReportRow {
  std::string tag;
  GridPoint point;
  double statistic = 0.0;
  std::optional<double> bound;
  bool verdict = true;
};

/// Serialized run result: {tool_version, config, results, summary}.
struct Report {
  std::string tool_version = kToolVersion;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<ReportRow> results;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();

  bool pass() const;
  /// Sorts rows by tag, then (t, x, y, order).
  void canonicalize();
};

/// Rows and summary of a verification report; the summary also carries the
/// verdict under "pass".
void append(Report& out, const VerificationReport& r, const std::string& prefix = "");
nlohmann::ordered_json summary_of(const VerificationReport& r);

nlohmann::ordered_json to_json(const Report& r);
Report report_from_json(const nlohmann::ordered_json& j);
std::string to_json_string(const Report& r);
/// Columns t, x, y, order, statistic, bound, verdict (tag as the first column).
std::string to_csv(const Report& r);

/// Non-finite numbers serialize as null and parse back as NaN.
nlohmann::ordered_json number(double v);
double number_from(const nlohmann::ordered_json& j);

}  // namespace heatlab
