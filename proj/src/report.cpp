#include "heatlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "heatlab/error.hpp"

namespace heatlab {

using json = nlohmann::ordered_json;

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double number_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ConfigError("report: expected a number, got " + j.dump());
  return j.get<double>();
}

bool Report::pass() const {
  if (summary.contains("pass")) return summary.at("pass").get<bool>();
  return std::all_of(results.begin(), results.end(), [](const ReportRow& r) { return r.verdict; });
}

void Report::canonicalize() {
  std::stable_sort(results.begin(), results.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.tag, a.point.t, a.point.x, a.point.y, a.point.order) <
           std::tie(b.tag, b.point.t, b.point.x, b.point.y, b.point.order);
  });
}

json summary_of(const VerificationReport& r) {
  json s;
  s["theorem"] = r.theorem;
  s["manifold"] = r.manifold;
  s["backend"] = r.backend;
  s["order"] = r.order;
  json fitted = json::object();
  for (const auto& [k, v] : r.fitted) fitted[k] = number(v);
  s["fitted"] = fitted;
  s["tolerance"] = number(r.tolerance);
  s["max_kernel_error"] = number(r.max_kernel_error);
  std::size_t flagged = 0;
  for (const auto& p : r.points) flagged += p.precision_flag ? 1 : 0;
  s["precision_flags"] = flagged;
  s["points"] = r.points.size();
  s["notes"] = r.notes;
  s["pass"] = r.pass;
  return s;
}

void append(Report& out, const VerificationReport& r, const std::string& prefix) {
  for (const auto& p : r.points) {
    out.results.push_back({prefix + p.tag, p.point, p.statistic, p.bound, p.pass});
  }
}

json to_json(const Report& r) {
  json j;
  j["tool_version"] = r.tool_version;
  j["config"] = r.config;
  json rows = json::array();
  for (const auto& row : r.results) {
    json e;
    e["tag"] = row.tag;
    e["grid_point"] = {{"t", number(row.point.t)},
                       {"x", number(row.point.x)},
                       {"y", number(row.point.y)},
                       {"order", row.point.order}};
    e["statistic"] = number(row.statistic);
    e["bound"] = row.bound ? number(*row.bound) : json(nullptr);
    e["verdict"] = row.verdict ? "pass" : "fail";
    rows.push_back(std::move(e));
  }
  j["results"] = std::move(rows);
  j["summary"] = r.summary;
  return j;
}

Report report_from_json(const json& j) {
  for (const char* key : {"tool_version", "config", "results", "summary"}) {
    if (!j.contains(key)) throw ConfigError(std::string("report: missing field '") + key + "'");
  }
  Report r;
  r.tool_version = j.at("tool_version").get<std::string>();
  r.config = j.at("config");
  r.summary = j.at("summary");
  for (const auto& e : j.at("results")) {
    ReportRow row;
    row.tag = e.at("tag").get<std::string>();
    const auto& g = e.at("grid_point");
    row.point.t = number_from(g.at("t"));
    row.point.x = number_from(g.at("x"));
    row.point.y = number_from(g.at("y"));
    row.point.order = g.at("order").get<int>();
    row.statistic = number_from(e.at("statistic"));
    if (!e.at("bound").is_null()) row.bound = number_from(e.at("bound"));
    const auto verdict = e.at("verdict").get<std::string>();
    if (verdict != "pass" && verdict != "fail") {
      throw ConfigError("report: verdict must be 'pass' or 'fail'");
    }
    row.verdict = verdict == "pass";
    r.results.push_back(std::move(row));
  }
  return r;
}

std::string to_json_string(const Report& r) { return to_json(r).dump(2) + "\n"; }

namespace {

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  return json(v).dump();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << "tag,t,x,y,order,statistic,bound,verdict\n";
  for (const auto& row : r.results) {
    os << csv_field(row.tag) << ',' << csv_number(row.point.t) << ',' << csv_number(row.point.x)
       << ',' << csv_number(row.point.y) << ',' << row.point.order << ','
       << csv_number(row.statistic) << ',' << (row.bound ? csv_number(*row.bound) : "") << ','
       << (row.verdict ? "pass" : "fail") << '\n';
  }
  return os.str();
}

}  // namespace heatlab
