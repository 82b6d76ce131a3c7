#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "heatlab/error.hpp"
#include "heatlab/report.hpp"

using namespace heatlab;
using json = nlohmann::ordered_json;

namespace {

Report sample() {
  Report r;
  r.config = {{"command", "verify-main"}, {"order", 2}};
  r.results.push_back({"b/tag", {0.1, 0.0, 0.5, 2}, 1.5, 2.0, true});
  r.results.push_back({"a/tag", {0.2, 0.0, 0.5, 2}, std::numeric_limits<double>::infinity(),
                       std::nullopt, false});
  r.results.push_back({"a/tag", {0.05, 0.0, 0.25, 2}, -0.25, 0.0, true});
  r.summary = {{"pass", false}, {"fitted", {{"C_2", 0.4}}}};
  return r;
}

}  // namespace

TEST_CASE("canonical ordering is by tag then grid point") {
  Report r = sample();
  r.canonicalize();
  CHECK(r.results[0].tag == "a/tag");
  CHECK(r.results[0].point.t == 0.05);
  CHECK(r.results[1].point.t == 0.2);
  CHECK(r.results[2].tag == "b/tag");
}

TEST_CASE("reports round-trip through JSON with identical verdicts") {
  Report r = sample();
  r.canonicalize();
  const std::string text = to_json_string(r);
  const Report back = report_from_json(json::parse(text));
  REQUIRE(back.results.size() == r.results.size());
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    CHECK(back.results[i].tag == r.results[i].tag);
    CHECK(back.results[i].verdict == r.results[i].verdict);
    CHECK(back.results[i].bound.has_value() == r.results[i].bound.has_value());
  }
  CHECK(std::isnan(back.results[1].statistic));
  CHECK(back.pass() == r.pass());
  CHECK(to_json_string(back) == text);
}

TEST_CASE("pass falls back to row verdicts") {
  Report r = sample();
  r.summary = json::object();
  CHECK_FALSE(r.pass());
  r.results.erase(r.results.begin() + 1);
  CHECK(r.pass());
}

TEST_CASE("malformed reports are rejected") {
  json j = to_json(sample());
  j["results"][0]["verdict"] = "maybe";
  CHECK_THROWS_AS(report_from_json(j), ConfigError);
  json missing = to_json(sample());
  missing.erase("summary");
  CHECK_THROWS_AS(report_from_json(missing), ConfigError);
}

TEST_CASE("csv export") {
  Report r = sample();
  r.results[0].tag = "with,comma";
  const std::string csv = to_csv(r);
  CHECK(csv.rfind("tag,t,x,y,order,statistic,bound,verdict\n", 0) == 0);
  CHECK(csv.find("\"with,comma\",0.1,0.0,0.5,2,1.5,2.0,pass\n") != std::string::npos);
  CHECK(csv.find("a/tag,0.2,0.0,0.5,2,,,fail\n") != std::string::npos);
}

TEST_CASE("verification summaries") {
  VerificationReport v;
  v.theorem = "THM:Main";
  v.manifold = "circle(L=1)";
  v.fitted["C_1"] = 0.4;
  v.points.push_back({"THM:Main/N=1", {0.1, 0.0, 0.3, 1}, 0.2, 0.4, true, 1e-15, false});
  v.points.push_back({"THM:Main/N=1", {0.2, 0.0, 0.3, 1}, 0.3, 0.4, true, 1e-3, true});
  v.pass = true;
  const json s = summary_of(v);
  CHECK(s["fitted"]["C_1"] == 0.4);
  CHECK(s["precision_flags"] == 1);
  CHECK(s["points"] == 2);
  CHECK(s["pass"] == true);
  Report r;
  append(r, v, "suite/");
  CHECK(r.results.size() == 2);
  CHECK(r.results[0].tag == "suite/THM:Main/N=1");
  CHECK(number(std::nan("")).is_null());
  CHECK(std::isnan(number_from(json(nullptr))));
}
