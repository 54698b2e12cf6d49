#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "hdeu/config.hpp"
#include "hdeu/io.hpp"

using namespace hdeu;

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  for (double x : {1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.049999999999999996})
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
}

TEST(DumpJson, FloatsAndNonFinite) {
  Json j;
  j["a"] = 0.1;
  j["b"] = std::nan("");
  j["c"] = Json::array({1.0 / 3.0, 2});
  j["d"] = "text";
  const std::string s = dump_json(j);
  EXPECT_NE(s.find("\"a\": 0.10000000000000001"), std::string::npos);
  EXPECT_NE(s.find("\"b\": null"), std::string::npos);
  EXPECT_NE(s.find("[0.33333333333333331, 2]"), std::string::npos);
  const Json back = Json::parse(s);
  EXPECT_EQ(back["c"][0].get<double>(), 1.0 / 3.0);
  EXPECT_TRUE(back["b"].is_null());
  EXPECT_EQ(back["d"], "text");
}

TEST(Schema, VersionAndKindLead) {
  const Json j = with_schema("size", Json{{"x", 1}});
  auto it = j.begin();
  EXPECT_EQ(it.key(), "schema_version");
  EXPECT_EQ(it.value(), kSchemaVersion);
  ++it;
  EXPECT_EQ(it.key(), "kind");
  EXPECT_EQ(j["x"], 1);
}

TEST(Serialize, ScenarioAndResults) {
  ScenarioConfig cfg;
  cfg.gamma = kGmvGamma;
  const Json c = to_json(cfg);
  EXPECT_EQ(c["gamma"], "inf");
  EXPECT_EQ(c["n"], cfg.n());

  TestResult t = make_result(3.0, RefDist::CHI2, 2);
  Json tj = to_json(t);
  EXPECT_EQ(tj["distribution"], "chi2");
  EXPECT_EQ(tj["df"], 2);
  EXPECT_FALSE(tj.contains("noncentrality"));
  t.noncentrality = 1.5;
  EXPECT_EQ(to_json(t)["noncentrality"], 1.5);
  EXPECT_FALSE(to_json(make_result(1.0, RefDist::NORMAL)).contains("df"));

  ConfidenceInterval ci;
  ci.center = 0.5;
  ci.half_width = 0.25;
  const Json cj = to_json(ci);
  EXPECT_EQ(cj["lower"], 0.25);
  EXPECT_EQ(cj["upper"], 0.75);
}

TEST(Csv, SchemaColumnFirst) {
  MCReport r;
  r.test = "t-alpha";
  r.empirical_size = 0.05;
  r.rep_count = 100;
  r.power_curve = {{0.0, 0.05}, {0.05, 0.4}};
  r.roc = {{0.0, 0.0}, {0.5, 0.8}, {1.0, 1.0}};
  r.null_histogram.edges = {0.0, 1.0, 2.0};
  r.null_histogram.counts = {3, 4};

  std::ostringstream size, power, roc, hist;
  write_size_csv(size, {r});
  write_power_csv(power, {r});
  write_roc_csv(roc, {r});
  write_histogram_csv(hist, {r});
  for (const auto* s : {&size, &power, &roc, &hist}) {
    const std::string text = s->str();
    EXPECT_EQ(text.rfind("schema_version,", 0), 0u) << text;
    std::istringstream lines(text);
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    EXPECT_EQ(first.rfind(std::to_string(kSchemaVersion) + ",", 0), 0u) << text;
  }
  std::istringstream lines(power.str());
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_NE(power.str().find(",5,0.050000000000000003,"), std::string::npos) << power.str();
}

TEST(Json, MCReportRuntimeOptional) {
  MCReport r;
  r.test = "t-l[k=3]";
  r.runtime_seconds = 1.25;
  EXPECT_FALSE(to_json(r).contains("runtime_seconds"));
  EXPECT_EQ(to_json(r, true)["runtime_seconds"], 1.25);
}
