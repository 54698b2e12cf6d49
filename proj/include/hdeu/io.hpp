#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "hdeu/hdtest.hpp"
#include "hdeu/ingest.hpp"
#include "hdeu/montecarlo.hpp"

namespace hdeu {

using Json = nlohmann::ordered_json;

/// %.17g; NaN and infinities as "nan", "inf", "-inf".
std::string format_double(double x);

/// JSON text with every floating value printed to 17 significant digits.
/// Non-finite numbers become null.
std::string dump_json(const Json& j, int indent = 2);

Json to_json(const ScenarioConfig& cfg);
Json to_json(const MCReport& r, bool include_runtime = false);
Json to_json(const TestResult& r);
Json to_json(const ConfidenceInterval& ci);
Json to_json(const CheckResult& c);
Json to_json(const TheoryReport& r, bool include_runtime = false);
Json to_json(const ConsistencyReport& r);
Json to_json(const CoverageReport& r);
Json to_json(const RollingResult& r);

/// Adds schema_version and kind at the top of an object.
Json with_schema(const std::string& kind, Json body);

/// Flat tables with a leading schema_version column.
void write_power_csv(std::ostream& out, const std::vector<MCReport>& reports);
void write_roc_csv(std::ostream& out, const std::vector<MCReport>& reports);
void write_size_csv(std::ostream& out, const std::vector<MCReport>& reports);
void write_histogram_csv(std::ostream& out, const std::vector<MCReport>& reports);
void write_rolling_csv(std::ostream& out, const RollingResult& r);
void write_theory_csv(std::ostream& out, const TheoryReport& r);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace hdeu
