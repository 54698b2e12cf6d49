#include "hdeu/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hdeu/config.hpp"

namespace hdeu {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void dump_rec(std::ostringstream& os, const Json& j, int indent, int depth) {
  const auto pad = [&](int d) {
    if (indent > 0) os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        os << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
        dump_rec(os, it.value(), indent, depth + 1);
      }
      pad(depth);
      os << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      os << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << (flat && indent > 0 ? ", " : ",");
        first = false;
        if (!flat) pad(depth + 1);
        dump_rec(os, v, indent, depth + 1);
      }
      if (!flat) pad(depth);
      os << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_double(x) : std::string("null"));
      return;
    }
    default:
      os << j.dump();
  }
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::string sampling_name(SamplingMode m) { return m == SamplingMode::FULL ? "full" : "sufficient"; }

std::string csv_cell(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::ostringstream os;
  dump_rec(os, j, indent, 0);
  os << '\n';
  return os.str();
}

Json with_schema(const std::string& kind, Json body) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["kind"] = kind;
  for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = it.value();
  return out;
}

Json to_json(const ScenarioConfig& cfg) {
  Json j;
  j["p"] = cfg.p;
  j["c"] = cfg.c;
  j["n"] = cfg.n();
  j["gamma"] = is_gmv(cfg.gamma) ? Json("inf") : Json(cfg.gamma);
  j["condition_index"] = cfg.condition_index;
  j["mean_lo"] = cfg.mean_law.lo;
  j["mean_hi"] = cfg.mean_law.hi;
  j["shift_a"] = cfg.shift_a;
  j["shift_fraction"] = cfg.shift_fraction;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["nominal_level"] = cfg.nominal_level;
  j["k"] = cfg.k;
  j["sigma_scale"] = cfg.sigma_scale;
  j["redraw_model"] = cfg.redraw_model;
  j["sampling"] = sampling_name(cfg.sampling);
  return j;
}

Json to_json(const MCReport& r, bool include_runtime) {
  Json j;
  j["test"] = r.test;
  j["empirical_size"] = number_or_null(r.empirical_size);
  j["mc_standard_error"] = number_or_null(mc_standard_error(r.empirical_size, r.rep_count - r.failures));
  j["rep_count"] = r.rep_count;
  j["failures"] = r.failures;
  j["failure_samples"] = r.failure_samples;
  j["seed"] = r.seed;
  Json pc = Json::array();
  for (const auto& [a, pw] : r.power_curve) pc.push_back(Json{{"a", a}, {"power", number_or_null(pw)}});
  j["power_curve"] = pc;
  Json roc = Json::array();
  for (const auto& [f, t] : r.roc) roc.push_back(Json{{"fpr", f}, {"tpr", t}});
  j["roc"] = roc;
  j["auc"] = number_or_null(r.auc);
  if (!r.null_histogram.counts.empty())
    j["null_histogram"] = Json{{"edges", r.null_histogram.edges},
                               {"counts", r.null_histogram.counts},
                               {"below", r.null_histogram.below},
                               {"above", r.null_histogram.above}};
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

Json to_json(const TestResult& r) {
  Json j;
  j["statistic"] = number_or_null(r.statistic);
  j["distribution"] = to_string(r.dist);
  if (r.dist == RefDist::CHI2) j["df"] = r.df;
  j["p_value"] = number_or_null(r.p_value);
  if (r.noncentrality) j["noncentrality"] = number_or_null(*r.noncentrality);
  return j;
}

Json to_json(const ConfidenceInterval& ci) {
  return Json{{"level", ci.level},
              {"center", number_or_null(ci.center)},
              {"half_width", number_or_null(ci.half_width)},
              {"lower", number_or_null(ci.lower())},
              {"upper", number_or_null(ci.upper())}};
}

Json to_json(const CheckResult& c) {
  Json j;
  j["name"] = c.name;
  j["passed"] = c.passed;
  j["informational"] = c.informational;
  if (!c.note.empty()) j["note"] = c.note;
  Json entries = Json::array();
  for (const auto& e : c.entries)
    entries.push_back(Json{{"label", e.label},
                           {"expected", number_or_null(e.expected)},
                           {"observed", number_or_null(e.observed)},
                           {"abs_error", number_or_null(e.abs_error)},
                           {"rel_error", number_or_null(e.rel_error)},
                           {"allowance", number_or_null(e.allowance)},
                           {"passed", e.passed}});
  j["entries"] = entries;
  return j;
}

Json to_json(const TheoryReport& r, bool include_runtime) {
  Json j;
  j["all_passed"] = r.all_passed();
  j["replications"] = r.replications;
  j["seed"] = r.seed;
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  return j;
}

Json to_json(const ConsistencyReport& r) {
  Json j;
  Json rungs = Json::array();
  for (const auto& g : r.rungs)
    rungs.push_back(Json{{"p", g.rung.p},
                         {"n", g.rung.n},
                         {"sigma_scale", g.rung.sigma_scale},
                         {"alpha_star", g.alpha_star},
                         {"mean_abs_error", number_or_null(g.mean_abs_error)},
                         {"rmse", number_or_null(g.rmse)}});
  j["rungs"] = rungs;
  j["slope"] = number_or_null(r.slope);
  j["improvement_fraction"] = number_or_null(r.improvement_fraction);
  j["failures"] = r.failures;
  return j;
}

Json to_json(const CoverageReport& r) {
  return Json{{"alpha_star", r.alpha_star},
              {"coverage_hat", number_or_null(r.coverage_hat)},
              {"coverage_tilde", number_or_null(r.coverage_tilde)},
              {"coverage_general", number_or_null(r.coverage_general)},
              {"duality_mismatches", r.duality_mismatches},
              {"valid", r.valid},
              {"failures", r.failures}};
}

Json to_json(const RollingResult& r) {
  Json j;
  j["p"] = r.p;
  j["n"] = r.n;
  j["c"] = r.c;
  j["gamma"] = is_gmv(r.gamma) ? Json("inf") : Json(r.gamma);
  j["level"] = r.options.level;
  j["test"] = r.options.test == RollingTest::TILDE ? "t-alpha-tilde" : "t-alpha";
  j["universe_rule"] = r.options.rule == UniverseRule::COMPLETE_COLUMNS ? "complete-columns" : "drop-rows";
  j["tickers"] = r.tickers;
  j["excluded_tickers"] = r.excluded_tickers;
  Json recs = Json::array();
  for (const auto& w : r.records)
    recs.push_back(Json{{"window_end", w.window_end},
                        {"alpha_hat", number_or_null(w.alpha_hat)},
                        {"ci_lo", number_or_null(w.ci_lo)},
                        {"ci_hi", number_or_null(w.ci_hi)},
                        {"reject", w.reject},
                        {"statistic", number_or_null(w.statistic)},
                        {"p_value", number_or_null(w.p_value)},
                        {"r_gmv_hat", w.r_gmv_hat},
                        {"r_b_hat", w.r_b_hat},
                        {"v_c_hat", w.v_c_hat},
                        {"v_b_hat", w.v_b_hat}});
  j["records"] = recs;
  Json bad = Json::array();
  for (const auto& w : r.invalid) bad.push_back(Json{{"window_end", w.window_end}, {"message", w.message}});
  j["invalid_windows"] = bad;
  return j;
}

void write_size_csv(std::ostream& out, const std::vector<MCReport>& reports) {
  out << "schema_version,test,empirical_size,mc_standard_error,rep_count,failures\n";
  for (const auto& r : reports)
    out << kSchemaVersion << ',' << r.test << ',' << csv_cell(r.empirical_size) << ','
        << csv_cell(mc_standard_error(r.empirical_size, r.rep_count - r.failures)) << ','
        << r.rep_count << ',' << r.failures << '\n';
}

void write_histogram_csv(std::ostream& out, const std::vector<MCReport>& reports) {
  out << "schema_version,test,bin_lo,bin_hi,count\n";
  for (const auto& r : reports) {
    const auto& h = r.null_histogram;
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      out << kSchemaVersion << ',' << r.test << ',' << format_double(h.edges[b]) << ','
          << format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
}

void write_power_csv(std::ostream& out, const std::vector<MCReport>& reports) {
  out << "schema_version,test,kappa,a,power\n";
  for (const auto& r : reports)
    for (const auto& [a, pw] : r.power_curve)
      out << kSchemaVersion << ',' << r.test << ',' << format_double(std::round(a * 1e6) / 1e4) << ','
          << format_double(a) << ',' << csv_cell(pw) << '\n';
}

void write_roc_csv(std::ostream& out, const std::vector<MCReport>& reports) {
  out << "schema_version,test,fpr,tpr\n";
  for (const auto& r : reports)
    for (const auto& [f, t] : r.roc)
      out << kSchemaVersion << ',' << r.test << ',' << format_double(f) << ',' << format_double(t) << '\n';
}

void write_rolling_csv(std::ostream& out, const RollingResult& r) {
  out << "schema_version,window_end,alpha_hat,ci_lo,ci_hi,reject,r_gmv_hat,r_b_hat,v_c_hat,v_b_hat\n";
  for (const auto& w : r.records)
    out << kSchemaVersion << ',' << w.window_end << ',' << csv_cell(w.alpha_hat) << ','
        << csv_cell(w.ci_lo) << ',' << csv_cell(w.ci_hi) << ',' << (w.reject ? 1 : 0) << ','
        << csv_cell(w.r_gmv_hat) << ',' << csv_cell(w.r_b_hat) << ',' << csv_cell(w.v_c_hat) << ','
        << csv_cell(w.v_b_hat) << '\n';
}

void write_theory_csv(std::ostream& out, const TheoryReport& r) {
  out << "schema_version,check,label,expected,observed,abs_error,rel_error,allowance,passed\n";
  for (const auto& c : r.checks)
    for (const auto& e : c.entries)
      out << kSchemaVersion << ',' << c.name << ',' << e.label << ',' << csv_cell(e.expected) << ','
          << csv_cell(e.observed) << ',' << csv_cell(e.abs_error) << ',' << csv_cell(e.rel_error)
          << ',' << csv_cell(e.allowance) << ',' << (e.passed ? 1 : 0) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace hdeu
