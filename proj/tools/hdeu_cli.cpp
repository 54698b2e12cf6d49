// hdeu: command-line front end.
//
// Exit codes: 0 success, 1 analysis failure, 2 usage or validation error.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hdeu/config.hpp"
#include "hdeu/errors.hpp"
#include "hdeu/hdtest.hpp"
#include "hdeu/ingest.hpp"
#include "hdeu/io.hpp"
#include "hdeu/montecarlo.hpp"

using namespace hdeu;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;
constexpr int kExitUsage = 2;

double parse_gamma(const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "gmv") return kGmvGamma;
  std::size_t used = 0;
  double g = 0.0;
  try {
    g = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(g > 0.0))
    throw std::invalid_argument("gamma must be a positive number or 'inf', got '" + s + "'");
  return g;
}

struct ScenarioArgs {
  Index p = 100;
  double c = 0.3;
  std::string gamma = "5";
  Index reps = 5000;
  std::uint64_t seed = 1;
  double condition_index = 450.0;
  double mean_lo = -0.2;
  double mean_hi = 0.2;
  double level = 0.05;
  double shift_fraction = 0.5;
  double sigma_scale = 1.0;
  bool redraw = false;
  std::string sampling = "sufficient";

  ScenarioConfig resolve(unsigned workers) const {
    ScenarioConfig cfg;
    cfg.p = p;
    cfg.c = c;
    cfg.gamma = parse_gamma(gamma);
    cfg.replications = reps;
    cfg.seed = seed;
    cfg.condition_index = condition_index;
    cfg.mean_law = MeanLaw{mean_lo, mean_hi};
    cfg.nominal_level = level;
    cfg.shift_fraction = shift_fraction;
    cfg.sigma_scale = sigma_scale;
    cfg.redraw_model = redraw;
    cfg.sampling = sampling == "full" ? SamplingMode::FULL : SamplingMode::SUFFICIENT;
    cfg.workers = workers;
    cfg.validate();
    return cfg;
  }
};

struct Common {
  std::string out;
  std::string format = "both";
  unsigned workers = 0;
  int verbose = 0;

  bool json() const { return format != "csv"; }
  bool csv() const { return format != "json"; }
};

void add_common(CLI::App* sub, Common& c, const std::string& default_out) {
  c.out = default_out;
  sub->add_option("--out,-o", c.out, "Output path prefix")->capture_default_str();
  sub->add_option("--format", c.format, "json, csv or both")
      ->check(CLI::IsMember({"json", "csv", "both"}))
      ->capture_default_str();
  sub->add_option("--workers,-j", c.workers, "Worker threads (0: all cores)")
      ->envname("HDEU_WORKERS")
      ->capture_default_str();
  sub->add_flag("--verbose,-v", c.verbose, "Progress on stderr");
}

void add_scenario(CLI::App* sub, ScenarioArgs& s) {
  sub->add_option("--p", s.p, "Number of assets")->capture_default_str();
  sub->add_option("--c", s.c, "Concentration ratio p/n")->capture_default_str();
  sub->add_option("--gamma", s.gamma, "Risk aversion, or 'inf' for GMV")->capture_default_str();
  sub->add_option("--reps", s.reps, "Monte Carlo replications")->capture_default_str();
  sub->add_option("--seed", s.seed, "Base seed")->capture_default_str();
  sub->add_option("--condition-index", s.condition_index, "Largest over smallest eigenvalue")
      ->capture_default_str();
  sub->add_option("--mean-lo", s.mean_lo, "Lower bound of the uniform mean law")->capture_default_str();
  sub->add_option("--mean-hi", s.mean_hi, "Upper bound of the uniform mean law")->capture_default_str();
  sub->add_option("--level", s.level, "Nominal significance level")->capture_default_str();
  sub->add_option("--shift-fraction", s.shift_fraction, "Fraction of means shifted under H1")
      ->capture_default_str();
  sub->add_option("--sigma-scale", s.sigma_scale, "Multiplier on the generated covariance")
      ->capture_default_str();
  sub->add_flag("--redraw-model", s.redraw, "Draw a new (mu, Sigma) per replication");
  sub->add_option("--sampling", s.sampling, "sufficient or full")
      ->check(CLI::IsMember({"sufficient", "full"}))
      ->capture_default_str();
}

std::vector<TestSpec> make_specs(const std::vector<std::string>& tests, const std::vector<Index>& ks) {
  std::vector<TestSpec> specs;
  for (const auto& t : tests) {
    const TestId id = parse_test_id(t);
    if (id == TestId::T_L || id == TestId::T_LC) {
      for (Index k : ks) specs.push_back(TestSpec{id, k});
    } else {
      specs.push_back(TestSpec{id, 0});
    }
  }
  return specs;
}

class Run {
 public:
  Run(std::string subcommand, const Common& common, const CLI::App* app, std::vector<std::string> argv)
      : sub_(std::move(subcommand)), common_(common), app_(app), argv_(std::move(argv)),
        t0_(std::chrono::steady_clock::now()) {}

  void write(const std::string& suffix, const std::string& text) {
    const std::string path = common_.out + suffix;
    write_text_file(path, text);
    outputs_.push_back(path);
    if (common_.verbose) std::cerr << "wrote " << path << '\n';
  }

  void write_json(const std::string& kind, const Json& body) {
    if (common_.json()) write(".json", dump_json(with_schema(kind, body)));
  }

  template <class F>
  void write_csv(const std::string& suffix, F&& fill) {
    if (!common_.csv()) return;
    std::ostringstream os;
    fill(os);
    write(suffix, os.str());
  }

  void set_scenario(const ScenarioConfig& cfg) { scenario_ = to_json(cfg); seed_ = cfg.seed; }

  int finish(int code) {
    try {
      write_manifest(code);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return code == kExitOk ? kExitAnalysis : code;
    }
    return code;
  }

 private:
  void write_manifest(int code) {
    Json m;
    m["tool"] = "hdeu";
    m["version"] = kVersion;
    m["subcommand"] = sub_;
    m["argv"] = argv_;
    m["resolved_config"] = app_->config_to_str(true, false);
    if (!scenario_.is_null()) m["scenario"] = scenario_;
    if (seed_) m["seed"] = *seed_;
    m["workers"] = resolve_workers(common_.workers);
    m["outputs"] = outputs_;
    m["exit_code"] = code;
    m["runtime_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    write_text_file(common_.out + ".manifest.json", dump_json(with_schema("manifest", m)));
  }

  std::string sub_;
  const Common& common_;
  const CLI::App* app_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::string> outputs_;
  Json scenario_;
  std::optional<std::uint64_t> seed_;
};

// Weights: one number per line, or "ticker,weight" lines (optional header).
// Ticker-labelled files are aligned with `tickers`.
Vec load_weights(const std::string& path, const std::vector<std::string>& tickers) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open weight file '" + path + "'");
  std::vector<double> plain;
  std::map<std::string, double> named;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    const std::string num = comma == std::string::npos ? line : line.substr(comma + 1);
    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) {
      if (row == 1 && comma != std::string::npos) continue;  // header
      throw std::invalid_argument("weight file line " + std::to_string(row) + ": not a number");
    }
    if (comma == std::string::npos) plain.push_back(v);
    else named[line.substr(0, comma)] = v;
  }
  if (!plain.empty() && !named.empty())
    throw std::invalid_argument("weight file mixes labelled and unlabelled lines");
  Vec w(static_cast<Index>(tickers.size()));
  if (!named.empty()) {
    if (named.size() != tickers.size())
      throw std::invalid_argument("weight file has " + std::to_string(named.size()) +
                                  " tickers, data has " + std::to_string(tickers.size()));
    for (std::size_t j = 0; j < tickers.size(); ++j) {
      const auto it = named.find(tickers[j]);
      if (it == named.end()) throw std::invalid_argument("no weight for ticker " + tickers[j]);
      w(static_cast<Index>(j)) = it->second;
    }
  } else {
    if (plain.size() != tickers.size())
      throw std::invalid_argument("weight file has " + std::to_string(plain.size()) +
                                  " entries, data has " + std::to_string(tickers.size()) + " assets");
    for (std::size_t j = 0; j < plain.size(); ++j) w(static_cast<Index>(j)) = plain[j];
  }
  return w;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tests and Monte Carlo studies for high-dimensional expected-utility portfolios"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "TOML/INI file; command-line flags take precedence");
  app.require_subcommand(1);
  std::vector<std::string> raw_args(argv, argv + argc);

  // simulate-size
  auto* size_cmd = app.add_subcommand("simulate-size", "Empirical size under H0");
  Common size_common;
  ScenarioArgs size_sc;
  std::vector<std::string> size_tests;
  std::vector<Index> size_k{10};
  add_common(size_cmd, size_common, "simulate-size");
  add_scenario(size_cmd, size_sc);
  size_cmd->add_option("--test", size_tests, "t-alpha, t-alpha-tilde, t-l, t-lc (repeatable)")->required();
  size_cmd->add_option("--k", size_k, "Restriction counts for t-l and t-lc")->capture_default_str();

  // simulate-power
  auto* power_cmd = app.add_subcommand("simulate-power", "Power over a kappa grid, a = 0.01 kappa");
  Common power_common;
  ScenarioArgs power_sc;
  std::vector<std::string> power_tests;
  std::vector<Index> power_k{10};
  std::vector<double> kappa{0, 5, 10, 15, 20, 25, 30, 35};
  add_common(power_cmd, power_common, "simulate-power");
  add_scenario(power_cmd, power_sc);
  power_cmd->add_option("--test", power_tests, "Tests (repeatable)")->required();
  power_cmd->add_option("--k", power_k, "Restriction counts for t-l and t-lc")->capture_default_str();
  power_cmd->add_option("--kappa", kappa, "Shift grid")->capture_default_str();

  // simulate-roc
  auto* roc_cmd = app.add_subcommand("simulate-roc", "ROC from paired H0/H1 simulations");
  Common roc_common;
  ScenarioArgs roc_sc;
  std::vector<std::string> roc_tests;
  std::vector<Index> roc_k{10};
  double roc_a = 0.08;
  add_common(roc_cmd, roc_common, "simulate-roc");
  add_scenario(roc_cmd, roc_sc);
  roc_cmd->add_option("--test", roc_tests, "Tests (repeatable)")->required();
  roc_cmd->add_option("--k", roc_k, "Restriction counts for t-l and t-lc")->capture_default_str();
  roc_cmd->add_option("--a", roc_a, "Mean shift under H1")->capture_default_str();

  // verify-theory
  auto* vt_cmd = app.add_subcommand("verify-theory", "Monte Carlo and algebraic checks of the asymptotics");
  Common vt_common;
  ScenarioArgs vt_sc;
  vt_sc.reps = 10000;
  TheoryOptions vt_opt;
  bool vt_studies = false;
  add_common(vt_cmd, vt_common, "verify-theory");
  add_scenario(vt_cmd, vt_sc);
  vt_cmd->add_option("--tolerance", vt_opt.tolerance_scale, "Scale on every allowance (0: exact)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  vt_cmd->add_option("--rel-tol", vt_opt.rel_tol, "Relative allowance for covariance entries")
      ->capture_default_str();
  vt_cmd->add_option("--se-multiplier", vt_opt.se_multiplier, "Standard-error allowance")
      ->capture_default_str();
  vt_cmd->add_option("--ks-level", vt_opt.ks_level, "KS significance level")->capture_default_str();
  vt_cmd->add_flag("--with-studies", vt_studies, "Also run the consistency and CI-coverage studies");

  // test
  auto* test_cmd = app.add_subcommand("test", "Test H0 on a return file");
  Common test_common;
  std::string test_data, test_w0, test_gamma = "5", test_id = "t-alpha-tilde";
  double test_level = 0.95;
  Index test_k = 10;
  add_common(test_cmd, test_common, "test");
  test_cmd->add_option("--data", test_data, "Wide return CSV (date,TICKER,...)")->required();
  test_cmd->add_option("--w0", test_w0, "Hypothesised EU weights")->required();
  test_cmd->add_option("--gamma", test_gamma, "Risk aversion, or 'inf'")->capture_default_str();
  test_cmd->add_option("--test", test_id, "t-alpha, t-alpha-tilde, t-l, t-lc")->capture_default_str();
  test_cmd->add_option("--level", test_level, "Confidence level; the test runs at 1 - level")
      ->capture_default_str();
  test_cmd->add_option("--k", test_k, "Restrictions for t-l and t-lc")->capture_default_str();

  // analyze
  auto* an_cmd = app.add_subcommand("analyze", "Rolling-window shrinkage analysis");
  Common an_common;
  std::string an_returns, an_gamma = "5", an_target = "equal", an_test = "t-alpha-tilde",
                          an_rule = "complete-columns";
  Index an_p = 0;
  double an_c = 0.0, an_level = 0.95;
  add_common(an_cmd, an_common, "analyze");
  an_cmd->add_option("--returns", an_returns, "Wide return CSV")->required();
  an_cmd->add_option("--p", an_p, "Assets, first p tickers in alphabetical order")->required();
  an_cmd->add_option("--c", an_c, "Concentration ratio; n = round(p / c)")->required();
  an_cmd->add_option("--gamma", an_gamma, "Risk aversion, or 'inf'")->capture_default_str();
  an_cmd->add_option("--target", an_target, "'equal' or a weight file")->capture_default_str();
  an_cmd->add_option("--level", an_level, "Confidence level")->capture_default_str();
  an_cmd->add_option("--test", an_test, "t-alpha-tilde or t-alpha")
      ->check(CLI::IsMember({"t-alpha-tilde", "t-alpha"}))
      ->capture_default_str();
  an_cmd->add_option("--rule", an_rule, "complete-columns or drop-rows")
      ->check(CLI::IsMember({"complete-columns", "drop-rows"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  const Common* active = nullptr;
  const std::pair<CLI::App*, const Common*> commands[] = {
      {size_cmd, &size_common}, {power_cmd, &power_common}, {roc_cmd, &roc_common},
      {vt_cmd, &vt_common},     {test_cmd, &test_common},   {an_cmd, &an_common}};
  for (const auto& [cmd, com] : commands)
    if (*cmd) active = com;
  const std::string name = app.get_subcommands().front()->get_name();
  Run run(name, *active, &app, raw_args);

  try {
    if (*size_cmd) {
      const ScenarioConfig cfg = size_sc.resolve(size_common.workers);
      run.set_scenario(cfg);
      const auto reports = empirical_size_batch(make_specs(size_tests, size_k), cfg);
      Json arr = Json::array();
      for (const auto& r : reports) {
        arr.push_back(to_json(r));
        std::cout << r.test << " empirical_size=" << format_double(r.empirical_size)
                  << " failures=" << r.failures << '\n';
      }
      run.write_json("size", Json{{"config", to_json(cfg)}, {"reports", arr}});
      run.write_csv(".csv", [&](std::ostream& os) { write_size_csv(os, reports); });
      run.write_csv(".hist.csv", [&](std::ostream& os) { write_histogram_csv(os, reports); });
      return run.finish(kExitOk);
    }
    if (*power_cmd) {
      const ScenarioConfig cfg = power_sc.resolve(power_common.workers);
      run.set_scenario(cfg);
      const auto reports = power_curve_batch(make_specs(power_tests, power_k), cfg, kappa);
      Json arr = Json::array();
      for (const auto& r : reports) arr.push_back(to_json(r));
      run.write_json("power", Json{{"config", to_json(cfg)}, {"kappa", kappa}, {"reports", arr}});
      run.write_csv(".csv", [&](std::ostream& os) { write_power_csv(os, reports); });
      for (const auto& r : reports) {
        std::cout << r.test;
        for (const auto& [a, pw] : r.power_curve) std::cout << ' ' << format_double(pw);
        std::cout << '\n';
      }
      return run.finish(kExitOk);
    }
    if (*roc_cmd) {
      ScenarioConfig cfg = roc_sc.resolve(roc_common.workers);
      cfg.shift_a = roc_a;
      run.set_scenario(cfg);
      const auto reports = roc_curve_batch(make_specs(roc_tests, roc_k), cfg);
      Json arr = Json::array();
      for (const auto& r : reports) {
        arr.push_back(to_json(r));
        std::cout << r.test << " auc=" << format_double(r.auc) << '\n';
      }
      run.write_json("roc", Json{{"config", to_json(cfg)}, {"reports", arr}});
      run.write_csv(".csv", [&](std::ostream& os) { write_roc_csv(os, reports); });
      return run.finish(kExitOk);
    }
    if (*vt_cmd) {
      const ScenarioConfig cfg = vt_sc.resolve(vt_common.workers);
      run.set_scenario(cfg);
      const TheoryReport rep = verify_theory(cfg, vt_opt);
      Json body{{"config", to_json(cfg)}, {"report", to_json(rep)}};
      bool ok = rep.all_passed();
      for (const auto& c : rep.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.informational ? " (informational)" : "")
                  << '\n';
      if (vt_studies) {
        const ConsistencyReport cons = consistency_study(
            cfg, {Rung{cfg.p, 2 * cfg.p, 1.0}, Rung{cfg.p, 4 * cfg.p, 1.0}});
        const CoverageReport cov = ci_coverage(cfg, 0.95);
        body["consistency"] = to_json(cons);
        body["coverage"] = to_json(cov);
        ok = ok && cov.duality_mismatches == 0;
        std::cout << "consistency improvement_fraction=" << format_double(cons.improvement_fraction)
                  << " coverage_general=" << format_double(cov.coverage_general) << '\n';
      }
      run.write_json("theory", body);
      run.write_csv(".csv", [&](std::ostream& os) { write_theory_csv(os, rep); });
      return run.finish(ok ? kExitOk : kExitAnalysis);
    }
    if (*test_cmd) {
      const double gamma = parse_gamma(test_gamma);
      const TestId id = parse_test_id(test_id);
      if (!(test_level > 0.0 && test_level < 1.0)) throw std::invalid_argument("--level must lie in (0, 1)");
      const ReturnDataset data = load_returns(test_data);
      if (!data.missing.empty())
        throw Error("return file has " + std::to_string(data.missing.size()) + " missing cells (first: " +
                    data.missing.front().ticker + " on " + data.missing.front().date + ")");
      const PortfolioWeights w0 = make_weights(load_weights(test_w0, data.tickers));
      const SampleFit fit = fit_sample(sample_moments(data.returns.transpose()));
      Json body{{"test", test_id},
                {"p", fit.moments.p},
                {"n", fit.moments.n},
                {"c_n", fit.moments.c_n},
                {"gamma", is_gmv(gamma) ? Json("inf") : Json(gamma)},
                {"level", test_level}};
      TestResult tr;
      if (id == TestId::T_L || id == TestId::T_LC) {
        const Index p = fit.moments.p;
        const LinearHypothesis h = make_hypothesis(leading_selector(test_k, p), w0.w.head(test_k));
        tr = id == TestId::T_L ? test_mahalanobis(fit, h, gamma) : test_mahalanobis_hd(fit, h, gamma);
        body["k"] = test_k;
        body["ci"] = nullptr;
      } else {
        const ShrinkageAnalysis an = analyze_shrinkage(fit, w0, gamma);
        const bool tilde = id == TestId::T_ALPHA_TILDE;
        tr = shrinkage_test(an, tilde ? OmegaVariant::TILDE : OmegaVariant::HAT);
        body["alpha_hat"] = an.decomp.alpha;
        body["ci"] = to_json(shrinkage_ci(an, test_level, tilde ? CiVariant::TILDE : CiVariant::HAT));
      }
      body["result"] = to_json(tr);
      body["reject"] = tr.reject_at(1.0 - test_level);
      std::cout << test_id << " statistic=" << format_double(tr.statistic)
                << " p_value=" << format_double(tr.p_value) << " reject=" << (tr.reject_at(1.0 - test_level) ? 1 : 0)
                << '\n';
      // One record; written as JSON whatever --format says.
      run.write(".json", dump_json(with_schema("test", body)));
      return run.finish(kExitOk);
    }
    if (*an_cmd) {
      const double gamma = parse_gamma(an_gamma);
      const ReturnDataset data = load_returns(an_returns);
      RollingOptions opt;
      opt.level = an_level;
      opt.test = an_test == "t-alpha" ? RollingTest::HAT : RollingTest::TILDE;
      opt.rule = an_rule == "drop-rows" ? UniverseRule::DROP_ROWS : UniverseRule::COMPLETE_COLUMNS;
      opt.workers = an_common.workers;
      std::optional<PortfolioWeights> target;
      if (an_target != "equal") {
        const UniverseSelection sel = select_universe(data, an_p, opt.rule);
        target = make_weights(load_weights(an_target, sel.data.tickers));
      }
      const RollingResult res = rolling_analysis(data, an_p, an_c, gamma, target, opt);
      run.write_json("rolling", to_json(res));
      run.write_csv(".csv", [&](std::ostream& os) { write_rolling_csv(os, res); });
      std::cout << "windows=" << res.records.size() << " invalid=" << res.invalid.size() << '\n';
      return run.finish(kExitOk);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return run.finish(kExitUsage);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return run.finish(kExitAnalysis);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return run.finish(kExitAnalysis);
  }
  return kExitUsage;
}
