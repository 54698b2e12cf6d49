#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hdeu/config.hpp"
#include "hdeu/errors.hpp"
#include "hdeu/hdtest.hpp"
#include "hdeu/ingest.hpp"
#include "hdeu/io.hpp"
#include "hdeu/montecarlo.hpp"

namespace py = pybind11;
using namespace hdeu;

namespace {

// Structured results cross the boundary as JSON text; the Python package
// decodes them into dicts.
std::string dumps(const Json& j) { return dump_json(j); }

std::vector<TestSpec> specs_from(const std::vector<std::string>& tests, const std::vector<Index>& ks) {
  std::vector<TestSpec> out;
  for (const auto& t : tests) {
    const TestId id = parse_test_id(t);
    if (id == TestId::T_L || id == TestId::T_LC) {
      for (Index k : ks) out.push_back({id, k});
    } else {
      out.push_back({id, 0});
    }
  }
  return out;
}

Json reports_json(const std::vector<MCReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(to_json(r, true));
  return arr;
}

SampleFit fit_columns(const Mat& x) { return fit_sample(sample_moments(x)); }

OmegaVariant omega_variant(const std::string& v) {
  if (v == "hat") return OmegaVariant::HAT;
  if (v == "tilde") return OmegaVariant::TILDE;
  throw std::invalid_argument("variant must be 'hat' or 'tilde'");
}

CiVariant ci_variant(const std::string& v) {
  if (v == "hat") return CiVariant::HAT;
  if (v == "tilde") return CiVariant::TILDE;
  if (v == "general") return CiVariant::GENERAL;
  throw std::invalid_argument("variant must be 'hat', 'tilde' or 'general'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "High-dimensional tests for the expected-utility portfolio";
  m.attr("__version__") = kVersion;
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  py::register_exception<Error>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("p", &ScenarioConfig::p)
      .def_readwrite("c", &ScenarioConfig::c)
      .def_readwrite("gamma", &ScenarioConfig::gamma)
      .def_readwrite("condition_index", &ScenarioConfig::condition_index)
      .def_property(
          "mean_bounds", [](const ScenarioConfig& c) { return std::make_pair(c.mean_law.lo, c.mean_law.hi); },
          [](ScenarioConfig& c, std::pair<double, double> b) { c.mean_law = {b.first, b.second}; })
      .def_readwrite("shift_a", &ScenarioConfig::shift_a)
      .def_readwrite("shift_fraction", &ScenarioConfig::shift_fraction)
      .def_readwrite("replications", &ScenarioConfig::replications)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("nominal_level", &ScenarioConfig::nominal_level)
      .def_readwrite("sigma_scale", &ScenarioConfig::sigma_scale)
      .def_readwrite("redraw_model", &ScenarioConfig::redraw_model)
      .def_readwrite("workers", &ScenarioConfig::workers)
      .def_property_readonly("n", &ScenarioConfig::n)
      .def("to_json", [](const ScenarioConfig& c) { return dumps(to_json(c)); });

  m.def(
      "sample_moments",
      [](const Mat& x) {
        const auto mom = sample_moments(x);
        return py::make_tuple(Vec(mom.mean), Mat(mom.cov), mom.n);
      },
      py::arg("x"), "Mean and unbiased covariance of a p x n return matrix (columns are periods).");

  m.def(
      "eu_weights", [](const Vec& mu, const Mat& sigma, double gamma) {
        return Vec(eu_weights(ModelParams{mu, sigma, gamma}).w);
      },
      py::arg("mu"), py::arg("sigma"), py::arg("gamma"));
  m.def(
      "gmv_weights", [](const Mat& sigma) { return Vec(gmv_weights(precision_bundle(sigma)).w); },
      py::arg("sigma"));
  m.def(
      "plugin_eu_weights", [](const Mat& x, double gamma) { return Vec(plugin_eu_weights(fit_columns(x), gamma).w); },
      py::arg("x"), py::arg("gamma"));
  m.def(
      "shrinkage_intensity",
      [](const Mat& x, const Vec& b, double gamma) {
        const SampleFit f = fit_columns(x);
        return estimated_intensity(estimated_stats(f, make_weights(b)), gamma, f.moments.c_n).alpha;
      },
      py::arg("x"), py::arg("b"), py::arg("gamma"), "Consistent estimate of the shrinkage intensity toward b.");

  m.def(
      "shrinkage_test",
      [](const Mat& x, const Vec& w0, double gamma, const std::string& variant) {
        const auto a = analyze_shrinkage(fit_columns(x), make_weights(w0), gamma);
        return dumps(to_json(shrinkage_test(a, omega_variant(variant))));
      },
      py::arg("x"), py::arg("w0"), py::arg("gamma"), py::arg("variant") = "tilde");
  m.def(
      "shrinkage_ci",
      [](const Mat& x, const Vec& w0, double gamma, double level, const std::string& variant) {
        return dumps(to_json(shrinkage_ci(fit_columns(x), make_weights(w0), gamma, level, ci_variant(variant))));
      },
      py::arg("x"), py::arg("w0"), py::arg("gamma"), py::arg("level") = 0.95, py::arg("variant") = "tilde");
  m.def(
      "mahalanobis_test",
      [](const Mat& x, const Mat& l, const Vec& r, double gamma, bool high_dimensional) {
        const SampleFit f = fit_columns(x);
        const LinearHypothesis h = make_hypothesis(l, r);
        return dumps(to_json(high_dimensional ? test_mahalanobis_hd(f, h, gamma) : test_mahalanobis(f, h, gamma)));
      },
      py::arg("x"), py::arg("l"), py::arg("r"), py::arg("gamma"), py::arg("high_dimensional") = true);

  m.def(
      "empirical_size",
      [](const std::vector<std::string>& tests, const ScenarioConfig& cfg, const std::vector<Index>& k) {
        py::gil_scoped_release release;
        return dumps(reports_json(empirical_size_batch(specs_from(tests, k), cfg)));
      },
      py::arg("tests"), py::arg("config"), py::arg("k") = std::vector<Index>{10});
  m.def(
      "power_curve",
      [](const std::vector<std::string>& tests, const ScenarioConfig& cfg, const std::vector<double>& kappa,
         const std::vector<Index>& k) {
        py::gil_scoped_release release;
        return dumps(reports_json(power_curve_batch(specs_from(tests, k), cfg, kappa)));
      },
      py::arg("tests"), py::arg("config"), py::arg("kappa"), py::arg("k") = std::vector<Index>{10});
  m.def(
      "roc_curve",
      [](const std::vector<std::string>& tests, const ScenarioConfig& cfg, const std::vector<Index>& k) {
        py::gil_scoped_release release;
        return dumps(reports_json(roc_curve_batch(specs_from(tests, k), cfg)));
      },
      py::arg("tests"), py::arg("config"), py::arg("k") = std::vector<Index>{10});
  m.def(
      "verify_theory",
      [](const ScenarioConfig& cfg, double tolerance) {
        TheoryOptions opt;
        opt.tolerance_scale = tolerance;
        py::gil_scoped_release release;
        return dumps(to_json(verify_theory(cfg, opt), true));
      },
      py::arg("config"), py::arg("tolerance") = 1.0);

  m.def(
      "rolling_analysis",
      [](const std::string& path, Index p, double c, double gamma, double level, const std::string& test) {
        RollingOptions opt;
        opt.level = level;
        if (test == "t-alpha") opt.test = RollingTest::HAT;
        else if (test != "t-alpha-tilde") throw std::invalid_argument("test must be t-alpha or t-alpha-tilde");
        const ReturnDataset data = load_returns(path);
        py::gil_scoped_release release;
        return dumps(to_json(rolling_analysis(data, p, c, gamma, std::nullopt, opt)));
      },
      py::arg("path"), py::arg("p"), py::arg("c"), py::arg("gamma") = 5.0, py::arg("level") = 0.95,
      py::arg("test") = "t-alpha-tilde");
}
