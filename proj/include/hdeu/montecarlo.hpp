#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hdeu/hdtest.hpp"
#include "hdeu/portfolio.hpp"
#include "hdeu/rng.hpp"

namespace hdeu {

struct MeanLaw {
  double lo = -0.2;
  double hi = 0.2;
};

/// SUFFICIENT draws (x_bar, Sigma_hat) directly: x_bar ~ N(mu, Sigma/n) and
/// (n-1) Sigma_hat ~ Wishart(n-1, Sigma) through the Bartlett factor. This is
/// the same joint law as computing moments of n Gaussian columns, at O(p^3)
/// instead of O(p^2 n). FULL generates the return matrix.
enum class SamplingMode { SUFFICIENT, FULL };

struct ScenarioConfig {
  Index p = 100;
  double c = 0.3;
  double gamma = 5.0;
  double condition_index = 450.0;
  MeanLaw mean_law;
  double shift_a = 0.0;
  double shift_fraction = 0.5;
  Index replications = 5000;
  std::uint64_t seed = 1;
  double nominal_level = 0.05;
  Index k = 10;                // restrictions for the Mahalanobis tests
  double sigma_scale = 1.0;    // multiplies the generated covariance
  bool redraw_model = false;   // new (mu, Sigma) for every replication
  SamplingMode sampling = SamplingMode::SUFFICIENT;
  unsigned workers = 0;        // 0: HDEU_WORKERS or hardware concurrency

  /// n = round(p / c), nearest integer.
  Index n() const;
  void validate() const;
};

enum class TestId { T_L, T_LC, T_ALPHA, T_ALPHA_TILDE };

std::string to_string(TestId id);
TestId parse_test_id(const std::string& s);

struct TestSpec {
  TestId id = TestId::T_ALPHA;
  Index k = 10;  // used by T_L and T_LC only
};

std::string label(const TestSpec& spec);

/// Worker count from the argument, then HDEU_WORKERS, then the hardware.
unsigned resolve_workers(unsigned requested);

/// Runs body(i) for i in [0, count) on `workers` threads. Each index is
/// processed exactly once; callers write results by index.
void parallel_for(Index count, unsigned workers, const std::function<void(Index)>& body);

/// Eigenvalues 0.1 exp(delta c (i-1)/p) with delta set by the condition
/// index, eigenvectors Haar distributed.
Mat gen_covariance(Index p, double c, double condition_index, Rng& rng);
Eigen::VectorXd covariance_eigenvalues(Index p, double c, double condition_index);
/// Sign-normalized orthogonal factor of a QR decomposition of a Gaussian matrix.
Mat haar_orthogonal(Index p, Rng& rng);

Vec gen_mean(Index p, const MeanLaw& bounds, Rng& rng);

/// p x n matrix of i.i.d. N(mu, Sigma) columns.
Mat sample_returns(const ModelParams& params, Index n, Rng& rng);

/// Sufficient statistics of n Gaussian observations, given the lower
/// Cholesky factor of Sigma.
MomentEstimates sample_moments_direct(const Vec& mu, const Mat& chol_lower, Index n, Rng& rng);

/// First floor(fraction p) entries decreased by a.
Vec shift_scenario(const Vec& mu, double a, double fraction);

/// (mu, Sigma, gamma) drawn from the configured generator.
ModelParams draw_model(const ScenarioConfig& cfg, std::uint64_t index = 0);

/// Fixed-width bins over [lo, hi); values outside are counted separately.
struct Histogram {
  std::vector<double> edges;
  std::vector<Index> counts;
  Index below = 0;
  Index above = 0;
};

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, Index bins);

struct MCReport {
  std::string test;
  double empirical_size = 0.0;
  std::vector<std::pair<double, double>> power_curve;  // (a, power)
  std::vector<std::pair<double, double>> roc;          // (fpr, tpr)
  double auc = 0.0;
  Histogram null_histogram;  // statistics under H0 (size runs only)
  Index rep_count = 0;
  Index failures = 0;  // replications where the statistic could not be computed
  std::vector<std::string> failure_samples;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;
  ScenarioConfig config;
};

/// Per-replication statistics of several tests, computed on shared data.
struct ReplicationTable {
  std::vector<TestSpec> specs;
  Mat statistic;  // reps x tests, NaN on failure
  Mat p_value;    // reps x tests, NaN on failure
  std::vector<std::vector<std::string>> failures;  // per test, first messages
  std::vector<Index> failure_count;
  double runtime_seconds = 0.0;
};

/// Simulates with data mean shift_scenario(mu, a, fraction); the null target
/// is always the EU portfolio of the unshifted model.
ReplicationTable simulate_tests(const ScenarioConfig& cfg, const std::vector<TestSpec>& specs,
                                double a);

MCReport empirical_size(const TestSpec& spec, const ScenarioConfig& cfg);
std::vector<MCReport> empirical_size_batch(const std::vector<TestSpec>& specs,
                                           const ScenarioConfig& cfg);

/// Rejection rates at a = 0.01 kappa.
MCReport power_curve(const TestSpec& spec, const ScenarioConfig& cfg,
                     const std::vector<double>& kappa_grid);
std::vector<MCReport> power_curve_batch(const std::vector<TestSpec>& specs,
                                        const ScenarioConfig& cfg,
                                        const std::vector<double>& kappa_grid);

/// Paired null and alternative (a = cfg.shift_a) simulations; thresholds swept
/// over the pooled scores (|T| for normal tests, T for chi-square tests).
MCReport roc_curve(const TestSpec& spec, const ScenarioConfig& cfg);
std::vector<MCReport> roc_curve_batch(const std::vector<TestSpec>& specs,
                                      const ScenarioConfig& cfg);

/// Step ROC from two score samples, including (0,0) and (1,1), and its area.
std::vector<std::pair<double, double>> roc_points(const std::vector<double>& null_scores,
                                                  const std::vector<double>& alt_scores);
double trapezoid_auc(const std::vector<std::pair<double, double>>& roc);

/// Binomial standard error sqrt(r(1-r)/n).
double mc_standard_error(double rate, Index n);

// ---------------------------------------------------------------------------
// Theory validation

struct CheckEntry {
  std::string label;
  double expected = 0.0;
  double observed = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double allowance = 0.0;
  bool passed = true;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  bool informational = false;  // reported, but does not decide the run
  std::vector<CheckEntry> entries;
  std::string note;
};

struct TheoryReport {
  std::vector<CheckResult> checks;
  Index replications = 0;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;
  bool all_passed() const;
};

struct TheoryOptions {
  double tolerance_scale = 1.0;  // multiplies every allowance; 0 demands exact equality
  double rel_tol = 0.10;
  double se_multiplier = 3.0;
  double variance_rel_tol = 0.15;
  double identity_rel_tol = 1e-6;
  double quadrature_tol = 1e-6;
  double ks_level = 0.01;
  Index identity_configs = 20;
};

/// Covariances of sqrt(n) t and sqrt(n) h against Omega_alpha and Xi,
/// Theorem-2 variance, GMV variance readings, KS normality of T_alpha under
/// the null, plus the algebraic identities (D Xi D', Lambda, MP moments).
TheoryReport verify_theory(const ScenarioConfig& cfg, const TheoryOptions& opt = {});

/// Entrywise comparison of an empirical covariance with its oracle.
CheckResult compare_covariance(const std::string& name, const Mat& samples, const Mat& oracle,
                               double rel_tol, double se_multiplier);

/// sqrt(n)-scaled MC samples collected by verify_theory.
struct TheorySamples {
  Mat t;                          // reps x 5
  Mat h;                          // reps x 5
  Vec alpha_err;                  // sqrt(n)(alpha_hat - alpha*), target b
  Vec gmv_alpha_err;              // same for gamma = infinity
  std::vector<double> t_alpha;    // T_alpha with w0 = true EU weights
  std::vector<double> t_alpha_tilde;
  std::vector<double> pivot;      // sqrt(n)(alpha_hat - 0) B / sqrt(d0' Omega d0) at true Omega
  Index failures = 0;
};

TheorySamples collect_theory_samples(const ScenarioConfig& cfg);

// ---------------------------------------------------------------------------
// Consistency and coverage studies

struct Rung {
  Index p = 100;
  Index n = 200;
  double sigma_scale = 1.0;
};

struct RungResult {
  Rung rung;
  double alpha_star = 0.0;
  double mean_abs_error = 0.0;
  double rmse = 0.0;
  Vec abs_errors;  // per replication
};

struct ConsistencyReport {
  std::vector<RungResult> rungs;
  double slope = 0.0;  // least squares slope of log mean |error| on log n
  /// Fraction of replications with |error| at rung 1 below rung 0.
  double improvement_fraction = 0.0;
  Index failures = 0;
};

/// |alpha_hat_c - alpha*| along a ladder of (p, n). The model for each p
/// is drawn once from cfg (seeded by p); replications are independent across
/// rungs. Target b is the equally weighted portfolio.
ConsistencyReport consistency_study(const ScenarioConfig& cfg, const std::vector<Rung>& rungs);

struct CoverageReport {
  double alpha_star = 0.0;
  double coverage_hat = 0.0;
  double coverage_tilde = 0.0;
  double coverage_general = 0.0;
  Index duality_mismatches = 0;  // across HAT and TILDE, test vs interval
  Index valid = 0;
  Index failures = 0;
};

/// Coverage of alpha*(c_n) for the equally weighted target with data from the
/// configured model (an alternative whenever b differs from w_EU).
CoverageReport ci_coverage(const ScenarioConfig& cfg, double level);

/// Covariance of the four sample quadratic forms of standard normal data
/// against (2/c) Theta o Lambda, for fixed unit vectors with overlapping
/// support.
CheckResult lemma_one_check(Index p, double c, Index reps, std::uint64_t seed, double rel_tol,
                            double se_multiplier, unsigned workers);

}  // namespace hdeu
