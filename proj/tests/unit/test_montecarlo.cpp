#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>

#include "hdeu/errors.hpp"
#include "hdeu/montecarlo.hpp"
#include "hdeu/rng.hpp"

using namespace hdeu;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.p = 20;
  cfg.c = 0.3;
  cfg.gamma = 5.0;
  cfg.replications = 200;
  cfg.seed = 42;
  cfg.workers = 1;
  return cfg;
}

const std::vector<TestSpec> kAllTests = {
    {TestId::T_ALPHA, 0}, {TestId::T_ALPHA_TILDE, 0}, {TestId::T_L, 3}, {TestId::T_LC, 3}};

bool same_with_nan(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      const double x = a(i, j), y = b(i, j);
      if (std::isnan(x) != std::isnan(y)) return false;
      if (!std::isnan(x) && x != y) return false;
    }
  return true;
}

}  // namespace

TEST(Scenario, SampleSizeAndValidation) {
  ScenarioConfig cfg;
  cfg.p = 100;
  cfg.c = 0.3;
  EXPECT_EQ(cfg.n(), 333);
  cfg.c = 0.8;
  EXPECT_EQ(cfg.n(), 125);
  EXPECT_NO_THROW(cfg.validate());
  cfg.c = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.c = 0.3;
  cfg.gamma = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.gamma = kGmvGamma;
  EXPECT_NO_THROW(cfg.validate());
  cfg.condition_index = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Scenario, TestIdRoundTrip) {
  for (TestId id : {TestId::T_L, TestId::T_LC, TestId::T_ALPHA, TestId::T_ALPHA_TILDE})
    EXPECT_EQ(parse_test_id(to_string(id)), id);
  EXPECT_THROW(parse_test_id("t-beta"), std::invalid_argument);
  EXPECT_EQ(label({TestId::T_L, 10}), "t-l[k=10]");
  EXPECT_EQ(label({TestId::T_ALPHA, 10}), "t-alpha");
}

TEST(Generator, EigenvalueRange) {
  for (double c : {0.3, 0.8}) {
    const Vec lam = covariance_eigenvalues(100, c, 450.0);
    EXPECT_DOUBLE_EQ(lam.minCoeff(), 0.1);
    EXPECT_NEAR(lam.maxCoeff() / lam.minCoeff(), 450.0, 1e-9);
    for (Index i = 1; i < 100; ++i) EXPECT_GT(lam(i), lam(i - 1));
  }
  Rng rng = make_stream(1, StreamDomain::MODEL, 0);
  const Mat sigma = gen_covariance(30, 0.3, 450.0, rng);
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
  EXPECT_NEAR(es.eigenvalues().minCoeff(), 0.1, 1e-10);
  EXPECT_NEAR(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff(), 450.0, 1e-6);
}

TEST(Generator, HaarIsOrthogonal) {
  Rng rng(5);
  for (Index p : {2, 10, 50}) {
    const Mat q = haar_orthogonal(p, rng);
    EXPECT_LE((q.transpose() * q - Mat::Identity(p, p)).norm(), 1e-12);
  }
}

TEST(Generator, HaarFirstEntryIsUnbiased) {
  // Under the Haar law E[Q_00] = 0 and E[Q_00^2] = 1/p.
  Rng rng(7);
  const Index p = 6, reps = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (Index r = 0; r < reps; ++r) {
    const double q = haar_orthogonal(p, rng)(0, 0);
    s1 += q;
    s2 += q * q;
  }
  EXPECT_NEAR(s1 / reps, 0.0, 0.015);
  EXPECT_NEAR(s2 / reps, 1.0 / p, 0.01);
}

TEST(Generator, MeanBoundsAndAverage) {
  Rng rng(3);
  const Vec mu = gen_mean(100000, MeanLaw{-0.2, 0.2}, rng);
  EXPECT_GE(mu.minCoeff(), -0.2);
  EXPECT_LT(mu.maxCoeff(), 0.2);
  EXPECT_NEAR(mu.mean(), 0.0, 0.002);
  EXPECT_THROW(gen_mean(3, MeanLaw{0.2, -0.2}, rng), std::invalid_argument);
}

TEST(Generator, SampleReturnsMoments) {
  ScenarioConfig cfg;
  cfg.p = 5;
  const ModelParams m = draw_model(cfg, 0);
  Rng rng(11);
  const auto mom = sample_moments(sample_returns(m, 100000, rng));
  EXPECT_LE((mom.mean - m.mu).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LE((mom.cov - m.sigma).cwiseAbs().maxCoeff(), 0.03 * m.sigma.cwiseAbs().maxCoeff());
}

TEST(Generator, SufficientAndFullSamplingAgree) {
  // Both routes must give E[Sigma_hat] = Sigma and Var(Sigma_hat_00) = 2 sigma_00^2 / (n - 1).
  Mat sigma(3, 3);
  sigma << 1.0, 0.3, -0.2, 0.3, 2.0, 0.5, -0.2, 0.5, 1.5;
  const Vec mu = Vec::Constant(3, 0.1);
  const Mat chol = sigma.llt().matrixL();
  ModelParams m{mu, sigma, 1.0};
  const Index n = 20, reps = 20000;
  for (int mode = 0; mode < 2; ++mode) {
    Rng rng(100 + mode);
    Mat sum = Mat::Zero(3, 3);
    Vec mean_sum = Vec::Zero(3);
    double s00 = 0.0, s00sq = 0.0;
    for (Index r = 0; r < reps; ++r) {
      const auto mom = mode == 0 ? sample_moments_direct(mu, chol, n, rng)
                                 : sample_moments(sample_returns(m, n, rng));
      sum += mom.cov;
      mean_sum += mom.mean;
      s00 += mom.cov(0, 0);
      s00sq += mom.cov(0, 0) * mom.cov(0, 0);
    }
    const double var00 = s00sq / reps - std::pow(s00 / reps, 2);
    EXPECT_LE((sum / reps - sigma).cwiseAbs().maxCoeff(), 0.03) << mode;
    EXPECT_LE((mean_sum / reps - mu).cwiseAbs().maxCoeff(), 0.01) << mode;
    EXPECT_NEAR(var00, 2.0 / (n - 1), 0.01) << mode;
  }
}

TEST(Generator, ShiftScenario) {
  const Vec mu = Vec::Zero(4);
  const Vec half = shift_scenario(mu, 0.1, 0.5);
  EXPECT_DOUBLE_EQ(half(0), -0.1);
  EXPECT_DOUBLE_EQ(half(1), -0.1);
  EXPECT_EQ(half(2), 0.0);
  EXPECT_EQ(half(3), 0.0);
  EXPECT_EQ(shift_scenario(mu, 0.1, 0.0), mu);
  EXPECT_DOUBLE_EQ(shift_scenario(mu, 0.1, 1.0).sum(), -0.4);
  EXPECT_EQ((shift_scenario(Vec::Zero(5), 1.0, 0.3).array() != 0.0).count(), 1);
  EXPECT_THROW(shift_scenario(mu, 0.1, 1.5), std::invalid_argument);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = make_stream(9, StreamDomain::DATA, 3);
  Rng b = make_stream(9, StreamDomain::DATA, 3);
  Rng c = make_stream(9, StreamDomain::DATA, 4);
  Rng d = make_stream(9, StreamDomain::MODEL, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(ParallelFor, EachIndexOnceAndErrorsPropagate) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](Index i) { hits[static_cast<std::size_t>(i)]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(100, 3,
                            [](Index i) {
                              if (i == 50) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  parallel_for(0, 4, [](Index) { FAIL(); });
}

TEST(ParallelFor, WorkerResolution) {
  EXPECT_EQ(resolve_workers(2), 2u);
  ::setenv("HDEU_WORKERS", "3", 1);
  EXPECT_EQ(resolve_workers(0), 3u);
  ::setenv("HDEU_WORKERS", "junk", 1);
  EXPECT_GE(resolve_workers(0), 1u);
  ::unsetenv("HDEU_WORKERS");
}

TEST(Simulation, DeterministicAndWorkerIndependent) {
  ScenarioConfig cfg = small_config();
  const auto a = simulate_tests(cfg, kAllTests, 0.0);
  const auto b = simulate_tests(cfg, kAllTests, 0.0);
  cfg.workers = 3;
  const auto c = simulate_tests(cfg, kAllTests, 0.0);
  EXPECT_TRUE(same_with_nan(a.statistic, b.statistic));
  EXPECT_TRUE(same_with_nan(a.statistic, c.statistic));
  EXPECT_TRUE(same_with_nan(a.p_value, c.p_value));
  EXPECT_EQ(a.failure_count, c.failure_count);
  cfg.seed = 43;
  EXPECT_FALSE(same_with_nan(a.statistic, simulate_tests(cfg, kAllTests, 0.0).statistic));
}

TEST(Simulation, RedrawModelChangesStatistics) {
  ScenarioConfig cfg = small_config();
  cfg.redraw_model = true;
  const auto a = simulate_tests(cfg, {{TestId::T_ALPHA, 0}}, 0.0);
  const auto b = simulate_tests(small_config(), {{TestId::T_ALPHA, 0}}, 0.0);
  EXPECT_FALSE(same_with_nan(a.statistic, b.statistic));
  EXPECT_TRUE(same_with_nan(a.statistic, simulate_tests(cfg, {{TestId::T_ALPHA, 0}}, 0.0).statistic));
}

TEST(Simulation, InputChecks) {
  ScenarioConfig cfg = small_config();
  EXPECT_THROW(simulate_tests(cfg, {}, 0.0), std::invalid_argument);
  EXPECT_THROW(simulate_tests(cfg, {{TestId::T_L, 19}}, 0.0), std::invalid_argument);
  cfg.replications = 50;
  EXPECT_THROW(empirical_size({TestId::T_ALPHA, 0}, cfg), std::invalid_argument);
}

TEST(Simulation, ZeroShiftEqualsNullRun) {
  const ScenarioConfig cfg = small_config();
  const auto size = empirical_size_batch(kAllTests, cfg);
  const auto power = power_curve_batch(kAllTests, cfg, {0.0, 10.0});
  for (std::size_t j = 0; j < kAllTests.size(); ++j) {
    EXPECT_EQ(power[j].power_curve.size(), 2u);
    EXPECT_EQ(power[j].power_curve[0].first, 0.0);
    EXPECT_DOUBLE_EQ(power[j].power_curve[1].first, 0.1);
    EXPECT_EQ(power[j].power_curve[0].second, size[j].empirical_size);
    EXPECT_EQ(power[j].empirical_size, size[j].empirical_size);
  }
}

TEST(Simulation, SizeReportContents) {
  const auto r = empirical_size_batch(kAllTests, small_config());
  ASSERT_EQ(r.size(), 4u);
  for (const auto& rep : r) {
    EXPECT_EQ(rep.rep_count, 200);
    EXPECT_GE(rep.empirical_size, 0.0);
    EXPECT_LE(rep.empirical_size, 1.0);
    Index total = rep.null_histogram.below + rep.null_histogram.above;
    for (Index c : rep.null_histogram.counts) total += c;
    EXPECT_EQ(total + rep.failures, 200);
  }
  EXPECT_EQ(r[2].test, "t-l[k=3]");
  EXPECT_NEAR(mc_standard_error(0.05, 10000), std::sqrt(0.05 * 0.95 / 10000), 1e-15);
}

TEST(Simulation, FullSamplingRuns) {
  ScenarioConfig cfg = small_config();
  cfg.sampling = SamplingMode::FULL;
  const auto r = empirical_size({TestId::T_ALPHA_TILDE, 0}, cfg);
  EXPECT_EQ(r.failures, 0);
  EXPECT_LT(r.empirical_size, 0.2);
}

TEST(Roc, EndpointsMonotoneAndArea) {
  const std::vector<double> h0 = {0.1, 0.4, 0.2, 0.9, 0.5};
  const std::vector<double> h1 = {0.3, 0.8, 1.2, 0.6, 2.0, 0.45};
  const auto pts = roc_points(h0, h1);
  EXPECT_EQ(pts.front(), std::make_pair(0.0, 0.0));
  EXPECT_EQ(pts.back(), std::make_pair(1.0, 1.0));
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_GE(pts[i].first, pts[i - 1].first);
    EXPECT_GE(pts[i].second, pts[i - 1].second);
  }
  // Area equals P(h1 > h0) when there are no ties.
  double wins = 0.0;
  for (double a : h1)
    for (double b : h0) wins += a > b;
  EXPECT_NEAR(trapezoid_auc(pts), wins / (h0.size() * h1.size()), 1e-15);
}

TEST(Roc, SeparatedAndIdentical) {
  EXPECT_DOUBLE_EQ(trapezoid_auc(roc_points({0.0, 0.1}, {1.0, 2.0, 3.0})), 1.0);
  EXPECT_DOUBLE_EQ(trapezoid_auc(roc_points({1.0, 2.0}, {1.0, 2.0})), 0.5);
  EXPECT_DOUBLE_EQ(trapezoid_auc({{0.0, 0.0}, {1.0, 1.0}}), 0.5);
  EXPECT_THROW(roc_points({}, {1.0}), std::invalid_argument);
}

TEST(Roc, CurveFromSimulation) {
  ScenarioConfig cfg = small_config();
  cfg.p = 50;
  cfg.shift_a = 0.2;
  const auto r = roc_curve({TestId::T_ALPHA_TILDE, 0}, cfg);
  EXPECT_EQ(r.roc.front(), std::make_pair(0.0, 0.0));
  EXPECT_EQ(r.roc.back(), std::make_pair(1.0, 1.0));
  EXPECT_NEAR(r.auc, trapezoid_auc(r.roc), 1e-15);
  EXPECT_GT(r.auc, 0.5);
}

TEST(Histogram, Counting) {
  const auto h = make_histogram({-1.0, 0.0, 0.49, 0.5, 0.99, 1.0, 7.0}, 0.0, 1.0, 2);
  ASSERT_EQ(h.edges.size(), 3u);
  EXPECT_DOUBLE_EQ(h.edges[1], 0.5);
  EXPECT_EQ(h.counts[0], 2);
  EXPECT_EQ(h.counts[1], 2);
  EXPECT_EQ(h.below, 1);
  EXPECT_EQ(h.above, 2);
  EXPECT_THROW(make_histogram({}, 1.0, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(make_histogram({}, 0.0, 1.0, 0), std::invalid_argument);
}

TEST(CompareCovariance, AcceptsMatchingOracle) {
  Rng rng(17);
  std::normal_distribution<double> z;
  Mat s(20000, 2);
  for (Index i = 0; i < s.rows(); ++i) {
    const double a = z(rng), b = z(rng);
    s(i, 0) = a;
    s(i, 1) = 0.5 * a + b;
  }
  Mat oracle(2, 2);
  oracle << 1.0, 0.5, 0.5, 1.25;
  EXPECT_TRUE(compare_covariance("ok", s, oracle, 0.05, 3.0).passed);
  EXPECT_FALSE(compare_covariance("bad", s, 2.0 * oracle, 0.05, 3.0).passed);
  EXPECT_THROW(compare_covariance("shape", s, Mat::Identity(3, 3), 0.05, 3.0), std::invalid_argument);
}

TEST(Coverage, DualityHoldsOnEveryReplication) {
  ScenarioConfig cfg = small_config();
  const auto r = ci_coverage(cfg, 0.95);
  EXPECT_EQ(r.duality_mismatches, 0);
  EXPECT_EQ(r.valid + r.failures, 200);
  EXPECT_GT(r.coverage_general, 0.8);
}
