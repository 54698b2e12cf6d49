#include <gtest/gtest.h>

#include <cmath>

#include "hdeu/errors.hpp"
#include "hdeu/montecarlo.hpp"
#include "hdeu/theory.hpp"

using namespace hdeu;

TEST(MpMoments, HalfRatio) {
  const auto m = mp_moments(0.5);
  EXPECT_DOUBLE_EQ(m.m1, 1.0);
  EXPECT_DOUBLE_EQ(m.m2, 1.5);
  EXPECT_DOUBLE_EQ(m.minv1, 2.0);
  EXPECT_DOUBLE_EQ(m.minv2, 8.0);
  EXPECT_THROW(mp_moments(0.0), std::domain_error);
  EXPECT_THROW(mp_moments(1.0), std::domain_error);
}

TEST(MpMoments, QuadratureMatchesClosedForm) {
  for (double c : {0.05, 0.2, 0.5, 0.8}) {
    const auto m = mp_moments(c);
    EXPECT_NEAR(mp_moment_quadrature(c, 0), 1.0, 1e-6) << c;
    EXPECT_NEAR(mp_moment_quadrature(c, 1), m.m1, 1e-6) << c;
    EXPECT_NEAR(mp_moment_quadrature(c, 2), m.m2, 1e-6) << c;
    EXPECT_NEAR(mp_moment_quadrature(c, -1), m.minv1, 1e-6 * m.minv1) << c;
    EXPECT_NEAR(mp_moment_quadrature(c, -2), m.minv2, 1e-6 * m.minv2) << c;
  }
}

TEST(Lambda, HalfRatioValues) {
  const Mat4 l = lambda_matrix(0.5);
  EXPECT_DOUBLE_EQ(l(0, 0), 0.5);
  for (int j = 1; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(l(0, j), -1.0);
    EXPECT_DOUBLE_EQ(l(j, 0), -1.0);
    for (int i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(l(i, j), 4.0);
  }
}

TEST(Lambda, RecoveredFromMoments) {
  for (double c : {0.1, 0.3, 0.5, 0.9}) {
    const Mat4 l = lambda_matrix(c);
    const Eigen::Vector3d v = lambda_from_moments(c);
    EXPECT_NEAR(v(0), l(0, 0), 1e-12);
    EXPECT_NEAR(v(1), l(0, 1), 1e-12);
    EXPECT_NEAR(v(2), l(1, 1), 1e-10 * l(1, 1));
  }
}

TEST(Theta, ParallelAndOrthogonal) {
  Vec e1 = Vec::Zero(3), e2 = Vec::Zero(3), e3 = Vec::Zero(3);
  e1(0) = 1;
  e2(1) = 1;
  e3(2) = 1;
  const Mat4 same = theta_matrix(e1, e1, e1);
  EXPECT_LE((same - Mat4::Ones()).norm(), 1e-15);
  const Mat4 orth = theta_matrix(e1, e2, e3);
  Mat4 expected = Mat4::Zero();
  expected.diagonal() << 1.0, 1.0, 0.5, 1.0;
  EXPECT_LE((orth - expected).norm(), 1e-15);
}

TEST(Theta, SymmetricAndNormChecked) {
  Vec a(3), b(3), c(3);
  a << 1, 2, 2;
  b << 0, 3, 4;
  c << 2, -1, 2;
  a /= 3.0;
  b /= 5.0;
  c /= 3.0;
  const Mat4 t = theta_matrix(a, b, c);
  EXPECT_LE((t - t.transpose()).norm(), 1e-15);
  EXPECT_NEAR(t(0, 1), std::pow(a.dot(b), 2), 1e-15);
  EXPECT_NEAR(t(2, 2), 0.5 + 0.5 * std::pow(b.dot(c), 2), 1e-15);
  EXPECT_THROW(theta_matrix(2.0 * a, b, c), NormViolation);
  EXPECT_THROW(theta_matrix(a, b, Vec::Ones(2) / std::sqrt(2.0)), std::invalid_argument);
}

TEST(LemmaOneCovariance, HadamardProduct) {
  Vec a = Vec::Zero(4), b = Vec::Zero(4), c = Vec::Zero(4);
  a(0) = 1;
  b(0) = b(1) = 1 / std::sqrt(2.0);
  c(1) = c(2) = 1 / std::sqrt(2.0);
  const Mat4 th = theta_matrix(a, b, c);
  const Mat4 cov = lemma_one_covariance(th, 0.4);
  const Mat4 lm = lambda_matrix(0.4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(cov(i, j), 5.0 * th(i, j) * lm(i, j), 1e-14);
}

namespace {

FrontierStats some_frontier() {
  FrontierStats fs;
  fs.r_gmv = 0.03;
  fs.v_gmv = 0.8;
  fs.s = 1.7;
  fs.r_b = 0.05;
  fs.v_b = 1.4;
  return fs;
}

}  // namespace

TEST(Xi, ZeroPatternAndSymmetry) {
  for (double c : {0.0, 0.3, 0.7}) {
    const Mat5 x = xi_matrix(some_frontier(), c).xi;
    EXPECT_LE((x - x.transpose()).norm(), 1e-14 * x.norm());
    EXPECT_EQ(x(1, 3), 0.0);
    EXPECT_EQ(x(3, 1), 0.0);
    EXPECT_EQ(x(3, 4), 0.0);
    EXPECT_EQ(x(4, 3), 0.0);
  }
  EXPECT_THROW(xi_matrix(some_frontier(), 1.0), std::domain_error);
  FrontierStats bad = some_frontier();
  bad.v_gmv = 0.0;
  EXPECT_THROW(xi_matrix(bad, 0.3), std::domain_error);
}

TEST(Xi, ClassicalLimitEntries) {
  // c = 0: k = 1, so the target rows reduce to the plain moment covariances.
  const FrontierStats fs = some_frontier();
  const auto o = xi_matrix(fs, 0.0);
  EXPECT_DOUBLE_EQ(o.s_star, fs.s + fs.r_gmv * fs.r_gmv / fs.v_gmv + 1.0);
  EXPECT_DOUBLE_EQ(o.xi(0, 3), 1.0);
  EXPECT_DOUBLE_EQ(o.xi(3, 3), fs.v_b);
  EXPECT_DOUBLE_EQ(o.xi(4, 4), 2.0 * fs.v_b * fs.v_b);
  EXPECT_DOUBLE_EQ(o.xi(1, 1), 2.0 / (fs.v_gmv * fs.v_gmv));
  EXPECT_DOUBLE_EQ(o.xi(2, 2), 2.0 * o.s_star * o.s_star - 2.0);
}

TEST(DeltaTransform, TargetRowsAreIdentity) {
  const FrontierStats fs = some_frontier();
  const Mat5 d = delta_transform(fs, {fs.r_gmv, fs.v_gmv}, 0.4);
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(d(3, j), j == 3 ? 1.0 : 0.0);
    EXPECT_EQ(d(4, j), j == 4 ? 1.0 : 0.0);
  }
  EXPECT_DOUBLE_EQ(d(2, 2), 0.6);
}

TEST(DeltaTransform, ClassicalSpotCheck) {
  const FrontierStats fs = some_frontier();
  const Mat5 d = delta_transform(fs, {fs.r_gmv, fs.v_gmv}, 0.0);
  EXPECT_DOUBLE_EQ(d(0, 0), fs.v_gmv);
  EXPECT_DOUBLE_EQ(d(0, 1), -fs.v_gmv * fs.r_gmv);
  EXPECT_DOUBLE_EQ(d(1, 1), -fs.v_gmv * fs.v_gmv);
  EXPECT_NEAR(d(2, 0), -2.0 * fs.r_gmv, 1e-15);
  EXPECT_NEAR(d(2, 1), fs.r_gmv * fs.r_gmv, 1e-15);
  EXPECT_DOUBLE_EQ(d(2, 2), 1.0);
}

TEST(DeltaTransform, MapsXiToOmega) {
  // At population values, D Xi D' reproduces Omega_alpha on generated models.
  ScenarioConfig cfg;
  cfg.p = 20;
  for (std::uint64_t cfg_index = 0; cfg_index < 20; ++cfg_index) {
    cfg.c = 0.05 + 0.045 * static_cast<double>(cfg_index);
    cfg.seed = 100 + cfg_index;
    const ModelParams m = draw_model(cfg, cfg_index);
    const FrontierStats fs = frontier_stats(m, equal_weights(cfg.p));
    const Mat5 d = delta_transform(fs, {fs.r_gmv, fs.v_gmv}, cfg.c);
    const Mat5 lhs = d * xi_matrix(fs, cfg.c).xi * d.transpose();
    const Mat5 rhs = omega_alpha(fs, cfg.c).omega;
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * rhs.cwiseAbs().maxCoeff()) << cfg.c;
  }
}

TEST(CenteredVectors, ZeroAtPopulation) {
  const FrontierStats fs = some_frontier();
  EstimatedStats est;
  est.r_gmv_hat = fs.r_gmv;
  est.v_c_hat = fs.v_gmv;
  est.s_c_hat = fs.s;
  est.r_b_hat = fs.r_b;
  est.v_b_hat = fs.v_b;
  EXPECT_EQ(theorem_one_t(est, fs).norm(), 0.0);

  ScenarioConfig cfg;
  cfg.p = 10;
  const ModelParams m = draw_model(cfg, 0);
  const auto pop = precision_bundle(m.sigma);
  const SampleFit f = fit_sample(make_moments(m.mu, m.sigma, 1'000'000'000));
  const Vec5 h = lemma_two_h(f, m, pop, equal_weights(10));
  EXPECT_NEAR(h.norm(), 0.0, 1e-6);
}
