#include <gtest/gtest.h>

#include <random>

#include "hdeu/config.hpp"
#include "hdeu/errors.hpp"
#include "hdeu/montecarlo.hpp"
#include "hdeu/shrinkage.hpp"

using namespace hdeu;

namespace {

ModelParams small_model(std::uint64_t seed, Index p = 12, double gamma = 5.0) {
  ScenarioConfig cfg;
  cfg.p = p;
  cfg.c = 0.3;
  cfg.gamma = gamma;
  cfg.seed = seed;
  cfg.condition_index = 20.0;
  return draw_model(cfg);
}

FrontierStats sample_frontier() {
  FrontierStats fs;
  fs.r_gmv = 0.03;
  fs.v_gmv = 0.4;
  fs.s = 0.8;
  fs.r_b = 0.05;
  fs.v_b = 0.9;
  return fs;
}

}  // namespace

TEST(OracleIntensity, OrthogonalNumeratorGivesZero) {
  const ModelParams m = small_model(1);
  const auto b = equal_weights(m.mu.size());
  const Vec g = m.mu - m.gamma * m.sigma * b.w;
  // v orthogonal to g and to the ones vector (so w_hat still sums to one).
  Mat basis(m.mu.size(), 2);
  basis.col(0) = g;
  basis.col(1) = Vec::Ones(m.mu.size());
  Vec v = Vec::LinSpaced(m.mu.size(), -1.0, 2.0).array().square().matrix();
  const Mat proj = basis * (basis.transpose() * basis).inverse() * basis.transpose();
  v -= proj * v;
  const auto w_hat = make_weights(b.w + 0.1 * v);
  EXPECT_NEAR(oracle_intensity(m, w_hat, b), 0.0, 1e-12);
}

TEST(OracleIntensity, ScaleInvariantUnderJointScaling) {
  const ModelParams m = small_model(2);
  const auto b = equal_weights(m.mu.size());
  const auto w_hat = eu_weights(small_model(3));
  const double a1 = oracle_intensity(m, w_hat, b);
  const ModelParams m2{2.0 * m.mu, 2.0 * m.sigma, m.gamma};
  const Vec diff = w_hat.w - b.w;
  EXPECT_NEAR(diff.dot(m2.mu - m2.gamma * m2.sigma * b.w),
              2.0 * diff.dot(m.mu - m.gamma * m.sigma * b.w), 1e-12);
  EXPECT_NEAR(quad_form(diff, m2.sigma, diff), 2.0 * quad_form(diff, m.sigma, diff), 1e-12);
  EXPECT_NEAR(oracle_intensity(m2, w_hat, b), a1, 1e-12 * std::max(1.0, std::abs(a1)));
}

TEST(OracleIntensity, MatchesDirectEvaluation) {
  ScenarioConfig cfg;
  cfg.p = 50;
  cfg.c = 0.2;
  const ModelParams m = draw_model(cfg);
  Rng rng = make_stream(3, StreamDomain::DATA, 0);
  const auto w_hat = plugin_eu_weights(sample_moments(sample_returns(m, 250, rng)), m.gamma);
  const auto b = equal_weights(50);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < 50; ++i) {
    const double di = w_hat.w(i) - b.w(i);
    double sb = 0.0, sd = 0.0;
    for (Index j = 0; j < 50; ++j) {
      sb += m.sigma(i, j) * b.w(j);
      sd += m.sigma(i, j) * (w_hat.w(j) - b.w(j));
    }
    num += di * (m.mu(i) - m.gamma * sb);
    den += di * sd;
  }
  EXPECT_NEAR(oracle_intensity(m, w_hat, b), num / den, 1e-12);
}

TEST(OracleIntensity, ZeroDirectionThrows) {
  const ModelParams m = small_model(4);
  const auto b = equal_weights(m.mu.size());
  EXPECT_THROW(oracle_intensity(m, b, b), ZeroDirection);
}

TEST(LimitingIntensity, NullConfigurationHasZeroNumerator) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ModelParams m = small_model(seed);
    const auto w_eu = eu_weights(m);
    const auto fs = frontier_stats(m, w_eu);
    EXPECT_NEAR(fs.r_b, fs.r_gmv + fs.s / m.gamma, 1e-12);
    EXPECT_NEAR(fs.v_b, fs.v_gmv + fs.s / (m.gamma * m.gamma), 1e-12);
    // At c = 0 the plug-in limit coincides with b, so B vanishes as well.
    EXPECT_THROW(limiting_intensity(fs, m.gamma, 0.0), ZeroDenominator);
    for (double c : {0.3, 0.8}) {
      const auto d = limiting_intensity(fs, m.gamma, c);
      EXPECT_NEAR(d.a_num, 0.0, 1e-12 * (1.0 + std::abs(d.b_den)));
      EXPECT_NEAR(d.alpha, 0.0, 1e-11);
    }
  }
}

TEST(LimitingIntensity, GmvBranch) {
  FrontierStats fs = sample_frontier();
  fs.v_b = fs.v_gmv;
  EXPECT_EQ(limiting_intensity(fs, kGmvGamma, 0.4).alpha, 0.0);
  fs.v_gmv = 1.0;
  fs.v_b = 2.0;
  EXPECT_DOUBLE_EQ(limiting_intensity(fs, kGmvGamma, 0.5).alpha, 0.5);
  // Closed form in L_b = V_b / V_GMV - 1.
  fs = sample_frontier();
  const double c = 0.3;
  const double lb = fs.v_b / fs.v_gmv - 1.0;
  EXPECT_NEAR(limiting_intensity(fs, kGmvGamma, c).alpha, (1 - c) * lb / (c + (1 - c) * lb), 1e-15);
}

TEST(LimitingIntensity, LargeGammaApproachesGmv) {
  const FrontierStats fs = sample_frontier();
  const double gmv = limiting_intensity(fs, kGmvGamma, 0.4).alpha;
  double prev = std::abs(limiting_intensity(fs, 10.0, 0.4).alpha - gmv);
  for (double g : {1e2, 1e4, 1e6}) {
    const double err = std::abs(limiting_intensity(fs, g, 0.4).alpha - gmv);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(LimitingIntensity, ZeroDenominatorThrows) {
  FrontierStats fs = sample_frontier();
  fs.v_b = fs.v_gmv;
  EXPECT_THROW(limiting_intensity(fs, kGmvGamma, 0.0), ZeroDenominator);
  EXPECT_THROW(limiting_intensity(fs, 2.0, 1.0), std::domain_error);
}

TEST(EstimatedIntensity, PopulationInputsReproduceLimit) {
  const FrontierStats fs = sample_frontier();
  EstimatedStats e;
  e.r_gmv_hat = fs.r_gmv;
  e.v_c_hat = fs.v_gmv;
  e.s_c_hat = fs.s;
  e.r_b_hat = fs.r_b;
  e.v_b_hat = fs.v_b;
  for (double g : {2.0, 5.0, kGmvGamma})
    for (double c : {0.0, 0.3, 0.8}) {
      const auto a = limiting_intensity(fs, g, c);
      const auto b = estimated_intensity(e, g, c);
      EXPECT_EQ(a.a_num, b.a_num);
      EXPECT_EQ(a.b_den, b.b_den);
      EXPECT_EQ(a.alpha, b.alpha);
    }
}

TEST(EstimatedIntensity, NullConfigurationCancels) {
  const ModelParams m = small_model(7);
  const auto fs = frontier_stats(m, eu_weights(m));
  EstimatedStats e;
  e.r_gmv_hat = fs.r_gmv;
  e.v_c_hat = fs.v_gmv;
  e.s_c_hat = fs.s;
  e.r_b_hat = fs.r_b;
  e.v_b_hat = fs.v_b;
  EXPECT_NEAR(estimated_intensity(e, m.gamma, 0.3).a_num, 0.0, 1e-12);
}

TEST(Bfgse, Endpoints) {
  Vec a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  const auto wa = make_weights(a), wb = make_weights(b);
  EXPECT_EQ(bfgse_weights(wa, wb, 0.0).w, b);
  EXPECT_EQ(bfgse_weights(wa, wb, 1.0).w, a);
  const auto h = bfgse_weights(wa, wb, 0.5);
  EXPECT_DOUBLE_EQ(h.w(0), 0.5);
  EXPECT_DOUBLE_EQ(h.w(1), 0.5);
  EXPECT_NEAR(bfgse_weights(wa, wb, -3.7).w.sum(), 1.0, 1e-12);
}

TEST(Sensitivity, NullVectorValues) {
  IntensityDecomposition zero{0.0, 2.0, 0.0};
  const auto s0 = sensitivity_vectors(zero, 5.0, 0.0);
  Vec5 expected;
  expected << 2, -5, 0.2, -2, 5;
  EXPECT_LE((s0.d0 - expected).norm(), 1e-15);
  EXPECT_EQ(s0.d, s0.d0);

  const auto s3 = sensitivity_vectors(zero, 5.0, 0.3);
  expected << 1 + 1 / 0.7, -5, 0.2 / 0.7, -1 - 1 / 0.7, 5;
  EXPECT_LE((s3.d0 - expected).norm(), 1e-14);
}

TEST(Sensitivity, MatchesNumericalGradient) {
  // d is the gradient of A - alpha B in (R_GMV, V, s, R_b, V_b), held at alpha.
  const FrontierStats fs = sample_frontier();
  for (double g : {3.0, kGmvGamma}) {
    const double c = 0.35;
    const auto dec = limiting_intensity(fs, g, c);
    const auto sv = sensitivity_vectors(dec, g, c);
    const double x0[5] = {fs.r_gmv, fs.v_gmv, fs.s, fs.r_b, fs.v_b};
    for (int i = 0; i < 5; ++i) {
      double xp[5], xm[5];
      std::copy(x0, x0 + 5, xp);
      std::copy(x0, x0 + 5, xm);
      const double h = 1e-6;
      xp[i] += h;
      xm[i] -= h;
      const auto f = [&](const double* x) {
        const FrontierStats t{x[0], x[1], x[2], x[3], x[4]};
        const auto d = limiting_intensity(t, g, c);
        return d.a_num - dec.alpha * d.b_den;
      };
      EXPECT_NEAR(sv.d(i), (f(xp) - f(xm)) / (2 * h), 1e-6) << i;
    }
  }
}

TEST(Omega, ZeroPatternAndSymmetry) {
  const FrontierStats fs = sample_frontier();
  EstimatedStats e;
  e.r_gmv_hat = 0.02;
  e.v_c_hat = 0.5;
  e.v_gmv_hat = 0.35;
  e.s_c_hat = 0.6;
  e.r_b_hat = 0.06;
  e.v_b_hat = 1.1;
  for (const auto& o : {omega_alpha(fs, 0.3), omega_alpha(e, 0.3, OmegaVariant::HAT),
                        omega_alpha(e, 0.3, OmegaVariant::TILDE, 5.0)}) {
    EXPECT_EQ((o.omega - o.omega.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(o.omega(0, 1), 0.0);
    EXPECT_EQ(o.omega(1, 3), 0.0);
    EXPECT_EQ(o.omega(3, 4), 0.0);
  }
  EXPECT_THROW(omega_alpha(e, 0.3, OmegaVariant::POPULATION), std::invalid_argument);
}

TEST(Omega, TildeUsesImpliedSlope) {
  EstimatedStats e;
  e.r_gmv_hat = 0.02;
  e.v_c_hat = 0.5;
  e.s_c_hat = 0.6;
  e.r_b_hat = 0.06;
  e.v_b_hat = 1.1;
  EstimatedStats e2 = e;
  e2.s_c_hat = 5.0 * (e.r_b_hat - e.r_gmv_hat);
  EXPECT_EQ(omega_alpha(e, 0.3, OmegaVariant::TILDE, 5.0).omega,
            omega_alpha(e2, 0.3, OmegaVariant::HAT).omega);
  // Infinite gamma keeps the consistent slope.
  EXPECT_EQ(omega_alpha(e, 0.3, OmegaVariant::TILDE, kGmvGamma).omega,
            omega_alpha(e, 0.3, OmegaVariant::HAT).omega);
}

TEST(Omega, DegenerateEntryExample) {
  FrontierStats fs{0.1, 0.5, 0.0, 0.1, 0.7};
  EXPECT_EQ(omega_alpha(fs, 0.0).omega(2, 2), 0.0);
}

TEST(IntensityVariance, SimpleCases) {
  IntensityDecomposition dec{0.0, 2.0, 0.0};
  SensitivityVector sv;
  sv.d = Vec5::Zero();
  sv.d(0) = 1.0;
  OmegaAlpha zero;
  EXPECT_EQ(intensity_variance(dec, sv, zero), 0.0);
  OmegaAlpha o;
  o.omega(0, 0) = 0.36;
  EXPECT_DOUBLE_EQ(intensity_variance(dec, sv, o), 0.09);
}

TEST(IntensityVariance, NegativeGuard) {
  Mat5 o = Mat5::Zero();
  o(0, 0) = -1.0;
  Vec5 v = Vec5::Zero();
  v(0) = 1.0;
  EXPECT_THROW(guarded_quadratic(v, o), NegativeVariance);
  o(0, 0) = -1e-12;
  EXPECT_EQ(guarded_quadratic(v, o), 0.0);
}

TEST(GmvVariance, DeltaMethodMatchesClosedForm) {
  for (double c : {0.1, 0.3, 0.6, 0.9}) {
    FrontierStats fs = sample_frontier();
    const auto dec = limiting_intensity(fs, kGmvGamma, c);
    const auto sv = sensitivity_vectors(dec, kGmvGamma, c);
    const double delta = intensity_variance(dec, sv, omega_alpha(fs, c));
    const double closed = gmv_intensity_variance(fs, c, GmvVarianceReading::RELATIVE_VARIANCE);
    EXPECT_NEAR(delta, closed, 1e-12 * closed) << c;
  }
}

TEST(GmvVariance, AsPrintedReadingDiffersWhenRbIsNotLb) {
  const FrontierStats fs = sample_frontier();
  const double rel = gmv_intensity_variance(fs, 0.3, GmvVarianceReading::RELATIVE_VARIANCE);
  const double printed = gmv_intensity_variance(fs, 0.3, GmvVarianceReading::AS_PRINTED);
  EXPECT_GT(std::abs(rel - printed), 1e-3 * rel);
  FrontierStats same = fs;
  same.r_b = same.v_b / same.v_gmv - 1.0;
  EXPECT_DOUBLE_EQ(gmv_intensity_variance(same, 0.3, GmvVarianceReading::AS_PRINTED),
                   gmv_intensity_variance(same, 0.3, GmvVarianceReading::RELATIVE_VARIANCE));
}
