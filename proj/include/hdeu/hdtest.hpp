#pragma once

#include <optional>
#include <string>

#include "hdeu/portfolio.hpp"
#include "hdeu/shrinkage.hpp"

namespace hdeu {

/// H0: L w_EU = r.
struct LinearHypothesis {
  Mat l;
  Vec r;

  Index k() const { return l.rows(); }
};

/// Validates 1 <= k < p - 1 and full row rank of L.
LinearHypothesis make_hypothesis(Mat l, Vec r);

/// L = [I_k 0], the hypothesis used throughout the simulations.
Mat leading_selector(Index k, Index p);

enum class RefDist { CHI2, NORMAL };

struct TestResult {
  double statistic = 0.0;
  RefDist dist = RefDist::NORMAL;
  int df = 1;  // degrees of freedom for CHI2
  double p_value = 1.0;
  std::optional<double> noncentrality;

  bool reject_at(double beta = 0.05) const { return p_value < beta; }
};

std::string to_string(RefDist d);

/// Builds a TestResult with the p-value convention of the distribution:
/// upper tail for CHI2, two-sided for NORMAL.
TestResult make_result(double statistic, RefDist dist, int df = 1);

/// Form of the k x k middle matrix of the classical Mahalanobis test.
/// CORRECTED uses gamma^-2 L Q L' where the printed statistic has
/// gamma^-1 L Q L' / s, so that every term is a variance; AS_PRINTED keeps the
/// printed term.
enum class MidMatrixForm { CORRECTED, AS_PRINTED };

Vec mahalanobis_weights(const SampleFit& f, const Mat& l, double gamma);
Mat mahalanobis_mid(const SampleFit& f, const Mat& l, double gamma,
                    MidMatrixForm form = MidMatrixForm::CORRECTED);
Vec population_weights_l(const ModelParams& params, const PrecisionBundle& pb, const Mat& l);
Mat population_mid(const ModelParams& params, const PrecisionBundle& pb, const Mat& l,
                   MidMatrixForm form = MidMatrixForm::CORRECTED);

/// Classical test T_L, chi-square(k) upper tail.
TestResult test_mahalanobis(const SampleFit& f, const LinearHypothesis& h, double gamma,
                            MidMatrixForm form = MidMatrixForm::CORRECTED);
TestResult test_mahalanobis(const MomentEstimates& m, const LinearHypothesis& h, double gamma,
                            MidMatrixForm form = MidMatrixForm::CORRECTED);
/// Same statistic, with the noncentrality computed from the true model.
TestResult test_mahalanobis_oracle(const SampleFit& f, const LinearHypothesis& h,
                                   const ModelParams& params,
                                   MidMatrixForm form = MidMatrixForm::CORRECTED);

/// High-dimensional pieces: w_{L;c}, Omega_hat_{L;c} and the population Omega_{L;c}.
Vec consistent_weights_l(const SampleFit& f, const Mat& l, double gamma);
Mat omega_lc_hat(const SampleFit& f, const Mat& l, double gamma);
Mat omega_lc(const ModelParams& params, const PrecisionBundle& pb, const Mat& l, double c);

/// High-dimensional test T_{L;c}, chi-square(k) upper tail.
TestResult test_mahalanobis_hd(const SampleFit& f, const LinearHypothesis& h, double gamma);
TestResult test_mahalanobis_hd(const MomentEstimates& m, const LinearHypothesis& h, double gamma);
TestResult test_mahalanobis_hd_oracle(const SampleFit& f, const LinearHypothesis& h,
                                      const ModelParams& params);

/// Everything the shrinkage tests and intervals need, computed once.
struct ShrinkageAnalysis {
  EstimatedStats est;
  IntensityDecomposition decomp;
  SensitivityVector sens;
  OmegaAlpha omega_hat;
  OmegaAlpha omega_tilde;
  double gamma = 1.0;
  Index n = 0;
};

ShrinkageAnalysis analyze_shrinkage(const SampleFit& f, const PortfolioWeights& w0, double gamma);

/// sqrt(n) A_hat / sqrt(d0' Omega d0) with Omega = HAT or TILDE.
TestResult shrinkage_test(const ShrinkageAnalysis& a, OmegaVariant variant);

TestResult test_shrinkage(const SampleFit& f, const PortfolioWeights& w0, double gamma);
TestResult test_shrinkage(const MomentEstimates& m, const PortfolioWeights& w0, double gamma);
TestResult test_shrinkage_tilde(const SampleFit& f, const PortfolioWeights& w0, double gamma);
TestResult test_shrinkage_tilde(const MomentEstimates& m, const PortfolioWeights& w0,
                                double gamma);

struct ConfidenceInterval {
  double center = 0.0;
  double half_width = 0.0;
  double level = 0.95;

  double lower() const { return center - half_width; }
  double upper() const { return center + half_width; }
  bool contains(double x) const { return x >= lower() && x <= upper(); }
};

/// HAT and TILDE are the intervals dual to T_alpha and T~_alpha (null
/// variance d0). GENERAL uses d evaluated at alpha_hat with Omega HAT, the
/// variance estimate that stays valid away from the null.
enum class CiVariant { HAT, TILDE, GENERAL };

ConfidenceInterval shrinkage_ci(const ShrinkageAnalysis& a, double level, CiVariant variant);
ConfidenceInterval shrinkage_ci(const SampleFit& f, const PortfolioWeights& w0, double gamma,
                                double level, CiVariant variant = CiVariant::TILDE);

}  // namespace hdeu
