#pragma once

#include "hdeu/portfolio.hpp"

namespace hdeu {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

/// alpha = a_num / b_den. For finite gamma, a_num is the numerator of the
/// limiting intensity and b_den is gamma times its denominator, so that the
/// intensity has no leading 1/gamma. For gamma = infinity the GMV closed
/// form is used: a_num = (1-c)(V_b - V), b_den = (1-c)(V_b - V) + cV.
struct IntensityDecomposition {
  double a_num = 0.0;
  double b_den = 1.0;
  double alpha = 0.0;
};

/// Derivatives of A - (A/B) B with respect to
/// t = (R_GMV, V_GMV, s, R_b, V_b); d0 is the same vector at A/B = 0.
struct SensitivityVector {
  Vec5 d = Vec5::Zero();
  Vec5 d0 = Vec5::Zero();
  double c_n = 0.0;
  double gamma = 1.0;
};

enum class OmegaVariant { POPULATION, HAT, TILDE };

struct OmegaAlpha {
  Mat5 omega = Mat5::Zero();
  OmegaVariant variant = OmegaVariant::POPULATION;
};

/// Finite-sample optimal intensity for a given plug-in portfolio.
double oracle_intensity(const ModelParams& params, const PortfolioWeights& w_hat,
                        const PortfolioWeights& b);

IntensityDecomposition limiting_intensity(const FrontierStats& fs, double gamma, double c);

/// Plugs R_GMV_hat, V_c_hat, s_c_hat, R_b_hat, V_b_hat into the limiting
/// formula with c = c_n.
IntensityDecomposition estimated_intensity(const EstimatedStats& est, double gamma, double c_n);

PortfolioWeights bfgse_weights(const PortfolioWeights& w_hat, const PortfolioWeights& b,
                               double alpha_hat);

SensitivityVector sensitivity_vectors(const IntensityDecomposition& decomp, double gamma,
                                      double c_n);

/// Population asymptotic covariance of sqrt(n) t.
OmegaAlpha omega_alpha(const FrontierStats& fs, double c);

/// Consistent estimators. HAT plugs in V_c_hat and s_c_hat. TILDE replaces
/// s by gamma (R_b_hat - R_GMV_hat), which is valid under the null that b is
/// the EU portfolio; for gamma = infinity the s-dependent entries carry zero
/// weight in every statistic built from them and s_c_hat is used instead.
OmegaAlpha omega_alpha(const EstimatedStats& est, double c, OmegaVariant variant,
                       double gamma = kGmvGamma);

/// d' Omega d / b_den^2 using the d vector (not d0).
double intensity_variance(const IntensityDecomposition& decomp, const SensitivityVector& sens,
                          const OmegaAlpha& omega);

/// Quadratic form v' Omega v with the negative-variance guard used by
/// intensity_variance.
double guarded_quadratic(const Vec5& v, const Mat5& omega);

/// How the denominator of the closed-form GMV intensity variance is read.
/// RELATIVE_VARIANCE uses L_b = V_b / V_GMV - 1 (what the delta method gives);
/// AS_PRINTED uses R_b.
enum class GmvVarianceReading { RELATIVE_VARIANCE, AS_PRINTED };

/// Asymptotic variance of sqrt(n)(alpha_hat - alpha) for the GMV target case.
double gmv_intensity_variance(const FrontierStats& fs, double c,
                              GmvVarianceReading reading = GmvVarianceReading::RELATIVE_VARIANCE);

}  // namespace hdeu
