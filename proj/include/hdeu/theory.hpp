#pragma once

#include "hdeu/portfolio.hpp"
#include "hdeu/shrinkage.hpp"

namespace hdeu {

using Mat4 = Eigen::Matrix<double, 4, 4>;

struct MpMoments {
  double m1 = 1.0;     // int z dF
  double m2 = 1.0;     // int z^2 dF
  double minv1 = 1.0;  // int 1/z dF
  double minv2 = 1.0;  // int 1/z^2 dF
};

/// Closed-form Marchenko-Pastur moments for 0 < c < 1.
MpMoments mp_moments(double c);

/// Numerical moment int z^power dF_c by quadrature of the MP density.
double mp_moment_quadrature(double c, int power);

Mat4 lambda_matrix(double c);

/// The three distinct values (lambda1, lambda2, lambda3) recomputed from the
/// MP moments.
Eigen::Vector3d lambda_from_moments(double c);

/// Inner-product matrix for three unit vectors; throws NormViolation when a
/// vector is not of unit length.
Mat4 theta_matrix(const Vec& m1, const Vec& m2, const Vec& m3);

/// Full asymptotic covariance (2/c) Theta o Lambda of the four sample
/// quadratic forms.
Mat4 lemma_one_covariance(const Mat4& theta, double c);

struct LemmaOneOracle {
  Mat4 lambda_mat;
  Mat4 theta_mat;
  double c = 0.0;
};

struct LemmaTwoOracle {
  Mat5 xi;
  double s_star = 0.0;  // s + R_GMV^2 / V_GMV + 1
};

LemmaTwoOracle xi_matrix(const FrontierStats& fs, double c);

/// Almost-sure limits entering D: R_GMV_hat and V_c_hat. At population
/// values these are R_GMV and V_GMV.
struct DeltaIntermediates {
  double r_gmv_hat = 0.0;
  double v_c_hat = 0.0;
};

/// Jacobian that maps sqrt(n) h to sqrt(n) t.
Mat5 delta_transform(const FrontierStats& fs, const DeltaIntermediates& est, double c);

/// Centered vector h of the second lemma for one sample.
Vec5 lemma_two_h(const SampleFit& f, const ModelParams& params, const PrecisionBundle& pop,
                 const PortfolioWeights& b);

/// Centered vector t (estimates minus population values) for one sample.
Vec5 theorem_one_t(const EstimatedStats& est, const FrontierStats& fs);

}  // namespace hdeu
