#pragma once

#include <Eigen/Dense>

namespace hdeu {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Sample mean and covariance (divisor n - 1) of a p x n return matrix.
struct MomentEstimates {
  Vec mean;
  Mat cov;
  Index p = 0;
  Index n = 0;
  double c_n = 0.0;  // p / n
};

/// Precision matrix together with the budget-projected Q and 1'P1.
struct PrecisionBundle {
  Mat precision;
  Mat q;
  double ones_quadform = 0.0;
};

/// Columns of `x` are observations. Throws std::invalid_argument on n < 2,
/// an empty matrix or non-finite entries.
MomentEstimates sample_moments(const Mat& x);

/// Wraps already computed sufficient statistics, validating the shapes and
/// symmetrizing `cov`.
MomentEstimates make_moments(Vec mean, Mat cov, Index n);

/// (m + m') / 2
Mat symmetrize(const Mat& m);

/// Relative asymmetry |m - m'|_F / max(1, |m|_F).
double asymmetry(const Mat& m);

/// Inverse through a Cholesky factorization. Throws NotPositiveDefinite when
/// the factorization fails or is numerically singular.
Mat invert_spd(const Mat& m);

/// Q = P - P11'P / (1'P1).
Mat q_matrix(const Mat& precision, double ones_quadform);

PrecisionBundle precision_bundle(const Mat& sigma);

/// For moment estimates: also rejects c_n >= 1 before factorizing.
PrecisionBundle precision_bundle(const MomentEstimates& m);

/// a' M b without forming temporaries beyond M b.
double quad_form(const Vec& a, const Mat& m, const Vec& b);

}  // namespace hdeu
