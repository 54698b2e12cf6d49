#include "hdeu/statcore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hdeu/config.hpp"
#include "hdeu/errors.hpp"

namespace hdeu {

MomentEstimates sample_moments(const Mat& x) {
  const Index p = x.rows();
  const Index n = x.cols();
  if (p < 1) throw std::invalid_argument("sample_moments: no assets");
  if (n < 2) throw std::invalid_argument("sample_moments: need n >= 2 observations");
  if (!x.allFinite()) throw std::invalid_argument("sample_moments: non-finite entry");

  MomentEstimates out;
  out.p = p;
  out.n = n;
  out.c_n = static_cast<double>(p) / static_cast<double>(n);
  out.mean = x.rowwise().mean();
  const Mat centered = x.colwise() - out.mean;
  Mat s = Mat::Zero(p, p);
  s.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / static_cast<double>(n - 1));
  out.cov = s.selfadjointView<Eigen::Lower>();
  return out;
}

MomentEstimates make_moments(Vec mean, Mat cov, Index n) {
  const Index p = mean.size();
  if (p < 1 || cov.rows() != p || cov.cols() != p)
    throw std::invalid_argument("make_moments: shape mismatch");
  if (n < 2) throw std::invalid_argument("make_moments: need n >= 2");
  if (!mean.allFinite() || !cov.allFinite())
    throw std::invalid_argument("make_moments: non-finite entry");
  MomentEstimates out;
  out.p = p;
  out.n = n;
  out.c_n = static_cast<double>(p) / static_cast<double>(n);
  out.mean = std::move(mean);
  out.cov = symmetrize(cov);
  return out;
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

double asymmetry(const Mat& m) {
  return (m - m.transpose()).norm() / std::max(1.0, m.norm());
}

Mat invert_spd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("invert_spd: matrix must be square and non-empty");
  if (asymmetry(m) > kTol.symmetry_input)
    throw std::invalid_argument("invert_spd: matrix is not symmetric");
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("invert_spd: Cholesky factorization failed");
  if (!(llt.rcond() > kTol.rcond))
    throw NotPositiveDefinite("invert_spd: matrix is numerically singular (rcond " +
                              std::to_string(llt.rcond()) + ")");
  Mat inv = llt.solve(Mat::Identity(m.rows(), m.cols()));
  return symmetrize(inv);
}

Mat q_matrix(const Mat& precision, double ones_quadform) {
  if (!(ones_quadform > 0.0))
    throw std::invalid_argument("q_matrix: 1'P1 must be positive");
  const Vec p1 = precision.rowwise().sum();
  Mat q = precision - (p1 * p1.transpose()) / ones_quadform;
  return symmetrize(q);
}

PrecisionBundle precision_bundle(const Mat& sigma) {
  PrecisionBundle b;
  b.precision = invert_spd(sigma);
  b.ones_quadform = b.precision.sum();
  if (!(b.ones_quadform > 0.0))
    throw NotPositiveDefinite("precision_bundle: 1'P1 is not positive");
  b.q = q_matrix(b.precision, b.ones_quadform);
  return b;
}

PrecisionBundle precision_bundle(const MomentEstimates& m) {
  if (m.n <= m.p)
    throw NotPositiveDefinite("sample covariance is singular: n = " +
                              std::to_string(m.n) + " <= p = " + std::to_string(m.p));
  return precision_bundle(m.cov);
}

double quad_form(const Vec& a, const Mat& m, const Vec& b) { return a.dot(m * b); }

}  // namespace hdeu
