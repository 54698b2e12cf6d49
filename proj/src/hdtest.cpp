#include "hdeu/hdtest.hpp"

#include <cmath>
#include <stdexcept>

#include "hdeu/distributions.hpp"
#include "hdeu/errors.hpp"

namespace hdeu {

LinearHypothesis make_hypothesis(Mat l, Vec r) {
  const Index k = l.rows();
  const Index p = l.cols();
  if (k < 1 || k >= p - 1)
    throw std::invalid_argument("hypothesis needs 1 <= k < p - 1 restrictions");
  if (r.size() != k) throw std::invalid_argument("hypothesis: r has wrong length");
  if (!l.allFinite() || !r.allFinite()) throw std::invalid_argument("hypothesis: non-finite entry");
  Eigen::FullPivLU<Mat> lu(l);
  if (lu.rank() < k) throw std::invalid_argument("hypothesis: rows of L are linearly dependent");
  return LinearHypothesis{std::move(l), std::move(r)};
}

Mat leading_selector(Index k, Index p) {
  if (k < 1 || k > p) throw std::invalid_argument("leading_selector: need 1 <= k <= p");
  Mat l = Mat::Zero(k, p);
  l.leftCols(k).setIdentity();
  return l;
}

std::string to_string(RefDist d) { return d == RefDist::CHI2 ? "chi2" : "normal"; }

TestResult make_result(double statistic, RefDist dist, int df) {
  TestResult t;
  t.statistic = statistic;
  t.dist = dist;
  t.df = df;
  if (dist == RefDist::CHI2) {
    t.p_value = chi2_sf(statistic, df);
  } else {
    t.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(statistic)));
  }
  return t;
}

namespace {

// d' M^{-1} d through a Cholesky factorization of the (symmetrized) k x k
// middle matrix.
double mahalanobis_form(const Vec& d, const Mat& mid) {
  if (asymmetry(mid) > kTol.symmetry_input)
    throw SingularMidMatrix("middle matrix is not symmetric");
  const Mat m = symmetrize(mid);
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success || !(llt.rcond() > kTol.rcond))
    throw SingularMidMatrix("middle matrix is not positive definite");
  return std::max(0.0, d.dot(llt.solve(d)));
}

struct LProducts {
  Mat lql;  // L Q L'
  Vec lqx;  // L Q x
  Vec lp1;  // L P 1
};

LProducts l_products(const PrecisionBundle& pb, const Vec& x, const Mat& l) {
  LProducts out;
  out.lql = symmetrize(l * (pb.q * l.transpose()));
  out.lqx = l * (pb.q * x);
  out.lp1 = l * pb.precision.rowwise().sum();
  return out;
}

Mat mid_from(const LProducts& lp, double ones_quadform, double s, double gamma,
             MidMatrixForm form) {
  Mat mid = lp.lql / ones_quadform;
  if (is_gmv(gamma)) return mid;
  const double gi = 1.0 / gamma;
  if (form == MidMatrixForm::AS_PRINTED) {
    if (std::abs(s) < kTol.slope_epsilon) throw DegenerateSlope("x'Qx vanishes");
    mid += gi * lp.lql / s;
  } else {
    mid += gi * gi * lp.lql;
  }
  mid += gi * gi * (s * lp.lql - lp.lqx * lp.lqx.transpose());
  return mid;
}

void check_fit(const SampleFit& f, Index p_needed_gap) {
  if (f.moments.n <= f.moments.p + p_needed_gap - 1)
    throw NotPositiveDefinite("test requires more observations than assets");
}

}  // namespace

Vec mahalanobis_weights(const SampleFit& f, const Mat& l, double gamma) {
  if (l.cols() != f.moments.p) throw std::invalid_argument("L has wrong width");
  Vec w = l * f.bundle.precision.rowwise().sum() / f.bundle.ones_quadform;
  if (!is_gmv(gamma)) w += l * (f.bundle.q * f.moments.mean) / gamma;
  return w;
}

Mat mahalanobis_mid(const SampleFit& f, const Mat& l, double gamma, MidMatrixForm form) {
  const LProducts lp = l_products(f.bundle, f.moments.mean, l);
  const double s = quad_form(f.moments.mean, f.bundle.q, f.moments.mean);
  return mid_from(lp, f.bundle.ones_quadform, s, gamma, form);
}

Vec population_weights_l(const ModelParams& params, const PrecisionBundle& pb, const Mat& l) {
  if (l.cols() != params.mu.size()) throw std::invalid_argument("L has wrong width");
  Vec w = l * pb.precision.rowwise().sum() / pb.ones_quadform;
  if (!is_gmv(params.gamma)) w += l * (pb.q * params.mu) / params.gamma;
  return w;
}

Mat population_mid(const ModelParams& params, const PrecisionBundle& pb, const Mat& l,
                   MidMatrixForm form) {
  const LProducts lp = l_products(pb, params.mu, l);
  const double s = quad_form(params.mu, pb.q, params.mu);
  return mid_from(lp, pb.ones_quadform, s, params.gamma, form);
}

TestResult test_mahalanobis(const SampleFit& f, const LinearHypothesis& h, double gamma,
                            MidMatrixForm form) {
  check_fit(f, 2);
  const Vec d = mahalanobis_weights(f, h.l, gamma) - h.r;
  const Mat mid = mahalanobis_mid(f, h.l, gamma, form);
  const double scale = static_cast<double>(f.moments.n - f.moments.p + 1);
  return make_result(scale * mahalanobis_form(d, mid), RefDist::CHI2, static_cast<int>(h.k()));
}

TestResult test_mahalanobis(const MomentEstimates& m, const LinearHypothesis& h, double gamma,
                            MidMatrixForm form) {
  return test_mahalanobis(fit_sample(m), h, gamma, form);
}

TestResult test_mahalanobis_oracle(const SampleFit& f, const LinearHypothesis& h,
                                   const ModelParams& params, MidMatrixForm form) {
  TestResult t = test_mahalanobis(f, h, params.gamma, form);
  const PrecisionBundle pb = precision_bundle(params.sigma);
  const Vec d = population_weights_l(params, pb, h.l) - h.r;
  t.noncentrality = static_cast<double>(f.moments.n) *
                    mahalanobis_form(d, population_mid(params, pb, h.l, form));
  return t;
}

namespace {

// Common body of the estimated and population Omega_{L;c}.
Mat omega_lc_from(const Mat& lql, const Vec& eta, double v, double s, double c, double gamma) {
  if (is_gmv(gamma)) return v * (1.0 - c) * lql;
  const double gi = 1.0 / gamma;
  const double sc = s + c;
  const double lead = ((1.0 - c) / sc + sc * gi) * gi + v;
  const double brace = 2.0 * (1.0 - c) * c * c * c / (sc * sc) +
                       4.0 * (1.0 - c) * c * s * (s + 2.0 * c) / (sc * sc) +
                       2.0 * (1.0 - c) * c * c * sc * sc / (s * s) - s * s;
  Mat out = lead * (1.0 - c) * lql + gi * gi * brace * (eta * eta.transpose());
  return symmetrize(out);
}

}  // namespace

Vec consistent_weights_l(const SampleFit& f, const Mat& l, double gamma) {
  if (l.cols() != f.moments.p) throw std::invalid_argument("L has wrong width");
  Vec w = l * f.bundle.precision.rowwise().sum() / f.bundle.ones_quadform;
  if (is_gmv(gamma)) return w;
  const double s_hat = quad_form(f.moments.mean, f.bundle.q, f.moments.mean);
  const double s_c = (1.0 - f.moments.c_n) * s_hat - f.moments.c_n;
  w += s_c * eta_consistent(f, l) / gamma;
  return w;
}

Mat omega_lc_hat(const SampleFit& f, const Mat& l, double gamma) {
  const LProducts lp = l_products(f.bundle, f.moments.mean, l);
  const double c = f.moments.c_n;
  const double v_c = 1.0 / f.bundle.ones_quadform / (1.0 - c);
  if (is_gmv(gamma)) return omega_lc_from(lp.lql, Vec(), v_c, 0.0, c, gamma);
  const double s_hat = quad_form(f.moments.mean, f.bundle.q, f.moments.mean);
  const double s_c = (1.0 - c) * s_hat - c;
  return omega_lc_from(lp.lql, eta_consistent(f, l), v_c, s_c, c, gamma);
}

Mat omega_lc(const ModelParams& params, const PrecisionBundle& pb, const Mat& l, double c) {
  if (!(c >= 0.0 && c < 1.0)) throw std::domain_error("omega_lc: c must lie in [0, 1)");
  const LProducts lp = l_products(pb, params.mu, l);
  const double v = 1.0 / pb.ones_quadform;
  if (is_gmv(params.gamma)) return omega_lc_from(lp.lql, Vec(), v, 0.0, c, params.gamma);
  const double s = quad_form(params.mu, pb.q, params.mu);
  return omega_lc_from(lp.lql, eta_population(params, pb, l), v, s, c, params.gamma);
}

TestResult test_mahalanobis_hd(const SampleFit& f, const LinearHypothesis& h, double gamma) {
  check_fit(f, 1);
  const Vec d = consistent_weights_l(f, h.l, gamma) - h.r;
  const Mat om = omega_lc_hat(f, h.l, gamma);
  const double scale = static_cast<double>(f.moments.n - f.moments.p);
  return make_result(scale * mahalanobis_form(d, om), RefDist::CHI2, static_cast<int>(h.k()));
}

TestResult test_mahalanobis_hd(const MomentEstimates& m, const LinearHypothesis& h, double gamma) {
  return test_mahalanobis_hd(fit_sample(m), h, gamma);
}

TestResult test_mahalanobis_hd_oracle(const SampleFit& f, const LinearHypothesis& h,
                                      const ModelParams& params) {
  TestResult t = test_mahalanobis_hd(f, h, params.gamma);
  const PrecisionBundle pb = precision_bundle(params.sigma);
  const Vec d = population_weights_l(params, pb, h.l) - h.r;
  const double c = f.moments.c_n;
  t.noncentrality = static_cast<double>(f.moments.n - f.moments.p) *
                    mahalanobis_form(d, omega_lc(params, pb, h.l, c));
  return t;
}

ShrinkageAnalysis analyze_shrinkage(const SampleFit& f, const PortfolioWeights& w0, double gamma) {
  check_fit(f, 1);
  if (w0.size() != f.moments.p) throw std::invalid_argument("w0 has wrong length");
  make_weights(w0.w);  // sum check
  ShrinkageAnalysis a;
  a.gamma = gamma;
  a.n = f.moments.n;
  a.est = estimated_stats(f, w0);
  const double c = f.moments.c_n;
  a.decomp = estimated_intensity(a.est, gamma, c);
  a.sens = sensitivity_vectors(a.decomp, gamma, c);
  a.omega_hat = omega_alpha(a.est, c, OmegaVariant::HAT, gamma);
  a.omega_tilde = omega_alpha(a.est, c, OmegaVariant::TILDE, gamma);
  return a;
}

namespace {

double null_sd(const ShrinkageAnalysis& a, OmegaVariant variant) {
  const Mat5& om = variant == OmegaVariant::TILDE ? a.omega_tilde.omega : a.omega_hat.omega;
  const double q = guarded_quadratic(a.sens.d0, om);
  if (!(q > 0.0)) throw ZeroDenominator("d0' Omega d0 is not positive");
  return std::sqrt(q);
}

}  // namespace

TestResult shrinkage_test(const ShrinkageAnalysis& a, OmegaVariant variant) {
  if (variant == OmegaVariant::POPULATION)
    throw std::invalid_argument("shrinkage_test: use HAT or TILDE");
  if (a.decomp.b_den == 0.0) throw ZeroDenominator("B_hat = 0");
  const double t = std::sqrt(static_cast<double>(a.n)) * a.decomp.a_num / null_sd(a, variant);
  return make_result(t, RefDist::NORMAL);
}

TestResult test_shrinkage(const SampleFit& f, const PortfolioWeights& w0, double gamma) {
  return shrinkage_test(analyze_shrinkage(f, w0, gamma), OmegaVariant::HAT);
}

TestResult test_shrinkage(const MomentEstimates& m, const PortfolioWeights& w0, double gamma) {
  return test_shrinkage(fit_sample(m), w0, gamma);
}

TestResult test_shrinkage_tilde(const SampleFit& f, const PortfolioWeights& w0, double gamma) {
  return shrinkage_test(analyze_shrinkage(f, w0, gamma), OmegaVariant::TILDE);
}

TestResult test_shrinkage_tilde(const MomentEstimates& m, const PortfolioWeights& w0,
                                double gamma) {
  return test_shrinkage_tilde(fit_sample(m), w0, gamma);
}

ConfidenceInterval shrinkage_ci(const ShrinkageAnalysis& a, double level, CiVariant variant) {
  if (!(level > 0.0 && level < 1.0)) throw std::domain_error("level must lie in (0, 1)");
  double sd;
  switch (variant) {
    case CiVariant::HAT:
      sd = null_sd(a, OmegaVariant::HAT);
      break;
    case CiVariant::TILDE:
      sd = null_sd(a, OmegaVariant::TILDE);
      break;
    default:
      sd = std::sqrt(guarded_quadratic(a.sens.d, a.omega_hat.omega));
      break;
  }
  const double z = normal_quantile(0.5 + 0.5 * level);
  ConfidenceInterval ci;
  ci.level = level;
  ci.center = a.decomp.alpha;
  ci.half_width = z * sd / (std::sqrt(static_cast<double>(a.n)) * std::abs(a.decomp.b_den));
  return ci;
}

ConfidenceInterval shrinkage_ci(const SampleFit& f, const PortfolioWeights& w0, double gamma,
                                double level, CiVariant variant) {
  return shrinkage_ci(analyze_shrinkage(f, w0, gamma), level, variant);
}

}  // namespace hdeu
