#include "hdeu/theory.hpp"

#include <cmath>
#include <stdexcept>

#include "hdeu/errors.hpp"

namespace hdeu {

namespace {

void check_open_c(double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::domain_error("c must lie in (0, 1)");
}

void check_c(double c) {
  if (!(c >= 0.0 && c < 1.0)) throw std::domain_error("c must lie in [0, 1)");
}

}  // namespace

MpMoments mp_moments(double c) {
  check_open_c(c);
  const double k = 1.0 / (1.0 - c);
  return MpMoments{1.0, 1.0 + c, k, k * k * k};
}

double mp_moment_quadrature(double c, int power) {
  check_open_c(c);
  const double sq = std::sqrt(c);
  const double lo = (1.0 - sq) * (1.0 - sq);
  const double hi = (1.0 + sq) * (1.0 + sq);
  const double pi = 3.14159265358979323846;
  // z = mid + half cos(theta) removes the square-root endpoint behaviour:
  // sqrt((hi - z)(z - lo)) dz = half^2 sin^2(theta) dtheta.
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const int n = 4000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double th = pi * (i + 0.5) / n;  // midpoint rule, spectrally accurate here
    const double z = mid + half * std::cos(th);
    const double sn = std::sin(th);
    acc += std::pow(z, power - 1) * half * half * sn * sn;
  }
  acc *= pi / n;
  return acc / (2.0 * pi * c);
}

Mat4 lambda_matrix(double c) {
  check_open_c(c);
  const double k = 1.0 / (1.0 - c);
  const double l2 = -c * k;
  const double l3 = c * k * k * k;
  Mat4 m;
  m << c, l2, l2, l2,
       l2, l3, l3, l3,
       l2, l3, l3, l3,
       l2, l3, l3, l3;
  return m;
}

Eigen::Vector3d lambda_from_moments(double c) {
  const MpMoments m = mp_moments(c);
  return Eigen::Vector3d(m.m2 - m.m1 * m.m1, 1.0 - m.m1 * m.minv1, m.minv2 - m.minv1 * m.minv1);
}

Mat4 theta_matrix(const Vec& m1, const Vec& m2, const Vec& m3) {
  if (m1.size() != m2.size() || m2.size() != m3.size())
    throw std::invalid_argument("theta_matrix: size mismatch");
  for (const Vec* v : {&m1, &m2, &m3})
    if (std::abs(v->norm() - 1.0) > kTol.unit_norm)
      throw NormViolation("theta_matrix: inputs must have unit norm");
  const double a = m1.dot(m2);
  const double b = m1.dot(m3);
  const double g = m2.dot(m3);
  Mat4 t;
  t << 1.0,   a * a, a * b,             b * b,
       a * a, 1.0,   g,                 g * g,
       a * b, g,     0.5 + 0.5 * g * g, g,
       b * b, g * g, g,                 1.0;
  return t;
}

Mat4 lemma_one_covariance(const Mat4& theta, double c) {
  return (2.0 / c) * theta.cwiseProduct(lambda_matrix(c));
}

LemmaTwoOracle xi_matrix(const FrontierStats& fs, double c) {
  check_c(c);
  if (!(fs.v_gmv > 0.0)) throw std::domain_error("xi_matrix: V_GMV must be positive");
  const double r = fs.r_gmv;
  const double v = fs.v_gmv;
  const double rb = fs.r_b;
  const double vb = fs.v_b;
  const double k = 1.0 / (1.0 - c);
  const double k3 = 2.0 * k * k * k;
  const double ss = fs.s + r * r / v + 1.0;
  Mat5 x;
  x << k * k * k / v * (ss + r * r / v), k3 * r / (v * v), k3 * r * ss / v, k, -2.0 * rb * k,
       k3 * r / (v * v), k3 / (v * v), k3 * r * r / (v * v), 0.0, -2.0 * k,
       k3 * r * ss / v, k3 * r * r / (v * v), k3 * (ss * ss + c - 1.0), 2.0 * rb * k, -2.0 * rb * rb * k,
       k, 0.0, 2.0 * rb * k, vb, 0.0,
       -2.0 * rb * k, -2.0 * k, -2.0 * rb * rb * k, 0.0, 2.0 * vb * vb;
  return LemmaTwoOracle{x, ss};
}

Mat5 delta_transform(const FrontierStats& fs, const DeltaIntermediates& est, double c) {
  check_c(c);
  const double r = fs.r_gmv;
  const double v = fs.v_gmv;
  const double a = (1.0 - c) * est.v_c_hat;
  Mat5 d = Mat5::Zero();
  d(0, 0) = a;
  d(0, 1) = -a * r;
  d(1, 1) = -a * v;
  // Plus between the two ratios: with a minus, D Xi D' no longer equals
  // Omega_alpha (the entry would vanish at population values).
  d(2, 0) = -a * (r / v + est.r_gmv_hat / est.v_c_hat);
  d(2, 1) = a * r * r / v;
  d(2, 2) = 1.0 - c;
  d(3, 3) = 1.0;
  d(4, 4) = 1.0;
  return d;
}

Vec5 lemma_two_h(const SampleFit& f, const ModelParams& params, const PrecisionBundle& pop,
                 const PortfolioWeights& b) {
  const MomentEstimates& m = f.moments;
  const double c = m.c_n;
  const double k = 1.0 / (1.0 - c);
  const Vec p1 = f.bundle.precision.rowwise().sum();
  const Vec p1_pop = pop.precision.rowwise().sum();
  Vec5 h;
  h(0) = p1.dot(m.mean) - k * p1_pop.dot(params.mu);
  h(1) = f.bundle.ones_quadform - k * pop.ones_quadform;
  h(2) = quad_form(m.mean, f.bundle.precision, m.mean) -
         k * quad_form(params.mu, pop.precision, params.mu) - c * k;
  h(3) = b.w.dot(m.mean) - b.w.dot(params.mu);
  h(4) = quad_form(b.w, m.cov, b.w) - quad_form(b.w, params.sigma, b.w);
  return h;
}

Vec5 theorem_one_t(const EstimatedStats& est, const FrontierStats& fs) {
  Vec5 t;
  t << est.r_gmv_hat - fs.r_gmv, est.v_c_hat - fs.v_gmv, est.s_c_hat - fs.s,
      est.r_b_hat - fs.r_b, est.v_b_hat - fs.v_b;
  return t;
}

}  // namespace hdeu
