#include "hdeu/shrinkage.hpp"

#include <cmath>
#include <stdexcept>

#include "hdeu/errors.hpp"

namespace hdeu {

namespace {

void check_c(double c) {
  if (!(c >= 0.0 && c < 1.0)) throw std::domain_error("concentration ratio must lie in [0, 1)");
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || std::isnan(gamma))
    throw std::invalid_argument("gamma must be positive or infinity");
}

// Shared by the limiting and the estimated intensity so that both agree
// exactly when fed the same five numbers.
IntensityDecomposition intensity_from(double r, double v, double s, double rb, double vb,
                                      double gamma, double c) {
  check_c(c);
  check_gamma(gamma);
  const double k = 1.0 / (1.0 - c);
  IntensityDecomposition out;
  double scale;
  if (is_gmv(gamma)) {
    out.a_num = (1.0 - c) * (vb - v);
    out.b_den = (1.0 - c) * (vb - v) + c * v;
    scale = std::abs((1.0 - c) * vb) + std::abs((1.0 - c) * v) + std::abs(c * v);
  } else {
    const double gi = 1.0 / gamma;
    out.a_num = (r - rb) * (1.0 + k) + gamma * (vb - v) + gi * k * s;
    const double t1 = k * v;
    const double t2 = -2.0 * (v + gi * k * (rb - r));
    const double t3 = gi * gi * (s * k * k * k + c * k * k * k);
    const double den = t1 + t2 + t3 + vb;
    out.b_den = gamma * den;
    scale = gamma * (std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(vb));
  }
  if (!(std::abs(out.b_den) > kTol.denominator * std::max(scale, 1e-300)))
    throw ZeroDenominator("shrinkage intensity denominator vanishes");
  out.alpha = out.a_num / out.b_den;
  return out;
}

}  // namespace

double oracle_intensity(const ModelParams& params, const PortfolioWeights& w_hat,
                        const PortfolioWeights& b) {
  if (w_hat.size() != b.size() || b.size() != params.mu.size())
    throw std::invalid_argument("oracle_intensity: size mismatch");
  const Vec diff = w_hat.w - b.w;
  if (diff.cwiseAbs().maxCoeff() == 0.0)
    throw ZeroDirection("oracle_intensity: w_hat equals b");
  const Vec sb = params.sigma * b.w;
  // For GMV the mean term drops out after dividing the objective by gamma.
  const double num = is_gmv(params.gamma) ? -diff.dot(sb)
                                          : diff.dot(params.mu) - params.gamma * diff.dot(sb);
  return num / quad_form(diff, params.sigma, diff);
}

IntensityDecomposition limiting_intensity(const FrontierStats& fs, double gamma, double c) {
  return intensity_from(fs.r_gmv, fs.v_gmv, fs.s, fs.r_b, fs.v_b, gamma, c);
}

IntensityDecomposition estimated_intensity(const EstimatedStats& est, double gamma, double c_n) {
  return intensity_from(est.r_gmv_hat, est.v_c_hat, est.s_c_hat, est.r_b_hat, est.v_b_hat, gamma,
                        c_n);
}

PortfolioWeights bfgse_weights(const PortfolioWeights& w_hat, const PortfolioWeights& b,
                               double alpha_hat) {
  if (w_hat.size() != b.size()) throw std::invalid_argument("bfgse_weights: size mismatch");
  if (!std::isfinite(alpha_hat)) throw std::invalid_argument("bfgse_weights: alpha not finite");
  return make_weights(alpha_hat * w_hat.w + (1.0 - alpha_hat) * b.w, WeightKind::SHRINKAGE);
}

namespace {

Vec5 d_at(double r, double gamma, double c) {
  const double k = 1.0 / (1.0 - c);
  Vec5 d;
  if (is_gmv(gamma)) {
    // Gradient of (1-c)(V_b - V) - r[(1-c)(V_b - V) + cV].
    d << 0.0, -(1.0 - c) - r * (2.0 * c - 1.0), 0.0, 0.0, (1.0 - c) * (1.0 - r);
    return d;
  }
  d(0) = 1.0 + k * (1.0 - 2.0 * r);
  d(1) = -gamma * (1.0 + r * (k - 2.0));
  d(2) = (k / gamma) * (1.0 - k * k * r);
  d(3) = -1.0 - k * (1.0 - 2.0 * r);
  d(4) = gamma * (1.0 - r);
  return d;
}

Mat5 omega_from(double r, double v, double s, double rb, double vb, double c) {
  check_c(c);
  const double k = 1.0 / (1.0 - c);
  const double delta = rb - r;
  Mat5 o = Mat5::Zero();
  o(0, 0) = v * (s + 1.0) * k;
  o(0, 3) = v;
  o(0, 4) = -2.0 * v * delta;
  o(1, 1) = 2.0 * v * v * k;
  o(1, 4) = 2.0 * v * v;
  o(2, 2) = 2.0 * ((s + 1.0) * (s + 1.0) + c - 1.0) * k;
  o(2, 3) = 2.0 * delta;
  o(2, 4) = -2.0 * delta * delta;
  o(3, 3) = vb;
  o(4, 4) = 2.0 * vb * vb;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < i; ++j) o(i, j) = o(j, i);
  return o;
}

}  // namespace

SensitivityVector sensitivity_vectors(const IntensityDecomposition& decomp, double gamma,
                                      double c_n) {
  check_c(c_n);
  check_gamma(gamma);
  if (decomp.b_den == 0.0) throw ZeroDenominator("sensitivity_vectors: B = 0");
  SensitivityVector sv;
  sv.c_n = c_n;
  sv.gamma = gamma;
  sv.d = d_at(decomp.a_num / decomp.b_den, gamma, c_n);
  sv.d0 = d_at(0.0, gamma, c_n);
  return sv;
}

OmegaAlpha omega_alpha(const FrontierStats& fs, double c) {
  return OmegaAlpha{omega_from(fs.r_gmv, fs.v_gmv, fs.s, fs.r_b, fs.v_b, c),
                    OmegaVariant::POPULATION};
}

OmegaAlpha omega_alpha(const EstimatedStats& est, double c, OmegaVariant variant, double gamma) {
  double s = est.s_c_hat;
  if (variant == OmegaVariant::TILDE) {
    check_gamma(gamma);
    if (!is_gmv(gamma)) s = gamma * (est.r_b_hat - est.r_gmv_hat);
  } else if (variant == OmegaVariant::POPULATION) {
    throw std::invalid_argument("omega_alpha: POPULATION needs FrontierStats");
  }
  return OmegaAlpha{omega_from(est.r_gmv_hat, est.v_c_hat, s, est.r_b_hat, est.v_b_hat, c),
                    variant};
}

double guarded_quadratic(const Vec5& v, const Mat5& omega) {
  const double q = v.dot(omega * v);
  if (std::isnan(q)) throw NegativeVariance("variance is not a number");
  if (q < -kTol.negative_variance) throw NegativeVariance("negative asymptotic variance");
  return std::max(q, 0.0);
}

double intensity_variance(const IntensityDecomposition& decomp, const SensitivityVector& sens,
                          const OmegaAlpha& omega) {
  if (decomp.b_den == 0.0) throw ZeroDenominator("intensity_variance: B = 0");
  return guarded_quadratic(sens.d, omega.omega) / (decomp.b_den * decomp.b_den);
}

double gmv_intensity_variance(const FrontierStats& fs, double c, GmvVarianceReading reading) {
  check_c(c);
  if (!(fs.v_gmv > 0.0)) throw std::domain_error("gmv_intensity_variance: V_GMV must be positive");
  const double lb = fs.v_b / fs.v_gmv - 1.0;
  const double base = reading == GmvVarianceReading::RELATIVE_VARIANCE ? lb : fs.r_b;
  const double den = std::pow((1.0 - c) * base + c, 4);
  if (den == 0.0) throw ZeroDenominator("gmv_intensity_variance: denominator vanishes");
  return 2.0 * (1.0 - c) * c * c * (lb + 1.0) * ((2.0 - c) * lb + c) / den;
}

}  // namespace hdeu
