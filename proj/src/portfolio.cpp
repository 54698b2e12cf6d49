#include "hdeu/portfolio.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hdeu/errors.hpp"

namespace hdeu {

void ModelParams::validate() const {
  const Index p = mu.size();
  if (p < 1 || sigma.rows() != p || sigma.cols() != p)
    throw std::invalid_argument("ModelParams: shape mismatch");
  if (!(gamma > 0.0) || std::isnan(gamma))
    throw std::invalid_argument("ModelParams: gamma must be positive or infinity");
  if (!mu.allFinite() || !sigma.allFinite())
    throw std::invalid_argument("ModelParams: non-finite entry");
  Eigen::LLT<Mat> llt(symmetrize(sigma));
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("ModelParams: sigma is not positive definite");
}

PortfolioWeights make_weights(Vec w, WeightKind kind) {
  if (w.size() < 1) throw std::invalid_argument("weights: empty vector");
  if (!w.allFinite()) throw std::invalid_argument("weights: non-finite entry");
  const double scale = std::max(1.0, w.lpNorm<1>());
  const double err = std::abs(w.sum() - 1.0);
  if (err > kTol.weight_sum * scale)
    throw std::invalid_argument("weights must sum to 1 (deviation " + std::to_string(err) + ")");
  return PortfolioWeights{std::move(w), kind};
}

PortfolioWeights equal_weights(Index p) {
  if (p < 1) throw std::invalid_argument("equal_weights: p must be positive");
  return PortfolioWeights{Vec::Constant(p, 1.0 / static_cast<double>(p)), WeightKind::TARGET};
}

SampleFit fit_sample(const MomentEstimates& m) { return SampleFit{m, precision_bundle(m)}; }

PortfolioWeights gmv_weights(const PrecisionBundle& pb) {
  Vec w = pb.precision.rowwise().sum() / pb.ones_quadform;
  return make_weights(std::move(w), WeightKind::GMV);
}

namespace {

Vec eu_vector(const PrecisionBundle& pb, const Vec& mean, double gamma) {
  Vec w = pb.precision.rowwise().sum() / pb.ones_quadform;
  if (!is_gmv(gamma)) w += (pb.q * mean) / gamma;
  return w;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || std::isnan(gamma))
    throw std::invalid_argument("gamma must be positive or infinity");
}

}  // namespace

PortfolioWeights eu_weights(const ModelParams& params, const PrecisionBundle& pb) {
  check_gamma(params.gamma);
  if (is_gmv(params.gamma)) return gmv_weights(pb);
  return make_weights(eu_vector(pb, params.mu, params.gamma), WeightKind::EU);
}

PortfolioWeights eu_weights(const ModelParams& params) {
  return eu_weights(params, precision_bundle(params.sigma));
}

PortfolioWeights plugin_eu_weights(const SampleFit& f, double gamma) {
  check_gamma(gamma);
  return make_weights(eu_vector(f.bundle, f.moments.mean, gamma), WeightKind::PLUGIN_EU);
}

PortfolioWeights plugin_eu_weights(const MomentEstimates& m, double gamma) {
  return plugin_eu_weights(fit_sample(m), gamma);
}

FrontierStats frontier_stats(const ModelParams& params, const PrecisionBundle& pb,
                             const PortfolioWeights& b) {
  if (b.size() != params.mu.size()) throw std::invalid_argument("frontier_stats: size mismatch");
  FrontierStats fs;
  const Vec p1 = pb.precision.rowwise().sum();
  fs.v_gmv = 1.0 / pb.ones_quadform;
  fs.r_gmv = p1.dot(params.mu) / pb.ones_quadform;
  fs.s = std::max(0.0, quad_form(params.mu, pb.q, params.mu));
  fs.r_b = b.w.dot(params.mu);
  fs.v_b = quad_form(b.w, params.sigma, b.w);
  return fs;
}

FrontierStats frontier_stats(const ModelParams& params, const PortfolioWeights& b) {
  return frontier_stats(params, precision_bundle(params.sigma), b);
}

EstimatedStats estimated_stats(const SampleFit& f, const PortfolioWeights& b) {
  const MomentEstimates& m = f.moments;
  if (b.size() != m.p) throw std::invalid_argument("estimated_stats: size mismatch");
  const PrecisionBundle& pb = f.bundle;
  EstimatedStats e;
  e.c_n = m.c_n;
  const Vec p1 = pb.precision.rowwise().sum();
  e.r_gmv_hat = p1.dot(m.mean) / pb.ones_quadform;
  e.v_gmv_hat = 1.0 / pb.ones_quadform;
  e.v_c_hat = e.v_gmv_hat / (1.0 - m.c_n);
  e.s_hat = quad_form(m.mean, pb.q, m.mean);
  e.s_c_hat = (1.0 - m.c_n) * e.s_hat - m.c_n;
  e.r_b_hat = b.w.dot(m.mean);
  e.v_b_hat = quad_form(b.w, m.cov, b.w);
  return e;
}

EstimatedStats estimated_stats(const MomentEstimates& m, const PortfolioWeights& b) {
  return estimated_stats(fit_sample(m), b);
}

Vec eta_population(const ModelParams& params, const PrecisionBundle& pb, const Mat& l) {
  if (l.cols() != params.mu.size()) throw std::invalid_argument("eta: L has wrong width");
  const double s = quad_form(params.mu, pb.q, params.mu);
  if (std::abs(s) < kTol.slope_epsilon)
    throw DegenerateSlope("eta_L undefined: s = mu'Q mu vanishes");
  return l * (pb.q * params.mu) / s;
}

Vec eta_consistent(const SampleFit& f, const Mat& l, bool truncate) {
  const MomentEstimates& m = f.moments;
  if (l.cols() != m.p) throw std::invalid_argument("eta: L has wrong width");
  const Vec qx = f.bundle.q * m.mean;
  const double s_hat = m.mean.dot(qx);
  double s_c = (1.0 - m.c_n) * s_hat - m.c_n;
  if (truncate) s_c = std::max(s_c, 0.0);
  if (std::abs(s_c) < kTol.slope_epsilon || std::abs(s_hat) < kTol.slope_epsilon)
    throw DegenerateSlope("eta_{L;c} undefined: consistent slope estimate vanishes");
  return ((s_c + m.c_n) / s_c) * (l * qx) / s_hat;
}

Vec eta_consistent(const MomentEstimates& m, const Mat& l, bool truncate) {
  return eta_consistent(fit_sample(m), l, truncate);
}

}  // namespace hdeu
