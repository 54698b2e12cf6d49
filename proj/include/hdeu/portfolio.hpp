#pragma once

#include "hdeu/config.hpp"
#include "hdeu/statcore.hpp"

namespace hdeu {

/// True model: mean, covariance, risk aversion (kGmvGamma for GMV).
struct ModelParams {
  Vec mu;
  Mat sigma;
  double gamma = 1.0;

  /// Throws std::invalid_argument on bad shapes or gamma, NotPositiveDefinite
  /// when sigma has no Cholesky factor.
  void validate() const;
};

enum class WeightKind { GMV, EU, PLUGIN_EU, SHRINKAGE, TARGET };

struct PortfolioWeights {
  Vec w;
  WeightKind kind = WeightKind::TARGET;

  Index size() const { return w.size(); }
};

/// Checks that the weights are finite and sum to one.
PortfolioWeights make_weights(Vec w, WeightKind kind = WeightKind::TARGET);

PortfolioWeights equal_weights(Index p);

/// Population characteristics of the frontier and of a target portfolio b.
struct FrontierStats {
  double r_gmv = 0.0;
  double v_gmv = 0.0;
  double s = 0.0;
  double r_b = 0.0;
  double v_b = 0.0;
};

/// Sample counterparts; the *_c fields are the high-dimensional corrections.
struct EstimatedStats {
  double r_gmv_hat = 0.0;
  double v_gmv_hat = 0.0;
  double v_c_hat = 0.0;
  double s_hat = 0.0;
  double s_c_hat = 0.0;
  double r_b_hat = 0.0;
  double v_b_hat = 0.0;
  double c_n = 0.0;
};

/// Sample moments plus their precision bundle, so that several estimators
/// can share one factorization.
struct SampleFit {
  MomentEstimates moments;
  PrecisionBundle bundle;
};

SampleFit fit_sample(const MomentEstimates& m);

PortfolioWeights gmv_weights(const PrecisionBundle& pb);
PortfolioWeights eu_weights(const ModelParams& params, const PrecisionBundle& pb);
PortfolioWeights eu_weights(const ModelParams& params);

/// EU weights evaluated at (x_bar, Sigma_hat).
PortfolioWeights plugin_eu_weights(const MomentEstimates& m, double gamma);
PortfolioWeights plugin_eu_weights(const SampleFit& f, double gamma);

FrontierStats frontier_stats(const ModelParams& params, const PrecisionBundle& pb,
                             const PortfolioWeights& b);
FrontierStats frontier_stats(const ModelParams& params, const PortfolioWeights& b);

EstimatedStats estimated_stats(const SampleFit& f, const PortfolioWeights& b);
EstimatedStats estimated_stats(const MomentEstimates& m, const PortfolioWeights& b);

/// Population eta_L = L Q mu / s. Throws DegenerateSlope when s vanishes.
Vec eta_population(const ModelParams& params, const PrecisionBundle& pb, const Mat& l);

/// Consistent eta_{L;c} = ((s_c + c)/s_c) L Q_hat x_bar / s_hat. With
/// `truncate`, s_c is floored at zero before the ratio is formed.
Vec eta_consistent(const SampleFit& f, const Mat& l, bool truncate = false);
Vec eta_consistent(const MomentEstimates& m, const Mat& l, bool truncate = false);

}  // namespace hdeu
