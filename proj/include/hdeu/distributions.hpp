#pragma once

#include <vector>

namespace hdeu {

double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate for large x.
double normal_sf(double x);
double normal_quantile(double q);

double chi2_cdf(double x, double k);
/// Upper tail probability of the central chi-square.
double chi2_sf(double x, double k);
double chi2_quantile(double q, double k);

double noncentral_chi2_cdf(double x, double k, double lambda);
double noncentral_chi2_sf(double x, double k, double lambda);

/// One-sample Kolmogorov-Smirnov test against the standard normal.
struct KsResult {
  double statistic = 0.0;  // sup |F_n - Phi|
  double p_value = 1.0;    // asymptotic Kolmogorov distribution
  std::size_t n = 0;
};

KsResult ks_test_normal(std::vector<double> sample);

/// P(K > x) for the limiting Kolmogorov distribution.
double kolmogorov_sf(double x);

}  // namespace hdeu
