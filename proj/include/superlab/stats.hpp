#pragma once

// Ensemble statistics with standard errors, and the empirical-CDF normality check.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace superlab {

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Sample mean and its standard error.
Estimate mean_estimate(const std::vector<double>& x);

/// Unbiased sample variance; the standard error uses the fourth central moment.
Estimate variance_estimate(const std::vector<double>& x);

/// Pearson correlation; the standard error is (1 - r^2)/sqrt(n - 3), the Fisher approximation.
Estimate correlation_estimate(const std::vector<double>& x, const std::vector<double>& y);

double normal_cdf(double z);

/// sup_z |F_n(z) - Phi(z)|.
double ks_distance_normal(std::vector<double> x);

struct NullCalibration {
  std::size_t n = 0;
  int samples = 0;
  double quantile99 = 0.0;
  double threshold = 0.0;  ///< 1.5 * quantile99
};

/// 99th percentile of the distance over `samples` standard normal samples of size n.
NullCalibration calibrate_ks_null(std::size_t n, int samples = 200, std::uint64_t seed = 0x5eed5eedULL);

}  // namespace superlab
