#include "superlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "superlab/error.hpp"
#include "superlab/rng.hpp"

namespace superlab {

Estimate mean_estimate(const std::vector<double>& x) {
  Estimate e;
  e.n = x.size();
  if (x.empty()) return e;
  double s = 0.0;
  for (double v : x) s += v;
  e.value = s / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - e.value) * (v - e.value);
    e.stderr_ = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  }
  return e;
}

Estimate variance_estimate(const std::vector<double>& x) {
  Estimate e;
  e.n = x.size();
  if (x.size() < 2) return e;
  const double n = static_cast<double>(x.size());
  const double m = mean_estimate(x).value;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  e.value = m2 * n / (n - 1.0);
  e.stderr_ = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return e;
}

Estimate correlation_estimate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw PreconditionError("correlation: sample sizes differ");
  Estimate e;
  e.n = x.size();
  if (x.size() < 4) return e;
  const double mx = mean_estimate(x).value, my = mean_estimate(y).value;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  e.value = sxy / std::sqrt(sxx * syy);
  e.stderr_ = (1.0 - e.value * e.value) / std::sqrt(static_cast<double>(x.size()) - 3.0);
  return e;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_distance_normal(std::vector<double> x) {
  if (x.empty()) throw PreconditionError("ks_distance_normal: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = normal_cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

NullCalibration calibrate_ks_null(std::size_t n, int samples, std::uint64_t seed) {
  if (n == 0 || samples < 2) throw PreconditionError("calibrate_ks_null: need n >= 1 and samples >= 2");
  NullCalibration c;
  c.n = n;
  c.samples = samples;
  std::vector<double> d;
  std::vector<double> x(n);
  for (int s = 0; s < samples; ++s) {
    Rng rng(seed, static_cast<std::uint64_t>(s));
    for (auto& v : x) v = rng.normal();
    d.push_back(ks_distance_normal(x));
  }
  std::sort(d.begin(), d.end());
  const double pos = 0.99 * static_cast<double>(samples - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, d.size() - 1);
  c.quantile99 = d[lo] + (pos - static_cast<double>(lo)) * (d[hi] - d[lo]);
  c.threshold = 1.5 * c.quantile99;
  return c;
}

}  // namespace superlab
