#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace domainrank {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Regularized incomplete beta I_x(a,b), continued fraction per Lentz.
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  // Swap for the better-converging tail: I_x(a,b) = 1 - I_{1-x}(b,a).
  if (x > (a + 1.0) / (a + b + 2.0))
    return 1.0 - incomplete_beta(b, a, 1.0 - x);

  const double log_front = a * std::log(x) + b * std::log1p(-x) -
                           std::log(a) -
                           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));

  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-14;
  double c = 1.0;
  double d = 1.0;
  double h = 1.0;
  for (int m = 0; m <= 400; ++m) {
    double numerator;
    if (m == 0) {
      numerator = 1.0;
    } else if (m % 2 == 0) {
      const double k = m / 2.0;
      numerator = k * (b - k) * x / ((a + 2.0 * k - 1.0) * (a + 2.0 * k));
    } else {
      const double k = (m - 1.0) / 2.0;
      numerator = -(a + k) * (a + b + k) * x / ((a + 2.0 * k) * (a + 2.0 * k + 1.0));
    }
    d = 1.0 + numerator * d;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + numerator / c;
    if (std::abs(c) < tiny) c = tiny;
    const double delta = c * d;
    h *= delta;
    if (m > 0 && std::abs(delta - 1.0) < eps) break;
  }
  return std::exp(log_front) * (h - 1.0);
}

// CDF of the standard Student-t with df degrees of freedom.
inline double student_t_cdf(double x, double df) {
  if (!std::isfinite(x)) return x > 0 ? 1.0 : 0.0;
  const double z = df / (df + x * x);
  const double p = 0.5 * incomplete_beta(0.5 * df, 0.5, z);
  return x >= 0.0 ? 1.0 - p : p;
}

inline double student_t_logpdf(double x, double df, double loc, double scale) {
  const double z = (x - loc) / scale;
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
         0.5 * std::log(df * std::numbers::pi) - std::log(scale) -
         0.5 * (df + 1.0) * std::log1p(z * z / df);
}

inline double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

// Sample standard deviation (n-1 denominator).
inline double sample_sd(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(n - 1));
}

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Silverman's rule-of-thumb bandwidth for a Gaussian KDE.
inline double silverman_bandwidth(const Eigen::VectorXd& sample) {
  const Eigen::Index n = sample.size();
  if (n < 2) return 1.0;
  std::vector<double> sorted(sample.data(), sample.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double sd = sample_sd(sample);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.349);
  if (spread <= 0.0) spread = std::max(sd, 1e-3);
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

}  // namespace domainrank
