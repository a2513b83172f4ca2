#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "domainrank/dataset.hpp"

namespace domainrank {

// Equal-weight average of a normal fit (moments) and a Student-t fit (maximum
// likelihood) to the active-compound activities; the t component carries the
// heavy right tail the data show.
struct MixtureDistribution {
  double normal_mean = 0.0;
  double normal_sd = 1.0;
  double t_df = 10.0;
  double t_loc = 0.0;
  double t_scale = 1.0;

  bool normal_only = false;            // t fit failed; flagged fallback
  bool robust_standardization = false;  // df <= 2: median/IQR moments

  // Location/scale used to standardize the fitted mixture: analytic mean and
  // standard deviation when they exist, median and IQR/1.349 otherwise.
  double standard_location = 0.0;
  double standard_scale = 1.0;

  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double q) const;
};

MixtureDistribution fit_mixture(const Eigen::VectorXd& activities,
                                std::uint64_t seed = 0);

// P[Y >= threshold] for Y = mu + sigma * Z, where Z is the fitted mixture
// standardized to zero location and unit scale. Reduces internally to
// tail_prob(dist, 0, 1, (threshold - mu)/sigma).
double tail_prob(const MixtureDistribution& dist, double mu, double sigma,
                 double threshold);

void save_mixture(const MixtureDistribution& dist, const std::filesystem::path& json_path);
MixtureDistribution load_mixture(const std::filesystem::path& json_path);

// Density curve over [lo, hi] for plot overlays.
void write_density_csv(const MixtureDistribution& dist,
                       const std::filesystem::path& path, double lo, double hi,
                       int n_points = 200);

}  // namespace domainrank
