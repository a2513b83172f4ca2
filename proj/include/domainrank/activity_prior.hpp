#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "domainrank/dataset.hpp"
#include "domainrank/distance_sampler.hpp"

namespace domainrank {

// Smoothed estimate of P[x active | d(x, L) = delta]: the base rate times the
// Gaussian-KDE ratio of active to background distance densities, clipped to
// [0,1] and projected to a non-increasing sequence.
struct PriorCurve {
  Eigen::VectorXd grid;  // increasing, spanning [0,1]
  Eigen::VectorXd prob;  // non-increasing, in [0,1]
  double gamma = 0.0;
  double base_rate = 0.0;

  std::size_t n_active_samples = 0;
  std::size_t n_background_samples = 0;
  bool calibration_converged = true;
  int masked_points = 0;       // grid points with vanishing background density
  double residual_at_zero = 0;  // |1 - prob(0)| before projection, reported only
};

// Gaussian KDE of the sample evaluated at each grid point:
// (1/(n*gamma*sqrt(2*pi))) * sum_i exp(-(g - s_i)^2 / (2*gamma^2)).
Eigen::ArrayXd kde_eval(const Eigen::ArrayXd& samples, double gamma,
                        const Eigen::ArrayXd& grid);

enum class BaseRateMode { kCounts, kLimit };

// Counts mode returns n/n' from the labelled set's screened_count. Limit mode
// evaluates the background/active KDE density ratio at delta = 0 with a
// rule-of-thumb bandwidth; the result is clamped into (0,1).
double estimate_base_rate(BaseRateMode mode, const LabelledSet& labelled,
                          const DistanceSample& active_sample,
                          const DistanceSample& background_sample);

struct CalibrationResult {
  double gamma = 0.0;
  bool converged = false;
  double achieved = 0.0;  // base_rate * ratio at delta = 0 for the returned gamma
};

// Binary search over gamma in [1e-3, 1] for base_rate * kde_a(0)/kde_b(0) = 1
// (tolerance 1e-4, at most 60 bisection steps). Without a bracketing root the
// scanned gamma minimizing the residual is returned, flagged as unconverged.
CalibrationResult calibrate_bandwidth(const DistanceSample& active_sample,
                                      const DistanceSample& background_sample,
                                      double base_rate);

// 101 equispaced points on [0,1].
Eigen::VectorXd default_prior_grid();

PriorCurve fit_prior_curve(const DistanceSample& active_sample,
                           const DistanceSample& background_sample, double gamma,
                           double base_rate, const Eigen::VectorXd& grid);

// Linear interpolation on the grid, constant beyond the ends, clamped to
// [0,1]. delta outside [0,1] raises DomainError.
double prob_active(const PriorCurve& curve, double delta);

void save_prior(const PriorCurve& curve, const std::filesystem::path& csv_path,
                const std::filesystem::path& json_path);
PriorCurve load_prior(const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path);

}  // namespace domainrank
