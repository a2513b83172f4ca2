#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "domainrank/dataset.hpp"
#include "domainrank/regressors.hpp"

namespace domainrank {

// Out-of-sample residual pairs at exclusion radius delta: each prediction
// comes from a model whose training set excludes the target and every
// compound within distance < delta of it.
struct DeltaBallResult {
  double delta = 0.0;
  std::vector<std::pair<double, double>> pairs;  // (y standardized, y_hat)
  std::vector<std::size_t> n_train_sizes;
  std::size_t n_targets_attempted = 0;
  std::size_t n_used = 0;
  std::size_t n_skipped = 0;
};

struct BetaEpsilon {
  double beta = 0.0;
  double epsilon = 0.0;
  bool degenerate = false;  // predictions had zero energy
};

// g(delta) = a / (1 + exp(-b * delta^c)) with a > 0, b < 0, c > 0: continuous,
// strictly decreasing and non-negative on [0,1].
struct SmoothCurve {
  double a = 1.0;
  double b = -1.0;
  double c = 1.0;
  std::vector<std::pair<double, double>> fitted_points;
  double rss = 0.0;
  bool poorly_identified = false;

  double eval(double delta) const;
};

struct DegradationCurves {
  SmoothCurve beta;
  // The smooth family is decreasing while the residual scale grows with
  // distance, so the fit runs on model strength 1 - epsilon_hat and the
  // epsilon accessor exposes the complement.
  SmoothCurve epsilon_strength;
  RegressorKind model_kind = RegressorKind::kRidge;

  std::vector<double> grid;  // usable deltas only
  std::vector<double> beta_points;
  std::vector<double> epsilon_points;
  std::vector<std::size_t> n_used;
  std::vector<std::size_t> n_skipped;
  bool grid_includes_endpoints = true;

  double beta_at(double delta) const { return beta.eval(delta); }
  double epsilon_at(double delta) const;
};

inline constexpr std::size_t kMinExclusionTrainSize = 50;

DeltaBallResult delta_ball_residuals(const LabelledSet& standardized,
                                     const RegressorSpec& spec, double delta,
                                     std::size_t max_targets, std::uint64_t seed,
                                     std::size_t min_train = kMinExclusionTrainSize);

// Through-origin least squares: beta = sum(y*yhat)/sum(yhat^2); epsilon is the
// root-mean-square of the residuals y - beta*yhat (n denominator).
BetaEpsilon fit_beta_epsilon(const DeltaBallResult& result);

// Constrained least squares over (a,b,c) in (0,10] x [-50,0) x (0,5] via
// seeded multistart simplex; needs at least 4 points.
SmoothCurve fit_smooth_curve(const std::vector<std::pair<double, double>>& points,
                             std::uint64_t seed = 0);

DegradationCurves build_degradation(const LabelledSet& standardized,
                                    const RegressorSpec& spec, std::uint64_t seed,
                                    int grid_size = 10, std::size_t max_targets = 500,
                                    std::size_t min_train = kMinExclusionTrainSize);

void save_degradation(const DegradationCurves& curves,
                      const std::filesystem::path& points_csv,
                      const std::filesystem::path& curves_json);
DegradationCurves load_degradation(const std::filesystem::path& points_csv,
                                   const std::filesystem::path& curves_json);

}  // namespace domainrank
