#include "domainrank/activity_prior.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/monotone.hpp"
#include "domainrank/parallel.hpp"
#include "domainrank/stats.hpp"

namespace domainrank {

namespace {

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double kde_at(const Eigen::ArrayXd& samples, double gamma, double point) {
  const double inv = 1.0 / (2.0 * gamma * gamma);
  const double sum = (-(samples - point).square() * inv).exp().sum();
  return sum / (static_cast<double>(samples.size()) * gamma *
                std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

Eigen::ArrayXd kde_eval(const Eigen::ArrayXd& samples, double gamma,
                        const Eigen::ArrayXd& grid) {
  if (samples.size() == 0) throw DomainError("KDE of an empty sample");
  if (gamma <= 0.0) throw DomainError("KDE bandwidth must be positive");
  Eigen::ArrayXd out(grid.size());
  parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t i) {
    out[static_cast<Eigen::Index>(i)] =
        kde_at(samples, gamma, grid[static_cast<Eigen::Index>(i)]);
  });
  return out;
}

double estimate_base_rate(BaseRateMode mode, const LabelledSet& labelled,
                          const DistanceSample& active_sample,
                          const DistanceSample& background_sample) {
  if (mode == BaseRateMode::kCounts) {
    if (!labelled.screened_count)
      throw ConfigError(
          "counts-mode base rate requires the screened library size; "
          "use limit mode when it is unknown");
    const auto n = static_cast<double>(labelled.size());
    const auto n_screened = static_cast<double>(*labelled.screened_count);
    if (n <= 0.0 || n_screened < n)
      throw DomainError("screened count must be at least the labelled count");
    return n / n_screened;
  }

  if (active_sample.values.empty() || background_sample.values.empty())
    throw DomainError("limit-mode base rate requires both distance samples");

  const Eigen::ArrayXd active = to_array(active_sample.values);
  const Eigen::ArrayXd background = to_array(background_sample.values);
  const double gamma = silverman_bandwidth(background.matrix());
  const double fa = kde_at(active, gamma, 0.0);
  const double fb = kde_at(background, gamma, 0.0);
  if (fa <= 0.0) return 1.0 - 1e-12;
  const double ratio = fb / fa;
  return std::clamp(ratio, 1e-12, 1.0 - 1e-12);
}

CalibrationResult calibrate_bandwidth(const DistanceSample& active_sample,
                                      const DistanceSample& background_sample,
                                      double base_rate) {
  if (active_sample.values.empty() || background_sample.values.empty())
    throw DomainError("bandwidth calibration requires both distance samples");

  const Eigen::ArrayXd active = to_array(active_sample.values);
  const Eigen::ArrayXd background = to_array(background_sample.values);

  // base_rate * f_a(0)/f_b(0); the probability curve reaches 1 at distance 0
  // when this equals 1.
  const auto normalized_at_zero = [&](double gamma) {
    const double fa = kde_at(active, gamma, 0.0);
    const double fb = kde_at(background, gamma, 0.0);
    if (fb < 1e-300) return std::numeric_limits<double>::infinity();
    return base_rate * fa / fb;
  };

  constexpr double lo = 1e-3, hi = 1.0;
  constexpr int n_scan = 33;

  std::vector<double> scan_gamma(n_scan), scan_value(n_scan);
  for (int i = 0; i < n_scan; ++i) {
    const double t = static_cast<double>(i) / (n_scan - 1);
    scan_gamma[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, t);
    scan_value[static_cast<std::size_t>(i)] =
        normalized_at_zero(scan_gamma[static_cast<std::size_t>(i)]);
  }

  CalibrationResult result;
  for (int i = 0; i + 1 < n_scan; ++i) {
    const double f0 = scan_value[static_cast<std::size_t>(i)] - 1.0;
    const double f1 = scan_value[static_cast<std::size_t>(i + 1)] - 1.0;
    if (!std::isfinite(f0) || !std::isfinite(f1)) continue;
    if (f0 == 0.0 || f0 * f1 < 0.0) {
      double a = scan_gamma[static_cast<std::size_t>(i)];
      double b = scan_gamma[static_cast<std::size_t>(i + 1)];
      double fa = f0;
      for (int it = 0; it < 60 && (b - a) > 1e-4; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = normalized_at_zero(mid) - 1.0;
        if (fa * fm <= 0.0)
          b = mid;
        else {
          a = mid;
          fa = fm;
        }
      }
      result.gamma = 0.5 * (a + b);
      result.converged = true;
      result.achieved = normalized_at_zero(result.gamma);
      return result;
    }
  }

  // No bracketing root: closest scanned gamma, smallest on ties.
  int best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_scan; ++i) {
    const double v = scan_value[static_cast<std::size_t>(i)];
    const double err = std::isfinite(v) ? std::abs(v - 1.0)
                                        : std::numeric_limits<double>::infinity();
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  result.gamma = scan_gamma[static_cast<std::size_t>(best)];
  result.converged = false;
  const double achieved = scan_value[static_cast<std::size_t>(best)];
  result.achieved = std::isfinite(achieved) ? achieved : 0.0;
  return result;
}

Eigen::VectorXd default_prior_grid() {
  return Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
}

PriorCurve fit_prior_curve(const DistanceSample& active_sample,
                           const DistanceSample& background_sample, double gamma,
                           double base_rate, const Eigen::VectorXd& grid) {
  if (grid.size() < 2) throw DomainError("prior grid needs at least 2 points");
  if (base_rate <= 0.0 || base_rate >= 1.0)
    throw DomainError("base rate must lie in (0,1)");

  const Eigen::ArrayXd fa = kde_eval(to_array(active_sample.values), gamma, grid.array());
  const Eigen::ArrayXd fb =
      kde_eval(to_array(background_sample.values), gamma, grid.array());

  PriorCurve curve;
  curve.grid = grid;
  curve.gamma = gamma;
  curve.base_rate = base_rate;
  curve.n_active_samples = active_sample.values.size();
  curve.n_background_samples = background_sample.values.size();

  const Eigen::Index n = grid.size();
  std::vector<bool> masked(static_cast<std::size_t>(n), false);
  Eigen::VectorXd raw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fb[i] < 1e-12) {
      masked[static_cast<std::size_t>(i)] = true;
      ++curve.masked_points;
      raw[i] = 0.0;
      continue;
    }
    raw[i] = std::clamp(base_rate * fa[i] / fb[i], 0.0, 1.0);
  }

  // Unmasked values, in grid order.
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!masked[static_cast<std::size_t>(i)]) kept.push_back(i);
  if (kept.empty())
    throw DomainError("background density vanishes on the whole grid");

  if (kept.front() == 0) {
    curve.residual_at_zero = std::abs(1.0 - raw[0]);
    raw[0] = std::max(raw[0], base_rate);
  }

  Eigen::VectorXd vals(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j)
    vals[static_cast<Eigen::Index>(j)] = raw[kept[j]];
  vals = isotonic_non_increasing(vals);

  // Write back and fill masked points by interpolation between unmasked
  // neighbours (constant at the ends); monotonicity is preserved.
  curve.prob = Eigen::VectorXd::Zero(n);
  for (std::size_t j = 0; j < kept.size(); ++j)
    curve.prob[kept[j]] = vals[static_cast<Eigen::Index>(j)];
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!masked[static_cast<std::size_t>(i)]) continue;
    const auto next = std::lower_bound(kept.begin(), kept.end(), i);
    if (next == kept.begin()) {
      curve.prob[i] = curve.prob[kept.front()];
    } else if (next == kept.end()) {
      curve.prob[i] = curve.prob[kept.back()];
    } else {
      const Eigen::Index right = *next;
      const Eigen::Index left = *(next - 1);
      const double t = (grid[i] - grid[left]) / (grid[right] - grid[left]);
      curve.prob[i] = curve.prob[left] + t * (curve.prob[right] - curve.prob[left]);
    }
  }

  for (Eigen::Index i = 1; i < n; ++i)
    curve.prob[i] = std::min(curve.prob[i], curve.prob[i - 1]);
  curve.prob = curve.prob.cwiseMax(0.0).cwiseMin(1.0);
  return curve;
}

double prob_active(const PriorCurve& curve, double delta) {
  if (delta < 0.0 || delta > 1.0)
    throw DomainError("prior evaluated outside [0,1]: " + std::to_string(delta));
  const Eigen::VectorXd& g = curve.grid;
  const Eigen::Index n = g.size();
  if (delta <= g[0]) return curve.prob[0];
  if (delta >= g[n - 1]) return curve.prob[n - 1];
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    if (g[mid] <= delta)
      lo = mid;
    else
      hi = mid;
  }
  const double t = (delta - g[lo]) / (g[hi] - g[lo]);
  const double p = curve.prob[lo] + t * (curve.prob[hi] - curve.prob[lo]);
  return std::clamp(p, 0.0, 1.0);
}

void save_prior(const PriorCurve& curve, const std::filesystem::path& csv_path,
                const std::filesystem::path& json_path) {
  csv::Writer w(csv_path, "delta,prob");
  for (Eigen::Index i = 0; i < curve.grid.size(); ++i)
    w.row({csv::format_double(curve.grid[i]), csv::format_double(curve.prob[i])});
  w.close();

  nlohmann::json meta;
  meta["gamma"] = curve.gamma;
  meta["base_rate"] = curve.base_rate;
  meta["n_active_samples"] = curve.n_active_samples;
  meta["n_background_samples"] = curve.n_background_samples;
  meta["calibration_converged"] = curve.calibration_converged;
  meta["masked_points"] = curve.masked_points;
  meta["residual_at_zero"] = curve.residual_at_zero;
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write file: " + json_path.string());
  out << meta.dump(2) << '\n';
}

PriorCurve load_prior(const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path) {
  const auto rows = csv::read_rows(csv_path, "delta,prob");
  PriorCurve curve;
  curve.grid.resize(static_cast<Eigen::Index>(rows.size()));
  curve.prob.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto d = csv::parse_double(rows[i].at(0));
    const auto p = csv::parse_double(rows[i].at(1));
    if (!d || !p) throw IngestError(csv_path.string() + ": non-numeric curve row");
    curve.grid[static_cast<Eigen::Index>(i)] = *d;
    curve.prob[static_cast<Eigen::Index>(i)] = *p;
  }

  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open file: " + json_path.string());
  nlohmann::json meta = nlohmann::json::parse(in);
  curve.gamma = meta.at("gamma").get<double>();
  curve.base_rate = meta.at("base_rate").get<double>();
  curve.n_active_samples = meta.at("n_active_samples").get<std::size_t>();
  curve.n_background_samples = meta.at("n_background_samples").get<std::size_t>();
  curve.calibration_converged = meta.at("calibration_converged").get<bool>();
  curve.masked_points = meta.at("masked_points").get<int>();
  curve.residual_at_zero = meta.at("residual_at_zero").get<double>();
  return curve;
}

}  // namespace domainrank
