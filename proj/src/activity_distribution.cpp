#include "domainrank/activity_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/optimize.hpp"
#include "domainrank/rng.hpp"
#include "domainrank/stats.hpp"

namespace domainrank {

double MixtureDistribution::cdf(double x) const {
  const double n = normal_cdf((x - normal_mean) / normal_sd);
  if (normal_only) return n;
  const double t = student_t_cdf((x - t_loc) / t_scale, t_df);
  return 0.5 * (n + t);
}

double MixtureDistribution::pdf(double x) const {
  const double n = normal_pdf((x - normal_mean) / normal_sd) / normal_sd;
  if (normal_only) return n;
  const double t = std::exp(student_t_logpdf(x, t_df, t_loc, t_scale));
  return 0.5 * (n + t);
}

double MixtureDistribution::quantile(double q) const {
  double span = std::max({normal_sd, t_scale, 1e-6});
  double lo = std::min(normal_mean, t_loc) - 8.0 * span;
  double hi = std::max(normal_mean, t_loc) + 8.0 * span;
  while (cdf(lo) > q) lo -= 16.0 * span;
  while (cdf(hi) < q) hi += 16.0 * span;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < q)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

void finalize_standardization(MixtureDistribution& d) {
  if (d.normal_only) {
    d.standard_location = d.normal_mean;
    d.standard_scale = d.normal_sd;
    return;
  }
  if (d.t_df > 2.0) {
    const double mean = 0.5 * (d.normal_mean + d.t_loc);
    const double second_moment =
        0.5 * (d.normal_sd * d.normal_sd + d.normal_mean * d.normal_mean) +
        0.5 * (d.t_scale * d.t_scale * d.t_df / (d.t_df - 2.0) + d.t_loc * d.t_loc);
    d.standard_location = mean;
    d.standard_scale = std::sqrt(std::max(1e-300, second_moment - mean * mean));
    return;
  }
  // Heavy tail: mixture variance undefined, fall back to median and IQR.
  d.robust_standardization = true;
  d.standard_location = d.quantile(0.5);
  d.standard_scale = (d.quantile(0.75) - d.quantile(0.25)) / 1.349;
}

}  // namespace

MixtureDistribution fit_mixture(const Eigen::VectorXd& activities,
                                std::uint64_t seed) {
  const Eigen::Index n = activities.size();
  if (n < 30)
    throw DomainError("mixture fit needs at least 30 activities, got " +
                      std::to_string(n));

  MixtureDistribution dist;
  dist.normal_mean = activities.mean();
  // Moment (maximum-likelihood) scale, n denominator.
  dist.normal_sd = std::sqrt(
      (activities.array() - dist.normal_mean).square().sum() / static_cast<double>(n));
  if (dist.normal_sd <= 0.0)
    throw DomainError("activities have zero variance; cannot fit mixture");

  std::vector<double> sorted(activities.data(), activities.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double median = quantile_sorted(sorted, 0.5);

  // Student-t maximum likelihood over (log df, loc, log scale).
  const auto nll = [&](const Eigen::VectorXd& u) {
    const double df = std::exp(u[0]);
    const double loc = u[1];
    const double scale = std::exp(u[2]);
    if (df < 0.1 || df > 1e8 || scale < 1e-8 * dist.normal_sd ||
        scale > 1e4 * dist.normal_sd)
      return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      acc -= student_t_logpdf(activities[i], df, loc, scale);
    return acc;
  };

  std::vector<Eigen::VectorXd> starts;
  for (double df0 : {2.5, 5.0, 30.0, 200.0}) {
    Eigen::VectorXd u(3);
    u << std::log(df0), median, std::log(0.8 * dist.normal_sd);
    starts.push_back(u);
  }
  Rng rng(derive_seed(seed, "t_fit_starts"));
  for (int extra = 0; extra < 2; ++extra) {
    Eigen::VectorXd u(3);
    u << rng.uniform(std::log(0.5), std::log(500.0)),
        median + rng.normal(0.0, 0.5 * dist.normal_sd),
        std::log(dist.normal_sd * rng.uniform(0.3, 1.5));
    starts.push_back(u);
  }

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_u;
  for (const auto& start : starts) {
    const NelderMeadResult run = nelder_mead(nll, start, 0.5, 400, 1e-10);
    if (std::isfinite(run.fmin) && run.fmin < best) {
      best = run.fmin;
      best_u = run.x;
    }
  }

  if (!std::isfinite(best)) {
    dist.normal_only = true;
  } else {
    dist.t_df = std::exp(best_u[0]);
    dist.t_loc = best_u[1];
    dist.t_scale = std::exp(best_u[2]);
  }
  finalize_standardization(dist);
  return dist;
}

double tail_prob(const MixtureDistribution& dist, double mu, double sigma,
                 double threshold) {
  if (sigma <= 0.0) throw DomainError("tail probability needs sigma > 0");
  const double z = (threshold - mu) / sigma;
  const double x = dist.standard_location + dist.standard_scale * z;
  return std::clamp(1.0 - dist.cdf(x), 0.0, 1.0);
}

void save_mixture(const MixtureDistribution& dist,
                  const std::filesystem::path& json_path) {
  nlohmann::json j;
  j["normal"] = {{"mean", dist.normal_mean}, {"sd", dist.normal_sd}};
  j["student_t"] = {{"df", dist.t_df}, {"loc", dist.t_loc}, {"scale", dist.t_scale}};
  j["weights"] = {0.5, 0.5};
  j["normal_only"] = dist.normal_only;
  j["robust_standardization"] = dist.robust_standardization;
  j["standard_location"] = dist.standard_location;
  j["standard_scale"] = dist.standard_scale;
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write file: " + json_path.string());
  out << j.dump(2) << '\n';
}

MixtureDistribution load_mixture(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open file: " + json_path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  MixtureDistribution dist;
  dist.normal_mean = j.at("normal").at("mean").get<double>();
  dist.normal_sd = j.at("normal").at("sd").get<double>();
  dist.t_df = j.at("student_t").at("df").get<double>();
  dist.t_loc = j.at("student_t").at("loc").get<double>();
  dist.t_scale = j.at("student_t").at("scale").get<double>();
  dist.normal_only = j.at("normal_only").get<bool>();
  dist.robust_standardization = j.at("robust_standardization").get<bool>();
  dist.standard_location = j.at("standard_location").get<double>();
  dist.standard_scale = j.at("standard_scale").get<double>();
  return dist;
}

void write_density_csv(const MixtureDistribution& dist,
                       const std::filesystem::path& path, double lo, double hi,
                       int n_points) {
  csv::Writer w(path, "activity,density");
  for (int i = 0; i < n_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (n_points - 1);
    w.row({csv::format_double(x), csv::format_double(dist.pdf(x))});
  }
  w.close();
}

}  // namespace domainrank
