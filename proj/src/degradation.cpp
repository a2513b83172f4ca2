#include "domainrank/degradation.hpp"

#include <cmath>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/optimize.hpp"
#include "domainrank/parallel.hpp"
#include "domainrank/rng.hpp"
#include "domainrank/stats.hpp"

namespace domainrank {

double SmoothCurve::eval(double delta) const {
  return a / (1.0 + std::exp(-b * std::pow(delta, c)));
}

double DegradationCurves::epsilon_at(double delta) const {
  return std::max(0.0, 1.0 - epsilon_strength.eval(delta));
}

DeltaBallResult delta_ball_residuals(const LabelledSet& standardized,
                                     const RegressorSpec& spec, double delta,
                                     std::size_t max_targets, std::uint64_t seed,
                                     std::size_t min_train) {
  const std::size_t n = standardized.size();
  if (n < 2) throw DomainError("delta-ball exclusion needs at least 2 compounds");

  const Eigen::VectorXd y = standardized.activities();
  if (std::abs(y.mean()) > 1e-6 || std::abs(sample_sd(y) - 1.0) > 1e-6)
    throw DomainError("delta-ball exclusion requires standardized activities");

  const auto fps = standardized.fingerprints();

  std::vector<std::size_t> targets;
  if (max_targets < n) {
    Rng rng(derive_seed(seed, "targets"));
    targets = rng.sample_indices(n, max_targets);
  } else {
    targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = i;
  }

  struct Slot {
    bool used = false;
    double y_true = 0.0;
    double y_pred = 0.0;
    std::size_t train_size = 0;
  };
  std::vector<Slot> slots(targets.size());

  parallel_for(targets.size(), [&](std::size_t t) {
    const std::size_t i = targets[t];
    std::vector<Fingerprint> train_fps;
    std::vector<double> train_y;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (tanimoto_distance(fps[j], fps[i]) >= delta) {
        train_fps.push_back(fps[j]);
        train_y.push_back(y[static_cast<Eigen::Index>(j)]);
      }
    }
    if (train_fps.size() < min_train) return;

    RegressorSpec local = spec;
    local.seed = derive_seed(seed, "fit", i);
    const Eigen::VectorXd ty = Eigen::Map<const Eigen::VectorXd>(
        train_y.data(), static_cast<Eigen::Index>(train_y.size()));
    const FittedModel model = fit(local, train_fps, ty);

    slots[t].used = true;
    slots[t].y_true = y[static_cast<Eigen::Index>(i)];
    slots[t].y_pred = model.predict(fps[i]);
    slots[t].train_size = train_fps.size();
  });

  DeltaBallResult result;
  result.delta = delta;
  result.n_targets_attempted = targets.size();
  for (const auto& slot : slots) {
    if (!slot.used) {
      ++result.n_skipped;
      continue;
    }
    ++result.n_used;
    result.pairs.emplace_back(slot.y_true, slot.y_pred);
    result.n_train_sizes.push_back(slot.train_size);
  }
  if (result.n_used == 0)
    throw DomainError("every target skipped at delta " + std::to_string(delta) +
                      "; exclusion leaves fewer than " + std::to_string(min_train) +
                      " training compounds");
  return result;
}

BetaEpsilon fit_beta_epsilon(const DeltaBallResult& result) {
  const std::size_t n = result.pairs.size();
  if (n < 10)
    throw DomainError("beta/epsilon fit needs at least 10 residual pairs, got " +
                      std::to_string(n));

  double sum_yp = 0.0, sum_pp = 0.0, sum_yy = 0.0;
  for (const auto& [yt, yp] : result.pairs) {
    sum_yp += yt * yp;
    sum_pp += yp * yp;
    sum_yy += yt * yt;
  }

  BetaEpsilon be;
  if (sum_pp == 0.0) {
    be.beta = 0.0;
    be.epsilon = std::sqrt(sum_yy / static_cast<double>(n));
    be.degenerate = true;
    return be;
  }
  be.beta = sum_yp / sum_pp;
  double rss = 0.0;
  for (const auto& [yt, yp] : result.pairs) {
    const double r = yt - be.beta * yp;
    rss += r * r;
  }
  be.epsilon = std::sqrt(rss / static_cast<double>(n));
  return be;
}

namespace {

constexpr double kAMax = 10.0, kBMax = 50.0, kCMax = 5.0;

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double u) { return std::log(u / (1.0 - u)); }

Eigen::Vector3d to_natural(const Eigen::VectorXd& t) {
  return {kAMax * logistic(t[0]), -kBMax * logistic(t[1]), kCMax * logistic(t[2])};
}

double curve_rss(const std::vector<std::pair<double, double>>& points,
                 const Eigen::Vector3d& abc) {
  double rss = 0.0;
  for (const auto& [delta, value] : points) {
    const double g = abc[0] / (1.0 + std::exp(-abc[1] * std::pow(delta, abc[2])));
    const double r = value - g;
    rss += r * r;
  }
  return rss;
}

}  // namespace

SmoothCurve fit_smooth_curve(const std::vector<std::pair<double, double>>& points,
                             std::uint64_t seed) {
  if (points.size() < 4)
    throw DomainError("smooth curve fit needs at least 4 points, got " +
                      std::to_string(points.size()));

  const auto objective = [&points](const Eigen::VectorXd& t) {
    return curve_rss(points, to_natural(t));
  };

  double max_abs = 1e-3;
  for (const auto& [d, v] : points) max_abs = std::max(max_abs, std::abs(v));

  std::vector<Eigen::VectorXd> starts;
  {
    Eigen::VectorXd t(3);
    t[0] = logit(std::clamp(2.0 * max_abs, 0.01, kAMax - 0.01) / kAMax);
    t[1] = logit(3.0 / kBMax);
    t[2] = logit(1.0 / kCMax);
    starts.push_back(t);
  }
  Rng rng(derive_seed(seed, "smooth_curve_starts"));
  while (starts.size() < 16) {
    Eigen::VectorXd t(3);
    t[0] = logit(rng.uniform(0.005, 0.995));
    t[1] = logit(rng.uniform(0.01, 0.98));
    t[2] = logit(rng.uniform(0.02, 0.98));
    starts.push_back(t);
  }

  SmoothCurve best;
  best.rss = std::numeric_limits<double>::infinity();
  int failures = 0;
  for (const auto& start : starts) {
    const NelderMeadResult run = nelder_mead(objective, start, 0.8, 800, 1e-13);
    if (!std::isfinite(run.fmin)) {
      ++failures;
      continue;
    }
    if (run.fmin < best.rss) {
      const Eigen::Vector3d abc = to_natural(run.x);
      best.a = abc[0];
      best.b = abc[1];
      best.c = abc[2];
      best.rss = run.fmin;
    }
  }
  if (!std::isfinite(best.rss))
    throw DomainError("smooth curve fit failed on all " +
                      std::to_string(starts.size()) + " starts (" +
                      std::to_string(failures) + " non-finite)");

  best.fitted_points = points;
  best.poorly_identified = std::abs(best.b) < 0.05;
  return best;
}

DegradationCurves build_degradation(const LabelledSet& standardized,
                                    const RegressorSpec& spec, std::uint64_t seed,
                                    int grid_size, std::size_t max_targets,
                                    std::size_t min_train) {
  if (grid_size < 4) throw DomainError("degradation grid needs at least 4 deltas");

  DegradationCurves curves;
  curves.model_kind = spec.kind;

  std::vector<std::pair<double, double>> beta_pts, strength_pts;
  for (int g = 0; g < grid_size; ++g) {
    const double delta = static_cast<double>(g) / (grid_size - 1);
    std::optional<DeltaBallResult> result;
    try {
      result = delta_ball_residuals(standardized, spec, delta, max_targets,
                                    derive_seed(seed, "delta", g), min_train);
    } catch (const DomainError&) {
      continue;  // degenerate delta: exclusion leaves too little training data
    }
    if (result->pairs.size() < 10) continue;
    const BetaEpsilon be = fit_beta_epsilon(*result);
    curves.grid.push_back(delta);
    curves.beta_points.push_back(be.beta);
    curves.epsilon_points.push_back(be.epsilon);
    curves.n_used.push_back(result->n_used);
    curves.n_skipped.push_back(result->n_skipped);
    beta_pts.emplace_back(delta, be.beta);
    strength_pts.emplace_back(delta, 1.0 - be.epsilon);
  }

  if (curves.grid.size() < 4)
    throw DomainError("only " + std::to_string(curves.grid.size()) +
                      " usable grid deltas; need at least 4");

  curves.beta = fit_smooth_curve(beta_pts, derive_seed(seed, "beta_curve"));
  curves.epsilon_strength =
      fit_smooth_curve(strength_pts, derive_seed(seed, "epsilon_curve"));
  return curves;
}

void save_degradation(const DegradationCurves& curves,
                      const std::filesystem::path& points_csv,
                      const std::filesystem::path& curves_json) {
  csv::Writer w(points_csv, "delta,beta_hat,epsilon_hat,n_used,n_skipped");
  for (std::size_t i = 0; i < curves.grid.size(); ++i)
    w.row({csv::format_double(curves.grid[i]),
           csv::format_double(curves.beta_points[i]),
           csv::format_double(curves.epsilon_points[i]),
           std::to_string(curves.n_used[i]), std::to_string(curves.n_skipped[i])});
  w.close();

  const auto curve_json = [](const SmoothCurve& c) {
    return nlohmann::json{{"a", c.a},
                          {"b", c.b},
                          {"c", c.c},
                          {"rss", c.rss},
                          {"poorly_identified", c.poorly_identified}};
  };
  nlohmann::json j;
  j["model_kind"] =
      curves.model_kind == RegressorKind::kRidge ? "ridge" : "random_forest";
  j["beta"] = curve_json(curves.beta);
  j["epsilon_strength"] = curve_json(curves.epsilon_strength);
  j["grid_includes_endpoints"] = curves.grid_includes_endpoints;
  std::ofstream out(curves_json);
  if (!out) throw IoError("cannot write file: " + curves_json.string());
  out << j.dump(2) << '\n';
}

DegradationCurves load_degradation(const std::filesystem::path& points_csv,
                                   const std::filesystem::path& curves_json) {
  DegradationCurves curves;
  for (const auto& row :
       csv::read_rows(points_csv, "delta,beta_hat,epsilon_hat,n_used,n_skipped")) {
    curves.grid.push_back(*csv::parse_double(row.at(0)));
    curves.beta_points.push_back(*csv::parse_double(row.at(1)));
    curves.epsilon_points.push_back(*csv::parse_double(row.at(2)));
    curves.n_used.push_back(static_cast<std::size_t>(*csv::parse_int(row.at(3))));
    curves.n_skipped.push_back(static_cast<std::size_t>(*csv::parse_int(row.at(4))));
  }

  std::ifstream in(curves_json);
  if (!in) throw IoError("cannot open file: " + curves_json.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  const auto read_curve = [](const nlohmann::json& cj) {
    SmoothCurve c;
    c.a = cj.at("a").get<double>();
    c.b = cj.at("b").get<double>();
    c.c = cj.at("c").get<double>();
    c.rss = cj.at("rss").get<double>();
    c.poorly_identified = cj.at("poorly_identified").get<bool>();
    return c;
  };
  curves.model_kind = j.at("model_kind").get<std::string>() == "ridge"
                          ? RegressorKind::kRidge
                          : RegressorKind::kRandomForest;
  curves.beta = read_curve(j.at("beta"));
  curves.epsilon_strength = read_curve(j.at("epsilon_strength"));
  curves.grid_includes_endpoints = j.at("grid_includes_endpoints").get<bool>();
  for (std::size_t i = 0; i < curves.grid.size(); ++i) {
    curves.beta.fitted_points.emplace_back(curves.grid[i], curves.beta_points[i]);
    curves.epsilon_strength.fitted_points.emplace_back(curves.grid[i],
                                                       1.0 - curves.epsilon_points[i]);
  }
  return curves;
}

}  // namespace domainrank
