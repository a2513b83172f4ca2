#include "domainrank/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "domainrank/csv.hpp"
#include "domainrank/distance_sampler.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/rng.hpp"

namespace domainrank {

std::string SplitSpec::name() const {
  std::string s = "train_lt_" + csv::format_double(q_train) + "__test_ge_" +
                  csv::format_double(q_test) + "__";
  s += pool_mode == PoolMode::kNear ? "near" : "far";
  return s;
}

QuantileSplit quantile_split(const LabelledSet& labelled, double q_train,
                             double q_test) {
  if (q_train > q_test)
    throw DomainError("q_train must be <= q_test");
  if (labelled.compounds.empty()) throw DomainError("labelled set is empty");

  QuantileSplit split;
  split.train.l_min = labelled.l_min;
  split.train.screened_count = labelled.screened_count;
  split.test_actives.l_min = q_test;

  for (const auto& c : labelled.compounds) {
    if (c.activity < q_train)
      split.train.compounds.push_back(c);
    else if (c.activity >= q_test)
      split.test_actives.compounds.push_back(c);
    // the band [q_train, q_test) is discarded
  }
  if (split.train.compounds.empty())
    throw DomainError("quantile split leaves no training compounds below " +
                      std::to_string(q_train));
  if (split.test_actives.compounds.empty())
    throw DomainError("quantile split leaves no test compounds at or above " +
                      std::to_string(q_test));
  return split;
}

TestPool build_test_pool(const UnlabelledPool& pool,
                         const std::vector<Fingerprint>& train_fps, PoolMode mode,
                         double delta_ref, std::size_t size, std::uint64_t seed) {
  if (size > pool.size())
    throw DomainError("test pool size " + std::to_string(size) +
                      " exceeds pool size " + std::to_string(pool.size()));
  if (train_fps.empty()) throw DomainError("training fingerprint set is empty");

  const std::vector<double> dists =
      batch_setwise_distances(pool.fingerprints(), train_fps);
  const auto counts = segment_bin_counts(pool, dists, delta_ref);

  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (mode == PoolMode::kNear && total == 0)
    throw DomainError("no pool compounds in the distance bin containing " +
                      std::to_string(delta_ref));

  TestPool out;
  out.segment_weights.resize(counts.size());
  double weight_sum = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    const double w = mode == PoolMode::kNear
                         ? static_cast<double>(counts[s])
                         : 1.0 / static_cast<double>(std::max<std::size_t>(counts[s], 1));
    out.segment_weights[s] = w;
    weight_sum += w;
  }
  for (auto& w : out.segment_weights) w /= weight_sum;

  std::vector<double> draw_weights = out.segment_weights;
  Rng rng(derive_seed(seed, "test_pool"));
  const auto picks = weighted_pool_draw(pool, draw_weights, size, rng);
  out.candidates.reserve(size);
  for (std::size_t idx : picks)
    out.candidates.push_back({pool.compounds[idx].id, pool.compounds[idx].fp});
  return out;
}

double RecallCurve::at(std::size_t n_selected) const {
  for (const auto& [n, pct] : points)
    if (n == n_selected) return pct;
  throw DomainError("recall curve has no point at n = " + std::to_string(n_selected));
}

RecallCurve recall_curve(const RankedList& ranking,
                         const std::unordered_set<std::string>& truth) {
  if (truth.empty()) throw DomainError("truth set is empty");
  const std::size_t n_ranked = ranking.entries.size();

  std::size_t present = 0;
  for (const auto& e : ranking.entries)
    if (truth.contains(e.id)) ++present;
  if (present == 0) throw DomainError("truth set is disjoint from the ranking");
  if (present != truth.size())
    throw DomainError("truth set contains ids missing from the ranking");

  // Logarithmic grid 1, 2, 5, 10, ... plus the n = 1000 operating point and N.
  std::set<std::size_t> grid;
  for (std::size_t base = 1; base <= n_ranked; base *= 10) {
    for (std::size_t mult : {1, 2, 5}) {
      const std::size_t n = base * mult;
      if (n <= n_ranked) grid.insert(n);
    }
    if (base > n_ranked / 10) break;
  }
  if (1000 <= n_ranked) grid.insert(1000);
  grid.insert(n_ranked);

  RecallCurve curve;
  std::size_t found = 0;
  std::size_t pos = 0;
  for (std::size_t n : grid) {
    for (; pos < n; ++pos)
      if (truth.contains(ranking.entries[pos].id)) ++found;
    curve.points.emplace_back(
        n, 100.0 * static_cast<double>(found) / static_cast<double>(truth.size()));
  }
  return curve;
}

ScoringContext FittedPipeline::context() const {
  ScoringContext ctx;
  ctx.model = &model;
  ctx.train_fps = &train_fps;
  ctx.prior = &prior;
  ctx.degradation = &degradation;
  ctx.sigma_curve = &sigma_curve;
  ctx.mixture = &mixture;
  ctx.threshold = threshold_standardized;
  ctx.s3_mean_source = s3_mean_source;
  return ctx;
}

FittedPipeline fit_pipeline(const LabelledSet& train_raw, const UnlabelledPool& pool,
                            const RegressorSpec& model_spec,
                            const PipelineParams& params, std::uint64_t seed) {
  FittedPipeline p;
  p.s3_mean_source = params.s3_mean_source;

  auto [standardized, transform] = standardize_activities(train_raw);
  p.transform = transform;
  p.train_standardized = std::move(standardized);
  p.train_fps = p.train_standardized.fingerprints();
  p.threshold_standardized = transform.standardize(params.threshold);

  RegressorSpec spec = model_spec;
  spec.seed = derive_seed(seed, "model");
  p.model = fit(spec, p.train_fps, p.train_standardized.activities());

  p.active_sample = sample_active_setwise(p.train_standardized, params.v, params.k,
                                          derive_seed(seed, "active_sample"));
  p.background_sample =
      sample_background(pool, p.train_standardized, params.delta_weight,
                        std::min(params.background_m, pool.size()),
                        derive_seed(seed, "background_sample"));

  const double base_rate = estimate_base_rate(params.base_rate_mode,
                                              p.train_standardized, p.active_sample,
                                              p.background_sample);
  double gamma;
  bool converged = true;
  if (params.gamma_override) {
    gamma = *params.gamma_override;
  } else {
    const CalibrationResult cal =
        calibrate_bandwidth(p.active_sample, p.background_sample, base_rate);
    gamma = cal.gamma;
    converged = cal.converged;
  }
  p.prior = fit_prior_curve(
      p.active_sample, p.background_sample, gamma, base_rate,
      Eigen::VectorXd::LinSpaced(params.prior_grid_points, 0.0, 1.0));
  p.prior.calibration_converged = converged;

  p.degradation = build_degradation(p.train_standardized, spec,
                                    derive_seed(seed, "degradation"),
                                    params.degradation_grid,
                                    params.degradation_max_targets,
                                    params.degradation_min_train);

  const BinnedPairs bins =
      collect_pair_bins(p.train_standardized, params.covariance_bin_width,
                        params.covariance_max_pairs, derive_seed(seed, "covariance"));
  p.sigma_curve = fit_sigma_curve(bins, params.covariance_min_pairs);

  p.mixture = fit_mixture(train_raw.activities(), derive_seed(seed, "mixture"));
  return p;
}

BenchmarkReport run_benchmark(const LabelledSet& labelled, const UnlabelledPool& pool,
                              const std::vector<SplitSpec>& splits,
                              const std::vector<RegressorSpec>& model_specs,
                              const std::vector<ScoreVariant>& variants,
                              const PipelineParams& params, std::uint64_t seed) {
  if (splits.empty() || model_specs.empty() || variants.empty())
    throw DomainError("benchmark needs at least one split, model and variant");

  BenchmarkReport report;
  report.seed = seed;

  for (const auto& split : splits) {
    const QuantileSplit qs = quantile_split(labelled, split.q_train, split.q_test);

    // Candidate pool: selection-weighted unlabelled draw plus the held-out
    // actives. Candidates carry ids and structures only; activities of the
    // test compounds are never visible to any fitting stage.
    const std::uint64_t pool_seed = derive_seed(seed, "pool_" + split.name());
    TestPool test_pool = build_test_pool(pool, qs.train.fingerprints(),
                                         split.pool_mode, split.delta_ref,
                                         std::min(split.pool_size, pool.size()),
                                         pool_seed);
    std::vector<Candidate> candidates = std::move(test_pool.candidates);
    std::unordered_set<std::string> truth;
    for (const auto& c : qs.test_actives.compounds) {
      candidates.push_back({c.id, c.fp});
      truth.insert(c.id);
    }

    for (const auto& model_spec : model_specs) {
      const std::string model_name =
          model_spec.kind == RegressorKind::kRidge ? "ridge" : "random_forest";
      BenchmarkCell cell;
      cell.name = split.name() + "__" + model_name;
      cell.split = split;
      cell.model_spec = model_spec;
      cell.n_train = qs.train.size();
      cell.n_test_actives = qs.test_actives.size();
      cell.n_candidates = candidates.size();

      const FittedPipeline pipeline = fit_pipeline(
          qs.train, pool, model_spec, params, derive_seed(seed, cell.name));
      const ScoringContext ctx = pipeline.context();

      for (ScoreVariant variant : variants) {
        RankedList ranking = rank_candidates(ctx, candidates, variant);
        cell.recall.emplace_back(variant, recall_curve(ranking, truth));
        cell.rankings.emplace_back(variant, std::move(ranking));
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

namespace {

// Minimal SVG line chart: recall (%) against log10(n selected).
void write_recall_svg(const BenchmarkCell& cell, const std::filesystem::path& path) {
  constexpr int width = 640, height = 420, margin = 50;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path.string());

  double max_log_n = 1.0;
  for (const auto& [variant, curve] : cell.recall)
    for (const auto& [n, pct] : curve.points)
      max_log_n = std::max(max_log_n, std::log10(static_cast<double>(n)));

  const auto x_of = [&](std::size_t n) {
    return margin + (width - 2 * margin) *
                        std::log10(static_cast<double>(std::max<std::size_t>(n, 1))) /
                        max_log_n;
  };
  const auto y_of = [&](double pct) {
    return height - margin - (height - 2 * margin) * pct / 100.0;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">compounds selected (log scale)"
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << height / 2 << ")\">% actives found</text>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"13\">" << cell.name << "</text>\n";

  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
  int series = 0;
  for (const auto& [variant, curve] : cell.recall) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[series % 4]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [n, pct] : curve.points)
      out << x_of(n) << ',' << y_of(pct) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << width - margin + 4 << "\" y=\""
        << margin + 16 * series + 10 << "\" font-size=\"11\" fill=\""
        << colors[series % 4] << "\">" << to_string(variant) << "</text>\n";
    ++series;
  }
  out << "</svg>\n";
}

}  // namespace

void save_benchmark(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["seed"] = report.seed;
  manifest["cells"] = nlohmann::json::array();

  for (const auto& cell : report.cells) {
    const auto cell_dir = dir / cell.name;
    std::filesystem::create_directories(cell_dir);

    for (const auto& [variant, curve] : cell.recall) {
      csv::Writer w(cell_dir / ("recall_" + to_string(variant) + ".csv"),
                    "n_selected,pct_actives_found");
      for (const auto& [n, pct] : curve.points)
        w.row({std::to_string(n), csv::format_double(pct)});
      w.close();
    }
    for (const auto& [variant, ranking] : cell.rankings)
      save_ranking(ranking, cell_dir / ("ranking_" + to_string(variant) + ".csv"));
    write_recall_svg(cell, cell_dir / "recall.svg");

    nlohmann::json cj;
    cj["name"] = cell.name;
    cj["q_train"] = cell.split.q_train;
    cj["q_test"] = cell.split.q_test;
    cj["pool_mode"] = cell.split.pool_mode == PoolMode::kNear ? "near" : "far";
    cj["pool_size"] = cell.split.pool_size;
    cj["delta_ref"] = cell.split.delta_ref;
    cj["model"] =
        cell.model_spec.kind == RegressorKind::kRidge ? "ridge" : "random_forest";
    cj["n_train"] = cell.n_train;
    cj["n_test_actives"] = cell.n_test_actives;
    cj["n_candidates"] = cell.n_candidates;
    manifest["cells"].push_back(std::move(cj));
  }

  std::ofstream out(dir / "benchmark.json");
  if (!out) throw IoError("cannot write file: " + (dir / "benchmark.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace domainrank
