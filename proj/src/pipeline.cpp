#include "domainrank/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/rng.hpp"

namespace domainrank {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing. Every object is checked against its allowed key set so a
// typo fails fast with a JSON pointer instead of silently using a default.
// ---------------------------------------------------------------------------

void check_keys(const json& j, const std::string& pointer,
                const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw ConfigError("config: expected an object at " + pointer);
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key))
      throw ConfigError("config: unknown key at " + pointer + "/" + key);
}

template <typename T>
T get_field(const json& j, const std::string& pointer, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value type at " + pointer + "/" + key);
  }
}

template <typename T>
T require_field(const json& j, const std::string& pointer, const char* key) {
  if (!j.contains(key) || j.at(key).is_null())
    throw ConfigError("config: missing required key " + pointer + "/" + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value type at " + pointer + "/" + key);
  }
}

RegressorSpec parse_regressor(const json& j, const std::string& pointer) {
  check_keys(j, pointer,
             {"kind", "ridge_lambda", "n_trees", "max_features",
              "min_samples_split", "bootstrap"});
  RegressorSpec spec;
  const auto kind = get_field<std::string>(j, pointer, "kind", "ridge");
  if (kind == "ridge")
    spec.kind = RegressorKind::kRidge;
  else if (kind == "random_forest")
    spec.kind = RegressorKind::kRandomForest;
  else
    throw ConfigError("config: unknown regressor kind at " + pointer + "/kind");
  spec.ridge_lambda = get_field<double>(j, pointer, "ridge_lambda", 1.0);
  spec.n_trees = get_field<int>(j, pointer, "n_trees", 10);
  spec.max_features = get_field<int>(j, pointer, "max_features", 0);
  spec.min_samples_split = get_field<int>(j, pointer, "min_samples_split", 2);
  spec.bootstrap = get_field<bool>(j, pointer, "bootstrap", true);
  return spec;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  check_keys(j, "", {"seed", "paths", "data", "sampler", "prior", "regressor",
                     "degradation", "covariance", "scoring", "evaluation",
                     "synthetic"});

  PipelineConfig cfg;
  cfg.seed = get_field<std::uint64_t>(j, "", "seed", 0);

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, "/paths", {"labelled", "unlabelled", "workdir"});
    cfg.labelled_path = get_field<std::string>(p, "/paths", "labelled", "");
    for (const auto& u :
         get_field<std::vector<std::string>>(p, "/paths", "unlabelled", {}))
      cfg.unlabelled_paths.emplace_back(u);
    cfg.workdir = get_field<std::string>(p, "/paths", "workdir", "");
  }

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, "/data", {"fingerprint_length", "l_min", "screened_count"});
    cfg.fingerprint_length = get_field<int>(d, "/data", "fingerprint_length", 128);
    cfg.l_min = get_field<double>(d, "/data", "l_min",
                                  -std::numeric_limits<double>::infinity());
    if (d.contains("screened_count") && !d.at("screened_count").is_null())
      cfg.screened_count = require_field<std::int64_t>(d, "/data", "screened_count");
  }

  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    check_keys(s, "/sampler", {"v", "k", "delta_weight", "m"});
    cfg.params.v = get_field<int>(s, "/sampler", "v", 2);
    cfg.params.k = get_field<int>(s, "/sampler", "k", 5);
    cfg.params.delta_weight = get_field<double>(s, "/sampler", "delta_weight", 0.15);
    cfg.params.background_m = get_field<std::size_t>(s, "/sampler", "m", 100000);
  }

  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    check_keys(p, "/prior", {"grid_points", "gamma_override", "base_rate_mode"});
    cfg.params.prior_grid_points = get_field<int>(p, "/prior", "grid_points", 101);
    if (p.contains("gamma_override") && !p.at("gamma_override").is_null())
      cfg.params.gamma_override = require_field<double>(p, "/prior", "gamma_override");
    const auto mode = get_field<std::string>(p, "/prior", "base_rate_mode", "counts");
    if (mode == "counts")
      cfg.params.base_rate_mode = BaseRateMode::kCounts;
    else if (mode == "limit")
      cfg.params.base_rate_mode = BaseRateMode::kLimit;
    else
      throw ConfigError("config: unknown base_rate_mode at /prior/base_rate_mode");
  }

  if (j.contains("regressor"))
    cfg.regressor = parse_regressor(j.at("regressor"), "/regressor");

  if (j.contains("degradation")) {
    const auto& d = j.at("degradation");
    check_keys(d, "/degradation", {"grid_size", "max_targets", "min_train"});
    cfg.params.degradation_grid = get_field<int>(d, "/degradation", "grid_size", 10);
    cfg.params.degradation_max_targets =
        get_field<std::size_t>(d, "/degradation", "max_targets", 500);
    cfg.params.degradation_min_train =
        get_field<std::size_t>(d, "/degradation", "min_train", 50);
  }

  if (j.contains("covariance")) {
    const auto& c = j.at("covariance");
    check_keys(c, "/covariance", {"bin_width", "min_pairs", "max_pairs"});
    cfg.params.covariance_bin_width =
        get_field<double>(c, "/covariance", "bin_width", 0.02);
    cfg.params.covariance_min_pairs =
        get_field<std::size_t>(c, "/covariance", "min_pairs", 100);
    cfg.params.covariance_max_pairs =
        get_field<std::size_t>(c, "/covariance", "max_pairs", 5'000'000);
  }

  if (j.contains("scoring")) {
    const auto& s = j.at("scoring");
    check_keys(s, "/scoring", {"threshold", "variant", "s3_mean_source"});
    cfg.params.threshold = require_field<double>(s, "/scoring", "threshold");
    cfg.ranking_variant = score_variant_from_string(
        get_field<std::string>(s, "/scoring", "variant", "S3"));
    const auto src = get_field<std::string>(s, "/scoring", "s3_mean_source", "S1");
    if (src == "S1")
      cfg.params.s3_mean_source = S3MeanSource::kS1;
    else if (src == "S2")
      cfg.params.s3_mean_source = S3MeanSource::kS2;
    else
      throw ConfigError("config: unknown s3_mean_source at /scoring/s3_mean_source");
  }

  if (j.contains("evaluation")) {
    const auto& e = j.at("evaluation");
    check_keys(e, "/evaluation", {"splits", "models", "variants"});
    if (e.contains("splits")) {
      if (!e.at("splits").is_array())
        throw ConfigError("config: expected an array at /evaluation/splits");
      std::size_t idx = 0;
      for (const auto& sj : e.at("splits")) {
        const std::string pointer = "/evaluation/splits/" + std::to_string(idx++);
        check_keys(sj, pointer,
                   {"q_train", "q_test", "pool_mode", "pool_size", "delta_ref"});
        SplitSpec split;
        split.q_train = require_field<double>(sj, pointer, "q_train");
        split.q_test = require_field<double>(sj, pointer, "q_test");
        const auto mode = get_field<std::string>(sj, pointer, "pool_mode", "near");
        if (mode == "near")
          split.pool_mode = PoolMode::kNear;
        else if (mode == "far")
          split.pool_mode = PoolMode::kFar;
        else
          throw ConfigError("config: unknown pool_mode at " + pointer + "/pool_mode");
        split.pool_size = get_field<std::size_t>(sj, pointer, "pool_size", 500'000);
        split.delta_ref = get_field<double>(sj, pointer, "delta_ref", 0.19);
        cfg.splits.push_back(split);
      }
    }
    for (const auto& m :
         get_field<std::vector<std::string>>(e, "/evaluation", "models", {"ridge"})) {
      json mj;
      mj["kind"] = m;
      cfg.benchmark_models.push_back(parse_regressor(mj, "/evaluation/models"));
    }
    for (const auto& v : get_field<std::vector<std::string>>(
             e, "/evaluation", "variants", {"S0", "S1", "S2", "S3"}))
      cfg.benchmark_variants.push_back(score_variant_from_string(v));
  }
  if (cfg.benchmark_models.empty()) cfg.benchmark_models.push_back(cfg.regressor);
  if (cfg.benchmark_variants.empty())
    cfg.benchmark_variants = {ScoreVariant::kS0, ScoreVariant::kS1, ScoreVariant::kS2,
                              ScoreVariant::kS3};

  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    check_keys(s, "/synthetic",
               {"kind", "p", "active_fraction", "noise_sd", "n_clusters", "max_flips",
                "seed_density", "walk_flip_prob", "n_screened", "n_unlabelled"});
    const auto kind = get_field<std::string>(s, "/synthetic", "kind", "clustered");
    if (kind == "clustered")
      cfg.synth.kind = LandscapeKind::kClustered;
    else if (kind == "noise")
      cfg.synth.kind = LandscapeKind::kNoise;
    else if (kind == "smooth")
      cfg.synth.kind = LandscapeKind::kSmooth;
    else
      throw ConfigError("config: unknown landscape kind at /synthetic/kind");
    cfg.synth.p = get_field<int>(s, "/synthetic", "p", 128);
    cfg.synth.active_fraction =
        get_field<double>(s, "/synthetic", "active_fraction", 0.01);
    cfg.synth.noise_sd = get_field<double>(s, "/synthetic", "noise_sd", 0.02);
    cfg.synth.n_clusters = get_field<int>(s, "/synthetic", "n_clusters", 20);
    cfg.synth.max_flips = get_field<int>(s, "/synthetic", "max_flips", 6);
    cfg.synth.seed_density = get_field<double>(s, "/synthetic", "seed_density", 0.35);
    cfg.synth.walk_flip_prob =
        get_field<double>(s, "/synthetic", "walk_flip_prob", 0.02);
    cfg.synth_screened = get_field<std::size_t>(s, "/synthetic", "n_screened", 5000);
    cfg.synth_unlabelled =
        get_field<std::size_t>(s, "/synthetic", "n_unlabelled", 20000);
  }
  cfg.synth.seed = cfg.seed;

  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// ---------------------------------------------------------------------------
// Stage plumbing: hashes, manifests, locking, dependency checks.
// ---------------------------------------------------------------------------

namespace {

constexpr int kArtifactVersion = 1;

std::string fnv_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_string(const std::string& s) {
  return fnv_hex(fnv1a(0xcbf29ce484222325ULL, s.data(), s.size()));
}

std::string hash_files(const std::vector<std::filesystem::path>& paths) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open artifact for hashing: " + p.string());
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
      h = fnv1a(h, buf, static_cast<std::size_t>(in.gcount()));
  }
  return fnv_hex(h);
}

class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& workdir)
      : path_(workdir / ".lock") {
    std::filesystem::create_directories(workdir);
    if (std::filesystem::exists(path_))
      throw IoError("workdir is locked by another run: " + path_.string());
    std::ofstream out(path_);
    if (!out) throw IoError("cannot create lock file: " + path_.string());
  }
  ~WorkdirLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  std::filesystem::path path_;
};

json manifest_path_load(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open manifest: " + p.string());
  return json::parse(in);
}

void require_stage(const PipelineConfig& cfg, const std::string& current,
                   const std::string& needed) {
  if (!std::filesystem::exists(cfg.workdir / needed / "manifest.json"))
    throw ConfigError("stage '" + current + "' requires artifacts from stage '" +
                      needed + "'; run `domainrank " + needed + "` first");
}

json serialize_spec_json(const RegressorSpec& spec) {
  return {{"kind", spec.kind == RegressorKind::kRidge ? "ridge" : "random_forest"},
          {"ridge_lambda", spec.ridge_lambda},
          {"n_trees", spec.n_trees},
          {"max_features", spec.max_features},
          {"min_samples_split", spec.min_samples_split},
          {"bootstrap", spec.bootstrap}};
}

// Config subset that affects a stage, serialized canonically for hashing.
json stage_config_json(const std::string& stage, const PipelineConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  if (stage == "ingest") {
    j["labelled"] = cfg.labelled_path.string();
    json u = json::array();
    for (const auto& p : cfg.unlabelled_paths) u.push_back(p.string());
    j["unlabelled"] = u;
    j["l_min"] = cfg.l_min;
    j["screened_count"] = cfg.screened_count ? json(*cfg.screened_count) : json();
    j["fingerprint_length"] = cfg.fingerprint_length;
  } else if (stage == "sample") {
    j["v"] = cfg.params.v;
    j["k"] = cfg.params.k;
    j["delta_weight"] = cfg.params.delta_weight;
    j["m"] = cfg.params.background_m;
  } else if (stage == "prior") {
    j["grid_points"] = cfg.params.prior_grid_points;
    j["gamma_override"] =
        cfg.params.gamma_override ? json(*cfg.params.gamma_override) : json();
    j["base_rate_mode"] =
        cfg.params.base_rate_mode == BaseRateMode::kCounts ? "counts" : "limit";
  } else if (stage == "degrade") {
    j["grid_size"] = cfg.params.degradation_grid;
    j["max_targets"] = cfg.params.degradation_max_targets;
    j["min_train"] = cfg.params.degradation_min_train;
    j["regressor"] = serialize_spec_json(cfg.regressor);
  } else if (stage == "covariance") {
    j["bin_width"] = cfg.params.covariance_bin_width;
    j["min_pairs"] = cfg.params.covariance_min_pairs;
    j["max_pairs"] = cfg.params.covariance_max_pairs;
  } else if (stage == "mixture") {
    // seed only
  } else if (stage == "score") {
    j["threshold"] = cfg.params.threshold;
    j["variant"] = to_string(cfg.ranking_variant);
    j["s3_mean_source"] =
        cfg.params.s3_mean_source == S3MeanSource::kS1 ? "S1" : "S2";
  } else if (stage == "evaluate") {
    json splits = json::array();
    for (const auto& s : cfg.splits)
      splits.push_back({{"q_train", s.q_train},
                        {"q_test", s.q_test},
                        {"pool_mode", s.pool_mode == PoolMode::kNear ? "near" : "far"},
                        {"pool_size", s.pool_size},
                        {"delta_ref", s.delta_ref}});
    j["splits"] = splits;
    json models = json::array();
    for (const auto& m : cfg.benchmark_models) models.push_back(serialize_spec_json(m));
    j["models"] = models;
    json variants = json::array();
    for (auto v : cfg.benchmark_variants) variants.push_back(to_string(v));
    j["variants"] = variants;
    j["threshold"] = cfg.params.threshold;
    j["sampler"] = {{"v", cfg.params.v},
                    {"k", cfg.params.k},
                    {"delta_weight", cfg.params.delta_weight},
                    {"m", cfg.params.background_m}};
  } else if (stage == "synth") {
    j["kind"] = static_cast<int>(cfg.synth.kind);
    j["p"] = cfg.synth.p;
    j["active_fraction"] = cfg.synth.active_fraction;
    j["noise_sd"] = cfg.synth.noise_sd;
    j["n_clusters"] = cfg.synth.n_clusters;
    j["max_flips"] = cfg.synth.max_flips;
    j["seed_density"] = cfg.synth.seed_density;
    j["walk_flip_prob"] = cfg.synth.walk_flip_prob;
    j["n_screened"] = cfg.synth_screened;
    j["n_unlabelled"] = cfg.synth_unlabelled;
  }
  return j;
}

// Input artifacts each stage reads, for the input hash and dependency check.
std::vector<std::string> stage_dependencies(const std::string& stage) {
  if (stage == "sample" || stage == "degrade" || stage == "covariance" ||
      stage == "mixture" || stage == "evaluate")
    return {"ingest"};
  if (stage == "prior") return {"ingest", "sample"};
  if (stage == "score")
    return {"ingest", "sample", "prior", "degrade", "covariance", "mixture"};
  return {};
}

std::vector<std::filesystem::path> stage_input_files(const PipelineConfig& cfg,
                                                     const std::string& stage) {
  std::vector<std::filesystem::path> files;
  const auto add_outputs = [&](const std::string& dep) {
    const json m = manifest_path_load(cfg.workdir / dep / "manifest.json");
    for (const auto& out : m.at("outputs"))
      files.push_back(cfg.workdir / dep / out.get<std::string>());
  };
  for (const auto& dep : stage_dependencies(stage)) add_outputs(dep);
  if (stage == "ingest") {
    files.push_back(cfg.labelled_path);
    for (const auto& p : cfg.unlabelled_paths) files.push_back(p);
  }
  return files;
}

struct StageIo {
  std::filesystem::path dir;
  std::vector<std::string> outputs;
  json extra;

  std::filesystem::path out(const std::string& name) {
    outputs.push_back(name);
    return dir / name;
  }
};

// ---------------------------------------------------------------------------
// Artifact readers shared between stages.
// ---------------------------------------------------------------------------

LabelledSet read_ingested_labelled(const PipelineConfig& cfg) {
  LoadReport report;
  return load_labelled(cfg.workdir / "ingest" / "labelled.csv", cfg.l_min,
                       cfg.screened_count, &report);
}

UnlabelledPool read_ingested_pool(const PipelineConfig& cfg) {
  UnlabelledPool pool;
  int max_segment = -1;
  for (const auto& row : csv::read_rows(cfg.workdir / "ingest" / "pool.csv",
                                        "id,fingerprint,segment")) {
    UnlabelledCompound c;
    c.id = row.at(0);
    c.fp = Fingerprint::from_hex(row.at(1));
    c.segment = static_cast<int>(*csv::parse_int(row.at(2)));
    max_segment = std::max(max_segment, c.segment);
    pool.compounds.push_back(std::move(c));
  }
  pool.segment_count = max_segment + 1;
  return pool;
}

// ---------------------------------------------------------------------------
// Stage bodies.
// ---------------------------------------------------------------------------

void stage_ingest(const PipelineConfig& cfg, StageIo& io) {
  if (cfg.labelled_path.empty())
    throw ConfigError("config: /paths/labelled is required for ingest");
  if (cfg.unlabelled_paths.empty())
    throw ConfigError("config: /paths/unlabelled is required for ingest");

  LoadReport labelled_report;
  const LabelledSet labelled = load_labelled(cfg.labelled_path, cfg.l_min,
                                             cfg.screened_count, &labelled_report);
  if (!labelled.compounds.empty() &&
      labelled.compounds.front().fp.bits() != cfg.fingerprint_length)
    throw ConfigError("config: fingerprint_length " +
                      std::to_string(cfg.fingerprint_length) +
                      " does not match the data (" +
                      std::to_string(labelled.compounds.front().fp.bits()) + ")");

  LoadReport pool_report;
  const UnlabelledPool pool =
      load_unlabelled(cfg.unlabelled_paths, labelled, &pool_report);

  save_labelled(labelled, io.out("labelled.csv"));
  {
    csv::Writer w(io.out("pool.csv"), "id,fingerprint,segment");
    for (const auto& c : pool.compounds)
      w.row({c.id, c.fp.to_hex(), std::to_string(c.segment)});
    w.close();
  }
  io.extra["labelled_rows_total"] = labelled_report.rows_total;
  io.extra["labelled_rejected_below_lmin"] = labelled_report.rows_rejected_below_lmin;
  io.extra["labelled_count"] = labelled.size();
  io.extra["pool_rows_total"] = pool_report.rows_total;
  io.extra["pool_duplicates_removed"] = pool_report.duplicates_removed;
  io.extra["pool_count"] = pool.size();
  io.extra["segment_count"] = pool.segment_count;
}

void stage_sample(const PipelineConfig& cfg, StageIo& io) {
  const LabelledSet labelled = read_ingested_labelled(cfg);
  const UnlabelledPool pool = read_ingested_pool(cfg);

  const DistanceSample active = sample_active_setwise(
      labelled, cfg.params.v, cfg.params.k, derive_seed(cfg.seed, "active_sample"));
  const DistanceSample background = sample_background(
      pool, labelled, cfg.params.delta_weight,
      std::min(cfg.params.background_m, pool.size()),
      derive_seed(cfg.seed, "background_sample"));

  save_sample(active, io.out("active.csv"), io.out("active.json"));
  save_sample(background, io.out("background.csv"), io.out("background.json"));
  io.extra["active_count"] = active.values.size();
  io.extra["background_count"] = background.values.size();
}

void stage_prior(const PipelineConfig& cfg, StageIo& io) {
  const LabelledSet labelled = read_ingested_labelled(cfg);
  const DistanceSample active = load_sample(cfg.workdir / "sample" / "active.csv",
                                            cfg.workdir / "sample" / "active.json");
  const DistanceSample background =
      load_sample(cfg.workdir / "sample" / "background.csv",
                  cfg.workdir / "sample" / "background.json");

  const double base_rate =
      estimate_base_rate(cfg.params.base_rate_mode, labelled, active, background);
  double gamma;
  bool converged = true;
  double achieved = 0.0;
  if (cfg.params.gamma_override) {
    gamma = *cfg.params.gamma_override;
  } else {
    const CalibrationResult cal = calibrate_bandwidth(active, background, base_rate);
    gamma = cal.gamma;
    converged = cal.converged;
    achieved = cal.achieved;
  }
  PriorCurve curve = fit_prior_curve(
      active, background, gamma, base_rate,
      Eigen::VectorXd::LinSpaced(cfg.params.prior_grid_points, 0.0, 1.0));
  curve.calibration_converged = converged;

  save_prior(curve, io.out("curve.csv"), io.out("meta.json"));
  io.extra["gamma"] = gamma;
  io.extra["base_rate"] = base_rate;
  io.extra["calibration_converged"] = converged;
  io.extra["calibration_achieved"] = achieved;
}

void stage_degrade(const PipelineConfig& cfg, StageIo& io) {
  const LabelledSet labelled = read_ingested_labelled(cfg);
  auto [standardized, transform] = standardize_activities(labelled);

  RegressorSpec spec = cfg.regressor;
  spec.seed = derive_seed(cfg.seed, "model");
  const FittedModel model = fit(spec, standardized.fingerprints(),
                                standardized.activities());
  save_model(model, io.out("model.json"));

  const DegradationCurves curves = build_degradation(
      standardized, spec, derive_seed(cfg.seed, "degradation"),
      cfg.params.degradation_grid, cfg.params.degradation_max_targets,
      cfg.params.degradation_min_train);
  save_degradation(curves, io.out("points.csv"), io.out("curves.json"));
  io.extra["usable_deltas"] = curves.grid.size();
  io.extra["transform_mean"] = transform.mean;
  io.extra["transform_sd"] = transform.sd;
}

void stage_covariance(const PipelineConfig& cfg, StageIo& io) {
  const LabelledSet labelled = read_ingested_labelled(cfg);
  auto [standardized, transform] = standardize_activities(labelled);
  const BinnedPairs bins = collect_pair_bins(
      standardized, cfg.params.covariance_bin_width, cfg.params.covariance_max_pairs,
      derive_seed(cfg.seed, "covariance"));
  const SigmaCurve curve = fit_sigma_curve(bins, cfg.params.covariance_min_pairs);
  save_sigma(curve, io.out("sigma.csv"), io.out("sigma_raw.csv"));
  io.extra["pairs_collected"] = bins.n_pairs_collected;
  io.extra["sampled"] = bins.sampled;
  io.extra["bins_kept"] = curve.bin_centers.size();
}

void stage_mixture(const PipelineConfig& cfg, StageIo& io) {
  const LabelledSet labelled = read_ingested_labelled(cfg);
  const Eigen::VectorXd activities = labelled.activities();
  const MixtureDistribution dist =
      fit_mixture(activities, derive_seed(cfg.seed, "mixture"));
  save_mixture(dist, io.out("params.json"));
  write_density_csv(dist, io.out("density.csv"), activities.minCoeff() - 1.0,
                    activities.maxCoeff() + 1.0);
  io.extra["normal_mean"] = dist.normal_mean;
  io.extra["normal_sd"] = dist.normal_sd;
  io.extra["t_df"] = dist.t_df;
  io.extra["normal_only"] = dist.normal_only;
}

void stage_score(const PipelineConfig& cfg, StageIo& io) {
  const LabelledSet labelled = read_ingested_labelled(cfg);
  const UnlabelledPool pool = read_ingested_pool(cfg);
  auto [standardized, transform] = standardize_activities(labelled);
  const auto train_fps = standardized.fingerprints();

  const FittedModel model = load_model(cfg.workdir / "degrade" / "model.json");
  const PriorCurve prior = load_prior(cfg.workdir / "prior" / "curve.csv",
                                      cfg.workdir / "prior" / "meta.json");
  const DegradationCurves degradation =
      load_degradation(cfg.workdir / "degrade" / "points.csv",
                       cfg.workdir / "degrade" / "curves.json");
  const SigmaCurve sigma_curve = load_sigma(cfg.workdir / "covariance" / "sigma.csv",
                                            cfg.workdir / "covariance" / "sigma_raw.csv");
  const MixtureDistribution mixture =
      load_mixture(cfg.workdir / "mixture" / "params.json");

  ScoringContext ctx;
  ctx.model = &model;
  ctx.train_fps = &train_fps;
  ctx.prior = &prior;
  ctx.degradation = &degradation;
  ctx.sigma_curve = &sigma_curve;
  ctx.mixture = &mixture;
  ctx.threshold = transform.standardize(cfg.params.threshold);
  ctx.s3_mean_source = cfg.params.s3_mean_source;

  std::vector<Candidate> candidates;
  candidates.reserve(pool.size());
  for (const auto& c : pool.compounds) candidates.push_back({c.id, c.fp});

  const RankedList ranking = rank_candidates(ctx, candidates, cfg.ranking_variant);
  save_ranking(ranking, io.out("ranking.csv"));
  io.extra["variant"] = to_string(cfg.ranking_variant);
  io.extra["n_candidates"] = candidates.size();
  io.extra["threshold_raw"] = cfg.params.threshold;
  io.extra["threshold_standardized"] = ctx.threshold;
}

void stage_evaluate(const PipelineConfig& cfg, StageIo& io) {
  if (cfg.splits.empty())
    throw ConfigError("config: /evaluation/splits is required for evaluate");
  const LabelledSet labelled = read_ingested_labelled(cfg);
  const UnlabelledPool pool = read_ingested_pool(cfg);

  const BenchmarkReport report =
      run_benchmark(labelled, pool, cfg.splits, cfg.benchmark_models,
                    cfg.benchmark_variants, cfg.params, cfg.seed);
  save_benchmark(report, io.dir);

  io.outputs.push_back("benchmark.json");
  for (const auto& cell : report.cells) {
    for (const auto& [variant, curve] : cell.recall)
      io.outputs.push_back(cell.name + "/recall_" + to_string(variant) + ".csv");
    for (const auto& [variant, ranking] : cell.rankings)
      io.outputs.push_back(cell.name + "/ranking_" + to_string(variant) + ".csv");
    io.outputs.push_back(cell.name + "/recall.svg");
  }
  io.extra["n_cells"] = report.cells.size();
}

void stage_synth(const PipelineConfig& cfg, StageIo& io) {
  const SyntheticDataset data =
      generate_landscape(cfg.synth, cfg.synth_screened, cfg.synth_unlabelled);
  const auto written = save_landscape(data, io.dir);
  for (const auto& p : written) io.outputs.push_back(p.filename().string());
  io.extra["n_labelled"] = data.labelled.size();
  io.extra["n_pool"] = data.pool.size();
  io.extra["cutoff"] = data.cutoff;
  io.extra["pool_duplicates_removed"] = data.pool_duplicates_removed;
}

}  // namespace

bool is_known_stage(const std::string& stage) {
  static const std::set<std::string> known = {"ingest", "sample",     "prior",
                                              "degrade", "covariance", "mixture",
                                              "score",   "evaluate",   "synth"};
  return known.contains(stage);
}

StageStatus run_stage(const std::string& stage, const PipelineConfig& cfg) {
  if (!is_known_stage(stage)) throw ConfigError("unknown subcommand '" + stage + "'");
  if (cfg.workdir.empty())
    throw ConfigError("config: /paths/workdir (or --workdir) is required");

  for (const auto& dep : stage_dependencies(stage)) require_stage(cfg, stage, dep);

  const std::string config_hash =
      hash_string(stage_config_json(stage, cfg).dump());
  const std::string input_hash = hash_files(stage_input_files(cfg, stage));

  const auto stage_dir = cfg.workdir / stage;
  const auto manifest_file = stage_dir / "manifest.json";
  if (std::filesystem::exists(manifest_file)) {
    const json m = manifest_path_load(manifest_file);
    if (m.value("config_hash", "") == config_hash &&
        m.value("input_hash", "") == input_hash &&
        m.value("version", 0) == kArtifactVersion)
      return StageStatus::kCached;
  }

  WorkdirLock lock(cfg.workdir);
  std::filesystem::remove_all(stage_dir);
  std::filesystem::create_directories(stage_dir);

  StageIo io{stage_dir, {}, json::object()};
  if (stage == "ingest")
    stage_ingest(cfg, io);
  else if (stage == "sample")
    stage_sample(cfg, io);
  else if (stage == "prior")
    stage_prior(cfg, io);
  else if (stage == "degrade")
    stage_degrade(cfg, io);
  else if (stage == "covariance")
    stage_covariance(cfg, io);
  else if (stage == "mixture")
    stage_mixture(cfg, io);
  else if (stage == "score")
    stage_score(cfg, io);
  else if (stage == "evaluate")
    stage_evaluate(cfg, io);
  else if (stage == "synth")
    stage_synth(cfg, io);

  json manifest;
  manifest["stage"] = stage;
  manifest["version"] = kArtifactVersion;
  manifest["config_hash"] = config_hash;
  manifest["input_hash"] = input_hash;
  manifest["seed"] = cfg.seed;
  manifest["config"] = stage_config_json(stage, cfg);
  manifest["outputs"] = io.outputs;
  manifest["info"] = io.extra;
  std::ofstream out(manifest_file);
  if (!out) throw IoError("cannot write manifest: " + manifest_file.string());
  out << manifest.dump(2) << '\n';

  return StageStatus::kRan;
}

}  // namespace domainrank
