#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "domainrank/evaluation.hpp"
#include "domainrank/synthetic.hpp"

namespace domainrank {

// Shared JSON config for every stage; schema-validated up front, unknown keys
// rejected with a JSON pointer.
struct PipelineConfig {
  std::uint64_t seed = 0;

  std::filesystem::path labelled_path;
  std::vector<std::filesystem::path> unlabelled_paths;
  std::filesystem::path workdir;

  int fingerprint_length = 128;
  double l_min = 0.0;
  std::optional<std::int64_t> screened_count;

  PipelineParams params;      // sampler/prior/degradation/covariance/scoring knobs
  RegressorSpec regressor;

  ScoreVariant ranking_variant = ScoreVariant::kS3;

  std::vector<SplitSpec> splits;
  std::vector<RegressorSpec> benchmark_models;
  std::vector<ScoreVariant> benchmark_variants;

  LandscapeSpec synth;
  std::size_t synth_screened = 5000;
  std::size_t synth_unlabelled = 20000;
};

PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);

enum class StageStatus { kRan, kCached };

// Stage names: ingest, sample, prior, degrade, covariance, mixture, score,
// evaluate, synth. Each writes versioned artifacts plus a manifest carrying
// the hashes of the config subset and input artifacts that produced them;
// rerunning with unchanged inputs is a no-op.
StageStatus run_stage(const std::string& stage, const PipelineConfig& config);

bool is_known_stage(const std::string& stage);

}  // namespace domainrank
