#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "domainrank/activity_covariance.hpp"
#include "domainrank/activity_distribution.hpp"
#include "domainrank/activity_prior.hpp"
#include "domainrank/degradation.hpp"
#include "domainrank/regressors.hpp"

namespace domainrank {

enum class ScoreVariant { kS0, kS1, kS2, kS3 };

// Conditional mean fed to the tail probability inside S3. The prediction-goal
// factorization separates P[y >= I | active] from P[active], which makes S1
// the natural mean; the literal S2 form double-counts the prior and is kept
// as an option.
enum class S3MeanSource { kS1, kS2 };

ScoreVariant score_variant_from_string(const std::string& name);
std::string to_string(ScoreVariant variant);

// All fitted stages required to score a compound. threshold is in the same
// (standardized) activity units the model predicts in.
struct ScoringContext {
  const FittedModel* model = nullptr;
  const std::vector<Fingerprint>* train_fps = nullptr;
  const PriorCurve* prior = nullptr;
  const DegradationCurves* degradation = nullptr;
  const SigmaCurve* sigma_curve = nullptr;
  const MixtureDistribution* mixture = nullptr;
  double threshold = 0.0;
  S3MeanSource s3_mean_source = S3MeanSource::kS1;

  void validate() const;  // ConfigError naming the first missing stage
};

struct ScoreBreakdown {
  double delta = 0.0;
  double s0 = 0.0;  // raw model prediction
  double s1 = 0.0;  // beta(delta) * s0
  double s2 = 0.0;  // prob_active(delta) * s1
  double s3 = 0.0;  // tail_prob(mean, sigma(delta), I) * prob_active(delta)

  double get(ScoreVariant variant) const;
};

ScoreBreakdown score_breakdown(const ScoringContext& ctx, const Fingerprint& x);
double score_compound(const ScoringContext& ctx, const Fingerprint& x,
                      ScoreVariant variant);

struct Candidate {
  std::string id;
  Fingerprint fp;
};

struct RankedEntry {
  std::size_t rank = 0;
  std::string id;
  double score = 0.0;
  ScoreBreakdown breakdown;
};

// Scores sorted descending, ties broken by id ascending; ranks are 1-based.
struct RankedList {
  ScoreVariant variant = ScoreVariant::kS3;
  std::vector<RankedEntry> entries;
};

RankedList rank_candidates(const ScoringContext& ctx,
                           std::span<const Candidate> candidates,
                           ScoreVariant variant);

// CSV `rank,id,score,delta,s0,s1,s2,s3`; every variant is emitted for audit.
void save_ranking(const RankedList& ranking, const std::filesystem::path& path);

}  // namespace domainrank
