#include "domainrank/scoring.hpp"

#include <algorithm>
#include <numeric>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/parallel.hpp"

namespace domainrank {

ScoreVariant score_variant_from_string(const std::string& name) {
  if (name == "S0" || name == "s0") return ScoreVariant::kS0;
  if (name == "S1" || name == "s1") return ScoreVariant::kS1;
  if (name == "S2" || name == "s2") return ScoreVariant::kS2;
  if (name == "S3" || name == "s3") return ScoreVariant::kS3;
  throw ConfigError("unknown score variant '" + name + "'");
}

std::string to_string(ScoreVariant variant) {
  switch (variant) {
    case ScoreVariant::kS0: return "S0";
    case ScoreVariant::kS1: return "S1";
    case ScoreVariant::kS2: return "S2";
    case ScoreVariant::kS3: return "S3";
  }
  return "S3";
}

void ScoringContext::validate() const {
  if (!model) throw ConfigError("scoring requires a fitted model (stage 'degrade' input)");
  if (!train_fps || train_fps->empty())
    throw ConfigError("scoring requires the training fingerprints");
  if (!prior) throw ConfigError("scoring requires the fitted prior curve (stage 'prior')");
  if (!degradation)
    throw ConfigError("scoring requires the fitted degradation curves (stage 'degrade')");
  if (!sigma_curve)
    throw ConfigError("scoring requires the fitted covariance curve (stage 'covariance')");
  if (!mixture)
    throw ConfigError("scoring requires the fitted activity distribution (stage 'mixture')");
}

double ScoreBreakdown::get(ScoreVariant variant) const {
  switch (variant) {
    case ScoreVariant::kS0: return s0;
    case ScoreVariant::kS1: return s1;
    case ScoreVariant::kS2: return s2;
    case ScoreVariant::kS3: return s3;
  }
  return s3;
}

ScoreBreakdown score_breakdown(const ScoringContext& ctx, const Fingerprint& x) {
  ctx.validate();

  ScoreBreakdown b;
  b.delta = setwise_distance(x, *ctx.train_fps);
  b.s0 = ctx.model->predict(x);
  b.s1 = ctx.degradation->beta_at(b.delta) * b.s0;
  const double prior_prob = prob_active(*ctx.prior, b.delta);
  b.s2 = prior_prob * b.s1;

  const double mean =
      ctx.s3_mean_source == S3MeanSource::kS1 ? b.s1 : b.s2;
  const double spread = std::max(sigma(*ctx.sigma_curve, b.delta), 1e-12);
  b.s3 = tail_prob(*ctx.mixture, mean, spread, ctx.threshold) * prior_prob;
  return b;
}

double score_compound(const ScoringContext& ctx, const Fingerprint& x,
                      ScoreVariant variant) {
  return score_breakdown(ctx, x).get(variant);
}

RankedList rank_candidates(const ScoringContext& ctx,
                           std::span<const Candidate> candidates,
                           ScoreVariant variant) {
  ctx.validate();
  if (candidates.empty()) throw DomainError("candidate set is empty");

  std::vector<ScoreBreakdown> breakdowns(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    breakdowns[i] = score_breakdown(ctx, candidates[i].fp);
  });

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = breakdowns[a].get(variant);
    const double sb = breakdowns[b].get(variant);
    if (sa != sb) return sa > sb;
    return candidates[a].id < candidates[b].id;
  });

  RankedList out;
  out.variant = variant;
  out.entries.reserve(candidates.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    out.entries.push_back(
        {r + 1, candidates[i].id, breakdowns[i].get(variant), breakdowns[i]});
  }
  return out;
}

void save_ranking(const RankedList& ranking, const std::filesystem::path& path) {
  csv::Writer w(path, "rank,id,score,delta,s0,s1,s2,s3");
  for (const auto& e : ranking.entries)
    w.row({std::to_string(e.rank), e.id, csv::format_double(e.score),
           csv::format_double(e.breakdown.delta), csv::format_double(e.breakdown.s0),
           csv::format_double(e.breakdown.s1), csv::format_double(e.breakdown.s2),
           csv::format_double(e.breakdown.s3)});
  w.close();
}

}  // namespace domainrank
