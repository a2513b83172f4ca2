#include "domainrank/distance_sampler.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/parallel.hpp"

namespace domainrank {

DistanceSample sample_active_setwise(const LabelledSet& labelled, int v, int k,
                                     std::uint64_t seed) {
  const std::size_t n = labelled.size();
  if (v < 2) throw DomainError("cross-prediction needs v >= 2");
  if (k < 1) throw DomainError("cross-prediction needs k >= 1");
  if (n < static_cast<std::size_t>(2 * v))
    throw DomainError("labelled set too small for " + std::to_string(v) +
                      "-fold cross-prediction: " + std::to_string(n));

  const auto fps = labelled.fingerprints();
  Rng rng(seed);

  DistanceSample sample;
  sample.kind = "active";
  sample.seed = seed;
  sample.params.v = v;
  sample.params.k = k;
  sample.values.resize(static_cast<std::size_t>(k) * n);

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (int rep = 0; rep < k; ++rep) {
    rng.shuffle(perm);
    std::vector<int> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos)
      fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(v));

    // Complement of each fold, i.e. the references its members predict against.
    std::vector<std::vector<Fingerprint>> complement(static_cast<std::size_t>(v));
    for (int f = 0; f < v; ++f)
      for (std::size_t i = 0; i < n; ++i)
        if (fold[i] != f) complement[static_cast<std::size_t>(f)].push_back(fps[i]);

    double* out = sample.values.data() + static_cast<std::size_t>(rep) * n;
    parallel_for(n, [&](std::size_t i) {
      out[i] = setwise_distance(fps[i], complement[static_cast<std::size_t>(fold[i])]);
    });
  }
  return sample;
}

std::vector<std::size_t> segment_bin_counts(const UnlabelledPool& pool,
                                            const std::vector<double>& distances,
                                            double delta, double bin_width) {
  const auto bin_of = [bin_width](double d) {
    return static_cast<long>(std::floor(d / bin_width));
  };
  const long target_bin = bin_of(delta);
  std::vector<std::size_t> counts(static_cast<std::size_t>(pool.segment_count), 0);
  for (std::size_t i = 0; i < pool.compounds.size(); ++i)
    if (bin_of(distances[i]) == target_bin)
      ++counts[static_cast<std::size_t>(pool.compounds[i].segment)];
  return counts;
}

std::vector<std::size_t> weighted_pool_draw(const UnlabelledPool& pool,
                                            const std::vector<double>& segment_weights,
                                            std::size_t count, Rng& rng) {
  const auto n_seg = static_cast<std::size_t>(pool.segment_count);
  if (segment_weights.size() != n_seg)
    throw DomainError("segment weight vector size mismatch");

  std::vector<std::vector<std::size_t>> members(n_seg);
  for (std::size_t i = 0; i < pool.compounds.size(); ++i)
    members[static_cast<std::size_t>(pool.compounds[i].segment)].push_back(i);

  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t draw = 0; draw < count; ++draw) {
    double total = 0.0;
    for (std::size_t s = 0; s < n_seg; ++s)
      if (!members[s].empty() && segment_weights[s] > 0.0) total += segment_weights[s];
    if (total <= 0.0)
      throw DomainError("all weighted segments exhausted after " +
                        std::to_string(draw) + " of " + std::to_string(count) +
                        " draws");

    const double r = rng.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = n_seg;
    for (std::size_t s = 0; s < n_seg; ++s) {
      if (members[s].empty() || segment_weights[s] <= 0.0) continue;
      acc += segment_weights[s];
      if (r < acc) {
        chosen = s;
        break;
      }
    }
    if (chosen == n_seg) {  // guard against accumulated rounding at r ~ total
      for (std::size_t s = n_seg; s-- > 0;)
        if (!members[s].empty() && segment_weights[s] > 0.0) {
          chosen = s;
          break;
        }
    }

    auto& seg = members[chosen];
    const std::size_t pick = static_cast<std::size_t>(rng.below(seg.size()));
    out.push_back(seg[pick]);
    seg[pick] = seg.back();
    seg.pop_back();
  }
  return out;
}

std::size_t max_background_draws(const UnlabelledPool& pool,
                                 const std::vector<std::size_t>& bin_counts) {
  std::vector<std::size_t> seg_sizes(static_cast<std::size_t>(pool.segment_count), 0);
  for (const auto& c : pool.compounds)
    ++seg_sizes[static_cast<std::size_t>(c.segment)];
  std::size_t total = 0;
  for (std::size_t s = 0; s < seg_sizes.size(); ++s)
    if (s < bin_counts.size() && bin_counts[s] > 0) total += seg_sizes[s];
  return total;
}

DistanceSample sample_background(const UnlabelledPool& pool, const LabelledSet& labelled,
                                 double delta_weight, std::size_t m,
                                 std::uint64_t seed,
                                 const std::vector<double>* precomputed_distances) {
  if (delta_weight <= 0.0 || delta_weight >= 1.0)
    throw DomainError("delta_weight must lie in (0,1)");
  if (m > pool.size())
    throw DomainError("background sample size " + std::to_string(m) +
                      " exceeds pool size " + std::to_string(pool.size()));
  if (labelled.compounds.empty()) throw DomainError("labelled set is empty");

  const std::vector<double> dists =
      precomputed_distances
          ? *precomputed_distances
          : batch_setwise_distances(pool.fingerprints(), labelled.fingerprints());
  if (dists.size() != pool.size())
    throw DomainError("precomputed distance vector size mismatch");

  const auto counts = segment_bin_counts(pool, dists, delta_weight);
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total == 0)
    throw DomainError("no pool compounds in the distance bin containing " +
                      std::to_string(delta_weight));

  std::vector<double> weights(counts.size());
  for (std::size_t s = 0; s < counts.size(); ++s)
    weights[s] = static_cast<double>(counts[s]);

  Rng rng(seed);
  const auto picks = weighted_pool_draw(pool, weights, m, rng);

  DistanceSample sample;
  sample.kind = "background";
  sample.seed = seed;
  sample.params.delta_weight = delta_weight;
  sample.params.m = m;
  sample.params.segment_bin_counts = counts;
  sample.values.reserve(m);
  for (std::size_t idx : picks) sample.values.push_back(dists[idx]);
  return sample;
}

void save_sample(const DistanceSample& sample, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path) {
  csv::Writer w(csv_path, "distance");
  for (double v : sample.values) w.row({csv::format_double(v)});
  w.close();

  nlohmann::json meta;
  meta["kind"] = sample.kind;
  meta["seed"] = sample.seed;
  meta["count"] = sample.values.size();
  if (sample.kind == "active") {
    meta["params"] = {{"v", sample.params.v}, {"k", sample.params.k}};
  } else {
    meta["params"] = {{"delta_weight", sample.params.delta_weight},
                      {"m", sample.params.m},
                      {"segment_bin_counts", sample.params.segment_bin_counts}};
  }
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write file: " + json_path.string());
  out << meta.dump(2) << '\n';
}

DistanceSample load_sample(const std::filesystem::path& csv_path,
                           const std::filesystem::path& json_path) {
  DistanceSample sample;
  for (const auto& row : csv::read_rows(csv_path, "distance")) {
    const auto v = csv::parse_double(row.at(0));
    if (!v) throw IngestError(csv_path.string() + ": non-numeric distance");
    sample.values.push_back(*v);
  }

  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open file: " + json_path.string());
  nlohmann::json meta = nlohmann::json::parse(in);
  sample.kind = meta.at("kind").get<std::string>();
  sample.seed = meta.at("seed").get<std::uint64_t>();
  const auto& params = meta.at("params");
  if (sample.kind == "active") {
    sample.params.v = params.at("v").get<int>();
    sample.params.k = params.at("k").get<int>();
  } else {
    sample.params.delta_weight = params.at("delta_weight").get<double>();
    sample.params.m = params.at("m").get<std::size_t>();
    sample.params.segment_bin_counts =
        params.at("segment_bin_counts").get<std::vector<std::size_t>>();
  }
  return sample;
}

}  // namespace domainrank
