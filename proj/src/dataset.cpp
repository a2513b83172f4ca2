#include "domainrank/dataset.hpp"

#include <cmath>
#include <unordered_set>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/stats.hpp"

namespace domainrank {

Eigen::VectorXd LabelledSet::activities() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(compounds.size()));
  for (std::size_t i = 0; i < compounds.size(); ++i)
    y[static_cast<Eigen::Index>(i)] = compounds[i].activity;
  return y;
}

std::vector<Fingerprint> LabelledSet::fingerprints() const {
  std::vector<Fingerprint> fps;
  fps.reserve(compounds.size());
  for (const auto& c : compounds) fps.push_back(c.fp);
  return fps;
}

std::vector<Fingerprint> UnlabelledPool::fingerprints() const {
  std::vector<Fingerprint> fps;
  fps.reserve(compounds.size());
  for (const auto& c : compounds) fps.push_back(c.fp);
  return fps;
}

static std::string row_ref(const std::filesystem::path& path, std::size_t row) {
  // row is 1-based over data rows; header is line 1 of the file.
  return path.filename().string() + " row " + std::to_string(row) + " (line " +
         std::to_string(row + 1) + ")";
}

LabelledSet load_labelled(const std::filesystem::path& path, double l_min,
                          std::optional<std::int64_t> screened_count,
                          LoadReport* report) {
  const auto rows = csv::read_rows(path, "id,fingerprint,activity");

  LabelledSet set;
  set.l_min = l_min;
  set.screened_count = screened_count;
  set.compounds.reserve(rows.size());

  LoadReport local;
  local.rows_total = rows.size();
  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(rows.size());
  int expected_bits = 0;

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    if (fields.size() != 3)
      throw IngestError(row_ref(path, r + 1) + ": expected 3 fields, got " +
                        std::to_string(fields.size()));
    const std::string& id = fields[0];
    if (!seen_ids.insert(id).second)
      throw IngestError(row_ref(path, r + 1) + ": duplicate id '" + id + "'");

    Fingerprint fp;
    try {
      fp = Fingerprint::from_hex(fields[1]);
    } catch (const IngestError& e) {
      throw IngestError(row_ref(path, r + 1) + ": " + e.what());
    }
    if (expected_bits == 0)
      expected_bits = fp.bits();
    else if (fp.bits() != expected_bits)
      throw IngestError(row_ref(path, r + 1) + ": fingerprint length " +
                        std::to_string(fp.bits()) + " differs from " +
                        std::to_string(expected_bits));

    const auto activity = csv::parse_double(fields[2]);
    if (!activity || !std::isfinite(*activity))
      throw IngestError(row_ref(path, r + 1) + ": non-numeric activity '" +
                        fields[2] + "'");

    if (*activity < l_min) {
      ++local.rows_rejected_below_lmin;
      continue;
    }
    set.compounds.push_back({id, std::move(fp), *activity});
  }

  if (report) *report = local;
  return set;
}

UnlabelledPool load_unlabelled(const std::vector<std::filesystem::path>& paths,
                               const LabelledSet& labelled, LoadReport* report) {
  if (paths.empty()) throw DomainError("no unlabelled input files given");

  std::unordered_set<Fingerprint, FingerprintHash> labelled_fps;
  labelled_fps.reserve(labelled.compounds.size());
  for (const auto& c : labelled.compounds) labelled_fps.insert(c.fp);

  UnlabelledPool pool;
  pool.segment_count = static_cast<int>(paths.size());
  LoadReport local;
  std::unordered_set<std::string> seen_ids;
  int expected_bits =
      labelled.compounds.empty() ? 0 : labelled.compounds.front().fp.bits();

  for (std::size_t seg = 0; seg < paths.size(); ++seg) {
    const auto rows = csv::read_rows(paths[seg], "id,fingerprint");
    local.rows_total += rows.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& fields = rows[r];
      if (fields.size() != 2)
        throw IngestError(row_ref(paths[seg], r + 1) + ": expected 2 fields, got " +
                          std::to_string(fields.size()));
      const std::string& id = fields[0];
      if (!seen_ids.insert(id).second)
        throw IngestError(row_ref(paths[seg], r + 1) + ": duplicate id '" + id + "'");

      Fingerprint fp;
      try {
        fp = Fingerprint::from_hex(fields[1]);
      } catch (const IngestError& e) {
        throw IngestError(row_ref(paths[seg], r + 1) + ": " + e.what());
      }
      if (expected_bits == 0)
        expected_bits = fp.bits();
      else if (fp.bits() != expected_bits)
        throw IngestError(row_ref(paths[seg], r + 1) + ": fingerprint length " +
                          std::to_string(fp.bits()) + " differs from " +
                          std::to_string(expected_bits));

      if (labelled_fps.contains(fp)) {
        ++local.duplicates_removed;
        continue;
      }
      pool.compounds.push_back({id, std::move(fp), static_cast<int>(seg)});
    }
  }

  if (report) *report = local;
  return pool;
}

void save_labelled(const LabelledSet& set, const std::filesystem::path& path) {
  csv::Writer w(path, "id,fingerprint,activity");
  for (const auto& c : set.compounds)
    w.row({c.id, c.fp.to_hex(), csv::format_double(c.activity)});
  w.close();
}

void save_unlabelled_segment(const UnlabelledPool& pool, int segment,
                             const std::filesystem::path& path) {
  csv::Writer w(path, "id,fingerprint");
  for (const auto& c : pool.compounds)
    if (c.segment == segment) w.row({c.id, c.fp.to_hex()});
  w.close();
}

std::pair<LabelledSet, ActivityTransform> standardize_activities(
    const LabelledSet& set) {
  if (set.size() < 2)
    throw DomainError("standardization needs at least 2 compounds, got " +
                      std::to_string(set.size()));
  const Eigen::VectorXd y = set.activities();
  ActivityTransform t;
  t.mean = y.mean();
  t.sd = sample_sd(y);
  if (t.sd <= 0.0)
    throw DomainError("activities have zero variance; cannot standardize");

  LabelledSet out = set;
  for (auto& c : out.compounds) c.activity = t.standardize(c.activity);
  out.l_min = t.standardize(set.l_min);
  return {std::move(out), t};
}

}  // namespace domainrank
