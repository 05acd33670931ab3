#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tact {

enum class Source { ssvtp, hct };
enum class LabelOrigin { human, pseudo, backfilled, none };
enum class Split { train, test };

std::string to_string(Source s);
std::string to_string(LabelOrigin o);
std::string to_string(Split s);

/// One synchronized tactile+vision sample. Image payloads stay on disk and
/// are referenced by path relative to the manifest location.
struct SamplePair {
  std::string trajectory_id;
  double t = 0.0;  // seconds, monotone within a trajectory
  std::string tactile_path;
  std::string vision_path;
  Source source = Source::hct;
  std::optional<bool> contact;  // nullopt = unknown (not yet segmented)
  std::vector<std::string> labels;
  LabelOrigin label_origin = LabelOrigin::none;
  Split split = Split::train;

  bool labeled() const { return !labels.empty(); }
  std::string joined_labels() const;  // "soft, smooth"
  std::string key() const;            // trajectory_id + '#' + canonical t
};

struct Trajectory {
  std::string id;
  std::vector<SamplePair> pairs;  // ordered by timestamp
  bool excluded = false;          // excluded trajectories never feed training
};

struct DatasetCounts {
  std::int64_t in_contact = 0;
  std::int64_t out_of_contact = 0;
  std::int64_t unknown_contact = 0;
  std::map<Source, std::int64_t> per_source;
  std::int64_t total() const { return in_contact + out_of_contact + unknown_contact; }
};

class DatasetIndex {
 public:
  std::vector<Trajectory> trajectories;
  std::filesystem::path root;  // directory image paths are relative to

  /// Cached counts; recomputed lazily after mutations.
  const DatasetCounts& counts() const;
  DatasetCounts recount() const;
  void invalidate_counts();

  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }

  std::int64_t pair_count() const;
  template <class F>
  void for_each_pair(F&& f) const {
    for (const auto& tr : trajectories)
      for (const auto& p : tr.pairs) f(tr, p);
  }

 private:
  mutable std::optional<DatasetCounts> cached_;
};

/// Parses a line-delimited manifest. Malformed lines raise a schema error
/// naming the line number and field; duplicate (trajectory_id, t) keys and
/// label strings containing commas are rejected.
DatasetIndex load_manifest(const std::filesystem::path& path);

/// Writes the canonical form: fixed key order, shortest round-trip floats,
/// one record per line. save(load(p)) is a fixed point.
void save_manifest(const DatasetIndex& index, const std::filesystem::path& path);

/// Deterministic train/test tagging over in-contact pairs. SSVTP splits per
/// pair; HCT per whole trajectory so near-duplicate frames cannot leak across
/// the boundary. Test picks without human labels get their labels cleared
/// (label_origin=none) and await hand annotation.
void split_dataset(DatasetIndex& index, double test_fraction, std::uint64_t seed);

struct OriginStats {
  std::int64_t labeled_pairs = 0;
  std::int64_t total_adjectives = 0;
  double mean() const {
    return labeled_pairs == 0 ? 0.0 : static_cast<double>(total_adjectives) / labeled_pairs;
  }
};

struct WordDistribution {
  std::map<std::string, std::int64_t> counts;
  std::map<LabelOrigin, OriginStats> per_origin;
  std::int64_t unique_count() const { return static_cast<std::int64_t>(counts.size()); }
  OriginStats overall;  // across all labeled pairs
};

WordDistribution vocabulary_stats(const DatasetIndex& index);

/// Canonical shortest round-trip decimal form for doubles (manifest "t").
std::string format_double(double v);

/// Lowercase + trim; rejects commas inside a label token.
std::string normalize_label(const std::string& raw, int line_no = -1);

}  // namespace tact
