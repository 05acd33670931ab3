#include "tact/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tact/error.hpp"
#include "tact/rng.hpp"

namespace tact {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Source s) { return s == Source::ssvtp ? "ssvtp" : "hct"; }

std::string to_string(LabelOrigin o) {
  switch (o) {
    case LabelOrigin::human: return "human";
    case LabelOrigin::pseudo: return "pseudo";
    case LabelOrigin::backfilled: return "backfilled";
    case LabelOrigin::none: return "none";
  }
  return "none";
}

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string SamplePair::joined_labels() const {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ", ";
    out += labels[i];
  }
  return out;
}

std::string SamplePair::key() const { return trajectory_id + "#" + format_double(t); }

std::string normalize_label(const std::string& raw, int line_no) {
  std::size_t b = raw.find_first_not_of(" \t");
  std::size_t e = raw.find_last_not_of(" \t");
  std::string s = (b == std::string::npos) ? std::string() : raw.substr(b, e - b + 1);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s.find(',') != std::string::npos) {
    std::ostringstream msg;
    msg << "field 'labels': label token contains a comma: \"" << raw << "\"";
    if (line_no > 0) msg << " (line " << line_no << ")";
    throw schema_error(msg.str());
  }
  return s;
}

namespace {

[[noreturn]] void fail(int line, const std::string& field, const std::string& what) {
  std::ostringstream msg;
  msg << "manifest line " << line << ", field '" << field << "': " << what;
  throw schema_error(msg.str());
}

Source parse_source(const std::string& s, int line) {
  if (s == "ssvtp") return Source::ssvtp;
  if (s == "hct") return Source::hct;
  fail(line, "source", "expected \"ssvtp\" or \"hct\", got \"" + s + "\"");
}

LabelOrigin parse_origin(const std::string& s, int line) {
  if (s == "human") return LabelOrigin::human;
  if (s == "pseudo") return LabelOrigin::pseudo;
  if (s == "backfilled") return LabelOrigin::backfilled;
  if (s == "none") return LabelOrigin::none;
  fail(line, "label_origin", "unknown value \"" + s + "\"");
}

Split parse_split(const std::string& s, int line) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  fail(line, "split", "expected \"train\" or \"test\", got \"" + s + "\"");
}

const ordered_json& need(const ordered_json& rec, const char* field, int line) {
  auto it = rec.find(field);
  if (it == rec.end()) fail(line, field, "missing");
  return *it;
}

std::string need_string(const ordered_json& rec, const char* field, int line) {
  const auto& v = need(rec, field, line);
  if (!v.is_string()) fail(line, field, "expected a string");
  return v.get<std::string>();
}

}  // namespace

DatasetIndex load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("manifest not found: " + path.string());

  DatasetIndex index;
  index.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::map<std::string, std::size_t> traj_slot;  // id -> trajectories index
  std::set<std::pair<std::string, double>> seen_keys;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(line_no, "<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) fail(line_no, "<record>", "expected a JSON object");

    SamplePair p;
    p.trajectory_id = need_string(rec, "trajectory_id", line_no);
    const auto& tv = need(rec, "t", line_no);
    if (!tv.is_number()) fail(line_no, "t", "expected a number");
    p.t = tv.get<double>();
    p.tactile_path = need_string(rec, "tactile_path", line_no);
    p.vision_path = need_string(rec, "vision_path", line_no);
    p.source = parse_source(need_string(rec, "source", line_no), line_no);

    const auto& cv = need(rec, "contact", line_no);
    if (cv.is_null())
      p.contact = std::nullopt;
    else if (cv.is_boolean())
      p.contact = cv.get<bool>();
    else
      fail(line_no, "contact", "expected true/false/null");

    const auto& lv = need(rec, "labels", line_no);
    if (!lv.is_array()) fail(line_no, "labels", "expected an array of strings");
    for (const auto& item : lv) {
      if (!item.is_string()) fail(line_no, "labels", "expected an array of strings");
      std::string tok = normalize_label(item.get<std::string>(), line_no);
      if (!tok.empty()) p.labels.push_back(tok);
    }
    p.label_origin = parse_origin(need_string(rec, "label_origin", line_no), line_no);
    p.split = parse_split(need_string(rec, "split", line_no), line_no);

    if (p.labeled() && p.label_origin == LabelOrigin::none)
      fail(line_no, "label_origin", "labels present but origin is \"none\"");
    if (p.split == Split::test && p.labeled() && p.label_origin != LabelOrigin::human)
      fail(line_no, "label_origin", "test pairs must be human-annotated");

    if (!seen_keys.emplace(p.trajectory_id, p.t).second)
      fail(line_no, "t", "duplicate (trajectory_id, t) key: " + p.key());

    bool excluded = false;
    if (auto it = rec.find("excluded"); it != rec.end()) {
      if (!it->is_boolean()) fail(line_no, "excluded", "expected a boolean");
      excluded = it->get<bool>();
    }

    auto slot = traj_slot.find(p.trajectory_id);
    if (slot == traj_slot.end()) {
      slot = traj_slot.emplace(p.trajectory_id, index.trajectories.size()).first;
      index.trajectories.push_back(Trajectory{p.trajectory_id, {}, false});
    }
    Trajectory& traj = index.trajectories[slot->second];
    traj.excluded = traj.excluded || excluded;
    traj.pairs.push_back(std::move(p));
  }

  for (auto& traj : index.trajectories)
    std::stable_sort(traj.pairs.begin(), traj.pairs.end(),
                     [](const SamplePair& a, const SamplePair& b) { return a.t < b.t; });

  index.invalidate_counts();
  (void)index.counts();  // populate the cache on load
  return index;
}

void save_manifest(const DatasetIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write manifest: " + path.string());
  for (const auto& traj : index.trajectories) {
    for (const auto& p : traj.pairs) {
      ordered_json rec;
      rec["trajectory_id"] = p.trajectory_id;
      rec["t"] = p.t;
      rec["tactile_path"] = p.tactile_path;
      rec["vision_path"] = p.vision_path;
      rec["source"] = to_string(p.source);
      if (p.contact.has_value())
        rec["contact"] = *p.contact;
      else
        rec["contact"] = nullptr;
      rec["labels"] = p.labels;
      rec["label_origin"] = to_string(p.label_origin);
      rec["split"] = to_string(p.split);
      if (traj.excluded) rec["excluded"] = true;
      out << rec.dump() << "\n";
    }
  }
  if (!out) throw io_error("short write: " + path.string());
}

const DatasetCounts& DatasetIndex::counts() const {
  if (!cached_) cached_ = recount();
  return *cached_;
}

DatasetCounts DatasetIndex::recount() const {
  DatasetCounts c;
  for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (!p.contact.has_value())
      ++c.unknown_contact;
    else if (*p.contact)
      ++c.in_contact;
    else
      ++c.out_of_contact;
    ++c.per_source[p.source];
  });
  return c;
}

void DatasetIndex::invalidate_counts() { cached_.reset(); }

std::int64_t DatasetIndex::pair_count() const {
  std::int64_t n = 0;
  for (const auto& t : trajectories) n += static_cast<std::int64_t>(t.pairs.size());
  return n;
}

namespace {

// Reference to one in-contact pair, stable across shuffles.
struct PairRef {
  std::size_t traj;
  std::size_t idx;
};

void assign_test(DatasetIndex& index, const PairRef& r) {
  SamplePair& p = index.trajectories[r.traj].pairs[r.idx];
  p.split = Split::test;
  if (p.labeled() && p.label_origin != LabelOrigin::human) {
    // Test pairs are hand-annotated; drop machine labels and flag for
    // annotation by leaving the pair unlabeled.
    p.labels.clear();
    p.label_origin = LabelOrigin::none;
  }
}

}  // namespace

void split_dataset(DatasetIndex& index, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw config_error("test_fraction must lie strictly between 0 and 1");
  if (index.counts().in_contact == 0)
    throw schema_error("cannot split an index with zero in-contact pairs");

  // Reset existing tags so re-splitting with the same seed is idempotent.
  for (auto& traj : index.trajectories)
    for (auto& p : traj.pairs) p.split = Split::train;

  // --- SSVTP: independent pairs, split per pair.
  std::vector<PairRef> ssvtp;
  for (std::size_t ti = 0; ti < index.trajectories.size(); ++ti) {
    const auto& traj = index.trajectories[ti];
    for (std::size_t pi = 0; pi < traj.pairs.size(); ++pi) {
      const auto& p = traj.pairs[pi];
      if (p.source == Source::ssvtp && p.contact.value_or(false)) ssvtp.push_back({ti, pi});
    }
  }
  if (!ssvtp.empty()) {
    const auto k = static_cast<std::size_t>(std::llround(test_fraction * ssvtp.size()));
    Rng rng = Rng(seed).split(0x55u);
    rng.shuffle(ssvtp.begin(), ssvtp.end());
    for (std::size_t i = 0; i < std::min(k, ssvtp.size()); ++i) assign_test(index, ssvtp[i]);
  }

  // --- HCT: split by whole trajectory; greedy fill toward the target count,
  // never overshooting by more than one pair.
  std::vector<std::size_t> hct_trajs;
  std::int64_t hct_contact = 0;
  for (std::size_t ti = 0; ti < index.trajectories.size(); ++ti) {
    std::int64_t n = 0;
    for (const auto& p : index.trajectories[ti].pairs)
      if (p.source == Source::hct && p.contact.value_or(false)) ++n;
    if (n > 0) {
      hct_trajs.push_back(ti);
      hct_contact += n;
    }
  }
  if (!hct_trajs.empty()) {
    const auto k = std::llround(test_fraction * static_cast<double>(hct_contact));
    Rng rng = Rng(seed).split(0x48u);
    rng.shuffle(hct_trajs.begin(), hct_trajs.end());
    std::int64_t total = 0;
    for (std::size_t ti : hct_trajs) {
      if (total >= k) break;
      std::int64_t sz = 0;
      for (const auto& p : index.trajectories[ti].pairs)
        if (p.source == Source::hct && p.contact.value_or(false)) ++sz;
      if (total + sz > k + 1) continue;  // would overshoot; try a smaller one
      for (std::size_t pi = 0; pi < index.trajectories[ti].pairs.size(); ++pi) {
        const auto& p = index.trajectories[ti].pairs[pi];
        if (p.source == Source::hct && p.contact.value_or(false)) assign_test(index, {ti, pi});
      }
      total += sz;
    }
  }

  index.invalidate_counts();
}

WordDistribution vocabulary_stats(const DatasetIndex& index) {
  WordDistribution dist;
  index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (!p.labeled()) return;
    for (const auto& w : p.labels) ++dist.counts[w];
    auto& o = dist.per_origin[p.label_origin];
    ++o.labeled_pairs;
    o.total_adjectives += static_cast<std::int64_t>(p.labels.size());
    ++dist.overall.labeled_pairs;
    dist.overall.total_adjectives += static_cast<std::int64_t>(p.labels.size());
  });
  return dist;
}

}  // namespace tact
