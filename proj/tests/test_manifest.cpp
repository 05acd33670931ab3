#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "tact/error.hpp"
#include "tact/manifest.hpp"
#include "testutil.hpp"

using namespace tact;
using test::TempDir;
using test::read_file;
using test::write_file;

namespace {

std::string record(const std::string& traj, double t, const std::string& labels = "[]",
                   const std::string& origin = "none", const std::string& split = "train",
                   const std::string& source = "hct", const std::string& contact = "true") {
  return "{\"trajectory_id\":\"" + traj + "\",\"t\":" + format_double(t) +
         ",\"tactile_path\":\"tac.ppm\",\"vision_path\":\"vis.ppm\",\"source\":\"" + source +
         "\",\"contact\":" + contact + ",\"labels\":" + labels + ",\"label_origin\":\"" + origin +
         "\",\"split\":\"" + split + "\"}";
}

}  // namespace

TEST_CASE("minimal well-formed manifest loads into one trajectory") {
  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  write_file(path, record("t0", 0.0) + "\n" + record("t0", 1.0 / 30) + "\n" +
                       record("t0", 2.0 / 30) + "\n");
  const auto index = load_manifest(path);
  REQUIRE(index.trajectories.size() == 1);
  CHECK(index.trajectories[0].pairs.size() == 3);
  CHECK(index.counts().in_contact == 3);
  CHECK(index.pair_count() == 3);
}

TEST_CASE("comma inside a label token is a schema violation naming the line") {
  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  write_file(path, record("t0", 0.0) + "\n" +
                       record("t0", 0.5, R"(["soft,smooth"])", "human") + "\n");
  try {
    load_manifest(path);
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.category() == "schema");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("labels") != std::string::npos);
  }
}

TEST_CASE("missing file and malformed records are rejected, not skipped") {
  CHECK_THROWS_AS(load_manifest("/nonexistent/m.jsonl"), Error);

  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  write_file(path, "{\"trajectory_id\":\"a\"}\n");
  try {
    load_manifest(path);
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  write_file(path, "not json at all\n");
  CHECK_THROWS_AS(load_manifest(path), Error);
}

TEST_CASE("duplicate (trajectory_id, t) keys are rejected") {
  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  write_file(path, record("t0", 0.25) + "\n" + record("t0", 0.25) + "\n");
  try {
    load_manifest(path);
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
}

TEST_CASE("labels imply an origin; test pairs must be human-labeled") {
  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  write_file(path, record("t0", 0.0, R"(["soft"])", "none") + "\n");
  CHECK_THROWS_AS(load_manifest(path), Error);

  write_file(path, record("t0", 0.0, R"(["soft"])", "pseudo", "test") + "\n");
  CHECK_THROWS_AS(load_manifest(path), Error);

  write_file(path, record("t0", 0.0, R"(["soft"])", "human", "test") + "\n");
  CHECK_NOTHROW(load_manifest(path));
}

TEST_CASE("save(load(p)) is a byte-identical fixed point") {
  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  // Non-canonical input: different key order, floats with trailing zeros.
  write_file(path,
             "{\"t\": 0.50, \"trajectory_id\": \"z\", \"vision_path\": \"v.ppm\", "
             "\"tactile_path\": \"a.ppm\", \"labels\": [\"Soft\", \" smooth \"], "
             "\"label_origin\": \"human\", \"split\": \"train\", \"source\": \"ssvtp\", "
             "\"contact\": true}\n" +
                 record("b", 0.1, "[]", "none", "train", "hct", "null"));
  const auto index = load_manifest(path);
  const auto canon1 = dir.path() / "c1.jsonl";
  const auto canon2 = dir.path() / "c2.jsonl";
  save_manifest(index, canon1);
  save_manifest(load_manifest(canon1), canon2);
  const std::string a = read_file(canon1), b = read_file(canon2);
  CHECK(a == b);
  CHECK(a.find("\"soft\"") != std::string::npos);    // lowercased
  CHECK(a.find("\"smooth\"") != std::string::npos);  // trimmed
}

TEST_CASE("pairs are ordered by timestamp within a trajectory") {
  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  write_file(path, record("t0", 0.9) + "\n" + record("t0", 0.1) + "\n" + record("t0", 0.5) + "\n");
  const auto index = load_manifest(path);
  const auto& pairs = index.trajectories[0].pairs;
  CHECK(pairs[0].t == 0.1);
  CHECK(pairs[1].t == 0.5);
  CHECK(pairs[2].t == 0.9);
}

TEST_CASE("excluded flag round-trips at the trajectory level") {
  TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";
  write_file(path, record("t0", 0.0) + "\n");
  auto index = load_manifest(path);
  index.trajectories[0].excluded = true;
  const auto out = dir.path() / "out.jsonl";
  save_manifest(index, out);
  const auto reloaded = load_manifest(out);
  CHECK(reloaded.trajectories[0].excluded);
}

// ---------------------------------------------------------------------------
// split_dataset
// ---------------------------------------------------------------------------

namespace {

DatasetIndex make_ssvtp_index(int pairs) {
  DatasetIndex index;
  for (int i = 0; i < pairs; ++i) {
    Trajectory traj;
    traj.id = "s" + std::to_string(i);
    SamplePair p;
    p.trajectory_id = traj.id;
    p.t = 0.0;
    p.tactile_path = "t.ppm";
    p.vision_path = "v.ppm";
    p.source = Source::ssvtp;
    p.contact = true;
    p.labels = {"soft"};
    p.label_origin = LabelOrigin::human;
    traj.pairs.push_back(std::move(p));
    index.trajectories.push_back(std::move(traj));
  }
  return index;
}

std::int64_t count_test(const DatasetIndex& index) {
  std::int64_t n = 0;
  index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (p.split == Split::test) ++n;
  });
  return n;
}

}  // namespace

TEST_CASE("400 pairs at 1% give exactly 4 test pairs, stable across reruns") {
  auto index = make_ssvtp_index(400);
  split_dataset(index, 0.01, 7);
  CHECK(count_test(index) == 4);

  std::vector<std::string> first_pick;
  index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (p.split == Split::test) first_pick.push_back(p.trajectory_id);
  });
  split_dataset(index, 0.01, 7);
  std::vector<std::string> second_pick;
  index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (p.split == Split::test) second_pick.push_back(p.trajectory_id);
  });
  CHECK(first_pick == second_pick);  // idempotent under the same seed

  split_dataset(index, 0.01, 8);
  CHECK(count_test(index) == 4);  // different seed, same count
}

TEST_CASE("two pairs at 50% split one and one") {
  auto index = make_ssvtp_index(2);
  split_dataset(index, 0.5, 3);
  CHECK(count_test(index) == 1);
}

TEST_CASE("invalid fractions and contactless indexes are rejected") {
  auto index = make_ssvtp_index(10);
  CHECK_THROWS_AS(split_dataset(index, 0.0, 1), Error);
  CHECK_THROWS_AS(split_dataset(index, 1.0, 1), Error);

  DatasetIndex empty;
  Trajectory traj;
  traj.id = "x";
  SamplePair p;
  p.trajectory_id = "x";
  p.tactile_path = "t.ppm";
  p.vision_path = "v.ppm";
  p.contact = false;
  traj.pairs.push_back(p);
  empty.trajectories.push_back(traj);
  CHECK_THROWS_AS(split_dataset(empty, 0.1, 1), Error);
}

TEST_CASE("hct splits whole trajectories; test picks keep human labels only") {
  DatasetIndex index;
  for (int tr = 0; tr < 20; ++tr) {
    Trajectory traj;
    traj.id = "h" + std::to_string(tr);
    for (int i = 0; i < 5; ++i) {
      SamplePair p;
      p.trajectory_id = traj.id;
      p.t = i / 30.0;
      p.tactile_path = "t.ppm";
      p.vision_path = "v.ppm";
      p.source = Source::hct;
      p.contact = true;
      p.labels = {"fuzzy"};
      p.label_origin = LabelOrigin::pseudo;
      traj.pairs.push_back(std::move(p));
    }
    index.trajectories.push_back(std::move(traj));
  }
  split_dataset(index, 0.10, 11);  // target 10 pairs = 2 whole trajectories
  CHECK(count_test(index) == 10);

  for (const auto& traj : index.trajectories) {
    // no trajectory straddles the boundary
    int test_pairs = 0;
    for (const auto& p : traj.pairs) test_pairs += p.split == Split::test ? 1 : 0;
    CHECK((test_pairs == 0 || test_pairs == static_cast<int>(traj.pairs.size())));
    for (const auto& p : traj.pairs)
      if (p.split == Split::test) {
        // pseudo labels were dropped pending hand annotation
        CHECK(p.labels.empty());
        CHECK(p.label_origin == LabelOrigin::none);
      }
  }
}

// ---------------------------------------------------------------------------
// vocabulary_stats
// ---------------------------------------------------------------------------

TEST_CASE("vocabulary stats: two adjectives on one pair") {
  auto index = make_ssvtp_index(1);
  index.trajectories[0].pairs[0].labels = {"soft", "smooth"};
  const auto dist = vocabulary_stats(index);
  CHECK(dist.unique_count() == 2);
  CHECK(dist.per_origin.at(LabelOrigin::human).mean() == 2.0);
}

TEST_CASE("vocabulary stats hand count: {a},{a,b},{} gives a:2 b:1 mean 1.5") {
  auto index = make_ssvtp_index(3);
  index.trajectories[0].pairs[0].labels = {"a"};
  index.trajectories[1].pairs[0].labels = {"a", "b"};
  index.trajectories[2].pairs[0].labels = {};
  index.trajectories[2].pairs[0].label_origin = LabelOrigin::none;
  const auto dist = vocabulary_stats(index);
  CHECK(dist.counts.at("a") == 2);
  CHECK(dist.counts.at("b") == 1);
  CHECK(dist.overall.mean() == 1.5);
}

TEST_CASE("vocabulary stats equal a brute-force scan") {
  auto index = make_ssvtp_index(30);
  Rng rng(5);
  const std::vector<std::string> vocab{"soft", "hard", "fuzzy", "slick", "warm"};
  for (auto& traj : index.trajectories)
    for (auto& p : traj.pairs) {
      p.labels.clear();
      const auto n = rng.below(4);
      for (std::uint64_t i = 0; i < n; ++i)
        p.labels.push_back(vocab[static_cast<std::size_t>(rng.below(vocab.size()))]);
      if (p.labels.empty()) p.label_origin = LabelOrigin::none;
    }
  const auto dist = vocabulary_stats(index);

  std::map<std::string, std::int64_t> brute;
  std::int64_t labeled = 0, total = 0;
  index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (p.labels.empty()) return;
    ++labeled;
    for (const auto& w : p.labels) {
      ++brute[w];
      ++total;
    }
  });
  CHECK(dist.counts == brute);
  CHECK(dist.overall.labeled_pairs == labeled);
  CHECK(dist.overall.total_adjectives == total);
}

TEST_CASE("empty index yields an empty distribution") {
  DatasetIndex index;
  const auto dist = vocabulary_stats(index);
  CHECK(dist.unique_count() == 0);
  CHECK(dist.overall.labeled_pairs == 0);
}

TEST_CASE("cached counts match a recount after mutation + invalidation") {
  auto index = make_ssvtp_index(6);
  CHECK(index.counts().in_contact == 6);
  index.trajectories[0].pairs[0].contact = false;
  index.invalidate_counts();
  CHECK(index.counts().in_contact == index.recount().in_contact);
  CHECK(index.counts().in_contact == 5);
  CHECK(index.counts().out_of_contact == 1);
}
