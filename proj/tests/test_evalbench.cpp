#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "tact/error.hpp"
#include "tact/evalbench.hpp"
#include "tact/prompts.hpp"
#include "tact/synthetic.hpp"
#include "testutil.hpp"

using namespace tact;

namespace {

// Embeddings with an exact target cosine against the reference axis (1,0).
Embedding planar(double c) { return Embedding({c, std::sqrt(std::max(0.0, 1.0 - c * c))}); }

TextEmbedFn map_embed(std::map<std::string, Embedding> table) {
  return [table = std::move(table)](const std::string& s) {
    auto it = table.find(s);
    if (it == table.end()) throw client_error("no fixture embedding for " + s);
    return it->second;
  };
}

}  // namespace

// ---------------------------------------------------------------------------
// compute_threshold
// ---------------------------------------------------------------------------

TEST_CASE("single descriptor with one synonym at 0.8 gives phi=0.8 in min mode") {
  std::map<std::string, std::vector<std::string>> table{{"soft", {"plush"}}};
  FixtureSynonymProvider provider(table);
  auto embed = map_embed({{"soft", planar(1.0)}, {"plush", planar(0.8)}});
  const auto r = compute_threshold({"soft"}, provider, embed, ThresholdMode::min);
  CHECK(r.spec.value == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.universe_size == 2);
  CHECK(r.skipped_descriptors.empty());
}

TEST_CASE("percentile mode: {0.5, 0.7, 0.9} at the 50th gives 0.7") {
  std::map<std::string, std::vector<std::string>> table{{"d", {"s1", "s2", "s3"}}};
  FixtureSynonymProvider provider(table);
  auto embed = map_embed(
      {{"d", planar(1.0)}, {"s1", planar(0.5)}, {"s2", planar(0.7)}, {"s3", planar(0.9)}});
  const auto r = compute_threshold({"d"}, provider, embed, ThresholdMode::percentile, 50);
  CHECK(r.spec.value == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("the published pooled similarities reproduce phi = 0.636 / 0.859 / 0.893 / 0.921") {
  // Fixture pooled similarities engineered so min and the 25/50/75th
  // percentiles land exactly on the published thresholds.
  std::map<std::string, std::vector<std::string>> table{{"ref", {"s1", "s2", "s3", "s4", "s5"}}};
  FixtureSynonymProvider provider(table);
  auto embed = map_embed({{"ref", planar(1.0)},
                          {"s1", planar(0.636)},
                          {"s2", planar(0.859)},
                          {"s3", planar(0.893)},
                          {"s4", planar(0.921)},
                          {"s5", planar(0.950)}});
  const std::vector<std::string> descriptors{"ref"};
  const auto mn = compute_threshold(descriptors, provider, embed, ThresholdMode::min);
  CHECK(mn.spec.value == doctest::Approx(0.636).epsilon(1e-12));
  const auto p25 = compute_threshold(descriptors, provider, embed, ThresholdMode::percentile, 25);
  CHECK(p25.spec.value == doctest::Approx(0.859).epsilon(1e-12));
  const auto p50 = compute_threshold(descriptors, provider, embed, ThresholdMode::percentile, 50);
  CHECK(p50.spec.value == doctest::Approx(0.893).epsilon(1e-12));
  const auto p75 = compute_threshold(descriptors, provider, embed, ThresholdMode::percentile, 75);
  CHECK(p75.spec.value == doctest::Approx(0.921).epsilon(1e-12));
}

TEST_CASE("min mode lower-bounds the pooled similarities; failures are recorded") {
  HashStubProvider stub(32);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  std::map<std::string, std::vector<std::string>> table{
      {"soft", {"plush", "tender"}}, {"hard", {"firm", "rigid", "solid"}}};
  FixtureSynonymProvider provider(table);
  const auto r =
      compute_threshold({"soft", "hard", "unknown"}, provider, embed, ThresholdMode::min);
  CHECK(r.skipped_descriptors == std::vector<std::string>{"unknown"});
  for (double s : r.table.pooled()) CHECK(r.spec.value <= s + 1e-15);
  CHECK(r.universe_size == 7);

  CHECK_THROWS_AS(compute_threshold({}, provider, embed, ThresholdMode::min), Error);
  CHECK_THROWS_AS(compute_threshold({"soft"}, provider, embed, ThresholdMode::percentile, 40),
                  Error);
}

// ---------------------------------------------------------------------------
// semantic_label_set
// ---------------------------------------------------------------------------

TEST_CASE("degenerate thresholds: above 1 keeps only the query, -1 keeps everything") {
  HashStubProvider stub(16);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  const std::vector<std::string> candidates{"a", "b", "c", "d"};
  CHECK(semantic_label_set("b", candidates, 1.0 + 1e-9, embed) ==
        std::vector<std::string>{"b"});
  CHECK(semantic_label_set("b", candidates, -1.0, embed) == candidates);
}

TEST_CASE("engineered 5-label vocabulary: exactly the two designed labels exceed 0.6") {
  auto embed = map_embed({{"q", planar(1.0)},
                          {"close1", planar(0.9)},
                          {"close2", planar(0.7)},
                          {"far1", planar(0.5)},
                          {"far2", planar(0.1)},
                          {"anti", planar(-0.4)}});
  const std::vector<std::string> candidates{"close1", "close2", "far1", "far2", "anti"};
  const auto s = semantic_label_set("q", candidates, 0.6, embed);
  CHECK(s == std::vector<std::string>{"close1", "close2"});

  // brute-force similarity scan agrees
  std::vector<std::string> brute;
  for (const auto& c : candidates)
    if (cosine(embed("q"), embed(c)) > 0.6) brute.push_back(c);
  CHECK(s == brute);
}

TEST_CASE("phi-monotonicity: larger thresholds give nested subsets") {
  HashStubProvider stub(8);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  std::vector<std::string> candidates;
  for (int i = 0; i < 30; ++i) candidates.push_back("w" + std::to_string(i));
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const double p1 = rng.uniform(-1.0, 1.0);
    const double p2 = rng.uniform(p1, 1.0);
    const auto s1 = semantic_label_set("w3", candidates, p1, embed);
    const auto s2 = semantic_label_set("w3", candidates, p2, embed);
    const std::set<std::string> set1(s1.begin(), s1.end());
    for (const auto& x : s2) CHECK(set1.count(x) == 1);
  }
}

// ---------------------------------------------------------------------------
// top-k classification
// ---------------------------------------------------------------------------

namespace {

std::vector<EvalPair> engineered_pairs(int n, int d, Rng& rng) {
  std::vector<EvalPair> pairs;
  for (int i = 0; i < n; ++i) {
    EvalPair p;
    p.key = "k" + std::to_string(i);
    p.source = i % 2 ? Source::hct : Source::ssvtp;
    p.label = "label" + std::to_string(i);
    Embedding t;
    for (int j = 0; j < d; ++j) t.v.push_back(rng.gaussian());
    p.tactile = t.normalize();
    Embedding v;
    for (int j = 0; j < d; ++j) v.v.push_back(rng.gaussian());
    p.vision = v.normalize();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// Independent brute-force re-implementation used as the oracle.
double brute_topk_text(const std::vector<EvalPair>& pairs, const TextEmbedFn& embed, double phi,
                       int k) {
  std::vector<std::string> labels;
  for (const auto& p : pairs)
    if (std::find(labels.begin(), labels.end(), p.label) == labels.end())
      labels.push_back(p.label);
  int hits = 0;
  for (const auto& p : pairs) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t j = 0; j < labels.size(); ++j)
      scored.emplace_back(cosine(p.tactile, embed(labels[j])), j);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;
    });
    bool hit = false;
    for (int r = 0; r < k; ++r) {
      const auto& cand = labels[scored[static_cast<std::size_t>(r)].second];
      if (cand == p.label || cosine(embed(p.label), embed(cand)) > phi) hit = true;
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

}  // namespace

TEST_CASE("tactile embeddings equal to their label embedding give accuracy 1") {
  HashStubProvider stub(32);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  Rng rng(1);
  auto pairs = engineered_pairs(12, 32, rng);
  for (auto& p : pairs) p.tactile = embed(p.label);
  CHECK(topk_tactile_text(pairs, embed, 0.999, 1) == 1.0);
}

TEST_CASE("random embeddings score near chance over many seeds (Monte Carlo)") {
  HashStubProvider stub(16);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  const int n = 402;
  std::int64_t hits_total = 0, trials = 0;
  for (int seed = 0; seed < 12; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) + 100);
    auto pairs = engineered_pairs(n, 16, rng);
    const double acc = topk_tactile_text(pairs, embed, 0.999, 1);
    hits_total += static_cast<std::int64_t>(std::lround(acc * n));
    trials += n;
  }
  // Binomial(trials, 1/402): mean 12, sigma ~3.45; allow 3 sigma
  const double expected = static_cast<double>(trials) / 402.0;
  const double sigma = std::sqrt(expected * (1.0 - 1.0 / 402.0));
  CHECK(std::abs(static_cast<double>(hits_total) - expected) <= 3.0 * sigma + 1e-9);
}

TEST_CASE("library top-k equals the brute-force oracle on small instances") {
  HashStubProvider stub(12);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const int n = 5 + static_cast<int>(rng.below(46));  // <= 50 labels
    auto pairs = engineered_pairs(n, 12, rng);
    const double phi = rng.uniform(-0.2, 0.9);
    for (int k : {1, 3, 5}) {
      if (k > n) continue;
      CHECK(topk_tactile_text(pairs, embed, phi, k) == brute_topk_text(pairs, embed, phi, k));
    }
  }
}

TEST_CASE("top-k accuracy is non-decreasing in k") {
  HashStubProvider stub(12);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  Rng rng(77);
  auto pairs = engineered_pairs(30, 12, rng);
  double prev = 0.0;
  for (int k = 1; k <= 30; k += 3) {
    const double acc = topk_tactile_text(pairs, embed, 0.7, k);
    CHECK(acc >= prev - 1e-12);
    prev = acc;
  }
  CHECK_THROWS_AS(topk_tactile_text(pairs, embed, 0.7, 31), Error);  // k > label count
}

TEST_CASE("extra ranking candidates act as distractors only") {
  HashStubProvider stub(12);
  TextEmbedFn embed = [&stub](const std::string& s) { return stub.embed_text(s); };
  Rng rng(17);
  auto pairs = engineered_pairs(20, 12, rng);
  for (auto& p : pairs) p.tactile = embed(p.label);  // perfect alignment
  CHECK(topk_tactile_text(pairs, embed, 0.999, 1) == 1.0);

  // A distractor embedded exactly at a ground-truth label outranks it by
  // stable order only if it came later in the pool, so accuracy holds; a
  // pool of unrelated words cannot raise accuracy either way.
  std::vector<std::string> unrelated;
  for (int i = 0; i < 100; ++i) unrelated.push_back("distractor" + std::to_string(i));
  for (int k : {1, 3}) {
    const double base = topk_tactile_text(pairs, embed, 0.7, k);
    const double widened = topk_tactile_text(pairs, embed, 0.7, k, unrelated);
    CHECK(widened <= base + 1e-12);
  }

  // a distractor colliding with every tactile embedding can only hurt:
  // random pairs now rank the distractor near the top, and it is never in
  // the correct set.
  Rng rng2(18);
  auto random_pairs = engineered_pairs(20, 12, rng2);
  const double before = topk_tactile_text(random_pairs, embed, -1.0, 1);
  CHECK(before == 1.0);  // phi = -1: every test label counts as correct
  const double after = topk_tactile_text(random_pairs, embed, -1.0, 1, unrelated);
  CHECK(after <= before);
}

TEST_CASE("tactile-vision retrieval: identity embeddings are perfect at k=1") {
  Rng rng(5);
  auto pairs = engineered_pairs(20, 16, rng);
  for (auto& p : pairs) p.vision = p.tactile;
  CHECK(topk_tactile_vision(pairs, 1) == 1.0);
  CHECK_THROWS_AS(topk_tactile_vision(pairs, 21), Error);
}

TEST_CASE("tactile-vision retrieval at chance level for random stubs (Monte Carlo)") {
  const int n = 100, k = 5;
  std::int64_t hits_total = 0, trials = 0;
  for (int seed = 0; seed < 12; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) + 999);
    auto pairs = engineered_pairs(n, 16, rng);
    hits_total += static_cast<std::int64_t>(std::lround(topk_tactile_vision(pairs, k) * n));
    trials += n;
  }
  const double expected = static_cast<double>(trials) * k / n;  // 5/100 per pair
  const double sigma = std::sqrt(expected * (1.0 - static_cast<double>(k) / n));
  CHECK(std::abs(static_cast<double>(hits_total) - expected) <= 3.0 * sigma + 1e-9);
}

// ---------------------------------------------------------------------------
// judge scoring
// ---------------------------------------------------------------------------

TEST_CASE("judge reply '7\\nGood overlap.' parses to (7, explanation)") {
  ScriptedJudgeClient judge({"7\nGood overlap."});
  const auto v = judge_score(judge, "Q", "soft", "soft, smooth");
  CHECK(v.valid);
  CHECK(v.score == 7);
  CHECK(v.explanation == "Good overlap.");
}

TEST_CASE("unparseable judge output twice marks the record invalid") {
  ScriptedJudgeClient judge({"ten", "ten"});
  const auto v = judge_score(judge, "Q", "a", "b");
  CHECK_FALSE(v.valid);
  CHECK(judge.calls() == 2);  // exactly one retry
}

TEST_CASE("a parse failure retries once and can recover") {
  ScriptedJudgeClient judge({"not a score", "9\nBetter."});
  const auto v = judge_score(judge, "Q", "a", "b");
  CHECK(v.valid);
  CHECK(v.score == 9);
  CHECK(judge.calls() == 2);
}

TEST_CASE("out-of-range scores are parse failures") {
  ScriptedJudgeClient judge({"11\nToo high.", "0\nToo low."});
  const auto v = judge_score(judge, "Q", "a", "b");
  CHECK_FALSE(v.valid);
}

TEST_CASE("overlap judge: echo scores the maximum, empty scores the minimum") {
  OverlapJudgeClient judge;
  const auto max_v = judge_score(judge, "Q", "soft, smooth", "soft, smooth");
  CHECK(max_v.valid);
  CHECK(max_v.score == 10);
  const auto min_v = judge_score(judge, "Q", "", "soft, smooth");
  CHECK(min_v.valid);
  CHECK(min_v.score == 1);
  const auto half = judge_score(judge, "Q", "soft", "soft, smooth");
  CHECK(half.valid);
  CHECK(half.score > 1);
  CHECK(half.score < 10);
  CHECK(OverlapJudgeClient::jaccard("soft, smooth", "smooth, soft") == 1.0);
}

// ---------------------------------------------------------------------------
// run_benchmark fixture walkthrough
// ---------------------------------------------------------------------------

TEST_CASE("benchmark report over a hand-built fixture") {
  test::TempDir dir("bench");
  SyntheticOptions opt;
  opt.classes = 2;
  opt.train_per_class = 4;
  opt.test_per_class = 2;
  opt.contact_per_traj = 4;
  const auto manifest_path = make_synthetic_dataset(dir.path(), opt);
  auto index = load_manifest(manifest_path);
  // stamp one test trajectory as ssvtp for the subset split
  for (auto& traj : index.trajectories)
    if (traj.id == "test-c0")
      for (auto& p : traj.pairs) p.source = Source::ssvtp;

  // generator echoes ground truth for 3 of 4 test pairs; garbles one
  std::map<std::string, std::string> gen;
  std::vector<std::string> test_keys;
  index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (p.split == Split::test && p.labeled()) {
      test_keys.push_back(p.key());
      gen[p.key()] = p.joined_labels();
    }
  });
  REQUIRE(test_keys.size() == 4);
  gen[test_keys[3]] = "wet, slimy";
  FakeGeneratorClient generator(gen, std::nullopt);
  OverlapJudgeClient judge;

  std::map<std::string, double> baseline;
  for (const auto& k : test_keys) baseline[k] = 5.0;

  Rng rng(3);
  const auto report = run_benchmark(index, generator, judge, rng, &baseline);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.invalid_records == 0);
  CHECK(report.subsets.at("ssvtp").n == 2);
  CHECK(report.subsets.at("hct").n == 2);
  CHECK(report.subsets.at("combined").n == 4);
  CHECK(report.subsets.at("ssvtp").mean_score == 10.0);          // echoed exactly
  CHECK(report.subsets.at("hct").mean_score == (10.0 + 1.0) / 2);  // one garbled
  REQUIRE(report.vs_baseline.has_value());
  CHECK(report.baseline_n == 4);
  // our scores {10,10,10,1} vs baseline {5,5,5,5}
  CHECK(report.vs_baseline->dof == 3);

  // prompts drawn from the canonical list
  for (const auto& row : report.rows) {
    bool member = false;
    for (const auto& p : generation_prompts())
      if (p == row.prompt) member = true;
    CHECK(member);
  }

  // report file is schema-valid and reloadable as a baseline
  const auto out = dir.path() / "bench.json";
  write_benchmark_report(report, out);
  const auto as_baseline = load_baseline_scores(out);
  CHECK(as_baseline.size() == 4);
  CHECK(as_baseline.at(test_keys[0]) == 10.0);
}

TEST_CASE("generator failures are logged and excluded with counts") {
  test::TempDir dir("bench2");
  SyntheticOptions opt;
  opt.classes = 1;
  opt.train_per_class = 2;
  opt.test_per_class = 3;
  const auto manifest_path = make_synthetic_dataset(dir.path(), opt);
  const auto index = load_manifest(manifest_path);

  FakeGeneratorClient generator({}, std::nullopt);  // no fixtures -> throws per record
  OverlapJudgeClient judge;
  Rng rng(1);
  const auto report = run_benchmark(index, generator, judge, rng);
  CHECK(report.rows.size() == 3);
  CHECK(report.invalid_records == 3);
  CHECK(report.subsets.empty());
}
