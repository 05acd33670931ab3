#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tact/embedding.hpp"
#include "tact/image.hpp"
#include "tact/manifest.hpp"
#include "tact/rng.hpp"
#include "tact/stats.hpp"

namespace tact {

using TextEmbedFn = std::function<Embedding(const std::string&)>;

// ---------------------------------------------------------------------------
// Synonym threshold
// ---------------------------------------------------------------------------

struct SynonymEntry {
  std::string descriptor;
  std::vector<std::string> synonyms;
  std::vector<double> similarities;  // cosine(descriptor, synonym_i)
};

struct SynonymTable {
  std::vector<SynonymEntry> entries;
  std::vector<double> pooled() const;
};

class SynonymProvider {
 public:
  virtual ~SynonymProvider() = default;
  virtual std::vector<std::string> synonyms(const std::string& descriptor) = 0;
};

/// Fixture-backed synonym provider: {"rigid": ["stiff", ...], ...}
class FixtureSynonymProvider final : public SynonymProvider {
 public:
  explicit FixtureSynonymProvider(const std::filesystem::path& file);
  explicit FixtureSynonymProvider(std::map<std::string, std::vector<std::string>> table);
  std::vector<std::string> synonyms(const std::string& descriptor) override;

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

enum class ThresholdMode { min, percentile };

struct ThresholdSpec {
  ThresholdMode mode = ThresholdMode::min;
  int percentile = 0;  // one of 25/50/75 in percentile mode
  double value = 0.0;  // φ
};

struct ThresholdResult {
  SynonymTable table;
  ThresholdSpec spec;
  int universe_size = 0;  // distinct adjectives across descriptors + synonyms
  std::vector<std::string> skipped_descriptors;
};

/// Builds the descriptor→synonym similarity table and derives φ: the minimum
/// pooled similarity in min mode, or the requested percentile of the pooled
/// similarities. Descriptors the provider fails on are skipped with a record.
ThresholdResult compute_threshold(const std::vector<std::string>& descriptors,
                                  SynonymProvider& provider, const TextEmbedFn& embed,
                                  ThresholdMode mode, int percentile_value = 0);

/// All candidates whose embedding similarity with the query exceeds φ
/// (strictly), plus the query itself whenever it appears among candidates.
std::vector<std::string> semantic_label_set(const std::string& query_label,
                                            const std::vector<std::string>& candidate_labels,
                                            double phi, const TextEmbedFn& embed);

// ---------------------------------------------------------------------------
// Classification metrics
// ---------------------------------------------------------------------------

/// One human-labeled test pair prepared for evaluation.
struct EvalPair {
  std::string key;
  Source source = Source::hct;
  std::string label;  // comma-joined ground-truth string, as stored
  Embedding tactile;
  Embedding vision;
};

/// Ranks every distinct test-set label string by similarity to each tactile
/// embedding; a prediction is correct when any top-k label lands in the
/// φ-expanded set of the ground-truth label (computed over the test labels).
/// Ties rank by label index. `extra_candidates` optionally widens the ranking
/// pool (e.g. to the full synonym universe); extras act as distractors only.
double topk_tactile_text(const std::vector<EvalPair>& pairs, const TextEmbedFn& embed, double phi,
                         int k, const std::vector<std::string>& extra_candidates = {});

/// Paired retrieval: each tactile embedding ranks all test vision embeddings;
/// correct when its own pair sits in the top k.
double topk_tactile_vision(const std::vector<EvalPair>& pairs, int k);

// ---------------------------------------------------------------------------
// Description benchmark
// ---------------------------------------------------------------------------

struct GenerationRequest {
  std::string prompt;
  std::string pair_key;
  Image full_image;
  Image cropped_image;
  Image tactile_image;
};

class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Echoes a per-key canned text (typically the reference labels) or a fixed
/// fallback; the offline stand-in for a real description model.
class FakeGeneratorClient final : public GeneratorClient {
 public:
  FakeGeneratorClient(std::map<std::string, std::string> by_key,
                      std::optional<std::string> fallback);
  explicit FakeGeneratorClient(const std::filesystem::path& fixtures_file);
  std::string generate(const GenerationRequest& request) override;
  std::string name() const override { return "fake"; }

 private:
  std::map<std::string, std::string> by_key_;
  std::optional<std::string> default_;
};

/// Chat-completions options shared by the HTTP generator and judge;
/// credentials come only from the TACT_API_KEY environment variable.
struct HttpClientOptions {
  std::string endpoint;
  std::string path = "/v1/chat/completions";
  std::string model;
  int timeout_s = 60;
};

/// Description model behind an HTTP endpoint; images ride along base64-encoded
/// (full image, crop, tactile, in that order).
class HttpGeneratorClient final : public GeneratorClient {
 public:
  explicit HttpGeneratorClient(HttpClientOptions opts);
  std::string generate(const GenerationRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  HttpClientOptions opts_;
};

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  /// Takes the fully rendered judge prompt; returns the raw judge reply.
  virtual std::string judge_raw(const std::string& filled_prompt) = 0;
  virtual std::string name() const = 0;
};

/// String-overlap rubric judge for offline runs: scaled Jaccard over the
/// adjective sets of the assistant and correct responses, mapped onto 1–10.
class OverlapJudgeClient final : public JudgeClient {
 public:
  std::string judge_raw(const std::string& filled_prompt) override;
  std::string name() const override { return "fake"; }
  static double jaccard(const std::string& a, const std::string& b);
};

/// Replays canned replies in order; for parser and failure-path tests.
class ScriptedJudgeClient final : public JudgeClient {
 public:
  explicit ScriptedJudgeClient(std::vector<std::string> replies);
  std::string judge_raw(const std::string& filled_prompt) override;
  std::string name() const override { return "scripted"; }
  int calls() const { return calls_; }

 private:
  std::vector<std::string> replies_;
  int calls_ = 0;
};

/// Text-only judge behind an HTTP endpoint.
class HttpJudgeClient final : public JudgeClient {
 public:
  explicit HttpJudgeClient(HttpClientOptions opts);
  std::string judge_raw(const std::string& filled_prompt) override;
  std::string name() const override { return "http"; }

 private:
  HttpClientOptions opts_;
};

struct JudgeVerdict {
  int score = 0;  // 1..10 when valid
  std::string explanation;
  bool valid = false;
  std::string raw;
};

/// Fills the judge template, sends it, parses "score\nexplanation"; one
/// retry on unparseable output, after which the record goes invalid.
JudgeVerdict judge_score(JudgeClient& judge, const std::string& question,
                         const std::string& assistant_response,
                         const std::string& correct_response);

struct BenchmarkRow {
  std::string pair_key;
  Source source = Source::hct;
  std::string prompt;
  std::string candidate;
  std::string reference;
  int judge_score = 0;
  std::string judge_explanation;
  bool valid = false;
};

struct SubsetAggregate {
  int n = 0;
  double mean_score = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::map<std::string, SubsetAggregate> subsets;  // ssvtp / hct / combined
  int invalid_records = 0;
  std::optional<TTestResult> vs_baseline;
  int baseline_n = 0;  // aligned pairs used in the test
};

/// Full description benchmark over the human-labeled test pairs: sampled
/// generation prompt → generator → judge → per-subset aggregates, plus a
/// paired t-test against a baseline's per-pair scores when one is supplied.
BenchmarkReport run_benchmark(const DatasetIndex& index, GeneratorClient& generator,
                              JudgeClient& judge, Rng& rng,
                              const std::map<std::string, double>* baseline_scores = nullptr);

void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& path);
std::map<std::string, double> load_baseline_scores(const std::filesystem::path& path);

}  // namespace tact
