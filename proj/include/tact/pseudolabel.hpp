#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tact/image.hpp"
#include "tact/manifest.hpp"
#include "tact/rng.hpp"

namespace tact {

enum class LabelStatus { ok, refused, empty, transport_error };
std::string to_string(LabelStatus s);

struct LabelResponse {
  std::string raw_text;
  std::vector<std::string> adjectives;  // nonempty and <= 5 iff status == ok
  LabelStatus status = LabelStatus::empty;
};

/// Comma-splits, trims, lowercases, strips quotes and trailing sentence
/// punctuation, truncates to 5. Any comma-chunk longer than 3 words marks
/// the whole response as a refusal (the model answered in prose).
LabelResponse parse_adjectives(const std::string& raw_text);

struct LabelRequest {
  std::string pair_key;
  Image full_image;
  Image cropped_image;  // derived from full_image by apply_crop
  std::optional<std::string> surface_type;
};

/// Transport-level client: returns the model's raw text or throws a
/// client-category Error on hard failure. Retries/rate limits live outside.
class VlmClient {
 public:
  virtual ~VlmClient() = default;
  virtual std::string request_raw(const LabelRequest& request, const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

/// Canned-response client driven by a fixtures JSON file:
///   {"default": "soft, smooth", "by_key": {"traj#1.5": "...", ...}}
/// A missing key with a null/absent default simulates a hard failure.
class FakeVlmClient final : public VlmClient {
 public:
  explicit FakeVlmClient(const std::filesystem::path& fixtures_file);
  FakeVlmClient(std::map<std::string, std::string> by_key, std::optional<std::string> fallback);
  std::string request_raw(const LabelRequest& request, const std::string& prompt) override;
  std::string name() const override { return "fake"; }
  int request_count() const { return requests_; }

 private:
  std::map<std::string, std::string> by_key_;
  std::optional<std::string> default_;
  int requests_ = 0;
};

/// OpenAI-style chat-completions client. Endpoint/model come from options or
/// the TACT_VLM_ENDPOINT / TACT_VLM_MODEL environment variables; credentials
/// only from TACT_VLM_API_KEY. Images ride along base64-encoded, full image
/// first, crop second.
class HttpVlmClient final : public VlmClient {
 public:
  struct Options {
    std::string endpoint;  // e.g. "http://localhost:8080"
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4-vision-preview";
    int timeout_s = 30;
  };
  explicit HttpVlmClient(Options opts);
  static Options options_from_env();
  std::string request_raw(const LabelRequest& request, const std::string& prompt) override;
  std::string name() const override { return "http"; }

 private:
  Options opts_;
};

/// Injectable time source so rate-limit and backoff tests never sleep.
struct Clock {
  std::function<double()> now;           // seconds
  std::function<void(double)> sleep_for; // seconds
  static Clock real();
};

/// Token bucket; acquire() blocks (via the clock) until a token is free.
class RateLimiter {
 public:
  RateLimiter(double requests_per_minute, Clock clock);
  void acquire();

 private:
  double capacity_;
  double tokens_;
  double per_second_;
  double last_;
  Clock clock_;
};

struct RetryPolicy {
  int max_attempts = 5;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;  // exponential
};

struct AuditRecord {
  std::string request_hash;
  double timestamp = 0.0;
  LabelStatus status = LabelStatus::transport_error;
  std::string raw_text;
};
using AuditSink = std::function<void(const AuditRecord&)>;

struct LabelerOptions {
  double rate_per_minute = 20.0;
  RetryPolicy retry;
  bool word_level_backfill = false;  // default samples one frame's whole set
  std::optional<std::string> surface_type;
};

/// One rate-limited, retried request; every attempt lands in the audit sink.
LabelResponse request_with_policy(VlmClient& client, const LabelRequest& request,
                                  const std::string& prompt, RateLimiter& limiter,
                                  const RetryPolicy& retry, const Clock& clock,
                                  const AuditSink& audit);

struct TrajectoryLabelSummary {
  int in_contact = 0;
  int requested = 0;
  int labeled_ok = 0;
  int backfilled = 0;
  bool excluded = false;
};

/// Requests pseudo-labels for the trajectory's unlabeled in-contact pairs,
/// backfills failures from the trajectory's own successes, and excludes the
/// trajectory when nothing could be labeled. Resumable: already-labeled
/// pairs are never re-requested. Out-of-contact pairs are never labeled.
TrajectoryLabelSummary label_trajectory(Trajectory& trajectory, const DatasetIndex& index,
                                        VlmClient& client, RateLimiter& limiter,
                                        const LabelerOptions& options, const Clock& clock,
                                        Rng& rng, const AuditSink& audit);

/// Whole-manifest orchestration; writes the audit log (one JSON record per
/// request) next to the output manifest.
struct PipelineSummary {
  int trajectories = 0;
  int excluded = 0;
  int labeled_ok = 0;
  int backfilled = 0;
};
PipelineSummary pseudolabel_manifest(DatasetIndex& index, VlmClient& client,
                                     const LabelerOptions& options, std::uint64_t seed,
                                     const std::filesystem::path& audit_log);

}  // namespace tact
