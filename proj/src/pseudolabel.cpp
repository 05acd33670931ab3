#include "tact/pseudolabel.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tact/embedding.hpp"
#include "tact/error.hpp"
#include "tact/preprocess.hpp"
#include "tact/prompts.hpp"

namespace tact {

std::string to_string(LabelStatus s) {
  switch (s) {
    case LabelStatus::ok: return "ok";
    case LabelStatus::refused: return "refused";
    case LabelStatus::empty: return "empty";
    case LabelStatus::transport_error: return "transport_error";
  }
  return "transport_error";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int word_count(const std::string& s) {
  std::istringstream in(s);
  std::string w;
  int n = 0;
  while (in >> w) ++n;
  return n;
}

}  // namespace

LabelResponse parse_adjectives(const std::string& raw_text) {
  LabelResponse out;
  out.raw_text = raw_text;
  if (trim(raw_text).empty()) {
    out.status = LabelStatus::empty;
    return out;
  }

  std::vector<std::string> tokens;
  std::string current;
  std::istringstream in(raw_text);
  while (std::getline(in, current, ',')) tokens.push_back(current);

  for (auto& tok : tokens) {
    std::string t = trim(tok);
    // strip wrapping quotes, then trailing sentence punctuation
    while (!t.empty() && (t.front() == '"' || t.front() == '\'')) t.erase(t.begin());
    while (!t.empty() && (t.back() == '"' || t.back() == '\'' || t.back() == '.' ||
                          t.back() == '!')) t.pop_back();
    t = trim(t);
    if (t.empty()) continue;
    if (word_count(t) > 3) {
      // Prose, not an adjective list: the model refused or rambled.
      out.adjectives.clear();
      out.status = LabelStatus::refused;
      return out;
    }
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.adjectives.push_back(t);
    if (out.adjectives.size() == 5) break;
  }

  out.status = out.adjectives.empty() ? LabelStatus::empty : LabelStatus::ok;
  return out;
}

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

FakeVlmClient::FakeVlmClient(const std::filesystem::path& fixtures_file) {
  std::ifstream in(fixtures_file);
  if (!in) throw io_error("fixtures file not found: " + fixtures_file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error("fixtures file is not valid JSON: " + std::string(e.what()));
  }
  if (j.contains("default") && !j["default"].is_null())
    default_ = j["default"].get<std::string>();
  if (j.contains("by_key"))
    for (auto& [k, v] : j["by_key"].items()) by_key_[k] = v.get<std::string>();
}

FakeVlmClient::FakeVlmClient(std::map<std::string, std::string> by_key,
                             std::optional<std::string> fallback)
    : by_key_(std::move(by_key)), default_(std::move(fallback)) {}

std::string FakeVlmClient::request_raw(const LabelRequest& request, const std::string&) {
  ++requests_;
  if (auto it = by_key_.find(request.pair_key); it != by_key_.end()) return it->second;
  if (default_) return *default_;
  throw client_error("fake client has no fixture for " + request.pair_key);
}

namespace {

nlohmann::json image_part(const Image& img) {
  return {{"type", "image_url"},
          {"image_url",
           {{"url",
             "data:image/x-portable-pixmap;base64," + base64_encode(encode_ppm(img))}}}};
}

}  // namespace

HttpVlmClient::HttpVlmClient(Options opts) : opts_(std::move(opts)) {
  if (opts_.endpoint.empty())
    throw config_error("http client needs an endpoint (flag or TACT_VLM_ENDPOINT)");
}

HttpVlmClient::Options HttpVlmClient::options_from_env() {
  Options o;
  if (const char* e = std::getenv("TACT_VLM_ENDPOINT")) o.endpoint = e;
  if (const char* m = std::getenv("TACT_VLM_MODEL")) o.model = m;
  return o;
}

std::string HttpVlmClient::request_raw(const LabelRequest& request, const std::string& prompt) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt}});
  content.push_back(image_part(request.full_image));
  content.push_back(image_part(request.cropped_image));
  nlohmann::json body = {
      {"model", opts_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};

  httplib::Client cli(opts_.endpoint);
  cli.set_read_timeout(opts_.timeout_s, 0);
  cli.set_connection_timeout(opts_.timeout_s, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv("TACT_VLM_API_KEY"))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  auto res = cli.Post(opts_.path, headers, body.dump(), "application/json");
  if (!res) throw client_error("vlm request failed: no response from " + opts_.endpoint);
  if (res->status != 200)
    throw client_error("vlm request failed: http " + std::to_string(res->status));
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw client_error("vlm response malformed: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Rate limiting and retries
// ---------------------------------------------------------------------------

Clock Clock::real() {
  return Clock{
      [] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
            .count();
      },
      [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); }};
}

RateLimiter::RateLimiter(double requests_per_minute, Clock clock)
    : capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      per_second_(requests_per_minute / 60.0),
      last_(clock.now ? clock.now() : 0.0),
      clock_(std::move(clock)) {
  if (requests_per_minute <= 0) throw config_error("rate limit must be positive");
}

void RateLimiter::acquire() {
  const double now = clock_.now();
  tokens_ = std::min(capacity_, tokens_ + (now - last_) * per_second_);
  last_ = now;
  if (tokens_ < 1.0) {
    const double wait = (1.0 - tokens_) / per_second_;
    clock_.sleep_for(wait);
    last_ = clock_.now();
    tokens_ = 1.0;
  }
  tokens_ -= 1.0;
}

LabelResponse request_with_policy(VlmClient& client, const LabelRequest& request,
                                  const std::string& prompt, RateLimiter& limiter,
                                  const RetryPolicy& retry, const Clock& clock,
                                  const AuditSink& audit) {
  const std::uint64_t h = HashStubProvider::fnv1a(request.pair_key.data(),
                                                  request.pair_key.size(), 0x617564697421ULL);
  std::ostringstream hash;
  hash << std::hex << h;

  double backoff = retry.backoff_base_s;
  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    limiter.acquire();
    LabelResponse resp;
    try {
      resp = parse_adjectives(client.request_raw(request, prompt));
    } catch (const std::exception& e) {
      resp.status = LabelStatus::transport_error;
      resp.raw_text = e.what();
      if (audit) audit({hash.str(), clock.now(), resp.status, resp.raw_text});
      if (attempt < retry.max_attempts) {
        clock.sleep_for(backoff);
        backoff *= retry.backoff_factor;
      }
      continue;
    }
    if (audit) audit({hash.str(), clock.now(), resp.status, resp.raw_text});
    return resp;  // model answers (ok/refused/empty) are final, not retried
  }
  LabelResponse failed;
  failed.status = LabelStatus::transport_error;
  return failed;
}

// ---------------------------------------------------------------------------
// Trajectory orchestration
// ---------------------------------------------------------------------------

namespace {

Image crop_for_labeling(const Image& full, Source source) {
  CropPolicy policy;
  policy.kind = source == Source::hct ? CropKind::top : CropKind::center;
  policy.output_side = std::min(full.h, full.w);
  return apply_crop(full, policy);
}

}  // namespace

TrajectoryLabelSummary label_trajectory(Trajectory& trajectory, const DatasetIndex& index,
                                        VlmClient& client, RateLimiter& limiter,
                                        const LabelerOptions& options, const Clock& clock,
                                        Rng& rng, const AuditSink& audit) {
  TrajectoryLabelSummary summary;

  for (const auto& p : trajectory.pairs)
    if (!p.contact.has_value())
      throw schema_error("trajectory " + trajectory.id +
                         " has pairs with unknown contact; run segmentation first");

  std::vector<std::size_t> in_contact;
  for (std::size_t i = 0; i < trajectory.pairs.size(); ++i)
    if (trajectory.pairs[i].contact.value_or(false)) in_contact.push_back(i);
  summary.in_contact = static_cast<int>(in_contact.size());

  std::vector<std::size_t> failed;
  for (std::size_t i : in_contact) {
    SamplePair& p = trajectory.pairs[i];
    if (p.labeled()) continue;  // resumable: keep existing labels
    LabelRequest req;
    req.pair_key = p.key();
    req.full_image = load_ppm(index.resolve(p.vision_path));
    req.cropped_image = crop_for_labeling(req.full_image, p.source);
    req.surface_type = options.surface_type;
    ++summary.requested;
    const auto resp = request_with_policy(client, req, build_label_prompt(req.surface_type),
                                          limiter, options.retry, clock, audit);
    if (resp.status == LabelStatus::ok) {
      p.labels = resp.adjectives;
      p.label_origin = LabelOrigin::pseudo;
      ++summary.labeled_ok;
    } else {
      failed.push_back(i);
    }
  }

  // Successes available as backfill sources: any labeled in-contact frame
  // whose labels were not themselves backfilled.
  std::vector<std::size_t> sources;
  for (std::size_t i : in_contact) {
    const SamplePair& p = trajectory.pairs[i];
    if (p.labeled() && p.label_origin != LabelOrigin::backfilled) sources.push_back(i);
  }

  if (sources.empty()) {
    if (!in_contact.empty()) {
      trajectory.excluded = true;
      summary.excluded = true;
    }
    return summary;
  }

  for (std::size_t i : failed) {
    SamplePair& p = trajectory.pairs[i];
    if (options.word_level_backfill) {
      // Pool every word used on this trajectory; draw as many as a uniformly
      // chosen reference frame used, without replacement.
      std::vector<std::string> pool;
      for (std::size_t s : sources)
        for (const auto& w : trajectory.pairs[s].labels) pool.push_back(w);
      const auto& ref = trajectory.pairs[sources[static_cast<std::size_t>(
          rng.below(sources.size()))]];
      const std::size_t take = std::min(ref.labels.size(), pool.size());
      rng.shuffle(pool.begin(), pool.end());
      p.labels.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    } else {
      const auto& donor =
          trajectory.pairs[sources[static_cast<std::size_t>(rng.below(sources.size()))]];
      p.labels = donor.labels;
    }
    p.label_origin = LabelOrigin::backfilled;
    ++summary.backfilled;
  }
  return summary;
}

PipelineSummary pseudolabel_manifest(DatasetIndex& index, VlmClient& client,
                                     const LabelerOptions& options, std::uint64_t seed,
                                     const std::filesystem::path& audit_log) {
  std::ofstream audit_out(audit_log, std::ios::app);
  if (!audit_out) throw io_error("cannot open audit log: " + audit_log.string());
  AuditSink sink = [&audit_out](const AuditRecord& rec) {
    nlohmann::ordered_json j;
    j["request_hash"] = rec.request_hash;
    j["timestamp"] = rec.timestamp;
    j["status"] = to_string(rec.status);
    j["raw_text"] = rec.raw_text;
    audit_out << j.dump() << "\n";
  };

  Clock clock = Clock::real();
  RateLimiter limiter(options.rate_per_minute, clock);
  Rng rng(seed);

  PipelineSummary summary;
  for (std::size_t ti = 0; ti < index.trajectories.size(); ++ti) {
    auto& traj = index.trajectories[ti];
    Rng traj_rng = rng.split(ti);
    const auto s =
        label_trajectory(traj, index, client, limiter, options, clock, traj_rng, sink);
    ++summary.trajectories;
    summary.labeled_ok += s.labeled_ok;
    summary.backfilled += s.backfilled;
    if (s.excluded) ++summary.excluded;
  }
  index.invalidate_counts();
  return summary;
}

}  // namespace tact
