#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tact/error.hpp"
#include "tact/pseudolabel.hpp"
#include "tact/synthetic.hpp"
#include "testutil.hpp"

using namespace tact;

// ---------------------------------------------------------------------------
// parse_adjectives
// ---------------------------------------------------------------------------

TEST_CASE("parses the documented five-adjective response") {
  const auto r = parse_adjectives("Slick, chilly, hard, unyielding, glossy");
  CHECK(r.status == LabelStatus::ok);
  CHECK(r.adjectives ==
        std::vector<std::string>{"slick", "chilly", "hard", "unyielding", "glossy"});
}

TEST_CASE("empty and whitespace responses report empty status") {
  CHECK(parse_adjectives("").status == LabelStatus::empty);
  CHECK(parse_adjectives("  \n ").status == LabelStatus::empty);
}

TEST_CASE("duplicates are kept verbatim after trim+lowercase") {
  const auto r = parse_adjectives("soft,  SOFT , smooth");
  CHECK(r.status == LabelStatus::ok);
  CHECK(r.adjectives == std::vector<std::string>{"soft", "soft", "smooth"});
}

TEST_CASE("responses with prose chunks are refusals") {
  const auto r =
      parse_adjectives("I cannot determine the tactile feelings from this image alone.");
  CHECK(r.status == LabelStatus::refused);
  CHECK(r.adjectives.empty());

  const auto mixed = parse_adjectives("soft, I think this might be a metal surface, hard");
  CHECK(mixed.status == LabelStatus::refused);
}

TEST_CASE("responses are truncated to five adjectives") {
  const auto r = parse_adjectives("a, b, c, d, e, f, g");
  CHECK(r.status == LabelStatus::ok);
  CHECK(r.adjectives.size() == 5);
  CHECK(r.adjectives == std::vector<std::string>{"a", "b", "c", "d", "e"});
}

TEST_CASE("quotes and trailing punctuation are stripped") {
  const auto r = parse_adjectives("\"slick, chilly, glossy.\"");
  CHECK(r.status == LabelStatus::ok);
  CHECK(r.adjectives == std::vector<std::string>{"slick", "chilly", "glossy"});
}

// ---------------------------------------------------------------------------
// Rate limiter and retry policy (virtual clock: tests never sleep)
// ---------------------------------------------------------------------------

namespace {

struct FakeClock {
  double t = 0.0;
  double slept = 0.0;
  Clock clock() {
    return Clock{[this] { return t; }, [this](double s) {
                   t += s;
                   slept += s;
                 }};
  }
};

}  // namespace

TEST_CASE("token bucket spaces requests at the configured rate") {
  FakeClock fc;
  RateLimiter limiter(60.0, fc.clock());  // 1 request per second
  limiter.acquire();                      // initial token free
  CHECK(fc.slept == 0.0);
  limiter.acquire();
  CHECK(fc.slept == doctest::Approx(1.0).epsilon(1e-9));
  limiter.acquire();
  CHECK(fc.slept == doctest::Approx(2.0).epsilon(1e-9));
  // idle time refills the bucket
  fc.t += 10.0;
  limiter.acquire();
  CHECK(fc.slept == doctest::Approx(2.0).epsilon(1e-9));
}

namespace {

class FlakyClient final : public VlmClient {
 public:
  explicit FlakyClient(int failures, std::string then) : failures_(failures), then_(std::move(then)) {}
  std::string request_raw(const LabelRequest&, const std::string&) override {
    ++calls_;
    if (calls_ <= failures_) throw client_error("connection reset");
    return then_;
  }
  std::string name() const override { return "flaky"; }
  int calls_ = 0;

 private:
  int failures_;
  std::string then_;
};

LabelRequest tiny_request() {
  LabelRequest req;
  req.pair_key = "traj#0.5";
  req.full_image = Image(4, 4, 0.5);
  req.cropped_image = Image(4, 4, 0.5);
  return req;
}

}  // namespace

TEST_CASE("transport failures retry with exponential backoff, then give up") {
  FakeClock fc;
  RateLimiter limiter(6000.0, fc.clock());
  RetryPolicy retry{5, 1.0, 2.0};
  std::vector<AuditRecord> audit;
  AuditSink sink = [&audit](const AuditRecord& r) { audit.push_back(r); };

  FlakyClient two_failures(2, "soft, smooth");
  const auto ok = request_with_policy(two_failures, tiny_request(), "prompt", limiter, retry,
                                      fc.clock(), sink);
  CHECK(ok.status == LabelStatus::ok);
  CHECK(two_failures.calls_ == 3);
  CHECK(fc.slept >= 1.0 + 2.0);  // two backoffs: 1s then 2s
  REQUIRE(audit.size() == 3);
  CHECK(audit[0].status == LabelStatus::transport_error);
  CHECK(audit[1].status == LabelStatus::transport_error);
  CHECK(audit[2].status == LabelStatus::ok);
  CHECK(!audit[0].request_hash.empty());

  FakeClock fc2;
  RateLimiter limiter2(6000.0, fc2.clock());
  FlakyClient always_down(100, "x");
  const auto failed = request_with_policy(always_down, tiny_request(), "prompt", limiter2, retry,
                                          fc2.clock(), nullptr);
  CHECK(failed.status == LabelStatus::transport_error);
  CHECK(always_down.calls_ == 5);                      // bounded attempts
  CHECK(fc2.slept == doctest::Approx(1 + 2 + 4 + 8));  // bounded total backoff
}

TEST_CASE("model refusals are final, not retried") {
  FakeClock fc;
  RateLimiter limiter(6000.0, fc.clock());
  FlakyClient refuser(0, "I am unable to say anything about this image, sorry.");
  const auto r = request_with_policy(refuser, tiny_request(), "prompt", limiter, RetryPolicy{},
                                     fc.clock(), nullptr);
  CHECK(r.status == LabelStatus::refused);
  CHECK(refuser.calls_ == 1);
}

// ---------------------------------------------------------------------------
// label_trajectory
// ---------------------------------------------------------------------------

namespace {

struct LabeledFixture {
  test::TempDir dir{"pseudolabel"};
  DatasetIndex index;

  explicit LabeledFixture(int contact_frames = 5) {
    SyntheticOptions opt;
    opt.classes = 1;
    opt.train_per_class = contact_frames;
    opt.contact_per_traj = contact_frames;
    opt.test_per_class = 0;
    opt.label_train = false;  // arrives unlabeled
    const auto manifest = make_synthetic_dataset(dir.path(), opt);
    index = load_manifest(manifest);
  }

  Trajectory& traj() { return index.trajectories[0]; }

  std::vector<std::string> contact_keys() {
    std::vector<std::string> keys;
    for (const auto& p : traj().pairs)
      if (p.contact.value_or(false)) keys.push_back(p.key());
    return keys;
  }
};

TrajectoryLabelSummary run_labeler(LabeledFixture& fx, VlmClient& client,
                                   const LabelerOptions& opts = {}, std::uint64_t seed = 1) {
  FakeClock fc;
  RateLimiter limiter(6000.0, fc.clock());
  Rng rng(seed);
  return label_trajectory(fx.traj(), fx.index, client, limiter, opts, fc.clock(), rng, nullptr);
}

}  // namespace

TEST_CASE("all frames succeed: no backfills, not excluded") {
  LabeledFixture fx;
  FakeVlmClient client({}, std::optional<std::string>("soft, smooth"));
  const auto s = run_labeler(fx, client);
  CHECK(s.labeled_ok == 5);
  CHECK(s.backfilled == 0);
  CHECK_FALSE(s.excluded);
  CHECK_FALSE(fx.traj().excluded);
  for (const auto& p : fx.traj().pairs) {
    if (p.contact.value_or(false)) {
      CHECK(p.labels == std::vector<std::string>{"soft", "smooth"});
      CHECK(p.label_origin == LabelOrigin::pseudo);
    } else {
      CHECK(p.labels.empty());  // never labels out-of-contact pairs
    }
  }
}

TEST_CASE("failed frames backfill from the trajectory's successes, deterministically") {
  LabeledFixture fx;
  const auto keys = fx.contact_keys();
  REQUIRE(keys.size() == 5);
  std::map<std::string, std::string> by_key{
      {keys[0], "soft, fluffy"},
      {keys[2], "cold, hard"},
      {keys[4], "smooth"},
      // keys[1], keys[3] refused:
      {keys[1], "I cannot tell what this is showing me at all."},
      {keys[3], ""},
  };
  FakeVlmClient client(by_key, std::nullopt);
  const auto s = run_labeler(fx, client, {}, 42);
  CHECK(s.labeled_ok == 3);
  CHECK(s.backfilled == 2);
  CHECK_FALSE(s.excluded);

  const std::set<std::vector<std::string>> donor_sets{
      {"soft", "fluffy"}, {"cold", "hard"}, {"smooth"}};
  std::vector<std::vector<std::string>> backfilled;
  for (const auto& p : fx.traj().pairs)
    if (p.label_origin == LabelOrigin::backfilled) backfilled.push_back(p.labels);
  REQUIRE(backfilled.size() == 2);
  for (const auto& lbls : backfilled) CHECK(donor_sets.count(lbls) == 1);

  // deterministic under the same seed
  LabeledFixture fx2;
  FakeVlmClient client2(by_key, std::nullopt);
  run_labeler(fx2, client2, {}, 42);
  std::vector<std::vector<std::string>> backfilled2;
  for (const auto& p : fx2.traj().pairs)
    if (p.label_origin == LabelOrigin::backfilled) backfilled2.push_back(p.labels);
  CHECK(backfilled == backfilled2);
}

TEST_CASE("word-level backfill draws from the pooled trajectory vocabulary") {
  LabeledFixture fx;
  const auto keys = fx.contact_keys();
  std::map<std::string, std::string> by_key{{keys[0], "soft, fluffy"},
                                            {keys[1], "cold, hard"}};
  FakeVlmClient client(by_key, std::nullopt);
  LabelerOptions opts;
  opts.word_level_backfill = true;
  run_labeler(fx, client, opts, 7);
  const std::set<std::string> pool{"soft", "fluffy", "cold", "hard"};
  for (const auto& p : fx.traj().pairs)
    if (p.label_origin == LabelOrigin::backfilled) {
      CHECK(!p.labels.empty());
      for (const auto& w : p.labels) CHECK(pool.count(w) == 1);
    }
}

TEST_CASE("zero successes exclude the whole trajectory with no labels written") {
  LabeledFixture fx;
  FakeVlmClient client({}, std::optional<std::string>(""));  // always empty
  const auto s = run_labeler(fx, client);
  CHECK(s.labeled_ok == 0);
  CHECK(s.excluded);
  CHECK(fx.traj().excluded);
  for (const auto& p : fx.traj().pairs) CHECK(p.labels.empty());
}

TEST_CASE("resumable: a second run only requests still-unlabeled frames") {
  LabeledFixture fx;
  const auto keys = fx.contact_keys();
  std::map<std::string, std::string> partial{{keys[0], "soft"}, {keys[1], "hard"}};
  FakeVlmClient first(partial, std::nullopt);
  const auto s1 = run_labeler(fx, first);
  CHECK(s1.requested == 5);
  CHECK(s1.labeled_ok == 2);
  CHECK(s1.backfilled == 3);

  // Backfilled labels stay; a rerun touches nothing and issues no requests
  // for labeled frames.
  FakeVlmClient second({}, std::optional<std::string>("brand, new"));
  const auto s2 = run_labeler(fx, second);
  CHECK(s2.requested == 0);
  CHECK(second.request_count() == 0);
}

TEST_CASE("unknown contact state is rejected before any requests") {
  LabeledFixture fx;
  fx.traj().pairs[1].contact = std::nullopt;
  FakeVlmClient client({}, std::optional<std::string>("soft"));
  CHECK_THROWS_AS(run_labeler(fx, client), Error);
}

TEST_CASE("fixtures file round-trips through the fake client") {
  test::TempDir dir("fixtures");
  const auto file = dir.path() / "f.json";
  test::write_file(file, R"({"default": "soft, smooth", "by_key": {"t#1": "hard"}})");
  FakeVlmClient client(file);
  LabelRequest req = tiny_request();
  req.pair_key = "t#1";
  CHECK(client.request_raw(req, "") == "hard");
  req.pair_key = "other";
  CHECK(client.request_raw(req, "") == "soft, smooth");
}

// ---------------------------------------------------------------------------
// HTTP client against a local loopback server
// ---------------------------------------------------------------------------

TEST_CASE("http client talks chat-completions to a loopback server") {
  httplib::Server server;
  std::string seen_prompt;
  int seen_images = 0;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    for (const auto& part : body["messages"][0]["content"]) {
      if (part["type"] == "text") seen_prompt = part["text"];
      if (part["type"] == "image_url") ++seen_images;
    }
    res.set_content(R"({"choices":[{"message":{"content":"slick, glossy"}}]})",
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpVlmClient::Options opts;
  opts.endpoint = "http://127.0.0.1:" + std::to_string(port);
  HttpVlmClient client(opts);
  const auto raw = client.request_raw(tiny_request(), "describe the touch");
  CHECK(raw == "slick, glossy");
  CHECK(seen_prompt == "describe the touch");
  CHECK(seen_images == 2);  // full image first, crop second

  server.stop();
  thread.join();
}
