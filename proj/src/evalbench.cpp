#include "tact/evalbench.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "tact/error.hpp"
#include "tact/preprocess.hpp"
#include "tact/prompts.hpp"

namespace tact {

// ---------------------------------------------------------------------------
// Synonym threshold
// ---------------------------------------------------------------------------

std::vector<double> SynonymTable::pooled() const {
  std::vector<double> out;
  for (const auto& e : entries) out.insert(out.end(), e.similarities.begin(), e.similarities.end());
  return out;
}

FixtureSynonymProvider::FixtureSynonymProvider(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw io_error("synonym fixtures not found: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error("synonym fixtures not valid JSON: " + std::string(e.what()));
  }
  for (auto& [k, v] : j.items()) table_[k] = v.get<std::vector<std::string>>();
}

FixtureSynonymProvider::FixtureSynonymProvider(
    std::map<std::string, std::vector<std::string>> table)
    : table_(std::move(table)) {}

std::vector<std::string> FixtureSynonymProvider::synonyms(const std::string& descriptor) {
  auto it = table_.find(descriptor);
  if (it == table_.end()) throw client_error("no synonyms for descriptor: " + descriptor);
  return it->second;
}

ThresholdResult compute_threshold(const std::vector<std::string>& descriptors,
                                  SynonymProvider& provider, const TextEmbedFn& embed,
                                  ThresholdMode mode, int percentile_value) {
  if (descriptors.empty()) throw config_error("compute_threshold needs at least one descriptor");
  if (mode == ThresholdMode::percentile && percentile_value != 25 && percentile_value != 50 &&
      percentile_value != 75)
    throw config_error("percentile mode supports 25, 50 or 75");

  ThresholdResult out;
  std::set<std::string> universe;
  for (const auto& d : descriptors) {
    std::vector<std::string> syns;
    try {
      syns = provider.synonyms(d);
    } catch (const std::exception&) {
      out.skipped_descriptors.push_back(d);
      continue;
    }
    if (syns.empty()) {
      out.skipped_descriptors.push_back(d);
      continue;
    }
    universe.insert(d);
    SynonymEntry entry;
    entry.descriptor = d;
    const Embedding de = embed(d);
    for (const auto& s : syns) {
      universe.insert(s);
      entry.synonyms.push_back(s);
      entry.similarities.push_back(cosine(de, embed(s)));
    }
    out.table.entries.push_back(std::move(entry));
  }
  if (out.table.entries.empty())
    throw client_error("synonym provider failed on every descriptor");

  out.universe_size = static_cast<int>(universe.size());
  const auto pooled = out.table.pooled();
  out.spec.mode = mode;
  if (mode == ThresholdMode::min) {
    out.spec.value = *std::min_element(pooled.begin(), pooled.end());
  } else {
    out.spec.percentile = percentile_value;
    out.spec.value = percentile(pooled, static_cast<double>(percentile_value));
  }
  return out;
}

std::vector<std::string> semantic_label_set(const std::string& query_label,
                                            const std::vector<std::string>& candidate_labels,
                                            double phi, const TextEmbedFn& embed) {
  std::vector<std::string> out;
  const Embedding qe = embed(query_label);
  for (const auto& c : candidate_labels) {
    if (c == query_label || cosine(qe, embed(c)) > phi) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification metrics
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> distinct_labels(const std::vector<EvalPair>& pairs) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (const auto& p : pairs)
    if (seen.insert(p.label).second) labels.push_back(p.label);
  return labels;
}

// Indices of the k largest values; equal similarities rank by index.
std::vector<std::size_t> topk_indices(const std::vector<double>& scores, int k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

double topk_tactile_text(const std::vector<EvalPair>& pairs, const TextEmbedFn& embed, double phi,
                         int k, const std::vector<std::string>& extra_candidates) {
  if (pairs.empty()) throw numeric_error("topk_tactile_text: empty test set");
  if (k < 1) throw numeric_error("k must be >= 1");
  const auto labels = distinct_labels(pairs);
  if (static_cast<std::size_t>(k) > labels.size())
    throw numeric_error("k exceeds the number of distinct labels");

  // Ranking pool: test labels first, then any extra distractor candidates.
  std::vector<std::string> pool = labels;
  {
    std::set<std::string> seen(labels.begin(), labels.end());
    for (const auto& c : extra_candidates)
      if (seen.insert(c).second) pool.push_back(c);
  }
  std::vector<Embedding> pool_emb;
  pool_emb.reserve(pool.size());
  for (const auto& l : pool) pool_emb.push_back(embed(l));

  // φ-expanded correct sets over the test labels, one per ground truth.
  std::map<std::string, std::set<std::string>> correct;
  for (const auto& l : labels) {
    auto s = semantic_label_set(l, labels, phi, embed);
    correct.emplace(l, std::set<std::string>(s.begin(), s.end()));
  }

  int hits = 0;
  for (const auto& p : pairs) {
    std::vector<double> scores(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) scores[j] = cosine(p.tactile, pool_emb[j]);
    const auto& ok = correct.at(p.label);
    bool hit = false;
    for (std::size_t j : topk_indices(scores, k))
      if (ok.count(pool[j])) {
        hit = true;
        break;
      }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

double topk_tactile_vision(const std::vector<EvalPair>& pairs, int k) {
  if (pairs.empty()) throw numeric_error("topk_tactile_vision: empty test set");
  if (k < 1 || static_cast<std::size_t>(k) > pairs.size())
    throw numeric_error("k must lie in [1, test set size]");
  int hits = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<double> scores(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j)
      scores[j] = cosine(pairs[i].tactile, pairs[j].vision);
    for (std::size_t j : topk_indices(scores, k))
      if (j == i) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

FakeGeneratorClient::FakeGeneratorClient(std::map<std::string, std::string> by_key,
                                         std::optional<std::string> fallback)
    : by_key_(std::move(by_key)), default_(std::move(fallback)) {}

FakeGeneratorClient::FakeGeneratorClient(const std::filesystem::path& fixtures_file) {
  std::ifstream in(fixtures_file);
  if (!in) throw io_error("generator fixtures not found: " + fixtures_file.string());
  nlohmann::json j;
  in >> j;
  if (j.contains("default") && !j["default"].is_null())
    default_ = j["default"].get<std::string>();
  if (j.contains("by_key"))
    for (auto& [k, v] : j["by_key"].items()) by_key_[k] = v.get<std::string>();
}

std::string FakeGeneratorClient::generate(const GenerationRequest& request) {
  if (auto it = by_key_.find(request.pair_key); it != by_key_.end()) return it->second;
  if (default_) return *default_;
  throw client_error("no generator fixture for " + request.pair_key);
}

namespace {

std::string chat_completion(const HttpClientOptions& opts, const nlohmann::json& content) {
  if (opts.endpoint.empty()) throw config_error("http client needs an endpoint");
  nlohmann::json body = {
      {"model", opts.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
  httplib::Client cli(opts.endpoint);
  cli.set_read_timeout(opts.timeout_s, 0);
  cli.set_connection_timeout(opts.timeout_s, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv("TACT_API_KEY"))
    headers.emplace("Authorization", std::string("Bearer ") + key);
  auto res = cli.Post(opts.path, headers, body.dump(), "application/json");
  if (!res) throw client_error("http request failed: no response from " + opts.endpoint);
  if (res->status != 200)
    throw client_error("http request failed: status " + std::to_string(res->status));
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw client_error("http response malformed: " + std::string(e.what()));
  }
}

nlohmann::json b64_image_part(const Image& img) {
  return {{"type", "image_url"},
          {"image_url",
           {{"url",
             "data:image/x-portable-pixmap;base64," + base64_encode(encode_ppm(img))}}}};
}

}  // namespace

HttpGeneratorClient::HttpGeneratorClient(HttpClientOptions opts) : opts_(std::move(opts)) {}

std::string HttpGeneratorClient::generate(const GenerationRequest& request) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  content.push_back(b64_image_part(request.full_image));
  content.push_back(b64_image_part(request.cropped_image));
  content.push_back(b64_image_part(request.tactile_image));
  return chat_completion(opts_, content);
}

HttpJudgeClient::HttpJudgeClient(HttpClientOptions opts) : opts_(std::move(opts)) {}

std::string HttpJudgeClient::judge_raw(const std::string& filled_prompt) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", filled_prompt}});
  return chat_completion(opts_, content);
}

double OverlapJudgeClient::jaccard(const std::string& a, const std::string& b) {
  auto tokens = [](const std::string& s) {
    std::set<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      std::string t;
      for (char c : tok)
        if (!std::isspace(static_cast<unsigned char>(c)))
          t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (!t.empty()) out.insert(t);
    }
    return out;
  };
  const auto sa = tokens(a), sb = tokens(b);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::string OverlapJudgeClient::judge_raw(const std::string& filled_prompt) {
  auto grab = [&](const std::string& tag) -> std::string {
    const auto pos = filled_prompt.find(tag);
    if (pos == std::string::npos) return {};
    const auto eol = filled_prompt.find('\n', pos);
    return filled_prompt.substr(pos + tag.size(),
                                eol == std::string::npos ? std::string::npos
                                                         : eol - pos - tag.size());
  };
  const std::string assistant = grab("[Assistant Response]: ");
  const std::string correct = grab("[Correct Response]: ");
  const double j = jaccard(assistant, correct);
  const int score = 1 + static_cast<int>(std::lround(9.0 * j));
  std::ostringstream out;
  out << score << "\n"
      << "Adjective overlap (Jaccard) = " << j << " between candidate and reference.";
  return out.str();
}

ScriptedJudgeClient::ScriptedJudgeClient(std::vector<std::string> replies)
    : replies_(std::move(replies)) {}

std::string ScriptedJudgeClient::judge_raw(const std::string&) {
  if (replies_.empty()) throw client_error("scripted judge ran out of replies");
  std::string r = replies_[static_cast<std::size_t>(calls_) % replies_.size()];
  ++calls_;
  return r;
}

namespace {

std::optional<std::pair<int, std::string>> parse_judge_reply(const std::string& raw) {
  std::istringstream in(raw);
  std::string line;
  std::string first;
  while (std::getline(in, line)) {
    std::string trimmed;
    const auto b = line.find_first_not_of(" \t\r");
    if (b != std::string::npos) trimmed = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
    if (!trimmed.empty()) {
      first = trimmed;
      break;
    }
  }
  if (first.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const int score = std::stoi(first, &used);
    if (used != first.size()) return std::nullopt;
    if (score < 1 || score > 10) return std::nullopt;
    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto rb = rest.find_first_not_of(" \t\r\n");
    rest = rb == std::string::npos ? std::string() : rest.substr(rb);
    while (!rest.empty() && (rest.back() == '\n' || rest.back() == '\r')) rest.pop_back();
    return std::make_pair(score, rest);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

JudgeVerdict judge_score(JudgeClient& judge, const std::string& question,
                         const std::string& assistant_response,
                         const std::string& correct_response) {
  const std::string prompt = fill_judge_prompt(question, assistant_response, correct_response);
  JudgeVerdict verdict;
  for (int attempt = 0; attempt < 2; ++attempt) {  // one retry on parse failure
    std::string raw;
    try {
      raw = judge.judge_raw(prompt);
    } catch (const std::exception& e) {
      verdict.raw = e.what();
      continue;
    }
    verdict.raw = raw;
    if (auto parsed = parse_judge_reply(raw)) {
      verdict.score = parsed->first;
      verdict.explanation = parsed->second;
      verdict.valid = true;
      return verdict;
    }
  }
  verdict.valid = false;
  return verdict;
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

namespace {

Image crop_like_labeling(const Image& full, Source source) {
  CropPolicy policy;
  policy.kind = source == Source::hct ? CropKind::top : CropKind::center;
  policy.output_side = std::min(full.h, full.w);
  return apply_crop(full, policy);
}

}  // namespace

BenchmarkReport run_benchmark(const DatasetIndex& index, GeneratorClient& generator,
                              JudgeClient& judge, Rng& rng,
                              const std::map<std::string, double>* baseline_scores) {
  BenchmarkReport report;
  std::map<std::string, std::pair<double, int>> agg;  // subset -> (sum, n)

  index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
    if (p.split != Split::test || !p.labeled()) return;
    BenchmarkRow row;
    row.pair_key = p.key();
    row.source = p.source;
    row.prompt = sample_generation_prompt(rng);
    row.reference = p.joined_labels();
    try {
      GenerationRequest req;
      req.prompt = row.prompt;
      req.pair_key = row.pair_key;
      req.full_image = load_ppm(index.resolve(p.vision_path));
      req.cropped_image = crop_like_labeling(req.full_image, p.source);
      req.tactile_image = load_ppm(index.resolve(p.tactile_path));
      row.candidate = generator.generate(req);
    } catch (const std::exception&) {
      row.valid = false;
      ++report.invalid_records;
      report.rows.push_back(std::move(row));
      return;
    }
    const auto verdict = judge_score(judge, row.prompt, row.candidate, row.reference);
    row.valid = verdict.valid;
    row.judge_score = verdict.score;
    row.judge_explanation = verdict.explanation;
    if (row.valid) {
      auto& subset = agg[to_string(p.source)];
      subset.first += verdict.score;
      subset.second += 1;
      auto& combined = agg["combined"];
      combined.first += verdict.score;
      combined.second += 1;
    } else {
      ++report.invalid_records;
    }
    report.rows.push_back(std::move(row));
  });

  for (const auto& [name, sn] : agg)
    report.subsets[name] = SubsetAggregate{sn.second, sn.second ? sn.first / sn.second : 0.0};

  if (baseline_scores) {
    std::vector<double> ours, baseline;
    for (const auto& row : report.rows) {
      if (!row.valid) continue;
      auto it = baseline_scores->find(row.pair_key);
      if (it == baseline_scores->end()) continue;
      ours.push_back(static_cast<double>(row.judge_score));
      baseline.push_back(it->second);
    }
    report.baseline_n = static_cast<int>(ours.size());
    if (ours.size() >= 2) report.vs_baseline = paired_t_test(ours, baseline);
  }
  return report;
}

void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["subsets"] = nlohmann::ordered_json::object();
  for (const auto& [name, s] : report.subsets)
    j["subsets"][name] = {{"n", s.n}, {"mean_score", s.mean_score}};
  j["invalid_records"] = report.invalid_records;
  if (report.vs_baseline) {
    j["baseline"] = {{"n", report.baseline_n},
                     {"t", report.vs_baseline->t},
                     {"p", report.vs_baseline->p},
                     {"dof", report.vs_baseline->dof},
                     {"degenerate", report.vs_baseline->degenerate}};
  }
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"pair_key", r.pair_key},
                         {"source", to_string(r.source)},
                         {"prompt", r.prompt},
                         {"candidate", r.candidate},
                         {"reference", r.reference},
                         {"judge_score", r.judge_score},
                         {"judge_explanation", r.judge_explanation},
                         {"valid", r.valid}});
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot write benchmark report: " + path.string());
  out << j.dump(2) << "\n";
}

std::map<std::string, double> load_baseline_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("baseline scores not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error("baseline scores not valid JSON: " + std::string(e.what()));
  }
  std::map<std::string, double> out;
  // Accept either a plain map or a benchmark report (rows with scores).
  if (j.is_object() && j.contains("rows")) {
    for (const auto& r : j["rows"])
      if (r.value("valid", false))
        out[r.at("pair_key").get<std::string>()] = r.at("judge_score").get<double>();
  } else if (j.is_object()) {
    for (auto& [k, v] : j.items()) out[k] = v.get<double>();
  } else {
    throw schema_error("baseline scores: expected an object");
  }
  return out;
}

}  // namespace tact
