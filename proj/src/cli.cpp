#include "tact/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tact/config.hpp"
#include "tact/contact.hpp"
#include "tact/error.hpp"
#include "tact/evalbench.hpp"
#include "tact/manifest.hpp"
#include "tact/preprocess.hpp"
#include "tact/pseudolabel.hpp"
#include "tact/report.hpp"
#include "tact/synthetic.hpp"
#include "tact/trainer.hpp"

namespace tact::cli {

namespace {

struct ProviderFlags {
  std::string name = "stub";
  int dim = 0;  // 0 = keep provider default / infer from context
  std::uint64_t salt = 0;
  std::string file;

  std::shared_ptr<FrozenProvider> make(int default_dim) const {
    std::map<std::string, std::string> opts;
    const int d = dim > 0 ? dim : default_dim;
    if (d > 0) opts["dim"] = std::to_string(d);
    if (salt) opts["salt"] = std::to_string(salt);
    if (!file.empty()) opts["file"] = file;
    return ProviderRegistry::instance().make(name, opts);
  }
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& flags) {
  cmd->add_option("--provider", flags.name, "embedding provider (stub|table)");
  cmd->add_option("--provider-dim", flags.dim, "latent dimension for the stub provider");
  cmd->add_option("--provider-salt", flags.salt, "stub provider salt");
  cmd->add_option("--provider-file", flags.file, "table provider file");
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

int run_stats(const std::string& manifest, int top) {
  const auto index = load_manifest(manifest);
  const auto dist = vocabulary_stats(index);
  const auto& counts = index.counts();
  std::cout << "pairs: " << index.pair_count() << " (in-contact " << counts.in_contact
            << ", out-of-contact " << counts.out_of_contact << ", unknown "
            << counts.unknown_contact << ")\n";
  std::cout << "trajectories: " << index.trajectories.size() << "\n";
  std::cout << "unique adjectives: " << dist.unique_count() << "\n";
  for (const auto& [origin, st] : dist.per_origin)
    std::cout << "mean adjectives per labeled pair [" << to_string(origin) << "]: " << st.mean()
              << " over " << st.labeled_pairs << " pairs\n";
  if (dist.overall.labeled_pairs > 0)
    std::cout << "mean adjectives per labeled pair [all]: " << dist.overall.mean() << "\n";

  std::vector<std::pair<std::string, std::int64_t>> sorted(dist.counts.begin(),
                                                           dist.counts.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::cout << "top adjectives:\n";
  for (int i = 0; i < std::min<int>(top, static_cast<int>(sorted.size())); ++i)
    std::cout << "  " << sorted[static_cast<std::size_t>(i)].first << ": "
              << sorted[static_cast<std::size_t>(i)].second << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

int run_segment(const std::string& manifest, const std::string& out, double threshold,
                int window, const ProviderFlags& pf) {
  if (manifest == out)
    throw usage_error("segment writes a new manifest; --out must differ from --manifest");
  auto index = load_manifest(manifest);
  auto provider = pf.make(512);
  ContactConfig cfg{threshold, window};
  cfg.validate();
  TactileEmbedFn embed = [&provider](const Image& img) { return provider->embed_image(img); };
  std::int64_t contact = 0, total = 0;
  for (auto& traj : index.trajectories) {
    const auto mask = segment_trajectory(traj, index, embed, cfg);
    for (bool b : mask.in_contact) {
      contact += b ? 1 : 0;
      ++total;
    }
  }
  index.invalidate_counts();
  save_manifest(index, out);
  std::cout << "segmented " << index.trajectories.size() << " trajectories: " << contact << "/"
            << total << " frames in contact (threshold " << threshold << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pseudolabel
// ---------------------------------------------------------------------------

int run_pseudolabel(const std::string& manifest, const std::string& out,
                    const std::string& client_kind, const std::string& fixtures,
                    const std::string& endpoint, const std::string& model, double rate,
                    int max_attempts, const std::string& surface_type, bool word_level,
                    std::uint64_t seed) {
  if (manifest == out)
    throw usage_error("pseudolabel writes a new manifest; --out must differ from --manifest");
  auto index = load_manifest(manifest);

  std::unique_ptr<VlmClient> client;
  if (client_kind == "fake") {
    if (fixtures.empty()) throw usage_error("--client fake requires --fixtures");
    client = std::make_unique<FakeVlmClient>(fixtures);
  } else if (client_kind == "http") {
    auto opts = HttpVlmClient::options_from_env();
    if (!endpoint.empty()) opts.endpoint = endpoint;
    if (!model.empty()) opts.model = model;
    client = std::make_unique<HttpVlmClient>(opts);
  } else {
    throw usage_error("unknown client kind: " + client_kind);
  }

  LabelerOptions opts;
  opts.rate_per_minute = rate;
  opts.retry.max_attempts = max_attempts;
  opts.word_level_backfill = word_level;
  if (!surface_type.empty()) opts.surface_type = surface_type;

  const auto summary =
      pseudolabel_manifest(index, *client, opts, seed, out + ".audit.jsonl");
  save_manifest(index, out);
  std::cout << "labeled " << summary.labeled_ok << " pairs, backfilled " << summary.backfilled
            << ", excluded " << summary.excluded << "/" << summary.trajectories
            << " trajectories\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int run_train(const std::string& config_path, const std::string& manifest,
              const std::string& out_dir, bool dry_run, const ProviderFlags& pf_cli,
              const std::map<std::string, std::string>& overrides) {
  Config cfg;
  if (!config_path.empty()) cfg = Config::parse_file(config_path);

  // Flag overrides beat file values.
  for (const auto& [key, raw] : overrides) {
    if (raw.empty()) continue;
    if (key == "seed" || key == "total_epochs" || key == "batch_size")
      cfg.set("train", key, ConfigValue::of(static_cast<std::int64_t>(std::stoll(raw))));
    else if (key == "gamma")
      cfg.set("train", key, ConfigValue::of(std::stod(raw)));
    else if (key == "augment_vision" || key == "normalize_vision")
      cfg.set("train", key, ConfigValue::of(raw == "true" || raw == "1"));
    else
      cfg.set("train", key, ConfigValue::of(raw));
  }

  TrainConfig tc = train_config_from(cfg);
  tc.validate();

  ProviderFlags pf = pf_cli;
  if (pf.name == "stub" && cfg.has("provider", "name"))
    pf.name = cfg.get_string("provider", "name", pf.name);
  if (pf.dim == 0) pf.dim = static_cast<int>(cfg.get_int("provider", "dim", 0));
  if (pf.file.empty()) pf.file = cfg.get_string("provider", "file", "");
  auto provider = pf.make(tc.encoder.output_dim);
  if (provider->dim() != tc.encoder.output_dim)
    throw config_error("provider dim " + std::to_string(provider->dim()) +
                       " does not match encoder output_dim " +
                       std::to_string(tc.encoder.output_dim));

  if (out_dir.empty() && !dry_run) throw usage_error("train requires --out");

  // The run is reproducible from this serialized config; write it before
  // doing any work.
  Config run_cfg;
  write_train_config(run_cfg, tc);
  run_cfg.set("provider", "name", ConfigValue::of(provider->name()));
  run_cfg.set("provider", "dim", ConfigValue::of(static_cast<std::int64_t>(provider->dim())));
  if (!pf.file.empty()) run_cfg.set("provider", "file", ConfigValue::of(pf.file));
  if (pf.salt) run_cfg.set("provider", "salt", ConfigValue::of(static_cast<std::int64_t>(pf.salt)));
  if (!manifest.empty()) run_cfg.set("run", "manifest", ConfigValue::of(manifest));
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    run_cfg.save(std::filesystem::path(out_dir) / "config.toml");
  }

  if (dry_run) {
    std::cout << "config ok: encoder " << to_string(tc.encoder_size) << " ("
              << tc.encoder.param_count() << " params), batch " << tc.batch_size << ", epochs "
              << tc.total_epochs;
    if (!manifest.empty()) {
      const auto index = load_manifest(manifest);
      std::cout << "; manifest has " << index.pair_count() << " pairs";
    }
    std::cout << "\n";
    return 0;
  }
  if (manifest.empty()) throw usage_error("train requires --manifest");
  const auto index = load_manifest(manifest);

  const auto result = train(index, tc, *provider, out_dir, run_cfg.dump());
  const auto& last = result.log.back();
  std::cout << "trained " << tc.total_epochs << " epochs; final " << last.split
            << " loss " << last.loss_total;
  if (result.best_epoch >= 0)
    std::cout << "; best val retrieval " << result.best_val_retrieval << " at epoch "
              << result.best_epoch;
  std::cout << "\ncheckpoints: " << result.last_checkpoint.string() << ", "
            << result.best_checkpoint.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval-classify
// ---------------------------------------------------------------------------

std::vector<int> parse_k_list(const std::string& spec) {
  std::vector<int> ks;
  std::istringstream in(spec);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    ks.push_back(std::stoi(tok));
  }
  if (ks.empty()) throw usage_error("--k needs at least one value");
  return ks;
}

int run_eval_classify(const std::string& manifest, const std::string& checkpoint_path,
                      const std::string& phi_mode, double phi_override,
                      const std::string& synonyms_file, const std::string& k_spec,
                      const std::string& out_path, const ProviderFlags& pf,
                      bool normalize_vision, bool rank_universe) {
  const auto index = load_manifest(manifest);
  auto loaded = load_checkpoint(checkpoint_path);
  auto provider = pf.make(loaded.meta.encoder.output_dim);
  const NormStats tactile_stats = loaded.meta.norm_stats_ref == "background_subtracted"
                                      ? NormStats::tactile_background_subtracted()
                                      : NormStats::tactile_with_background();
  const bool subtract = loaded.meta.norm_stats_ref == "background_subtracted";

  // Collect human-labeled test pairs with both embeddings.
  std::vector<EvalPair> pairs;
  std::map<std::string, Image> backgrounds;
  index.for_each_pair([&](const Trajectory& traj, const SamplePair& p) {
    if (p.split != Split::test || !p.labeled()) return;
    EvalPair ep;
    ep.key = p.key();
    ep.source = p.source;
    ep.label = p.joined_labels();
    Image tac = load_ppm(index.resolve(p.tactile_path));
    if (subtract) {
      auto it = backgrounds.find(traj.id);
      if (it == backgrounds.end()) {
        std::vector<Image> frames;
        for (const auto& q : traj.pairs) frames.push_back(load_ppm(index.resolve(q.tactile_path)));
        it = backgrounds.emplace(traj.id, estimate_background(frames, 1)).first;
      }
      tac = subtract_background(tac, it->second);
    }
    tac = pad_to_square(tac);
    tac = resize_bilinear(tac, loaded.meta.encoder.input_side);
    tac = normalize(tac, tactile_stats);
    ep.tactile = loaded.encoder.embed(tac);

    Image vis = load_ppm(index.resolve(p.vision_path));
    CropPolicy policy{p.source == Source::hct ? CropKind::top : CropKind::center,
                      std::min(vis.h, vis.w)};
    vis = apply_crop(vis, policy);
    if (normalize_vision) vis = normalize(vis, NormStats::openclip_rgb());
    ep.vision = provider->embed_image(vis);
    pairs.push_back(std::move(ep));
  });
  if (pairs.empty()) throw schema_error("no human-labeled test pairs in the manifest");

  TextEmbedFn text_embed = [&provider](const std::string& s) { return provider->embed_text(s); };

  nlohmann::ordered_json report;
  report["n_test"] = pairs.size();
  std::set<std::string> distinct;
  for (const auto& p : pairs) distinct.insert(p.label);
  report["n_labels"] = distinct.size();

  double phi = phi_override;
  if (phi_mode == "fixed") {
    report["phi_mode"] = "fixed";
  } else {
    if (synonyms_file.empty())
      throw usage_error("--synonyms is required unless --phi-mode fixed with --phi");
    std::set<std::string> descriptor_set;
    index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
      if (p.split == Split::test)
        for (const auto& w : p.labels) descriptor_set.insert(w);
    });
    std::vector<std::string> descriptors(descriptor_set.begin(), descriptor_set.end());
    FixtureSynonymProvider syn(synonyms_file);
    ThresholdMode mode = ThresholdMode::min;
    int pct = 0;
    if (phi_mode == "min") {
      mode = ThresholdMode::min;
    } else if (phi_mode == "p25" || phi_mode == "p50" || phi_mode == "p75") {
      mode = ThresholdMode::percentile;
      pct = std::stoi(phi_mode.substr(1));
    } else {
      throw usage_error("unknown --phi-mode: " + phi_mode);
    }
    const auto th = compute_threshold(descriptors, syn, text_embed, mode, pct);
    phi = th.spec.value;
    report["phi_mode"] = phi_mode;
    report["universe_size"] = th.universe_size;
    report["skipped_descriptors"] = th.skipped_descriptors;
  }
  report["phi"] = phi;

  // Optional harder ranking pool: every descriptor and synonym in the
  // fixtures joins the candidates as distractors.
  std::vector<std::string> universe;
  if (rank_universe) {
    if (synonyms_file.empty()) throw usage_error("--rank-universe requires --synonyms");
    std::ifstream syn_in(synonyms_file);
    nlohmann::json syn_json;
    syn_in >> syn_json;
    for (auto& [descriptor, syns] : syn_json.items()) {
      universe.push_back(descriptor);
      for (const auto& s : syns) universe.push_back(s.get<std::string>());
    }
    report["ranking_pool"] = "universe";
  }

  nlohmann::ordered_json text_acc = nlohmann::ordered_json::object();
  nlohmann::ordered_json vision_acc = nlohmann::ordered_json::object();
  for (int k : parse_k_list(k_spec)) {
    text_acc[std::to_string(k)] = topk_tactile_text(pairs, text_embed, phi, k, universe);
    vision_acc[std::to_string(k)] = topk_tactile_vision(pairs, k);
  }
  report["topk_tactile_text"] = text_acc;
  report["topk_tactile_vision"] = vision_acc;

  std::ofstream out(out_path);
  if (!out) throw io_error("cannot write report: " + out_path);
  out << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval-bench
// ---------------------------------------------------------------------------

int run_eval_bench(const std::string& manifest, const std::string& generator_kind,
                   const std::string& judge_kind, const std::string& gen_fixtures,
                   const std::string& generator_endpoint, const std::string& generator_model,
                   const std::string& judge_endpoint, const std::string& judge_model,
                   const std::string& baseline_path, std::uint64_t seed,
                   const std::string& out_path) {
  const auto index = load_manifest(manifest);

  std::unique_ptr<GeneratorClient> generator;
  if (generator_kind == "fake") {
    if (!gen_fixtures.empty()) {
      generator = std::make_unique<FakeGeneratorClient>(gen_fixtures);
    } else {
      // Echo the reference labels: the oracle generator.
      std::map<std::string, std::string> echo;
      index.for_each_pair([&](const Trajectory&, const SamplePair& p) {
        if (p.split == Split::test && p.labeled()) echo[p.key()] = p.joined_labels();
      });
      generator = std::make_unique<FakeGeneratorClient>(std::move(echo), std::nullopt);
    }
  } else if (generator_kind == "http") {
    HttpClientOptions o;
    o.endpoint = generator_endpoint;
    o.model = generator_model;
    generator = std::make_unique<HttpGeneratorClient>(o);
  } else {
    throw usage_error("unknown generator kind: " + generator_kind);
  }

  std::unique_ptr<JudgeClient> judge;
  if (judge_kind == "fake") {
    judge = std::make_unique<OverlapJudgeClient>();
  } else if (judge_kind == "http") {
    HttpClientOptions o;
    o.endpoint = judge_endpoint;
    o.model = judge_model;
    judge = std::make_unique<HttpJudgeClient>(o);
  } else {
    throw usage_error("unknown judge kind: " + judge_kind);
  }

  std::map<std::string, double> baseline;
  Rng rng(seed);
  const auto report = run_benchmark(index, *generator, *judge, rng,
                                    baseline_path.empty()
                                        ? nullptr
                                        : &(baseline = load_baseline_scores(baseline_path)));
  write_benchmark_report(report, out_path);
  for (const auto& [name, agg] : report.subsets)
    std::cout << name << ": mean score " << agg.mean_score << " over " << agg.n << " records\n";
  if (report.invalid_records) std::cout << "invalid records: " << report.invalid_records << "\n";
  if (report.vs_baseline)
    std::cout << "vs baseline: t=" << report.vs_baseline->t << " p=" << report.vs_baseline->p
              << " (dof " << report.vs_baseline->dof << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int run_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  std::vector<RunSeries> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run(d));
  const auto files = write_report(runs, out_dir);
  for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"tactile multimodal alignment toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  // --- stats
  {
    auto* cmd = app.add_subcommand("stats", "print dataset vocabulary statistics");
    auto manifest = std::make_shared<std::string>();
    auto top = std::make_shared<int>(10);
    cmd->add_option("--manifest", *manifest, "manifest path")->required();
    cmd->add_option("--top", *top, "number of adjectives to list");
    cmd->callback([&action, manifest, top] {
      action = [=] { return run_stats(*manifest, *top); };
    });
  }

  // --- segment
  {
    auto* cmd = app.add_subcommand("segment", "classify frames as in/out of contact");
    auto manifest = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto threshold = std::make_shared<double>(0.6);
    auto window = std::make_shared<int>(1);
    auto pf = std::make_shared<ProviderFlags>();
    cmd->add_option("--manifest", *manifest, "input manifest")->required();
    cmd->add_option("--out", *out, "output manifest (input is never mutated)")->required();
    cmd->add_option("--threshold", *threshold, "contact cosine threshold");
    cmd->add_option("--window", *window, "background frames from each trajectory end");
    add_provider_flags(cmd, *pf);
    cmd->callback([&action, manifest, out, threshold, window, pf] {
      action = [=] { return run_segment(*manifest, *out, *threshold, *window, *pf); };
    });
  }

  // --- pseudolabel
  {
    auto* cmd = app.add_subcommand("pseudolabel", "generate tactile pseudo-labels");
    auto manifest = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto client = std::make_shared<std::string>("fake");
    auto fixtures = std::make_shared<std::string>();
    auto endpoint = std::make_shared<std::string>();
    auto model = std::make_shared<std::string>();
    auto rate = std::make_shared<double>(20.0);
    auto attempts = std::make_shared<int>(5);
    auto surface = std::make_shared<std::string>();
    auto word_level = std::make_shared<bool>(false);
    auto seed = std::make_shared<std::uint64_t>(0);
    cmd->add_option("--manifest", *manifest, "input manifest")->required();
    cmd->add_option("--out", *out, "output manifest")->required();
    cmd->add_option("--client", *client, "fake|http");
    cmd->add_option("--fixtures", *fixtures, "fixtures file for the fake client");
    cmd->add_option("--endpoint", *endpoint, "http endpoint (or TACT_VLM_ENDPOINT)");
    cmd->add_option("--model", *model, "model name (or TACT_VLM_MODEL)");
    cmd->add_option("--rate", *rate, "requests per minute");
    cmd->add_option("--max-attempts", *attempts, "retry attempts per request");
    cmd->add_option("--surface-type", *surface, "surface type slot text");
    cmd->add_flag("--word-level", *word_level, "backfill by pooled words, not whole sets");
    cmd->add_option("--seed", *seed, "backfill sampling seed");
    cmd->callback([&action, manifest, out, client, fixtures, endpoint, model, rate, attempts,
                   surface, word_level, seed] {
      action = [=] {
        return run_pseudolabel(*manifest, *out, *client, *fixtures, *endpoint, *model, *rate,
                               *attempts, *surface, *word_level, *seed);
      };
    });
  }

  // --- train
  {
    auto* cmd = app.add_subcommand("train", "pretrain the tactile encoder");
    auto config = std::make_shared<std::string>();
    auto manifest = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto dry = std::make_shared<bool>(false);
    auto pf = std::make_shared<ProviderFlags>();
    auto seed = std::make_shared<std::string>();
    auto epochs = std::make_shared<std::string>();
    auto batch = std::make_shared<std::string>();
    auto gamma = std::make_shared<std::string>();
    auto encoder_size = std::make_shared<std::string>();
    auto augment_vision = std::make_shared<std::string>();
    auto normalize_vision = std::make_shared<std::string>();
    cmd->add_option("--config", *config, "config file with a [train] section");
    cmd->add_option("--manifest", *manifest, "training manifest (optional with --dry-run)");
    cmd->add_option("--out", *out, "run directory (optional with --dry-run)");
    cmd->add_flag("--dry-run", *dry, "validate the config and exit");
    cmd->add_option("--seed", *seed, "override train.seed");
    cmd->add_option("--epochs", *epochs, "override train.total_epochs");
    cmd->add_option("--batch-size", *batch, "override train.batch_size");
    cmd->add_option("--gamma", *gamma, "override train.gamma");
    cmd->add_option("--encoder-size", *encoder_size, "override train.encoder_size");
    cmd->add_option("--augment-vision", *augment_vision,
                    "override train.augment_vision (true|false)");
    cmd->add_option("--normalize-vision", *normalize_vision,
                    "override train.normalize_vision (true|false)");
    add_provider_flags(cmd, *pf);
    cmd->callback([&action, config, manifest, out, dry, pf, seed, epochs, batch, gamma,
                   encoder_size, augment_vision, normalize_vision] {
      action = [=] {
        std::map<std::string, std::string> overrides{{"seed", *seed},
                                                     {"total_epochs", *epochs},
                                                     {"batch_size", *batch},
                                                     {"gamma", *gamma},
                                                     {"encoder_size", *encoder_size},
                                                     {"augment_vision", *augment_vision},
                                                     {"normalize_vision", *normalize_vision}};
        return run_train(*config, *manifest, *out, *dry, *pf, overrides);
      };
    });
  }

  // --- eval-classify
  {
    auto* cmd = app.add_subcommand("eval-classify", "open-vocabulary classification metrics");
    auto manifest = std::make_shared<std::string>();
    auto checkpoint = std::make_shared<std::string>();
    auto phi_mode = std::make_shared<std::string>("min");
    auto phi = std::make_shared<double>(0.0);
    auto synonyms = std::make_shared<std::string>();
    auto ks = std::make_shared<std::string>("1,5");
    auto out = std::make_shared<std::string>("report.json");
    auto pf = std::make_shared<ProviderFlags>();
    auto normalize_vision = std::make_shared<bool>(true);
    auto rank_universe = std::make_shared<bool>(false);
    cmd->add_option("--manifest", *manifest, "manifest with a human-labeled test split")
        ->required();
    cmd->add_option("--checkpoint", *checkpoint, "tactile encoder checkpoint")->required();
    cmd->add_option("--phi-mode", *phi_mode, "min|p25|p50|p75|fixed");
    cmd->add_option("--phi", *phi, "threshold value for --phi-mode fixed");
    cmd->add_option("--synonyms", *synonyms, "synonym fixtures file");
    cmd->add_option("--k", *ks, "comma-separated top-k list");
    cmd->add_option("--out", *out, "report path");
    cmd->add_option("--normalize-vision", *normalize_vision,
                    "normalize vision stream before embedding");
    cmd->add_flag("--rank-universe", *rank_universe,
                  "rank over the full synonym universe instead of test labels only");
    add_provider_flags(cmd, *pf);
    cmd->callback([&action, manifest, checkpoint, phi_mode, phi, synonyms, ks, out, pf,
                   normalize_vision, rank_universe] {
      action = [=] {
        return run_eval_classify(*manifest, *checkpoint, *phi_mode, *phi, *synonyms, *ks, *out,
                                 *pf, *normalize_vision, *rank_universe);
      };
    });
  }

  // --- eval-bench
  {
    auto* cmd = app.add_subcommand("eval-bench", "LLM-judged description benchmark");
    auto manifest = std::make_shared<std::string>();
    auto generator = std::make_shared<std::string>("fake");
    auto judge = std::make_shared<std::string>("fake");
    auto gen_fixtures = std::make_shared<std::string>();
    auto gen_endpoint = std::make_shared<std::string>();
    auto gen_model = std::make_shared<std::string>();
    auto judge_endpoint = std::make_shared<std::string>();
    auto judge_model = std::make_shared<std::string>();
    auto baseline = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>("bench.json");
    cmd->add_option("--manifest", *manifest, "manifest with a human-labeled test split")
        ->required();
    cmd->add_option("--generator", *generator, "fake|http");
    cmd->add_option("--judge", *judge, "fake|http");
    cmd->add_option("--gen-fixtures", *gen_fixtures, "fixtures for the fake generator");
    cmd->add_option("--generator-endpoint", *gen_endpoint, "http generator endpoint");
    cmd->add_option("--generator-model", *gen_model, "http generator model");
    cmd->add_option("--judge-endpoint", *judge_endpoint, "http judge endpoint");
    cmd->add_option("--judge-model", *judge_model, "http judge model");
    cmd->add_option("--baseline", *baseline, "baseline per-pair scores (json)");
    cmd->add_option("--seed", *seed, "prompt sampling seed");
    cmd->add_option("--out", *out, "report path");
    cmd->callback([&action, manifest, generator, judge, gen_fixtures, gen_endpoint, gen_model,
                   judge_endpoint, judge_model, baseline, seed, out] {
      action = [=] {
        return run_eval_bench(*manifest, *generator, *judge, *gen_fixtures, *gen_endpoint,
                              *gen_model, *judge_endpoint, *judge_model, *baseline, *seed, *out);
      };
    });
  }

  // --- report
  {
    auto* cmd = app.add_subcommand("report", "render run summaries and plots");
    auto runs = std::make_shared<std::vector<std::string>>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--run", *runs, "run directory (repeatable)")->required();
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->callback([&action, runs, out] {
      action = [=] { return run_report(*runs, *out); };
    });
  }

  // --- demo-data (synthetic fixture dataset for smoke runs)
  {
    auto* cmd = app.add_subcommand("demo-data", "write a small synthetic dataset");
    auto dir = std::make_shared<std::string>();
    auto classes = std::make_shared<int>(8);
    auto per_class = std::make_shared<int>(100);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto unlabeled = std::make_shared<bool>(false);
    cmd->add_option("--dir", *dir, "output directory")->required();
    cmd->add_option("--classes", *classes, "number of texture classes");
    cmd->add_option("--per-class", *per_class, "training pairs per class");
    cmd->add_option("--seed", *seed, "generation seed");
    cmd->add_flag("--unlabeled", *unlabeled,
                  "emit an unsegmented, unlabeled training split (pipeline demo)");
    cmd->callback([&action, dir, classes, per_class, seed, unlabeled] {
      action = [=] {
        SyntheticOptions opt;
        opt.classes = *classes;
        opt.train_per_class = *per_class;
        opt.seed = *seed;
        if (*unlabeled) {
          opt.mark_contact = false;
          opt.label_train = false;
        }
        const auto manifest = make_synthetic_dataset(*dir, opt);
        std::cout << "wrote " << manifest.string() << "\n";
        return 0;
      };
    });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tact::cli
