#include "tact/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tact/contact.hpp"
#include "tact/error.hpp"

#ifndef TACT_GIT_DESCRIBE
#define TACT_GIT_DESCRIBE "unknown"
#endif

namespace tact {

void TrainConfig::validate() const {
  encoder.validate();
  if (tau <= 0) throw config_error("tau must be positive");
  if (gamma < 0.0 || gamma >= 1.0) throw config_error("gamma must lie in [0, 1)");
  if (batch_size < 2) throw config_error("batch_size must be at least 2");
  if (total_epochs < 1) throw config_error("total_epochs must be at least 1");
  if (warmup_epochs < 0 || warmup_epochs > total_epochs)
    throw config_error("warmup_epochs must lie in [0, total_epochs]");
  if (!pairs.tactile_vision && !pairs.tactile_text)
    throw config_error(
        "training requires at least one enabled loss pair involving the tactile encoder");
  if (!use_ssvtp && !use_hct) throw config_error("every dataset subset is disabled");
  tactile_stats().validate();
  vision_stats.validate();
}

// ---------------------------------------------------------------------------
// Epoch sampling
// ---------------------------------------------------------------------------

std::vector<TrainSample> sample_epoch(const DatasetIndex& index, const TrainConfig& cfg,
                                      int epoch) {
  struct Ref {
    const SamplePair* pair;
    const Trajectory* traj;
  };
  std::vector<Ref> contact_pool, background_pool;
  for (const auto& traj : index.trajectories) {
    if (traj.excluded) continue;
    for (const auto& p : traj.pairs) {
      if (p.split != Split::train || !p.contact.has_value()) continue;
      if ((p.source == Source::ssvtp && !cfg.use_ssvtp) ||
          (p.source == Source::hct && !cfg.use_hct))
        continue;
      if (*p.contact) {
        if (p.labeled()) contact_pool.push_back({&p, &traj});
      } else {
        background_pool.push_back({&p, &traj});
      }
    }
  }
  if (contact_pool.empty())
    throw schema_error("no labeled in-contact training pairs available");
  if (cfg.gamma > 0.0 && background_pool.empty())
    throw schema_error("gamma > 0 but the index has no out-of-contact training pairs");

  Rng rng = Rng(cfg.seed).split(0xE70C4, static_cast<std::uint64_t>(epoch));
  rng.shuffle(contact_pool.begin(), contact_pool.end());
  rng.shuffle(background_pool.begin(), background_pool.end());

  // Epoch size: one pass over the contact pool plus the γ share.
  const auto n_contact = static_cast<std::int64_t>(contact_pool.size());
  const auto n_background =
      cfg.gamma > 0.0
          ? static_cast<std::int64_t>(std::llround(cfg.gamma / (1.0 - cfg.gamma) *
                                                   static_cast<double>(n_contact)))
          : 0;
  const std::int64_t total = n_contact + n_background;

  // Per-batch-window quotas accumulate so each window is within ±1 sample of
  // γ·batch and the epoch total is exact.
  std::vector<TrainSample> out;
  out.reserve(static_cast<std::size_t>(total));
  std::int64_t bg_used = 0, contact_used = 0, emitted = 0;
  std::size_t bg_cursor = 0;
  while (emitted < total) {
    const std::int64_t window =
        std::min<std::int64_t>(cfg.batch_size, total - emitted);
    const double frac = static_cast<double>(n_background) / static_cast<double>(total);
    std::int64_t bg_target = static_cast<std::int64_t>(
                                 std::llround(frac * static_cast<double>(emitted + window))) -
                             bg_used;
    bg_target = std::clamp<std::int64_t>(bg_target, 0,
                                         std::min<std::int64_t>(window, n_background - bg_used));
    // Positions of background samples inside this window.
    std::vector<std::int64_t> slots(static_cast<std::size_t>(window));
    for (std::int64_t i = 0; i < window; ++i) slots[static_cast<std::size_t>(i)] = i;
    rng.shuffle(slots.begin(), slots.end());
    std::vector<bool> is_bg(static_cast<std::size_t>(window), false);
    for (std::int64_t i = 0; i < bg_target; ++i)
      is_bg[static_cast<std::size_t>(slots[static_cast<std::size_t>(i)])] = true;

    for (std::int64_t i = 0; i < window; ++i) {
      TrainSample s;
      if (is_bg[static_cast<std::size_t>(i)]) {
        // Background pool may be smaller than the demand; recycle with a
        // fresh shuffle so no epoch stalls.
        if (bg_cursor == background_pool.size()) {
          rng.shuffle(background_pool.begin(), background_pool.end());
          bg_cursor = 0;
        }
        const Ref& r = background_pool[bg_cursor++];
        s.pair = r.pair;
        s.trajectory = r.traj;
        s.is_background = true;
        s.label_text = kBackgroundLabel;
        ++bg_used;
      } else {
        const Ref& r = contact_pool[static_cast<std::size_t>(contact_used)];
        s.pair = r.pair;
        s.trajectory = r.traj;
        s.is_background = false;
        Rng compose_rng = Rng(cfg.seed).split(0xC0573, static_cast<std::uint64_t>(epoch))
                              .split(static_cast<std::uint64_t>(emitted + i));
        s.label_text = compose_label_text(r.pair->labels, cfg.composer, compose_rng);
        ++contact_used;
      }
      out.push_back(std::move(s));
    }
    emitted += window;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metric log
// ---------------------------------------------------------------------------

void append_metric(const std::filesystem::path& log_file, const MetricRow& row) {
  std::ofstream out(log_file, std::ios::app);
  if (!out) throw io_error("cannot append metric log: " + log_file.string());
  nlohmann::ordered_json j;
  j["epoch"] = row.epoch;
  j["split"] = row.split;
  j["loss_total"] = row.loss_total;
  j["loss_tv"] = row.loss_tv;
  j["loss_tl"] = row.loss_tl;
  j["loss_vl"] = row.loss_vl;
  j["retrieval_top1"] = row.retrieval_top1;
  out << j.dump() << "\n";
}

std::vector<MetricRow> load_metric_log(const std::filesystem::path& log_file) {
  std::ifstream in(log_file);
  if (!in) throw io_error("metric log not found: " + log_file.string());
  std::vector<MetricRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    MetricRow r;
    r.epoch = j.at("epoch").get<int>();
    r.split = j.at("split").get<std::string>();
    r.loss_total = j.at("loss_total").get<double>();
    r.loss_tv = j.at("loss_tv").get<double>();
    r.loss_tl = j.at("loss_tl").get<double>();
    r.loss_vl = j.at("loss_vl").get<double>();
    r.retrieval_top1 = j.at("retrieval_top1").get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr char kCkptMagic[8] = {'T', 'A', 'C', 'T', 'C', 'K', 'P', '1'};

nlohmann::ordered_json encoder_cfg_json(const EncoderConfig& cfg) {
  return {{"input_side", cfg.input_side}, {"patch", cfg.patch},   {"width", cfg.width},
          {"depth", cfg.depth},           {"heads", cfg.heads},   {"output_dim", cfg.output_dim}};
}

EncoderConfig encoder_cfg_from_json(const nlohmann::json& j) {
  EncoderConfig cfg;
  cfg.input_side = j.at("input_side").get<int>();
  cfg.patch = j.at("patch").get<int>();
  cfg.width = j.at("width").get<int>();
  cfg.depth = j.at("depth").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.output_dim = j.at("output_dim").get<int>();
  return cfg;
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TactileEncoder& encoder,
                     const AdamW* optimizer, const CheckpointMeta& meta) {
  nlohmann::ordered_json header;
  header["encoder"] = encoder_cfg_json(encoder.config());
  header["epoch"] = meta.epoch;
  header["log_tau"] = meta.log_tau;
  header["norm_stats_ref"] = meta.norm_stats_ref;
  header["git_describe"] = meta.git_describe.empty() ? TACT_GIT_DESCRIBE : meta.git_describe;
  header["config_snapshot"] = meta.config_snapshot;
  header["has_optimizer"] = optimizer != nullptr;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint: " + path.string());
  out.write(kCkptMagic, sizeof(kCkptMagic));
  const std::uint64_t hlen = header_str.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  encoder.save_params(out);
  if (optimizer) optimizer->save_state(out);
  if (!out) throw io_error("short write: " + path.string());

  // Sidecar descriptor: human-readable summary of the opaque blob.
  nlohmann::ordered_json side = header;
  side.erase("config_snapshot");
  side["param_count"] = encoder.param_count();
  std::ofstream sc(path.string() + ".json");
  sc << side.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("checkpoint not found: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    throw schema_error("not a checkpoint file: " + path.string());
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw schema_error("truncated checkpoint header");
  auto header = nlohmann::json::parse(header_str);

  CheckpointMeta meta;
  meta.encoder = encoder_cfg_from_json(header.at("encoder"));
  meta.epoch = header.at("epoch").get<int>();
  meta.log_tau = header.at("log_tau").get<double>();
  meta.norm_stats_ref = header.value("norm_stats_ref", "");
  meta.git_describe = header.value("git_describe", "");
  meta.config_snapshot = header.value("config_snapshot", "");
  meta.has_optimizer = header.value("has_optimizer", false);

  LoadedCheckpoint loaded{meta, TactileEncoder(meta.encoder), AdamW{}};
  loaded.encoder.load_params(in);
  loaded.optimizer.init(loaded.encoder.layout());
  if (meta.has_optimizer) loaded.optimizer.load_state(in);
  return loaded;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

class ImageCache {
 public:
  explicit ImageCache(const DatasetIndex& index) : index_(index) {}
  const Image& get(const std::string& rel) {
    auto it = cache_.find(rel);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(rel, load_ppm(index_.resolve(rel))).first->second;
  }

 private:
  const DatasetIndex& index_;
  std::map<std::string, Image> cache_;
};

struct VisionPipeline {
  const TrainConfig& cfg;
  const FrozenProvider& provider;
  ImageCache& images;
  std::map<std::string, Embedding> cache;  // used only when augmentation is off

  Embedding embed(const SamplePair& pair, Rng* aug_rng) {
    const bool cacheable = aug_rng == nullptr;
    if (cacheable)
      if (auto it = cache.find(pair.vision_path); it != cache.end()) return it->second;
    Image img = images.get(pair.vision_path);
    CropPolicy policy{pair.source == Source::hct ? CropKind::top : CropKind::center,
                      std::min(img.h, img.w)};
    img = apply_crop(img, policy);
    img = resize_bilinear(img, cfg.vision_side);
    if (aug_rng) img = augment_train(img, cfg.augment, *aug_rng);
    if (cfg.normalize_vision) img = normalize(img, cfg.vision_stats);
    Embedding e = provider.embed_image(img);
    if (cacheable) cache.emplace(pair.vision_path, e);
    return e;
  }
};

struct TactilePipeline {
  const TrainConfig& cfg;
  ImageCache& images;
  std::map<std::string, Image> backgrounds;  // per trajectory id
  std::map<std::string, Image> prepared;     // per tactile path (deterministic)

  const Image& background_for(const Trajectory& traj) {
    auto it = backgrounds.find(traj.id);
    if (it != backgrounds.end()) return it->second;
    std::vector<Image> frames;
    frames.reserve(traj.pairs.size());
    for (const auto& p : traj.pairs) frames.push_back(images.get(p.tactile_path));
    return backgrounds.emplace(traj.id, estimate_background(frames, 1)).first->second;
  }

  const Image& prepare(const SamplePair& pair, const Trajectory& traj) {
    auto it = prepared.find(pair.tactile_path);
    if (it != prepared.end()) return it->second;
    Image img = images.get(pair.tactile_path);
    if (cfg.background_subtract) img = subtract_background(img, background_for(traj));
    img = pad_to_square(img);
    img = resize_bilinear(img, cfg.encoder.input_side);
    img = normalize(img, cfg.tactile_stats());
    return prepared.emplace(pair.tactile_path, std::move(img)).first->second;
  }
};

struct ValBatch {
  std::vector<const SamplePair*> pairs;
  Mat text;  // fixed label-string embeddings
};

// In-batch tactile→text retrieval; with duplicate keys a prediction is
// correct when the paired key attains the maximal similarity.
double batch_retrieval_top1(const Mat& tactile, const Mat& text) {
  Mat s = matmul_nt(tactile, text);
  int hits = 0;
  for (std::int64_t i = 0; i < s.rows; ++i) {
    double mx = s.at(i, 0);
    for (std::int64_t j = 1; j < s.cols; ++j) mx = std::max(mx, s.at(i, j));
    if (s.at(i, i) >= mx - 1e-12) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(s.rows);
}

}  // namespace

TrainResult train(const DatasetIndex& index, const TrainConfig& cfg,
                  const FrozenProvider& provider, const std::filesystem::path& out_dir,
                  const std::string& config_snapshot) {
  cfg.validate();
  if (provider.dim() != cfg.encoder.output_dim)
    throw config_error("provider dimension does not match the encoder output dimension");
  std::filesystem::create_directories(out_dir);
  const auto metrics_path = out_dir / "metrics.jsonl";
  std::filesystem::remove(metrics_path);

  TactileEncoder encoder(cfg.encoder);
  Rng init_rng = Rng(cfg.seed).split(0x171);
  encoder.init(init_rng);

  AdamW opt;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.weight_decay = cfg.weight_decay;
  opt.init(encoder.layout());

  double log_tau = std::log(cfg.tau);
  double tau_m = 0.0, tau_v = 0.0;  // Adam moments for the temperature
  std::int64_t tau_t = 0;

  ImageCache images(index);
  TactilePipeline tactile{cfg, images, {}, {}};
  VisionPipeline vision{cfg, provider, images, {}};
  std::map<std::string, Embedding> text_cache;
  auto embed_text_cached = [&](const std::string& s) {
    auto it = text_cache.find(s);
    if (it != text_cache.end()) return it->second;
    return text_cache.emplace(s, provider.embed_text(s)).first->second;
  };

  // Fixed held-out validation batches: human-labeled test pairs in manifest
  // order, chunked to the training batch size.
  std::vector<ValBatch> val_batches;
  {
    std::vector<std::pair<const SamplePair*, const Trajectory*>> val_pairs;
    index.for_each_pair([&](const Trajectory& traj, const SamplePair& p) {
      if (p.split == Split::test && p.labeled() && p.contact.value_or(true))
        val_pairs.emplace_back(&p, &traj);
    });
    for (std::size_t start = 0; start < val_pairs.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      if (static_cast<int>(val_batches.size()) == cfg.max_val_batches) break;
      const std::size_t end =
          std::min(val_pairs.size(), start + static_cast<std::size_t>(cfg.batch_size));
      if (end - start < 2) break;
      ValBatch vb;
      for (std::size_t i = start; i < end; ++i) vb.pairs.push_back(val_pairs[i].first);
      vb.text = Mat(static_cast<std::int64_t>(vb.pairs.size()), provider.dim());
      for (std::size_t i = 0; i < vb.pairs.size(); ++i) {
        const Embedding e = embed_text_cached(vb.pairs[i]->joined_labels());
        std::copy(e.v.begin(), e.v.end(), vb.text.row(static_cast<std::int64_t>(i)));
      }
      val_batches.push_back(std::move(vb));
    }
  }
  std::map<const SamplePair*, const Trajectory*> pair_traj;
  index.for_each_pair(
      [&](const Trajectory& traj, const SamplePair& p) { pair_traj[&p] = &traj; });

  const std::int64_t steps_per_epoch = [&] {
    const auto samples = sample_epoch(index, cfg, 0);
    return std::max<std::int64_t>(
        1, static_cast<std::int64_t>(samples.size() + cfg.batch_size - 1) / cfg.batch_size);
  }();
  LrSchedule sched{cfg.base_lr, static_cast<std::int64_t>(cfg.warmup_epochs) * steps_per_epoch,
                   static_cast<std::int64_t>(cfg.total_epochs) * steps_per_epoch};

  TrainResult result;
  std::int64_t step = 0;
  double best_metric = -1.0;
  std::vector<Mat> best_params;
  int best_epoch = -1;
  double best_log_tau = log_tau;

  for (int epoch = 0; epoch < cfg.total_epochs; ++epoch) {
    const auto samples = sample_epoch(index, cfg, epoch);
    double ep_total = 0, ep_tv = 0, ep_tl = 0, ep_vl = 0, ep_ret = 0;
    std::int64_t ep_n = 0, ep_batches = 0;

    for (std::size_t start = 0; start < samples.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(samples.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto bsz = static_cast<std::int64_t>(end - start);
      if (bsz < 2) break;  // a trailing singleton cannot form a contrastive batch

      std::vector<Image> tactile_batch;
      tactile_batch.reserve(static_cast<std::size_t>(bsz));
      TriModalBatch batch;
      batch.vision = Mat(bsz, provider.dim());
      batch.text = Mat(bsz, provider.dim());
      batch.is_background.resize(static_cast<std::size_t>(bsz));
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = samples[i];
        tactile_batch.push_back(tactile.prepare(*s.pair, *s.trajectory));
        Embedding ve;
        if (cfg.augment_vision) {
          Rng aug_rng = Rng(cfg.seed).split(0xA06, static_cast<std::uint64_t>(epoch))
                            .split(static_cast<std::uint64_t>(i));
          ve = vision.embed(*s.pair, &aug_rng);
        } else {
          ve = vision.embed(*s.pair, nullptr);
        }
        const Embedding te = embed_text_cached(s.label_text);
        const auto row = static_cast<std::int64_t>(i - start);
        std::copy(ve.v.begin(), ve.v.end(), batch.vision.row(row));
        std::copy(te.v.begin(), te.v.end(), batch.text.row(row));
        batch.is_background[static_cast<std::size_t>(row)] = s.is_background;
      }

      EncoderCache cache;
      batch.tactile = encoder.forward(tactile_batch, &cache);

      const double tau = std::exp(log_tau);
      auto loss = trimodal_loss(batch, cfg.pairs, tau, /*need_grad=*/true);
      if (!std::isfinite(loss.total))
        throw Error("runtime", "training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch));

      auto grads = encoder.zero_grads();
      encoder.backward(cache, loss.grad_tactile, grads);
      const double lr = lr_at(std::min(step + 1, sched.total_steps), sched);
      opt.step(encoder.params(), grads, encoder.layout(), lr);

      if (cfg.tau_learnable) {
        ++tau_t;
        tau_m = cfg.beta1 * tau_m + (1 - cfg.beta1) * loss.grad_log_tau;
        tau_v = cfg.beta2 * tau_v + (1 - cfg.beta2) * loss.grad_log_tau * loss.grad_log_tau;
        const double mhat = tau_m / (1 - std::pow(cfg.beta1, static_cast<double>(tau_t)));
        const double vhat = tau_v / (1 - std::pow(cfg.beta2, static_cast<double>(tau_t)));
        log_tau -= lr * mhat / (std::sqrt(vhat) + 1e-8);
        log_tau = std::clamp(log_tau, std::log(cfg.tau_min), std::log(cfg.tau_max));
      }
      ++step;

      ep_total += loss.total * static_cast<double>(bsz);
      ep_tv += loss.tv * static_cast<double>(bsz);
      ep_tl += loss.tl * static_cast<double>(bsz);
      ep_vl += loss.vl * static_cast<double>(bsz);
      ep_ret += batch_retrieval_top1(batch.tactile, batch.text);
      ep_n += bsz;
      ++ep_batches;
    }

    MetricRow train_row{epoch, "train",
                        ep_total / static_cast<double>(ep_n),
                        ep_tv / static_cast<double>(ep_n),
                        ep_tl / static_cast<double>(ep_n),
                        ep_vl / static_cast<double>(ep_n),
                        ep_ret / static_cast<double>(ep_batches)};
    append_metric(metrics_path, train_row);
    result.log.push_back(train_row);

    if (!val_batches.empty()) {
      double v_total = 0, v_tv = 0, v_tl = 0, v_vl = 0, v_ret = 0;
      std::int64_t v_n = 0;
      for (const auto& vb : val_batches) {
        std::vector<Image> tb;
        tb.reserve(vb.pairs.size());
        TriModalBatch batch;
        const auto bsz = static_cast<std::int64_t>(vb.pairs.size());
        batch.vision = Mat(bsz, provider.dim());
        batch.text = vb.text;
        for (std::size_t i = 0; i < vb.pairs.size(); ++i) {
          const SamplePair& p = *vb.pairs[i];
          tb.push_back(tactile.prepare(p, *pair_traj.at(&p)));
          Embedding ve = vision.embed(p, nullptr);
          std::copy(ve.v.begin(), ve.v.end(), batch.vision.row(static_cast<std::int64_t>(i)));
        }
        batch.tactile = encoder.forward(tb);
        auto loss = trimodal_loss(batch, cfg.pairs, std::exp(log_tau), /*need_grad=*/false);
        v_total += loss.total * static_cast<double>(bsz);
        v_tv += loss.tv * static_cast<double>(bsz);
        v_tl += loss.tl * static_cast<double>(bsz);
        v_vl += loss.vl * static_cast<double>(bsz);
        v_ret += batch_retrieval_top1(batch.tactile, batch.text) * static_cast<double>(bsz);
        v_n += bsz;
      }
      MetricRow val_row{epoch, "val",
                        v_total / static_cast<double>(v_n),
                        v_tv / static_cast<double>(v_n),
                        v_tl / static_cast<double>(v_n),
                        v_vl / static_cast<double>(v_n),
                        v_ret / static_cast<double>(v_n)};
      append_metric(metrics_path, val_row);
      result.log.push_back(val_row);

      if (val_row.retrieval_top1 > best_metric) {
        best_metric = val_row.retrieval_top1;
        best_params = encoder.params();
        best_epoch = epoch;
        best_log_tau = log_tau;
      }
    }
  }

  CheckpointMeta meta;
  meta.encoder = cfg.encoder;
  meta.epoch = cfg.total_epochs - 1;
  meta.log_tau = log_tau;
  meta.norm_stats_ref = cfg.tactile_stats_override
                            ? "custom"
                            : (cfg.background_subtract ? "background_subtracted"
                                                       : "with_background");
  meta.git_describe = TACT_GIT_DESCRIBE;
  meta.config_snapshot = config_snapshot;

  result.last_checkpoint = out_dir / "checkpoint_last.tact";
  save_checkpoint(result.last_checkpoint, encoder, &opt, meta);

  if (best_epoch >= 0) {
    TactileEncoder best(cfg.encoder);
    best.params() = best_params;
    CheckpointMeta best_meta = meta;
    best_meta.epoch = best_epoch;
    best_meta.log_tau = best_log_tau;
    result.best_checkpoint = out_dir / "checkpoint_best.tact";
    save_checkpoint(result.best_checkpoint, best, nullptr, best_meta);
    result.best_epoch = best_epoch;
    result.best_val_retrieval = best_metric;
  } else {
    result.best_checkpoint = result.last_checkpoint;
  }
  result.final_tau = std::exp(log_tau);
  return result;
}

}  // namespace tact
