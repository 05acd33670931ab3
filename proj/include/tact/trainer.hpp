#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tact/embedding.hpp"
#include "tact/encoder.hpp"
#include "tact/loss.hpp"
#include "tact/manifest.hpp"
#include "tact/optim.hpp"
#include "tact/preprocess.hpp"

namespace tact {

struct TrainConfig {
  EncoderSize encoder_size = EncoderSize::tiny_toy;
  EncoderConfig encoder = EncoderConfig::preset(EncoderSize::tiny_toy);

  double tau = 0.07;
  bool tau_learnable = true;
  double tau_min = 1e-3;
  double tau_max = 1.0;

  double gamma = 0.10;  // out-of-contact fraction mixed into each epoch
  PairSwitches pairs;
  bool use_ssvtp = true;  // dataset-subset ablation switches
  bool use_hct = true;

  double base_lr = 1.5e-4;
  int warmup_epochs = 10;
  int total_epochs = 200;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.95;
  int batch_size = 256;
  std::uint64_t seed = 0;

  LabelTextComposer composer;
  AugmentConfig augment;
  bool augment_vision = true;       // RGB augmentation on the vision stream
  bool background_subtract = false; // optional tactile augmentation
  bool normalize_vision = true;
  std::optional<NormStats> tactile_stats_override;
  NormStats vision_stats = NormStats::openclip_rgb();
  int vision_side = 224;  // vision stream resize target after crop

  int max_val_batches = 4;

  NormStats tactile_stats() const {
    if (tactile_stats_override) return *tactile_stats_override;
    return background_subtract ? NormStats::tactile_background_subtracted()
                               : NormStats::tactile_with_background();
  }
  void validate() const;
};

struct TrainSample {
  const SamplePair* pair = nullptr;
  const Trajectory* trajectory = nullptr;
  std::string label_text;
  bool is_background = false;
};

/// Deterministic epoch stream: shuffled contact pairs with a γ share of
/// out-of-contact pairs (literal label "background") enforced per batch
/// window within ±1 sample. Excluded trajectories never contribute.
std::vector<TrainSample> sample_epoch(const DatasetIndex& index, const TrainConfig& cfg,
                                      int epoch);

struct MetricRow {
  int epoch = 0;
  std::string split;  // "train" | "val"
  double loss_total = 0.0;
  double loss_tv = 0.0;
  double loss_tl = 0.0;
  double loss_vl = 0.0;
  double retrieval_top1 = 0.0;
};

void append_metric(const std::filesystem::path& log_file, const MetricRow& row);
std::vector<MetricRow> load_metric_log(const std::filesystem::path& log_file);

// ---------------------------------------------------------------------------
// Checkpoints: opaque parameter blob + JSON sidecar descriptor.
// ---------------------------------------------------------------------------

struct CheckpointMeta {
  EncoderConfig encoder;
  int epoch = 0;
  double log_tau = 0.0;
  std::string norm_stats_ref;
  std::string git_describe;
  std::string config_snapshot;  // serialized TrainConfig
  bool has_optimizer = false;
};

void save_checkpoint(const std::filesystem::path& path, const TactileEncoder& encoder,
                     const AdamW* optimizer, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  TactileEncoder encoder;
  AdamW optimizer;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainResult {
  std::vector<MetricRow> log;
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
  int best_epoch = -1;
  double best_val_retrieval = 0.0;
  double final_tau = 0.0;
};

/// Full pretraining loop: sample → preprocess/augment → embed → pairwise
/// InfoNCE → AdamW with warmup+cosine schedule. Logs one train and one val
/// row per epoch, checkpoints best-val and last, aborts on non-finite loss.
TrainResult train(const DatasetIndex& index, const TrainConfig& cfg,
                  const FrozenProvider& provider, const std::filesystem::path& out_dir,
                  const std::string& config_snapshot = "");

}  // namespace tact
