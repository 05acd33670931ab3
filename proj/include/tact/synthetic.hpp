#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tact/manifest.hpp"

namespace tact {

/// Knobs for the synthetic desk-scale dataset: per-class constant-color
/// frames (plus noise) whose colors sit at quantization-safe cell centers,
/// so the hash-stub provider clusters them perfectly per class.
struct SyntheticOptions {
  int classes = 8;
  int train_per_class = 100;
  int test_per_class = 16;
  int contact_per_traj = 20;  // contact frames per training trajectory
  int background_tail = 2;    // out-of-contact frames at each trajectory end
  int image_side = 32;
  double tactile_noise = 0.02;
  double vision_noise = 0.01;
  std::uint64_t seed = 0;
  bool mark_contact = true;  // false: contact written as null (pre-segmentation)
  bool label_train = true;   // false: training pairs arrive unlabeled
  Source source = Source::hct;
};

/// Adjective label for each synthetic class.
std::vector<std::string> synthetic_class_labels(int classes);

/// Per-class base colors (cell centers on the 1/8 quantization grid).
std::array<double, 3> synthetic_tactile_color(int cls);
std::array<double, 3> synthetic_vision_color(int cls);

/// Writes frames and the manifest under `dir`; returns the manifest path.
std::filesystem::path make_synthetic_dataset(const std::filesystem::path& dir,
                                             const SyntheticOptions& options);

}  // namespace tact
