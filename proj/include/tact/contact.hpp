#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tact/embedding.hpp"
#include "tact/image.hpp"
#include "tact/manifest.hpp"

namespace tact {

struct ContactConfig {
  double threshold = 0.6;    // cosine similarity below this => in contact
  int background_window = 1; // frames averaged from each end of the trajectory

  void validate() const;
};

/// Per-frame mask plus its maximal contiguous in-contact runs
/// [first, last] (inclusive indices).
struct ContactMask {
  std::vector<bool> in_contact;
  std::vector<std::pair<int, int>> events;
};

/// Pluggable tactile embedding used for cleaning; tests inject analytic
/// functions, production wires in a trained encoder or a stub provider.
using TactileEmbedFn = std::function<Embedding(const Image&)>;

/// Pixel-wise mean of the first and last `window` frames, which are assumed
/// out of contact.
Image estimate_background(std::span<const Image> frames, int window);

/// Cosine similarity between a frame embedding and the background embedding.
double contact_score(const Embedding& frame_embedding, const Embedding& background_embedding);

std::vector<std::pair<int, int>> events_from_mask(const std::vector<bool>& mask);
std::vector<bool> mask_from_events(const std::vector<std::pair<int, int>>& events, int size);

/// Pure segmentation over a frame sequence: a frame is in contact iff its
/// score against the estimated background falls strictly below the threshold
/// (a score of exactly `threshold` counts as out of contact).
ContactMask segment_frames(std::span<const Image> frames, const TactileEmbedFn& embed,
                           const ContactConfig& cfg);

/// Loads the trajectory's tactile frames, segments them, and writes contact
/// flags back into the pairs. Embedding failures are reported with the
/// offending frame index.
ContactMask segment_trajectory(Trajectory& trajectory, const DatasetIndex& index,
                               const TactileEmbedFn& embed, const ContactConfig& cfg);

}  // namespace tact
