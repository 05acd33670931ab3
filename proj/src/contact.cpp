#include "tact/contact.hpp"

#include <sstream>

#include "tact/error.hpp"

namespace tact {

void ContactConfig::validate() const {
  if (threshold < -1.0 || threshold > 1.0)
    throw config_error("contact threshold must lie in [-1, 1]");
  if (background_window < 1) throw config_error("background_window must be >= 1");
}

Image estimate_background(std::span<const Image> frames, int window) {
  if (window < 1) throw config_error("background_window must be >= 1");
  if (static_cast<int>(frames.size()) < 2 * window)
    throw numeric_error("trajectory too short to estimate a background (needs >= 2*window frames)");
  const Image& first = frames.front();
  Image acc(first.h, first.w, 0.0);
  const int n = static_cast<int>(frames.size());
  int used = 0;
  auto add = [&](const Image& f) {
    if (f.h != first.h || f.w != first.w)
      throw numeric_error("estimate_background: frame dimensions differ within trajectory");
    for (std::size_t i = 0; i < acc.px.size(); ++i) acc.px[i] += f.px[i];
    ++used;
  };
  for (int i = 0; i < window; ++i) add(frames[i]);
  for (int i = n - window; i < n; ++i) add(frames[i]);
  for (double& v : acc.px) v /= used;
  return acc;
}

double contact_score(const Embedding& frame_embedding, const Embedding& background_embedding) {
  return cosine(frame_embedding, background_embedding);
}

std::vector<std::pair<int, int>> events_from_mask(const std::vector<bool>& mask) {
  std::vector<std::pair<int, int>> events;
  int start = -1;
  for (int i = 0; i < static_cast<int>(mask.size()); ++i) {
    if (mask[i] && start < 0) start = i;
    if (!mask[i] && start >= 0) {
      events.emplace_back(start, i - 1);
      start = -1;
    }
  }
  if (start >= 0) events.emplace_back(start, static_cast<int>(mask.size()) - 1);
  return events;
}

std::vector<bool> mask_from_events(const std::vector<std::pair<int, int>>& events, int size) {
  std::vector<bool> mask(static_cast<std::size_t>(size), false);
  for (auto [a, b] : events)
    for (int i = a; i <= b; ++i) mask[static_cast<std::size_t>(i)] = true;
  return mask;
}

ContactMask segment_frames(std::span<const Image> frames, const TactileEmbedFn& embed,
                           const ContactConfig& cfg) {
  cfg.validate();
  const Image background = estimate_background(frames, cfg.background_window);
  Embedding bg_emb;
  try {
    bg_emb = embed(background);
  } catch (const std::exception& e) {
    throw Error("client", std::string("embedding failed for background frame: ") + e.what());
  }

  ContactMask out;
  out.in_contact.resize(frames.size(), false);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Embedding fe;
    try {
      fe = embed(frames[i]);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "embedding failed for frame " << i << ": " << e.what();
      throw Error("client", msg.str());
    }
    // Strict less-than: a score exactly at the threshold is out of contact.
    out.in_contact[i] = contact_score(fe, bg_emb) < cfg.threshold;
  }
  out.events = events_from_mask(out.in_contact);
  return out;
}

ContactMask segment_trajectory(Trajectory& trajectory, const DatasetIndex& index,
                               const TactileEmbedFn& embed, const ContactConfig& cfg) {
  std::vector<Image> frames;
  frames.reserve(trajectory.pairs.size());
  for (const auto& p : trajectory.pairs) frames.push_back(load_ppm(index.resolve(p.tactile_path)));
  ContactMask mask = segment_frames(frames, embed, cfg);
  for (std::size_t i = 0; i < trajectory.pairs.size(); ++i)
    trajectory.pairs[i].contact = static_cast<bool>(mask.in_contact[i]);
  return mask;
}

}  // namespace tact
