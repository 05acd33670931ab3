#include "tact/synthetic.hpp"

#include <cstdio>

#include "tact/error.hpp"
#include "tact/image.hpp"
#include "tact/rng.hpp"

namespace tact {

namespace {

constexpr const char* kAdjectives[] = {"soft",  "rough",  "smooth", "hard",
                                       "fuzzy", "slick",  "bumpy",  "grainy",
                                       "firm",  "silky",  "coarse", "plush"};

double cell_center(int j) { return (static_cast<double>(j % 8) + 0.5) / 8.0; }

Image color_frame(int side, const std::array<double, 3>& color, double noise, Rng& rng) {
  Image img(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = color[static_cast<std::size_t>(c)] + rng.uniform(-noise, noise);
  for (double& v : img.px) v = std::clamp(v, 0.0, 1.0);
  return img;
}

constexpr std::array<double, 3> kRestColor{0.5625, 0.5625, 0.5625};  // sensor at rest

}  // namespace

std::vector<std::string> synthetic_class_labels(int classes) {
  std::vector<std::string> out;
  for (int k = 0; k < classes; ++k) {
    if (k < static_cast<int>(std::size(kAdjectives)))
      out.emplace_back(kAdjectives[k]);
    else
      out.push_back("texture" + std::to_string(k));
  }
  return out;
}

std::array<double, 3> synthetic_tactile_color(int cls) {
  return {cell_center(7 - cls), cell_center(3 * cls + 2), cell_center(5 * cls + 4)};
}

std::array<double, 3> synthetic_vision_color(int cls) {
  return {cell_center(cls + 1), cell_center(2 * cls + 3), cell_center(5 * cls + 1)};
}

std::filesystem::path make_synthetic_dataset(const std::filesystem::path& dir,
                                             const SyntheticOptions& opt) {
  if (opt.classes < 1) throw config_error("synthetic dataset needs at least one class");
  std::filesystem::create_directories(dir / "images");
  const auto labels = synthetic_class_labels(opt.classes);
  Rng rng(opt.seed);

  DatasetIndex index;
  index.root = dir;
  int frame_id = 0;

  auto write_frame = [&](const std::array<double, 3>& color, double noise, const char* prefix,
                         Rng& frame_rng) {
    char name[64];
    std::snprintf(name, sizeof(name), "images/%s_%05d.ppm", prefix, frame_id);
    save_ppm(color_frame(opt.image_side, color, noise, frame_rng), dir / name);
    return std::string(name);
  };

  auto add_pair = [&](Trajectory& traj, int cls, double t, bool in_contact, Split split,
                      bool labeled, LabelOrigin origin) {
    Rng frame_rng = rng.split(static_cast<std::uint64_t>(frame_id));
    SamplePair p;
    p.trajectory_id = traj.id;
    p.t = t;
    const auto tac_color = in_contact ? synthetic_tactile_color(cls) : kRestColor;
    const auto vis_color = in_contact ? synthetic_vision_color(cls) : kRestColor;
    p.tactile_path = write_frame(tac_color, opt.tactile_noise, "tac", frame_rng);
    p.vision_path = write_frame(vis_color, opt.vision_noise, "vis", frame_rng);
    ++frame_id;
    p.source = opt.source;
    p.contact = opt.mark_contact || split == Split::test
                    ? std::optional<bool>(in_contact)
                    : std::nullopt;
    p.split = split;
    if (labeled && in_contact) {
      p.labels = {labels[static_cast<std::size_t>(cls)]};
      p.label_origin = origin;
    }
    traj.pairs.push_back(std::move(p));
  };

  const double dt = 1.0 / 30.0;

  // Training trajectories: background tail, contact run, background tail.
  for (int cls = 0; cls < opt.classes; ++cls) {
    int remaining = opt.train_per_class;
    int traj_no = 0;
    while (remaining > 0) {
      const int run = std::min(opt.contact_per_traj, remaining);
      Trajectory traj;
      traj.id = "train-c" + std::to_string(cls) + "-" + std::to_string(traj_no++);
      double t = 0.0;
      for (int i = 0; i < opt.background_tail; ++i, t += dt)
        add_pair(traj, cls, t, false, Split::train, false, LabelOrigin::none);
      for (int i = 0; i < run; ++i, t += dt)
        add_pair(traj, cls, t, true, Split::train, opt.label_train, LabelOrigin::pseudo);
      for (int i = 0; i < opt.background_tail; ++i, t += dt)
        add_pair(traj, cls, t, false, Split::train, false, LabelOrigin::none);
      index.trajectories.push_back(std::move(traj));
      remaining -= run;
    }
  }

  // Held-out test trajectories: hand-annotated, contact only known-good.
  for (int cls = 0; cls < opt.classes; ++cls) {
    if (opt.test_per_class == 0) break;
    Trajectory traj;
    traj.id = "test-c" + std::to_string(cls);
    double t = 0.0;
    for (int i = 0; i < opt.background_tail; ++i, t += dt)
      add_pair(traj, cls, t, false, Split::train, false, LabelOrigin::none);
    for (int i = 0; i < opt.test_per_class; ++i, t += dt)
      add_pair(traj, cls, t, true, Split::test, true, LabelOrigin::human);
    for (int i = 0; i < opt.background_tail; ++i, t += dt)
      add_pair(traj, cls, t, false, Split::train, false, LabelOrigin::none);
    index.trajectories.push_back(std::move(traj));
  }

  const auto manifest = dir / "manifest.jsonl";
  save_manifest(index, manifest);
  return manifest;
}

}  // namespace tact
