#include "tact/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "tact/error.hpp"
#include "tact/parallel.hpp"

namespace tact {

void NormStats::validate() const {
  for (double s : std)
    if (!(s > 0.0)) throw config_error("normalization std must be strictly positive");
}

Image pad_to_square(const Image& img) {
  if (img.empty()) throw numeric_error("pad_to_square: empty image");
  const int side = std::max(img.h, img.w);
  if (side == img.h && side == img.w) return img;
  Image out(side, side, 0.0);
  const int y0 = (side - img.h) / 2;
  const int x0 = (side - img.w) / 2;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y0 + y, x0 + x, c) = img.at(y, x, c);
  return out;
}

Image subtract_background(const Image& tactile, const Image& background) {
  if (tactile.h != background.h || tactile.w != background.w)
    throw numeric_error("subtract_background: dimension mismatch");
  Image out(tactile.h, tactile.w);
  for (std::size_t i = 0; i < out.px.size(); ++i) out.px[i] = tactile.px[i] - background.px[i];
  return out;
}

Image normalize(const Image& img, const NormStats& stats) {
  stats.validate();
  Image out(img.h, img.w);
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    out.px[i] = (img.px[i] - stats.mean[c]) / stats.std[c];
  }
  return out;
}

Image denormalize(const Image& img, const NormStats& stats) {
  stats.validate();
  Image out(img.h, img.w);
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    out.px[i] = img.px[i] * stats.std[c] + stats.mean[c];
  }
  return out;
}

Image apply_crop(const Image& img, const CropPolicy& policy) {
  const int side = policy.output_side;
  if (side <= 0) throw config_error("crop output_side must be positive");
  if (img.h < side || img.w < side) throw numeric_error("apply_crop: image smaller than crop");
  const int y0 = (policy.kind == CropKind::top) ? 0 : (img.h - side) / 2;
  const int x0 = (img.w - side) / 2;
  Image out(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

Image resize_bilinear(const Image& img, int side) {
  if (img.empty()) throw numeric_error("resize_bilinear: empty image");
  if (side <= 0) throw config_error("resize side must be positive");
  if (img.h == side && img.w == side) return img;
  Image out(side, side);
  const double sy = static_cast<double>(img.h) / side;
  const double sx = static_cast<double>(img.w) / side;
  par::for_each(side, [&](std::int64_t y) {
    // Pixel-center alignment.
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(img.h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < side; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(img.w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(static_cast<int>(y), x, c) = top * (1 - wy) + bot * wy;
      }
    }
  });
  return out;
}

Image to_grayscale(const Image& img) {
  Image out(img.h, img.w);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double r = img.px[i * 3], g = img.px[i * 3 + 1], b = img.px[i * 3 + 2];
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    out.px[i * 3] = out.px[i * 3 + 1] = out.px[i * 3 + 2] = y;
  }
  return out;
}

Image horizontal_flip(const Image& img) {
  Image out(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.w - 1 - x, c);
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double z = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    z += kernel[i + radius];
  }
  for (double& k : kernel) k /= z;

  // Separable: horizontal then vertical pass, edge-clamped.
  Image tmp(img.h, img.w);
  par::for_each(img.h, [&](std::int64_t y) {
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, img.w - 1);
          s += kernel[i + radius] * img.at(static_cast<int>(y), xx, c);
        }
        tmp.at(static_cast<int>(y), x, c) = s;
      }
  });
  Image out(img.h, img.w);
  par::for_each(img.h, [&](std::int64_t y) {
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(static_cast<int>(y) + i, 0, img.h - 1);
          s += kernel[i + radius] * tmp.at(yy, x, c);
        }
        out.at(static_cast<int>(y), x, c) = s;
      }
  });
  return out;
}

namespace {

Image adjust_brightness(const Image& img, double f) {
  Image out = img;
  for (double& v : out.px) v = std::clamp(v * f, 0.0, 1.0);
  return out;
}

Image adjust_contrast(const Image& img, double f) {
  const Image gray = to_grayscale(img);
  const double anchor = gray.mean();
  Image out = img;
  for (std::size_t i = 0; i < out.px.size(); ++i)
    out.px[i] = std::clamp(anchor + (img.px[i] - anchor) * f, 0.0, 1.0);
  return out;
}

Image adjust_saturation(const Image& img, double f) {
  const Image gray = to_grayscale(img);
  Image out = img;
  for (std::size_t i = 0; i < out.px.size(); ++i)
    out.px[i] = std::clamp(gray.px[i] + (img.px[i] - gray.px[i]) * f, 0.0, 1.0);
  return out;
}

Image adjust_hue(const Image& img, double shift) {
  // shift is a fraction of the full hue circle.
  Image out(img.h, img.w);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    double r = img.px[i * 3], g = img.px[i * 3 + 1], b = img.px[i * 3 + 2];
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double v = mx, d = mx - mn;
    double h = 0.0;
    if (d > 0.0) {
      if (mx == r)
        h = std::fmod((g - b) / d, 6.0);
      else if (mx == g)
        h = (b - r) / d + 2.0;
      else
        h = (r - g) / d + 4.0;
      h /= 6.0;
      if (h < 0) h += 1.0;
    }
    const double s = mx == 0.0 ? 0.0 : d / mx;
    h = std::fmod(h + shift + 1.0, 1.0);
    const double hh = h * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double frac = hh - std::floor(hh);
    const double p = v * (1 - s), q = v * (1 - s * frac), t = v * (1 - s * (1 - frac));
    double rr, gg, bb;
    switch (sector) {
      case 0: rr = v; gg = t; bb = p; break;
      case 1: rr = q; gg = v; bb = p; break;
      case 2: rr = p; gg = v; bb = t; break;
      case 3: rr = p; gg = q; bb = v; break;
      case 4: rr = t; gg = p; bb = v; break;
      default: rr = v; gg = p; bb = q; break;
    }
    out.px[i * 3] = rr;
    out.px[i * 3 + 1] = gg;
    out.px[i * 3 + 2] = bb;
  }
  return out;
}

}  // namespace

Image augment_train(const Image& img, const AugmentConfig& cfg, Rng& rng) {
  Image out = img;
  if (cfg.hflip && rng.bernoulli(0.5)) out = horizontal_flip(out);
  if (cfg.jitter > 0.0 || cfg.hue > 0.0) {
    // Jitter sub-ops applied in a random order, torchvision-style.
    std::array<int, 4> order{0, 1, 2, 3};
    rng.shuffle(order.begin(), order.end());
    for (int op : order) {
      switch (op) {
        case 0:
          if (cfg.jitter > 0)
            out = adjust_brightness(out, rng.uniform(std::max(0.0, 1 - cfg.jitter), 1 + cfg.jitter));
          break;
        case 1:
          if (cfg.jitter > 0)
            out = adjust_contrast(out, rng.uniform(std::max(0.0, 1 - cfg.jitter), 1 + cfg.jitter));
          break;
        case 2:
          if (cfg.jitter > 0)
            out = adjust_saturation(out, rng.uniform(std::max(0.0, 1 - cfg.jitter), 1 + cfg.jitter));
          break;
        case 3:
          if (cfg.hue > 0) out = adjust_hue(out, rng.uniform(-cfg.hue, cfg.hue));
          break;
      }
    }
  }
  if (cfg.grayscale_p > 0 && rng.bernoulli(cfg.grayscale_p)) out = to_grayscale(out);
  if (cfg.blur_p > 0 && rng.bernoulli(cfg.blur_p))
    out = gaussian_blur(out, rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max));
  return out;
}

}  // namespace tact
