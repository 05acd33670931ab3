#pragma once

#include <array>

#include "tact/image.hpp"
#include "tact/rng.hpp"

namespace tact {

/// Per-channel normalization statistics. Defaults carry the published
/// dataset statistics (see the preset constructors).
struct NormStats {
  std::array<double, 3> mean{0, 0, 0};
  std::array<double, 3> std{1, 1, 1};

  void validate() const;

  // OpenCLIP image statistics used for post-crop RGB observations.
  static NormStats openclip_rgb() { return {{0.481, 0.458, 0.408}, {0.269, 0.261, 0.276}}; }
  // Tactile statistics, raw frames.
  static NormStats tactile_with_background() {
    return {{0.292, 0.297, 0.291}, {0.188, 0.195, 0.219}};
  }
  // Tactile statistics after background subtraction.
  static NormStats tactile_background_subtracted() {
    return {{-0.008, -0.019, -0.018}, {0.045, 0.044, 0.053}};
  }
};

enum class CropKind { center, top };

struct CropPolicy {
  CropKind kind = CropKind::center;
  int output_side = 224;
};

/// Zero-pads to a square of side max(h, w) with the content centered
/// (extra row/column goes below/right when the difference is odd).
/// Preserves the pixel sum exactly.
Image pad_to_square(const Image& img);

/// residual = tactile − background, element-wise; range [−1,1], never clipped.
Image subtract_background(const Image& tactile, const Image& background);

/// out[c] = (in[c] − mean[c]) / std[c]
Image normalize(const Image& img, const NormStats& stats);
Image denormalize(const Image& img, const NormStats& stats);

/// center: centered square; top: square flush with the top edge,
/// horizontally centered.
Image apply_crop(const Image& img, const CropPolicy& policy);

/// Bilinear resize to side×side.
Image resize_bilinear(const Image& img, int side);

struct AugmentConfig {
  bool hflip = true;            // p = 0.5
  double jitter = 0.4;          // brightness/contrast/saturation factor range
  double hue = 0.1;             // hue shift range (fraction of the hue circle)
  double grayscale_p = 0.2;
  double blur_p = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
};

/// Training-time RGB augmentation: horizontal flip, color jitter, random
/// grayscale, gaussian blur. Deterministic given the rng stream. Tactile
/// frames do not go through this path (their only augmentation is optional
/// background subtraction).
Image augment_train(const Image& img, const AugmentConfig& cfg, Rng& rng);

/// ITU-R 601-2 luma conversion (weights sum to one, so gray images are
/// fixed points).
Image to_grayscale(const Image& img);

Image horizontal_flip(const Image& img);
Image gaussian_blur(const Image& img, double sigma);

}  // namespace tact
