#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tact {

/// RGB raster, row-major, channel-interleaved doubles. Loaded images carry
/// values in [0,1]; intermediate rasters (residuals, normalized tensors) may
/// leave that range.
struct Image {
  int h = 0;
  int w = 0;
  std::vector<double> px;  // h*w*3

  Image() = default;
  Image(int height, int width, double fill = 0.0)
      : h(height), w(width), px(static_cast<std::size_t>(height) * width * 3, fill) {}

  double& at(int y, int x, int c) { return px[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
  double at(int y, int x, int c) const { return px[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }

  bool empty() const { return h == 0 || w == 0; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(h) * w; }

  double sum() const;
  double mean() const;
};

/// Binary PPM (P6, 8-bit) I/O; the on-disk frame format for this project.
Image load_ppm(const std::filesystem::path& path);
void save_ppm(const Image& img, const std::filesystem::path& path);

/// Raw bytes of the PPM encoding (used for content hashing and HTTP payloads).
std::vector<std::uint8_t> encode_ppm(const Image& img);

std::string base64_encode(const std::vector<std::uint8_t>& data);

}  // namespace tact
