#include "tact/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tact/error.hpp"

namespace tact {

double Image::sum() const {
  double s = 0.0;
  for (double v : px) s += v;
  return s;
}

double Image::mean() const { return px.empty() ? 0.0 : sum() / static_cast<double>(px.size()); }

namespace {

int read_ppm_token(std::istream& in) {
  // Skips whitespace and '#' comments between header tokens.
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

}  // namespace

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open image: " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw io_error("unsupported image format (want P6 ppm): " + path.string());
  const int w = read_ppm_token(in);
  const int h = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw io_error("bad ppm header in " + path.string());
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw io_error("truncated ppm payload in " + path.string());
  Image img(h, w);
  for (std::size_t i = 0; i < raw.size(); ++i) img.px[i] = raw[i] / 255.0;
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  if (img.empty()) throw io_error("cannot encode empty image");
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.w, img.h);
  std::vector<std::uint8_t> out(header, header + n);
  out.reserve(out.size() + img.px.size());
  for (double v : img.px) out.push_back(to_byte(v));
  return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& data) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
    if (i + 1 < data.size()) chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8;
    if (i + 2 < data.size()) chunk |= data[i + 2];
    out.push_back(alphabet[(chunk >> 18) & 63]);
    out.push_back(alphabet[(chunk >> 12) & 63]);
    out.push_back(i + 1 < data.size() ? alphabet[(chunk >> 6) & 63] : '=');
    out.push_back(i + 2 < data.size() ? alphabet[chunk & 63] : '=');
  }
  return out;
}

void save_ppm(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write image: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("short write: " + path.string());
}

}  // namespace tact
