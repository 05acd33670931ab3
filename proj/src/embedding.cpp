#include "tact/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "tact/error.hpp"

namespace tact {

double Embedding::norm() const {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool Embedding::is_unit(double tol) const { return std::abs(norm() - 1.0) <= tol; }

Embedding& Embedding::normalize() {
  const double n = norm();
  if (n == 0.0) throw numeric_error("cannot normalize the zero vector");
  for (double& x : v) x /= n;
  return *this;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw numeric_error("cosine: dimension mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw numeric_error("cosine: zero vector");
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a.v[i] * b.v[i];
  return s / (na * nb);
}

Embedding fuse_latents(const Embedding& tactile, const Embedding& vision) {
  if (tactile.dim() != vision.dim()) throw numeric_error("fuse_latents: dimension mismatch");
  Embedding out;
  out.v.resize(tactile.v.size());
  for (int i = 0; i < tactile.dim(); ++i) out.v[i] = 0.5 * (tactile.v[i] + vision.v[i]);
  return out.normalize();
}

// ---------------------------------------------------------------------------
// HashStubProvider
// ---------------------------------------------------------------------------

std::uint64_t HashStubProvider::fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

HashStubProvider::HashStubProvider(int dim, std::uint64_t salt) : dim_(dim), salt_(salt) {
  if (dim <= 0) throw config_error("provider dim must be positive");
}

Embedding HashStubProvider::from_seed(std::uint64_t seed) const {
  Rng rng(seed);
  Embedding e;
  e.v.resize(static_cast<std::size_t>(dim_));
  for (double& x : e.v) x = rng.gaussian();
  return e.normalize();
}

Embedding HashStubProvider::embed_text(std::string_view text) const {
  if (text.empty()) throw client_error("embed_text: empty string");
  const std::uint64_t h = fnv1a(text.data(), text.size(), salt_ ^ 0x7465787455ULL);  // "text" salt
  return from_seed(h);
}

Embedding HashStubProvider::embed_image(const Image& image) const {
  if (image.empty()) throw client_error("embed_image: empty image");
  // 4x4x3 average-pooled signature, quantized to 1/8 steps. Images whose
  // pooled signatures quantize identically share an embedding.
  constexpr int G = 4;
  std::array<std::int16_t, G * G * 3> sig{};
  for (int gy = 0; gy < G; ++gy) {
    const int y0 = gy * image.h / G, y1 = std::max(y0 + 1, (gy + 1) * image.h / G);
    for (int gx = 0; gx < G; ++gx) {
      const int x0 = gx * image.w / G, x1 = std::max(x0 + 1, (gx + 1) * image.w / G);
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        int n = 0;
        for (int y = y0; y < y1 && y < image.h; ++y)
          for (int x = x0; x < x1 && x < image.w; ++x, ++n) s += image.at(y, x, c);
        const double mean = n > 0 ? s / n : 0.0;
        // Bucket index at 1/8 resolution: values at bucket centers (j+0.5)/8
        // sit maximally far from the edges, so small noise never flips them.
        sig[(gy * G + gx) * 3 + c] = static_cast<std::int16_t>(std::floor(mean * 8.0));
      }
    }
  }
  const std::uint64_t h = fnv1a(sig.data(), sig.size() * sizeof(sig[0]), salt_ ^ 0x696d616765ULL);
  return from_seed(h);
}

// ---------------------------------------------------------------------------
// TableProvider
// ---------------------------------------------------------------------------

std::string TableProvider::image_key(const Image& image) {
  const auto bytes = encode_ppm(image);
  const std::uint64_t h = HashStubProvider::fnv1a(bytes.data(), bytes.size(), 0x744c6bULL);
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

TableProvider::TableProvider(const std::filesystem::path& table_file) {
  std::ifstream in(table_file);
  if (!in) throw io_error("provider table not found: " + table_file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error("provider table is not valid JSON: " + std::string(e.what()));
  }
  dim_ = j.at("dim").get<int>();
  for (auto& [k, val] : j.at("text").items()) {
    Embedding e(val.get<std::vector<double>>());
    if (e.dim() != dim_) throw schema_error("provider table: text entry dim mismatch for " + k);
    text_.emplace(k, std::move(e.normalize()));
  }
  for (auto& [k, val] : j.at("image").items()) {
    Embedding e(val.get<std::vector<double>>());
    if (e.dim() != dim_) throw schema_error("provider table: image entry dim mismatch for " + k);
    image_.emplace(k, std::move(e.normalize()));
  }
}

void TableProvider::write_table(const std::filesystem::path& file, int dim,
                                const std::map<std::string, std::vector<double>>& text_entries,
                                const std::map<std::string, std::vector<double>>& image_entries) {
  nlohmann::json j;
  j["dim"] = dim;
  j["text"] = nlohmann::json::object();
  j["image"] = nlohmann::json::object();
  for (const auto& [k, v] : text_entries) j["text"][k] = v;
  for (const auto& [k, v] : image_entries) j["image"][k] = v;
  std::ofstream out(file);
  if (!out) throw io_error("cannot write provider table: " + file.string());
  out << j.dump(2) << "\n";
}

Embedding TableProvider::embed_text(std::string_view text) const {
  auto it = text_.find(std::string(text));
  if (it == text_.end())
    throw client_error("provider table has no embedding for text: " + std::string(text));
  return it->second;
}

Embedding TableProvider::embed_image(const Image& image) const {
  auto it = image_.find(image_key(image));
  if (it == image_.end()) throw client_error("provider table has no embedding for image");
  return it->second;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

ProviderRegistry& ProviderRegistry::instance() {
  static ProviderRegistry reg;
  return reg;
}

ProviderRegistry::ProviderRegistry() {
  factories_["stub"] = [](const std::map<std::string, std::string>& opts) {
    int dim = 512;
    std::uint64_t salt = 0;
    if (auto it = opts.find("dim"); it != opts.end()) dim = std::stoi(it->second);
    if (auto it = opts.find("salt"); it != opts.end()) salt = std::stoull(it->second);
    return std::make_shared<HashStubProvider>(dim, salt);
  };
  factories_["table"] = [](const std::map<std::string, std::string>& opts) {
    auto it = opts.find("file");
    if (it == opts.end()) throw config_error("table provider needs a 'file' option");
    return std::make_shared<TableProvider>(it->second);
  };
}

void ProviderRegistry::register_factory(const std::string& name, Factory f) {
  factories_[name] = std::move(f);
}

std::shared_ptr<FrozenProvider> ProviderRegistry::make(
    const std::string& name, const std::map<std::string, std::string>& options) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) throw config_error("unknown embedding provider: " + name);
  return it->second(options);
}

// ---------------------------------------------------------------------------
// Label text composition
// ---------------------------------------------------------------------------

std::string compose_label_text(const std::vector<std::string>& labels,
                               const LabelTextComposer& composer, Rng& rng) {
  if (labels.empty()) throw numeric_error("compose_label_text: empty label set");
  if (composer.subset_min < 1 || composer.subset_min > composer.subset_max)
    throw config_error("composer subset bounds must satisfy 1 <= min <= max");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  if (composer.shuffle) rng.shuffle(order.begin(), order.end());

  const int hi = std::min<int>(composer.subset_max, static_cast<int>(labels.size()));
  const int lo = std::min(composer.subset_min, hi);
  const int take = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));

  std::string joined;
  for (int i = 0; i < take; ++i) {
    if (i) joined += ", ";
    joined += labels[order[static_cast<std::size_t>(i)]];
  }
  if (composer.prompt_template.empty()) return joined;
  const auto pos = composer.prompt_template.find("{}");
  if (pos == std::string::npos) return composer.prompt_template + joined;
  std::string out = composer.prompt_template;
  return out.replace(pos, 2, joined);
}

}  // namespace tact
