#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tact/image.hpp"
#include "tact/rng.hpp"

namespace tact {

/// Point in the shared d-dimensional latent space.
struct Embedding {
  std::vector<double> v;

  Embedding() = default;
  explicit Embedding(std::vector<double> values) : v(std::move(values)) {}

  int dim() const { return static_cast<int>(v.size()); }
  double norm() const;
  bool is_unit(double tol = 1e-6) const;
  Embedding& normalize();  // throws on the zero vector
};

double cosine(const Embedding& a, const Embedding& b);

/// Element-wise mean of two unit embeddings, re-normalized. Commutative and
/// idempotent on identical inputs.
Embedding fuse_latents(const Embedding& tactile, const Embedding& vision);

// ---------------------------------------------------------------------------
// Frozen providers
// ---------------------------------------------------------------------------

/// A frozen text+vision embedding pair (CLIP-style). Implementations must be
/// deterministic: identical input, identical output, for the process lifetime.
class FrozenProvider {
 public:
  virtual ~FrozenProvider() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual Embedding embed_text(std::string_view text) const = 0;
  virtual Embedding embed_image(const Image& image) const = 0;
};

/// Deterministic hash-to-unit-vector provider. Maps text byte-exactly and
/// images through a pooled, coarsely quantized signature, so inputs that
/// agree after quantization collide. Keeps the whole test suite independent
/// of model weights.
class HashStubProvider final : public FrozenProvider {
 public:
  explicit HashStubProvider(int dim = 512, std::uint64_t salt = 0);
  int dim() const override { return dim_; }
  std::string name() const override { return "stub"; }
  Embedding embed_text(std::string_view text) const override;
  Embedding embed_image(const Image& image) const override;

  static std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed);

 private:
  Embedding from_seed(std::uint64_t seed) const;
  int dim_;
  std::uint64_t salt_;
};

/// Lookup provider backed by a table file of precomputed embeddings (text
/// keyed by string, images keyed by content hash of their encoded bytes).
/// This is the adapter for real CLIP-family embeddings exported offline;
/// the checkpoint blob carries a sidecar descriptor next to it.
class TableProvider final : public FrozenProvider {
 public:
  explicit TableProvider(const std::filesystem::path& table_file);
  int dim() const override { return dim_; }
  std::string name() const override { return "table"; }
  Embedding embed_text(std::string_view text) const override;
  Embedding embed_image(const Image& image) const override;

  static void write_table(const std::filesystem::path& file, int dim,
                          const std::map<std::string, std::vector<double>>& text_entries,
                          const std::map<std::string, std::vector<double>>& image_entries);
  static std::string image_key(const Image& image);

 private:
  int dim_ = 0;
  std::map<std::string, Embedding> text_;
  std::map<std::string, Embedding> image_;
};

/// Provider registry keyed by name; "stub" and "table" come pre-registered.
class ProviderRegistry {
 public:
  using Factory =
      std::function<std::shared_ptr<FrozenProvider>(const std::map<std::string, std::string>&)>;

  static ProviderRegistry& instance();
  void register_factory(const std::string& name, Factory f);
  std::shared_ptr<FrozenProvider> make(const std::string& name,
                                       const std::map<std::string, std::string>& options) const;

 private:
  ProviderRegistry();
  std::map<std::string, Factory> factories_;
};

// ---------------------------------------------------------------------------
// Label text composition
// ---------------------------------------------------------------------------

struct LabelTextComposer {
  bool shuffle = true;
  int subset_min = 1;
  int subset_max = 5;
  std::string prompt_template;  // optional; "{}" is replaced by the label list
};

/// Comma-joins a random subset of the labels (size uniform in
/// [subset_min, min(subset_max, |labels|)]) in random order; applies the
/// prompt template when one is configured.
std::string compose_label_text(const std::vector<std::string>& labels,
                               const LabelTextComposer& composer, Rng& rng);

/// The literal label carried by every out-of-contact training sample.
inline constexpr const char* kBackgroundLabel = "background";

}  // namespace tact
