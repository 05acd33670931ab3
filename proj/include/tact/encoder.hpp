#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tact/embedding.hpp"
#include "tact/image.hpp"
#include "tact/linalg.hpp"
#include "tact/rng.hpp"

namespace tact {

enum class EncoderSize { tiny, small, base, tiny_toy };

EncoderSize encoder_size_from_string(const std::string& s);
std::string to_string(EncoderSize s);

/// Vision-transformer hyperparameters for the tactile encoder. The head
/// projects straight into the shared latent space — there is no extra
/// adapter between the transformer and the frozen providers' space.
struct EncoderConfig {
  int input_side = 224;
  int patch = 16;
  int width = 192;
  int depth = 12;
  int heads = 3;
  int output_dim = 512;

  static EncoderConfig preset(EncoderSize size, int output_dim_override = -1);

  int patch_dim() const { return 3 * patch * patch; }
  int tokens() const { return (input_side / patch) * (input_side / patch); }
  int seq_len() const { return tokens() + 1; }  // +1 for the class token
  std::int64_t param_count() const;
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

/// One named parameter tensor plus its weight-decay eligibility.
struct ParamSegment {
  std::string name;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  bool decay = false;  // weight matrices decay; biases/norms/tokens do not
};

std::vector<ParamSegment> parameter_layout(const EncoderConfig& cfg);

/// Forward activations kept for the backward pass.
struct EncoderCache;

class TactileEncoder {
 public:
  explicit TactileEncoder(const EncoderConfig& cfg);

  const EncoderConfig& config() const { return cfg_; }
  const std::vector<ParamSegment>& layout() const { return layout_; }
  std::vector<Mat>& params() { return params_; }
  const std::vector<Mat>& params() const { return params_; }
  std::int64_t param_count() const;

  void init(Rng& rng);

  /// Batch forward over preprocessed rasters of side config().input_side.
  /// Returns unit-norm rows (B × output_dim). Pass a cache to enable
  /// backward().
  Mat forward(const std::vector<Image>& batch, EncoderCache* cache = nullptr) const;

  /// Accumulates parameter gradients for d(loss)/d(normalized output).
  void backward(const EncoderCache& cache, const Mat& grad_output,
                std::vector<Mat>& grads) const;

  std::vector<Mat> zero_grads() const;

  Embedding embed(const Image& image) const;

  void save_params(std::ostream& out) const;
  void load_params(std::istream& in);

 private:
  EncoderConfig cfg_;
  std::vector<ParamSegment> layout_;
  std::vector<Mat> params_;

  // segment indices
  int seg_patch_w_, seg_patch_b_, seg_cls_, seg_pos_;
  int block_base_, per_block_;
  int seg_lnf_g_, seg_lnf_b_, seg_head_w_, seg_head_b_;

  friend struct EncoderCache;
  const Mat& seg(int i) const { return params_[static_cast<std::size_t>(i)]; }
  int block_seg(int block, int offset) const { return block_base_ + block * per_block_ + offset; }
};

struct EncoderCache {
  int batch = 0;
  Mat patches;  // (B*T) × patch_dim
  Mat x0;       // (B*S) × C, block-0 input
  struct BlockCache {
    Mat ln1_in, ln1_hat;  // (B*S) × C
    std::vector<double> ln1_rstd;
    Mat qkv;         // (B*S) × 3C
    Mat attn_probs;  // (B*H*S) × S
    Mat ctx;         // (B*S) × C
    Mat attn_res;    // input to the MLP half (post first residual)
    Mat ln2_hat;
    std::vector<double> ln2_rstd;
    Mat mlp_pre;  // (B*S) × 4C, pre-GELU
    Mat mlp_act;  // (B*S) × 4C, post-GELU
  };
  std::vector<BlockCache> blocks;
  Mat final_in;  // (B*S) × C, input of the final norm
  Mat lnf_hat;
  std::vector<double> lnf_rstd;
  Mat cls_hat;            // B × C rows fed to the head
  Mat head_out;           // B × output_dim, pre-normalization
  std::vector<double> out_norms;
};

}  // namespace tact
