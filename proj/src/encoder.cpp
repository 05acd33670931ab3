#include "tact/encoder.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "tact/error.hpp"
#include "tact/parallel.hpp"

namespace tact {

namespace {
constexpr double kLnEps = 1e-6;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void accumulate(Mat& dst, const Mat& src) {
  for (std::size_t i = 0; i < dst.a.size(); ++i) dst.a[i] += src.a[i];
}

// Rebuilds a layer-norm output y = gamma*x_hat + beta from the cached x_hat.
Mat scale_shift(const Mat& x_hat, const Mat& gamma, const Mat& beta) {
  Mat y(x_hat.rows, x_hat.cols);
  par::for_each(x_hat.rows, [&](std::int64_t i) {
    const double* xh = x_hat.row(i);
    double* yr = y.row(i);
    for (std::int64_t j = 0; j < x_hat.cols; ++j)
      yr[j] = gamma.a[static_cast<std::size_t>(j)] * xh[j] + beta.a[static_cast<std::size_t>(j)];
  });
  return y;
}
}  // namespace

EncoderSize encoder_size_from_string(const std::string& s) {
  if (s == "tiny") return EncoderSize::tiny;
  if (s == "small") return EncoderSize::small;
  if (s == "base") return EncoderSize::base;
  if (s == "tiny-toy" || s == "tiny_toy") return EncoderSize::tiny_toy;
  throw config_error("unknown encoder size: " + s);
}

std::string to_string(EncoderSize s) {
  switch (s) {
    case EncoderSize::tiny: return "tiny";
    case EncoderSize::small: return "small";
    case EncoderSize::base: return "base";
    case EncoderSize::tiny_toy: return "tiny-toy";
  }
  return "tiny";
}

EncoderConfig EncoderConfig::preset(EncoderSize size, int output_dim_override) {
  EncoderConfig cfg;
  switch (size) {
    case EncoderSize::tiny:
      cfg = {224, 16, 192, 12, 3, 512};
      break;
    case EncoderSize::small:
      cfg = {224, 16, 384, 12, 6, 512};
      break;
    case EncoderSize::base:
      cfg = {224, 16, 768, 12, 12, 512};
      break;
    case EncoderSize::tiny_toy:
      cfg = {32, 16, 64, 2, 4, 64};
      break;
  }
  if (output_dim_override > 0) cfg.output_dim = output_dim_override;
  cfg.validate();
  return cfg;
}

void EncoderConfig::validate() const {
  if (input_side <= 0 || patch <= 0 || width <= 0 || depth <= 0 || heads <= 0 || output_dim <= 0)
    throw config_error("encoder dimensions must be positive");
  if (input_side % patch != 0) throw config_error("input_side must be divisible by patch");
  if (width % heads != 0) throw config_error("width must be divisible by heads");
}

std::vector<ParamSegment> parameter_layout(const EncoderConfig& cfg) {
  cfg.validate();
  const int C = cfg.width, S = cfg.seq_len(), d = cfg.output_dim;
  std::vector<ParamSegment> out;
  out.push_back({"patch_w", C, cfg.patch_dim(), true});
  out.push_back({"patch_b", 1, C, false});
  out.push_back({"cls", 1, C, false});
  out.push_back({"pos", S, C, false});
  for (int b = 0; b < cfg.depth; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    out.push_back({p + "ln1_g", 1, C, false});
    out.push_back({p + "ln1_b", 1, C, false});
    out.push_back({p + "qkv_w", 3 * C, C, true});
    out.push_back({p + "qkv_b", 1, 3 * C, false});
    out.push_back({p + "out_w", C, C, true});
    out.push_back({p + "out_b", 1, C, false});
    out.push_back({p + "ln2_g", 1, C, false});
    out.push_back({p + "ln2_b", 1, C, false});
    out.push_back({p + "mlp1_w", 4 * C, C, true});
    out.push_back({p + "mlp1_b", 1, 4 * C, false});
    out.push_back({p + "mlp2_w", C, 4 * C, true});
    out.push_back({p + "mlp2_b", 1, C, false});
  }
  out.push_back({"lnf_g", 1, C, false});
  out.push_back({"lnf_b", 1, C, false});
  out.push_back({"head_w", d, C, true});
  out.push_back({"head_b", 1, d, false});
  return out;
}

std::int64_t EncoderConfig::param_count() const {
  std::int64_t n = 0;
  for (const auto& s : parameter_layout(*this)) n += s.rows * s.cols;
  return n;
}

TactileEncoder::TactileEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  layout_ = parameter_layout(cfg_);
  params_.reserve(layout_.size());
  for (const auto& s : layout_) params_.emplace_back(s.rows, s.cols);

  seg_patch_w_ = 0;
  seg_patch_b_ = 1;
  seg_cls_ = 2;
  seg_pos_ = 3;
  block_base_ = 4;
  per_block_ = 12;
  const int after_blocks = block_base_ + cfg_.depth * per_block_;
  seg_lnf_g_ = after_blocks;
  seg_lnf_b_ = after_blocks + 1;
  seg_head_w_ = after_blocks + 2;
  seg_head_b_ = after_blocks + 3;
}

std::int64_t TactileEncoder::param_count() const { return cfg_.param_count(); }

void TactileEncoder::init(Rng& rng) {
  auto trunc_normal = [&rng](Mat& m, double std) {
    for (double& v : m.a) {
      double z = rng.gaussian();
      while (std::abs(z) > 2.0) z = rng.gaussian();
      v = z * std;
    }
  };
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = layout_[i].name;
    Mat& m = params_[i];
    if (name.ends_with("_g")) {
      for (double& v : m.a) v = 1.0;
    } else if (name.ends_with("_b") || name.ends_with("_bias")) {
      for (double& v : m.a) v = 0.0;
    } else {
      trunc_normal(m, 0.02);
    }
  }
}

std::vector<Mat> TactileEncoder::zero_grads() const {
  std::vector<Mat> g;
  g.reserve(layout_.size());
  for (const auto& s : layout_) g.emplace_back(s.rows, s.cols);
  return g;
}

namespace {

// Row-wise layer norm. Returns x̂ (normalized rows) and per-row 1/σ.
void layernorm_forward(const Mat& x, const Mat& gamma, const Mat& beta, Mat& y, Mat& x_hat,
                       std::vector<double>& rstd) {
  const std::int64_t C = x.cols;
  y = Mat(x.rows, C);
  x_hat = Mat(x.rows, C);
  rstd.assign(static_cast<std::size_t>(x.rows), 0.0);
  par::for_each(x.rows, [&](std::int64_t i) {
    const double* r = x.row(i);
    double mu = 0.0;
    for (std::int64_t j = 0; j < C; ++j) mu += r[j];
    mu /= static_cast<double>(C);
    double var = 0.0;
    for (std::int64_t j = 0; j < C; ++j) {
      const double d = r[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(C);
    const double rs = 1.0 / std::sqrt(var + kLnEps);
    rstd[static_cast<std::size_t>(i)] = rs;
    double* xh = x_hat.row(i);
    double* yr = y.row(i);
    for (std::int64_t j = 0; j < C; ++j) {
      xh[j] = (r[j] - mu) * rs;
      yr[j] = gamma.a[static_cast<std::size_t>(j)] * xh[j] + beta.a[static_cast<std::size_t>(j)];
    }
  });
}

// dX for a layer norm given dY and the cached x̂ / 1/σ; accumulates dγ, dβ.
Mat layernorm_backward(const Mat& dy, const Mat& x_hat, const std::vector<double>& rstd,
                       const Mat& gamma, Mat& dgamma, Mat& dbeta) {
  const std::int64_t C = dy.cols;
  Mat dx(dy.rows, C);
  par::for_each(dy.rows, [&](std::int64_t i) {
    const double* dyr = dy.row(i);
    const double* xh = x_hat.row(i);
    double m1 = 0.0, m2 = 0.0;  // mean(dx̂), mean(dx̂ ⊙ x̂)
    for (std::int64_t j = 0; j < C; ++j) {
      const double dxh = dyr[j] * gamma.a[static_cast<std::size_t>(j)];
      m1 += dxh;
      m2 += dxh * xh[j];
    }
    m1 /= static_cast<double>(C);
    m2 /= static_cast<double>(C);
    double* dxr = dx.row(i);
    const double rs = rstd[static_cast<std::size_t>(i)];
    for (std::int64_t j = 0; j < C; ++j) {
      const double dxh = dyr[j] * gamma.a[static_cast<std::size_t>(j)];
      dxr[j] = rs * (dxh - m1 - xh[j] * m2);
    }
  });
  // Parameter grads: column reductions (parallel over columns).
  par::for_each(C, [&](std::int64_t j) {
    double dg = 0.0, db = 0.0;
    for (std::int64_t i = 0; i < dy.rows; ++i) {
      dg += dy.at(i, j) * x_hat.at(i, j);
      db += dy.at(i, j);
    }
    dgamma.a[static_cast<std::size_t>(j)] += dg;
    dbeta.a[static_cast<std::size_t>(j)] += db;
  });
  return dx;
}

}  // namespace

Mat TactileEncoder::forward(const std::vector<Image>& batch, EncoderCache* cache) const {
  const int B = static_cast<int>(batch.size());
  if (B == 0) throw numeric_error("encoder forward: empty batch");
  const int side = cfg_.input_side, P = cfg_.patch, C = cfg_.width;
  const int T = cfg_.tokens(), S = cfg_.seq_len(), pd = cfg_.patch_dim();
  const int grid = side / P;
  for (const auto& img : batch)
    if (img.h != side || img.w != side)
      throw numeric_error("encoder forward: image does not match encoder input size");

  EncoderCache local;
  EncoderCache& cc = cache ? *cache : local;
  cc.batch = B;

  // --- Patchify.
  cc.patches = Mat(static_cast<std::int64_t>(B) * T, pd);
  par::for_each(static_cast<std::int64_t>(B) * T, [&](std::int64_t r) {
    const int b = static_cast<int>(r / T);
    const int t = static_cast<int>(r % T);
    const int gy = t / grid, gx = t % grid;
    double* row = cc.patches.row(r);
    int k = 0;
    for (int py = 0; py < P; ++py)
      for (int px = 0; px < P; ++px)
        for (int c = 0; c < 3; ++c) row[k++] = batch[static_cast<std::size_t>(b)].at(gy * P + py, gx * P + px, c);
  });

  // --- Token embedding + cls + positions.
  Mat tok = matmul_nt(cc.patches, seg(seg_patch_w_));  // (B*T) × C
  add_row_bias(tok, seg(seg_patch_b_).row_span(0));

  cc.x0 = Mat(static_cast<std::int64_t>(B) * S, C);
  const Mat& cls = seg(seg_cls_);
  const Mat& pos = seg(seg_pos_);
  par::for_each(static_cast<std::int64_t>(B) * S, [&](std::int64_t r) {
    const int s = static_cast<int>(r % S);
    const int b = static_cast<int>(r / S);
    double* dst = cc.x0.row(r);
    const double* posr = pos.row(s);
    if (s == 0) {
      const double* c0 = cls.row(0);
      for (int j = 0; j < C; ++j) dst[j] = c0[j] + posr[j];
    } else {
      const double* src = tok.row(static_cast<std::int64_t>(b) * T + (s - 1));
      for (int j = 0; j < C; ++j) dst[j] = src[j] + posr[j];
    }
  });

  // --- Transformer blocks (pre-norm).
  cc.blocks.resize(static_cast<std::size_t>(cfg_.depth));
  const int H = cfg_.heads, dh = C / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat x = cc.x0;
  for (int blk = 0; blk < cfg_.depth; ++blk) {
    auto& bc = cc.blocks[static_cast<std::size_t>(blk)];
    bc.ln1_in = x;
    Mat ln1_y;
    layernorm_forward(x, seg(block_seg(blk, 0)), seg(block_seg(blk, 1)), ln1_y, bc.ln1_hat,
                      bc.ln1_rstd);
    bc.qkv = matmul_nt(ln1_y, seg(block_seg(blk, 2)));
    add_row_bias(bc.qkv, seg(block_seg(blk, 3)).row_span(0));

    bc.attn_probs = Mat(static_cast<std::int64_t>(B) * H * S, S);
    bc.ctx = Mat(static_cast<std::int64_t>(B) * S, C);
    par::for_each(static_cast<std::int64_t>(B) * H, [&](std::int64_t bh) {
      const int b = static_cast<int>(bh / H);
      const int h = static_cast<int>(bh % H);
      const std::int64_t base = static_cast<std::int64_t>(b) * S;
      const int qo = h * dh, ko = C + h * dh, vo = 2 * C + h * dh;
      // scores + softmax, one query row at a time
      for (int i = 0; i < S; ++i) {
        const double* qi = bc.qkv.row(base + i);
        double* prow = bc.attn_probs.row((static_cast<std::int64_t>(b) * H + h) * S + i);
        double mx = -1e300;
        for (int j = 0; j < S; ++j) {
          const double* kj = bc.qkv.row(base + j);
          double s = 0.0;
          for (int u = 0; u < dh; ++u) s += qi[qo + u] * kj[ko + u];
          s *= scale;
          prow[j] = s;
          mx = std::max(mx, s);
        }
        double z = 0.0;
        for (int j = 0; j < S; ++j) {
          prow[j] = std::exp(prow[j] - mx);
          z += prow[j];
        }
        const double inv = 1.0 / z;
        for (int j = 0; j < S; ++j) prow[j] *= inv;
        // context for this query
        double* ctx = bc.ctx.row(base + i);
        for (int u = 0; u < dh; ++u) {
          double s = 0.0;
          for (int j = 0; j < S; ++j) s += prow[j] * bc.qkv.at(base + j, vo + u);
          ctx[qo + u] = s;
        }
      }
    });

    Mat attn_out = matmul_nt(bc.ctx, seg(block_seg(blk, 4)));
    add_row_bias(attn_out, seg(block_seg(blk, 5)).row_span(0));
    bc.attn_res = Mat(x.rows, C);
    par::for_each(x.rows, [&](std::int64_t r) {
      double* dst = bc.attn_res.row(r);
      const double* a = x.row(r);
      const double* o = attn_out.row(r);
      for (int j = 0; j < C; ++j) dst[j] = a[j] + o[j];
    });

    Mat ln2_y;
    layernorm_forward(bc.attn_res, seg(block_seg(blk, 6)), seg(block_seg(blk, 7)), ln2_y,
                      bc.ln2_hat, bc.ln2_rstd);
    bc.mlp_pre = matmul_nt(ln2_y, seg(block_seg(blk, 8)));
    add_row_bias(bc.mlp_pre, seg(block_seg(blk, 9)).row_span(0));
    bc.mlp_act = Mat(bc.mlp_pre.rows, bc.mlp_pre.cols);
    par::for_each(bc.mlp_pre.rows, [&](std::int64_t r) {
      const double* src = bc.mlp_pre.row(r);
      double* dst = bc.mlp_act.row(r);
      for (std::int64_t j = 0; j < bc.mlp_pre.cols; ++j) dst[j] = gelu(src[j]);
    });
    Mat mlp_out = matmul_nt(bc.mlp_act, seg(block_seg(blk, 10)));
    add_row_bias(mlp_out, seg(block_seg(blk, 11)).row_span(0));

    Mat next(x.rows, C);
    par::for_each(x.rows, [&](std::int64_t r) {
      double* dst = next.row(r);
      const double* a = bc.attn_res.row(r);
      const double* m = mlp_out.row(r);
      for (int j = 0; j < C; ++j) dst[j] = a[j] + m[j];
    });
    x = std::move(next);
  }

  // --- Final norm, class token, head, L2 normalization.
  cc.final_in = x;
  Mat lnf_y;
  layernorm_forward(x, seg(seg_lnf_g_), seg(seg_lnf_b_), lnf_y, cc.lnf_hat, cc.lnf_rstd);
  cc.cls_hat = Mat(B, C);
  for (int b = 0; b < B; ++b) {
    const double* src = lnf_y.row(static_cast<std::int64_t>(b) * S);
    double* dst = cc.cls_hat.row(b);
    for (int j = 0; j < C; ++j) dst[j] = src[j];
  }
  cc.head_out = matmul_nt(cc.cls_hat, seg(seg_head_w_));
  add_row_bias(cc.head_out, seg(seg_head_b_).row_span(0));
  Mat out = cc.head_out;
  cc.out_norms = l2_normalize_rows(out);
  return out;
}

void TactileEncoder::backward(const EncoderCache& cc, const Mat& grad_output,
                              std::vector<Mat>& grads) const {
  const int B = cc.batch, C = cfg_.width, S = cfg_.seq_len(), T = cfg_.tokens();
  const int H = cfg_.heads, dh = C / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (grad_output.rows != B || grad_output.cols != cfg_.output_dim)
    throw numeric_error("encoder backward: gradient shape mismatch");

  // L2-normalization backward: y = x/‖x‖, dx = (g − y (y·g)) / ‖x‖.
  Mat d_head(B, cfg_.output_dim);
  par::for_each(B, [&](std::int64_t b) {
    const double nrm = cc.out_norms[static_cast<std::size_t>(b)];
    const double* x = cc.head_out.row(b);
    const double* g = grad_output.row(b);
    double ydotg = 0.0;
    for (int j = 0; j < cfg_.output_dim; ++j) ydotg += (x[j] / nrm) * g[j];
    double* d = d_head.row(b);
    for (int j = 0; j < cfg_.output_dim; ++j) d[j] = (g[j] - (x[j] / nrm) * ydotg) / nrm;
  });

  // Head linear.
  accumulate(grads[static_cast<std::size_t>(seg_head_w_)], matmul_tn(d_head, cc.cls_hat));
  {
    auto sums = col_sums(d_head);
    auto& hb = grads[static_cast<std::size_t>(seg_head_b_)];
    for (std::size_t j = 0; j < sums.size(); ++j) hb.a[j] += sums[j];
  }
  Mat d_cls_hat = matmul(d_head, seg(seg_head_w_));  // B × C

  // Scatter class-token grads into the final-norm output grad.
  Mat d_lnf_y(static_cast<std::int64_t>(B) * S, C);
  for (int b = 0; b < B; ++b) {
    const double* src = d_cls_hat.row(b);
    double* dst = d_lnf_y.row(static_cast<std::int64_t>(b) * S);
    for (int j = 0; j < C; ++j) dst[j] = src[j];
  }
  Mat dx = layernorm_backward(d_lnf_y, cc.lnf_hat, cc.lnf_rstd, seg(seg_lnf_g_),
                              grads[static_cast<std::size_t>(seg_lnf_g_)],
                              grads[static_cast<std::size_t>(seg_lnf_b_)]);

  // --- Blocks in reverse.
  for (int blk = cfg_.depth - 1; blk >= 0; --blk) {
    const auto& bc = cc.blocks[static_cast<std::size_t>(blk)];

    // x_out = attn_res + mlp_out
    const Mat& d_xout = dx;
    Mat d_mlp_act = matmul(d_xout, seg(block_seg(blk, 10)));  // (B*S) × 4C
    accumulate(grads[static_cast<std::size_t>(block_seg(blk, 10))], matmul_tn(d_xout, bc.mlp_act));
    {
      auto sums = col_sums(d_xout);
      auto& g = grads[static_cast<std::size_t>(block_seg(blk, 11))];
      for (std::size_t j = 0; j < sums.size(); ++j) g.a[j] += sums[j];
    }
    Mat d_mlp_pre(bc.mlp_pre.rows, bc.mlp_pre.cols);
    par::for_each(bc.mlp_pre.rows, [&](std::int64_t r) {
      const double* pre = bc.mlp_pre.row(r);
      const double* da = d_mlp_act.row(r);
      double* dst = d_mlp_pre.row(r);
      for (std::int64_t j = 0; j < bc.mlp_pre.cols; ++j) dst[j] = da[j] * gelu_grad(pre[j]);
    });
    accumulate(grads[static_cast<std::size_t>(block_seg(blk, 8))],
               matmul_tn(d_mlp_pre, scale_shift(bc.ln2_hat, seg(block_seg(blk, 6)),
                                                seg(block_seg(blk, 7)))));
    {
      auto sums = col_sums(d_mlp_pre);
      auto& g = grads[static_cast<std::size_t>(block_seg(blk, 9))];
      for (std::size_t j = 0; j < sums.size(); ++j) g.a[j] += sums[j];
    }
    Mat d_ln2_y = matmul(d_mlp_pre, seg(block_seg(blk, 8)));
    Mat d_attn_res = layernorm_backward(d_ln2_y, bc.ln2_hat, bc.ln2_rstd, seg(block_seg(blk, 6)),
                                        grads[static_cast<std::size_t>(block_seg(blk, 6))],
                                        grads[static_cast<std::size_t>(block_seg(blk, 7))]);
    // residual: d(attn_res) also receives d_xout directly
    par::for_each(d_attn_res.rows, [&](std::int64_t r) {
      double* dst = d_attn_res.row(r);
      const double* a = d_xout.row(r);
      for (int j = 0; j < C; ++j) dst[j] += a[j];
    });

    // attn_res = ln1_in + attn_out
    Mat d_ctx = matmul(d_attn_res, seg(block_seg(blk, 4)));
    accumulate(grads[static_cast<std::size_t>(block_seg(blk, 4))], matmul_tn(d_attn_res, bc.ctx));
    {
      auto sums = col_sums(d_attn_res);
      auto& g = grads[static_cast<std::size_t>(block_seg(blk, 5))];
      for (std::size_t j = 0; j < sums.size(); ++j) g.a[j] += sums[j];
    }

    Mat d_qkv(bc.qkv.rows, bc.qkv.cols);
    par::for_each(static_cast<std::int64_t>(B) * H, [&](std::int64_t bh) {
      const int b = static_cast<int>(bh / H);
      const int h = static_cast<int>(bh % H);
      const std::int64_t base = static_cast<std::int64_t>(b) * S;
      const int qo = h * dh, ko = C + h * dh, vo = 2 * C + h * dh;
      std::vector<double> dp(static_cast<std::size_t>(S));
      for (int i = 0; i < S; ++i) {
        const double* prow = bc.attn_probs.row((static_cast<std::int64_t>(b) * H + h) * S + i);
        const double* dctx = d_ctx.row(base + i);
        // dP[j] = dctx · v_j ; dV_j += P[j] * dctx
        double dot_pp = 0.0;
        for (int j = 0; j < S; ++j) {
          const double* vj = bc.qkv.row(base + j);
          double s = 0.0;
          for (int u = 0; u < dh; ++u) s += dctx[qo + u] * vj[vo + u];
          dp[j] = s;
          dot_pp += s * prow[j];
        }
        for (int j = 0; j < S; ++j) {
          const double ds = prow[j] * (dp[j] - dot_pp) * scale;
          const double* kj = bc.qkv.row(base + j);
          const double* qi = bc.qkv.row(base + i);
          double* dq = d_qkv.row(base + i);
          double* dk = d_qkv.row(base + j);
          double* dv = d_qkv.row(base + j);
          for (int u = 0; u < dh; ++u) {
            dq[qo + u] += ds * kj[ko + u];
            dk[ko + u] += ds * qi[qo + u];
            dv[vo + u] += prow[j] * dctx[qo + u];
          }
        }
      }
    });

    accumulate(grads[static_cast<std::size_t>(block_seg(blk, 2))],
               matmul_tn(d_qkv, scale_shift(bc.ln1_hat, seg(block_seg(blk, 0)),
                                            seg(block_seg(blk, 1)))));
    {
      auto sums = col_sums(d_qkv);
      auto& g = grads[static_cast<std::size_t>(block_seg(blk, 3))];
      for (std::size_t j = 0; j < sums.size(); ++j) g.a[j] += sums[j];
    }
    Mat d_ln1_y = matmul(d_qkv, seg(block_seg(blk, 2)));
    Mat d_ln1_in = layernorm_backward(d_ln1_y, bc.ln1_hat, bc.ln1_rstd, seg(block_seg(blk, 0)),
                                      grads[static_cast<std::size_t>(block_seg(blk, 0))],
                                      grads[static_cast<std::size_t>(block_seg(blk, 1))]);
    par::for_each(d_ln1_in.rows, [&](std::int64_t r) {
      double* dst = d_ln1_in.row(r);
      const double* a = d_attn_res.row(r);
      for (int j = 0; j < C; ++j) dst[j] += a[j];
    });
    dx = std::move(d_ln1_in);
  }

  // --- Embedding stage backward: positions, cls, patch projection.
  {
    auto& dpos = grads[static_cast<std::size_t>(seg_pos_)];
    par::for_each(S, [&](std::int64_t s) {
      double* dst = dpos.row(s);
      for (int b = 0; b < B; ++b) {
        const double* src = dx.row(static_cast<std::int64_t>(b) * S + s);
        for (int j = 0; j < C; ++j) dst[j] += src[j];
      }
    });
    auto& dcls = grads[static_cast<std::size_t>(seg_cls_)];
    for (int b = 0; b < B; ++b) {
      const double* src = dx.row(static_cast<std::int64_t>(b) * S);
      for (int j = 0; j < C; ++j) dcls.a[static_cast<std::size_t>(j)] += src[j];
    }
  }
  Mat d_tok(static_cast<std::int64_t>(B) * T, C);
  par::for_each(static_cast<std::int64_t>(B) * T, [&](std::int64_t r) {
    const int b = static_cast<int>(r / T);
    const int t = static_cast<int>(r % T);
    const double* src = dx.row(static_cast<std::int64_t>(b) * S + t + 1);
    double* dst = d_tok.row(r);
    for (int j = 0; j < C; ++j) dst[j] = src[j];
  });
  accumulate(grads[static_cast<std::size_t>(seg_patch_w_)], matmul_tn(d_tok, cc.patches));
  {
    auto sums = col_sums(d_tok);
    auto& g = grads[static_cast<std::size_t>(seg_patch_b_)];
    for (std::size_t j = 0; j < sums.size(); ++j) g.a[j] += sums[j];
  }
}

Embedding TactileEncoder::embed(const Image& image) const {
  Mat out = forward({image});
  Embedding e;
  e.v.assign(out.row(0), out.row(0) + out.cols);
  return e;
}

void TactileEncoder::save_params(std::ostream& out) const {
  for (const auto& m : params_)
    out.write(reinterpret_cast<const char*>(m.a.data()),
              static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}

void TactileEncoder::load_params(std::istream& in) {
  for (auto& m : params_) {
    in.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
    if (!in) throw io_error("truncated parameter blob");
  }
}

}  // namespace tact
