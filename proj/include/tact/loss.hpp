#pragma once

#include <vector>

#include "tact/linalg.hpp"

namespace tact {

/// Which modality pairs contribute loss terms. The vision-text pair connects
/// two frozen providers, so it never moves trainable parameters either way;
/// it is still computed and reported.
struct PairSwitches {
  bool tactile_vision = true;
  bool tactile_text = true;
  bool vision_text = true;
};

/// Embedding batch for one step. Rows must be unit-norm (tolerance 1e-4).
struct TriModalBatch {
  Mat tactile;  // B × d
  Mat vision;   // B × d
  Mat text;     // B × d
  std::vector<bool> is_background;

  void validate() const;
};

/// Symmetric InfoNCE: mean over both directions of softmax cross-entropy on
/// S = Q·Kᵀ/τ with diagonal targets. Equal to ln(B) when all rows coincide.
double info_nce(const Mat& queries, const Mat& keys, double tau);

struct InfoNceGrad {
  double loss = 0.0;
  Mat grad_q;          // d loss / d queries
  Mat grad_k;          // d loss / d keys
  double grad_log_tau = 0.0;
};

InfoNceGrad info_nce_with_grad(const Mat& queries, const Mat& keys, double tau);

struct TriModalResult {
  double total = 0.0;
  double tv = 0.0;  // tactile-vision
  double tl = 0.0;  // tactile-text
  double vl = 0.0;  // vision-text
  Mat grad_tactile;       // filled when gradients were requested
  double grad_log_tau = 0.0;
};

/// Sum of InfoNCE terms over the enabled pairs. When `need_grad` is set, at
/// least one tactile pair must be enabled (otherwise no trainable parameter
/// receives gradient and training cannot proceed).
TriModalResult trimodal_loss(const TriModalBatch& batch, const PairSwitches& switches, double tau,
                             bool need_grad);

}  // namespace tact
