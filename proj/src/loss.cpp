#include "tact/loss.hpp"

#include <cmath>

#include "tact/error.hpp"
#include "tact/parallel.hpp"

namespace tact {

namespace {

void check_inputs(const Mat& q, const Mat& k, double tau) {
  if (tau <= 0.0) throw numeric_error("info_nce: temperature must be positive");
  if (q.rows < 2) throw numeric_error("info_nce: batch must have at least 2 rows");
  if (q.rows != k.rows || q.cols != k.cols)
    throw numeric_error("info_nce: query/key shapes differ");
  for (const Mat* m : {&q, &k}) {
    for (std::int64_t i = 0; i < m->rows; ++i) {
      double s = 0.0;
      const double* r = m->row(i);
      for (std::int64_t j = 0; j < m->cols; ++j) s += r[j] * r[j];
      if (!(std::abs(std::sqrt(s) - 1.0) <= 1e-4))  // negated so NaN rows fail too
        throw numeric_error("info_nce: rows must be unit-norm (tolerance 1e-4)");
    }
  }
}

// Mean cross-entropy with diagonal targets over the rows of S.
double ce_rows(const Mat& s) {
  const std::int64_t n = s.rows;
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double* r = s.row(i);
    double mx = r[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, r[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) z += std::exp(r[j] - mx);
    total += mx + std::log(z) - r[i];
  }
  return total / static_cast<double>(n);
}

Mat transpose(const Mat& m) {
  Mat t(m.cols, m.rows);
  for (std::int64_t i = 0; i < m.rows; ++i)
    for (std::int64_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
  return t;
}

}  // namespace

void TriModalBatch::validate() const {
  if (tactile.rows != vision.rows || tactile.rows != text.rows ||
      tactile.cols != vision.cols || tactile.cols != text.cols)
    throw numeric_error("trimodal batch: modality matrices must share shape");
  if (!is_background.empty() && static_cast<std::int64_t>(is_background.size()) != tactile.rows)
    throw numeric_error("trimodal batch: is_background size mismatch");
}

double info_nce(const Mat& queries, const Mat& keys, double tau) {
  check_inputs(queries, keys, tau);
  Mat s = matmul_nt(queries, keys);
  for (double& v : s.a) v /= tau;
  const double row_ce = ce_rows(s);
  const double col_ce = ce_rows(transpose(s));
  return 0.5 * (row_ce + col_ce);
}

InfoNceGrad info_nce_with_grad(const Mat& queries, const Mat& keys, double tau) {
  check_inputs(queries, keys, tau);
  const std::int64_t n = queries.rows;
  Mat s = matmul_nt(queries, keys);
  for (double& v : s.a) v /= tau;

  Mat st = transpose(s);
  InfoNceGrad out;
  out.loss = 0.5 * (ce_rows(s) + ce_rows(st));

  // dL/dS = (softmax_rows(S) - I)/(2n) + ((softmax_rows(Sᵀ) - I)/(2n))ᵀ
  Mat p = s;
  softmax_rows(p);
  Mat pt = st;
  softmax_rows(pt);
  Mat g(n, n);
  const double w = 0.5 / static_cast<double>(n);
  par::for_each(n, [&](std::int64_t i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double v = p.at(i, j) + pt.at(j, i);
      if (i == j) v -= 2.0;
      g.at(i, j) = v * w;
    }
  });

  out.grad_q = matmul(g, keys);
  for (double& v : out.grad_q.a) v /= tau;
  out.grad_k = matmul_tn(g, queries);
  for (double& v : out.grad_k.a) v /= tau;

  // S = Z/τ with Z fixed ⇒ ∂L/∂logτ = −Σ G⊙S.
  double acc = 0.0;
  for (std::size_t i = 0; i < g.a.size(); ++i) acc += g.a[i] * s.a[i];
  out.grad_log_tau = -acc;
  return out;
}

TriModalResult trimodal_loss(const TriModalBatch& batch, const PairSwitches& switches, double tau,
                             bool need_grad) {
  batch.validate();
  if (need_grad && !switches.tactile_vision && !switches.tactile_text)
    throw config_error(
        "training requires at least one enabled loss pair involving the tactile encoder");

  TriModalResult out;
  if (need_grad) out.grad_tactile = Mat(batch.tactile.rows, batch.tactile.cols);

  auto add_grad = [&](const Mat& g) {
    for (std::size_t i = 0; i < g.a.size(); ++i) out.grad_tactile.a[i] += g.a[i];
  };

  if (switches.tactile_vision) {
    if (need_grad) {
      auto r = info_nce_with_grad(batch.tactile, batch.vision, tau);
      out.tv = r.loss;
      add_grad(r.grad_q);
      out.grad_log_tau += r.grad_log_tau;
    } else {
      out.tv = info_nce(batch.tactile, batch.vision, tau);
    }
  }
  if (switches.tactile_text) {
    if (need_grad) {
      auto r = info_nce_with_grad(batch.tactile, batch.text, tau);
      out.tl = r.loss;
      add_grad(r.grad_q);
      out.grad_log_tau += r.grad_log_tau;
    } else {
      out.tl = info_nce(batch.tactile, batch.text, tau);
    }
  }
  if (switches.vision_text) {
    // Frozen-frozen pair: carries no gradient into any trainable parameter,
    // reported for the logs. τ updates likewise exclude it.
    out.vl = info_nce(batch.vision, batch.text, tau);
  }
  out.total = out.tv + out.tl + out.vl;
  return out;
}

}  // namespace tact
