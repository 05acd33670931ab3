#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tact {

/// Dense row-major matrix of doubles. The numeric core of the project;
/// kept deliberately small (no expression templates, no views beyond spans).
struct Mat {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::int64_t r, std::int64_t c) : rows(r), cols(c), a(static_cast<std::size_t>(r * c), 0.0) {}

  static Mat zeros(std::int64_t r, std::int64_t c) { return Mat(r, c); }

  double* row(std::int64_t r) { return a.data() + r * cols; }
  const double* row(std::int64_t r) const { return a.data() + r * cols; }
  std::span<double> row_span(std::int64_t r) { return {row(r), static_cast<std::size_t>(cols)}; }
  std::span<const double> row_span(std::int64_t r) const {
    return {row(r), static_cast<std::size_t>(cols)};
  }

  double& at(std::int64_t r, std::int64_t c) { return a[r * cols + c]; }
  double at(std::int64_t r, std::int64_t c) const { return a[r * cols + c]; }

  std::int64_t size() const { return rows * cols; }
  bool empty() const { return rows == 0 || cols == 0; }
};

// ---------------------------------------------------------------------------
// Kernels. All are parallel over independent output rows (see tact::par) and
// produce bit-identical results in Serial and OpenMP modes. A plain serial
// triple-loop reference for each lives in the test suite as the oracle.
// ---------------------------------------------------------------------------

/// out = A(r×k) · B(k×c)
Mat matmul(const Mat& A, const Mat& B);

/// out = A(r×k) · B(c×k)ᵀ  — the weight-application form.
Mat matmul_nt(const Mat& A, const Mat& B);

/// out = A(k×r)ᵀ · B(k×c) — the weight-gradient form.
Mat matmul_tn(const Mat& A, const Mat& B);

/// out[r][c] += bias[c] for every row.
void add_row_bias(Mat& m, std::span<const double> bias);

/// Column sums (the bias gradient).
std::vector<double> col_sums(const Mat& m);

/// In-place row-wise softmax.
void softmax_rows(Mat& m);

/// Row-wise L2 normalization; returns the pre-normalization row norms.
std::vector<double> l2_normalize_rows(Mat& m);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// Cosine similarity matrix: out[i][j] = cos(A.row(i), B.row(j)).
Mat cosine_matrix(const Mat& A, const Mat& B);

}  // namespace tact
