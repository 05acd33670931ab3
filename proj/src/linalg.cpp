#include "tact/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "tact/error.hpp"
#include "tact/parallel.hpp"

namespace tact {

namespace {
void require(bool cond, const char* msg) {
  if (!cond) throw numeric_error(msg);
}
}  // namespace

Mat matmul(const Mat& A, const Mat& B) {
  require(A.cols == B.rows, "matmul: inner dimensions differ");
  Mat out(A.rows, B.cols);
  const std::int64_t k = A.cols, c = B.cols;
  par::for_each(A.rows, [&](std::int64_t i) {
    double* o = out.row(i);
    const double* ar = A.row(i);
    // i-k-j order: streams through B rows, accumulates into the output row.
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = ar[p];
      const double* br = B.row(p);
      for (std::int64_t j = 0; j < c; ++j) o[j] += av * br[j];
    }
  });
  return out;
}

Mat matmul_nt(const Mat& A, const Mat& B) {
  require(A.cols == B.cols, "matmul_nt: inner dimensions differ");
  Mat out(A.rows, B.rows);
  const std::int64_t k = A.cols, c = B.rows;
  par::for_each(A.rows, [&](std::int64_t i) {
    double* o = out.row(i);
    const double* ar = A.row(i);
    for (std::int64_t j = 0; j < c; ++j) {
      const double* br = B.row(j);
      double s = 0.0;
      for (std::int64_t p = 0; p < k; ++p) s += ar[p] * br[p];
      o[j] = s;
    }
  });
  return out;
}

Mat matmul_tn(const Mat& A, const Mat& B) {
  require(A.rows == B.rows, "matmul_tn: inner dimensions differ");
  Mat out(A.cols, B.cols);
  const std::int64_t k = A.rows, c = B.cols;
  par::for_each(A.cols, [&](std::int64_t i) {
    double* o = out.row(i);
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = A.at(p, i);
      const double* br = B.row(p);
      for (std::int64_t j = 0; j < c; ++j) o[j] += av * br[j];
    }
  });
  return out;
}

void add_row_bias(Mat& m, std::span<const double> bias) {
  require(static_cast<std::int64_t>(bias.size()) == m.cols, "add_row_bias: size mismatch");
  par::for_each(m.rows, [&](std::int64_t i) {
    double* r = m.row(i);
    for (std::int64_t j = 0; j < m.cols; ++j) r[j] += bias[j];
  });
}

std::vector<double> col_sums(const Mat& m) {
  std::vector<double> out(static_cast<std::size_t>(m.cols), 0.0);
  par::for_each(m.cols, [&](std::int64_t j) {
    double s = 0.0;
    for (std::int64_t i = 0; i < m.rows; ++i) s += m.at(i, j);
    out[j] = s;
  });
  return out;
}

void softmax_rows(Mat& m) {
  par::for_each(m.rows, [&](std::int64_t i) {
    double* r = m.row(i);
    double mx = r[0];
    for (std::int64_t j = 1; j < m.cols; ++j) mx = std::max(mx, r[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < m.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      z += r[j];
    }
    const double inv = 1.0 / z;
    for (std::int64_t j = 0; j < m.cols; ++j) r[j] *= inv;
  });
}

std::vector<double> l2_normalize_rows(Mat& m) {
  std::vector<double> norms(static_cast<std::size_t>(m.rows), 0.0);
  par::for_each(m.rows, [&](std::int64_t i) {
    double* r = m.row(i);
    double s = 0.0;
    for (std::int64_t j = 0; j < m.cols; ++j) s += r[j] * r[j];
    const double n = std::sqrt(s);
    norms[i] = n;
    if (n > 0.0) {
      const double inv = 1.0 / n;
      for (std::int64_t j = 0; j < m.cols; ++j) r[j] *= inv;
    }
  });
  return norms;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Mat cosine_matrix(const Mat& A, const Mat& B) {
  require(A.cols == B.cols, "cosine_matrix: dimension mismatch");
  Mat out(A.rows, B.rows);
  std::vector<double> bn(static_cast<std::size_t>(B.rows));
  for (std::int64_t j = 0; j < B.rows; ++j) bn[j] = l2_norm(B.row_span(j));
  par::for_each(A.rows, [&](std::int64_t i) {
    const double an = l2_norm(A.row_span(i));
    for (std::int64_t j = 0; j < B.rows; ++j) {
      const double denom = an * bn[j];
      if (denom == 0.0) throw numeric_error("cosine_matrix: zero vector");
      out.at(i, j) = dot(A.row_span(i), B.row_span(j)) / denom;
    }
  });
  return out;
}

}  // namespace tact
