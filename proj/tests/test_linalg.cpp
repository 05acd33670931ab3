#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tact/linalg.hpp"
#include "tact/parallel.hpp"
#include "tact/rng.hpp"
#include "testutil.hpp"

using namespace tact;
using test::random_mat;

namespace {

// Naive triple-loop reference, the oracle for every matmul variant.
Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::int64_t k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  return out;
}

Mat transpose(const Mat& m) {
  Mat t(m.cols, m.rows);
  for (std::int64_t i = 0; i < m.rows; ++i)
    for (std::int64_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
  return t;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  REQUIRE(a.rows == b.rows);
  REQUIRE(a.cols == b.cols);
  double mx = 0.0;
  for (std::size_t i = 0; i < a.a.size(); ++i) mx = std::max(mx, std::abs(a.a[i] - b.a[i]));
  return mx;
}

}  // namespace

TEST_CASE("matmul variants agree with the naive oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = 1 + rng.below(17), k = 1 + rng.below(17), c = 1 + rng.below(17);
    Mat a = random_mat(static_cast<std::int64_t>(r), static_cast<std::int64_t>(k), rng);
    Mat b = random_mat(static_cast<std::int64_t>(k), static_cast<std::int64_t>(c), rng);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
    CHECK(max_abs_diff(matmul_nt(a, transpose(b)), naive_matmul(a, b)) < 1e-12);
    CHECK(max_abs_diff(matmul_tn(transpose(a), b), naive_matmul(a, b)) < 1e-12);
  }
}

TEST_CASE("serial and OpenMP kernels are bit-identical") {
  Rng rng(7);
  Mat a = random_mat(33, 29, rng);
  Mat b = random_mat(29, 31, rng);

  Mat m_serial, m_omp;
  {
    par::ScopedMode guard(par::Mode::Serial);
    m_serial = matmul(a, b);
  }
  {
    par::ScopedMode guard(par::Mode::OpenMP);
    m_omp = matmul(a, b);
  }
  REQUIRE(m_serial.a.size() == m_omp.a.size());
  for (std::size_t i = 0; i < m_serial.a.size(); ++i) CHECK(m_serial.a[i] == m_omp.a[i]);

  Mat s1 = random_mat(40, 13, rng);
  Mat s2 = s1;
  {
    par::ScopedMode guard(par::Mode::Serial);
    softmax_rows(s1);
  }
  {
    par::ScopedMode guard(par::Mode::OpenMP);
    softmax_rows(s2);
  }
  for (std::size_t i = 0; i < s1.a.size(); ++i) CHECK(s1.a[i] == s2.a[i]);
}

TEST_CASE("softmax rows are probability distributions") {
  Rng rng(3);
  Mat m = random_mat(12, 9, rng, 3.0);
  softmax_rows(m);
  for (std::int64_t i = 0; i < m.rows; ++i) {
    double sum = 0.0;
    for (std::int64_t j = 0; j < m.cols; ++j) {
      CHECK(m.at(i, j) >= 0.0);
      sum += m.at(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("l2_normalize_rows produces unit rows and returns original norms") {
  Rng rng(11);
  Mat m = random_mat(8, 5, rng, 2.0);
  Mat copy = m;
  auto norms = l2_normalize_rows(m);
  for (std::int64_t i = 0; i < m.rows; ++i) {
    CHECK(l2_norm(m.row_span(i)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norms[static_cast<std::size_t>(i)] ==
          doctest::Approx(l2_norm(copy.row_span(i))).epsilon(1e-12));
  }
}

TEST_CASE("cosine_matrix is scale invariant") {
  Rng rng(5);
  Mat a = random_mat(6, 7, rng);
  Mat b = random_mat(4, 7, rng);
  Mat a2 = a;
  Mat b2 = b;
  for (double& v : a2.a) v *= 3.7;
  for (double& v : b2.a) v *= 0.21;
  Mat c1 = cosine_matrix(a, b);
  Mat c2 = cosine_matrix(a2, b2);
  CHECK(max_abs_diff(c1, c2) < 1e-12);
  for (double v : c1.a) CHECK(std::abs(v) <= 1.0 + 1e-12);
}

TEST_CASE("col_sums matches manual accumulation") {
  Rng rng(9);
  Mat m = random_mat(14, 6, rng);
  auto sums = col_sums(m);
  for (std::int64_t j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (std::int64_t i = 0; i < m.rows; ++i) s += m.at(i, j);
    CHECK(sums[static_cast<std::size_t>(j)] == doctest::Approx(s).epsilon(1e-12));
  }
}
