#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tact/error.hpp"
#include "tact/loss.hpp"
#include "tact/rng.hpp"
#include "testutil.hpp"

using namespace tact;
using test::random_unit_rows;

namespace {

// Independent brute-force oracle: direct softmax cross-entropy in long
// double, written before the implementation and kept separate from it.
long double oracle_info_nce(const Mat& q, const Mat& k, long double tau) {
  const std::int64_t n = q.rows;
  std::vector<std::vector<long double>> s(static_cast<std::size_t>(n),
                                          std::vector<long double>(static_cast<std::size_t>(n)));
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (std::int64_t u = 0; u < q.cols; ++u)
        acc += static_cast<long double>(q.at(i, u)) * static_cast<long double>(k.at(j, u));
      s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = acc / tau;
    }
  long double row = 0.0L, col = 0.0L;
  for (std::int64_t i = 0; i < n; ++i) {
    long double zr = 0.0L, zc = 0.0L;
    for (std::int64_t j = 0; j < n; ++j) {
      zr += std::exp(s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      zc += std::exp(s[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
    }
    row += std::log(zr) - s[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    col += std::log(zc) - s[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  }
  return 0.5L * (row + col) / static_cast<long double>(n);
}

Mat identical_rows(std::int64_t b, std::int64_t d) {
  Mat m(b, d);
  for (std::int64_t i = 0; i < b; ++i) m.at(i, 0) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("identical rows give the uniform-logit value ln(B)") {
  for (std::int64_t b : {2, 8, 256}) {
    Mat q = identical_rows(b, 4);
    CHECK(info_nce(q, q, 0.07) ==
          doctest::Approx(std::log(static_cast<double>(b))).epsilon(1e-9));
  }
}

TEST_CASE("perfectly aligned orthonormal rows drive the loss to zero as tau shrinks") {
  const std::int64_t b = 4;
  Mat q(b, b);
  for (std::int64_t i = 0; i < b; ++i) q.at(i, i) = 1.0;
  CHECK(info_nce(q, q, 0.01) < 1e-10);
  CHECK(info_nce(q, q, 1.0) > 0.1);  // warmer temperature, softer alignment
}

TEST_CASE("hand-computed 2x2 case matches the frozen oracle value") {
  Mat q(2, 2), k(2, 2);
  q.at(0, 0) = 1.0;
  q.at(1, 1) = 1.0;
  k.at(0, 0) = 0.6;
  k.at(0, 1) = 0.8;
  k.at(1, 0) = 0.8;
  k.at(1, 1) = 0.6;
  // Frozen from the brute-force softmax cross-entropy script.
  CHECK(info_nce(q, k, 1.0) == doctest::Approx(0.798138869381592).epsilon(1e-12));
}

TEST_CASE("info_nce equals the brute-force oracle on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = 2 + rng.below(15);  // B <= 16
    const auto d = 1 + rng.below(8);   // d <= 8
    Mat q = random_unit_rows(static_cast<std::int64_t>(b), static_cast<std::int64_t>(d), rng);
    Mat k = random_unit_rows(static_cast<std::int64_t>(b), static_cast<std::int64_t>(d), rng);
    const double tau = 0.05 + rng.uniform() * 0.95;
    const double got = info_nce(q, k, tau);
    const double want = static_cast<double>(oracle_info_nce(q, k, tau));
    CHECK(std::abs(got - want) < 1e-7);
    CHECK(got >= 0.0);  // lower bound
  }
}

TEST_CASE("info_nce is symmetric and rotation invariant") {
  Rng rng(77);
  Mat q = random_unit_rows(6, 4, rng);
  Mat k = random_unit_rows(6, 4, rng);
  CHECK(info_nce(q, k, 0.3) == doctest::Approx(info_nce(k, q, 0.3)).epsilon(1e-12));

  // Common rotation: 2x2 Givens blocks embedded in dim 4.
  const double c = std::cos(0.83), s = std::sin(0.83);
  auto rotate = [&](const Mat& m) {
    Mat out = m;
    for (std::int64_t i = 0; i < m.rows; ++i) {
      out.at(i, 0) = c * m.at(i, 0) - s * m.at(i, 1);
      out.at(i, 1) = s * m.at(i, 0) + c * m.at(i, 1);
      out.at(i, 2) = c * m.at(i, 2) - s * m.at(i, 3);
      out.at(i, 3) = s * m.at(i, 2) + c * m.at(i, 3);
    }
    return out;
  };
  CHECK(info_nce(rotate(q), rotate(k), 0.3) ==
        doctest::Approx(info_nce(q, k, 0.3)).epsilon(1e-6));
}

TEST_CASE("input validation: temperature, batch size, normalization") {
  Mat q = identical_rows(2, 3);
  CHECK_THROWS_AS(info_nce(q, q, 0.0), Error);
  CHECK_THROWS_AS(info_nce(q, q, -1.0), Error);
  Mat single = identical_rows(1, 3);
  CHECK_THROWS_AS(info_nce(single, single, 1.0), Error);
  Mat bad = q;
  bad.at(0, 0) = 2.0;  // norm 2, outside the 1e-4 tolerance
  CHECK_THROWS_AS(info_nce(bad, q, 1.0), Error);
}

TEST_CASE("info_nce gradients match finite differences") {
  Rng rng(5150);
  Mat q = random_unit_rows(5, 3, rng);
  Mat k = random_unit_rows(5, 3, rng);
  const double tau = 0.25;
  auto res = info_nce_with_grad(q, k, tau);
  CHECK(res.loss == doctest::Approx(info_nce(q, k, tau)).epsilon(1e-12));

  const double eps = 1e-6;
  for (int probe = 0; probe < 8; ++probe) {
    const auto idx = rng.below(q.a.size());
    double& cell = q.a[static_cast<std::size_t>(idx)];
    const double saved = cell;
    cell = saved + eps;
    const double up = info_nce(q, k, tau);
    cell = saved - eps;
    const double down = info_nce(q, k, tau);
    cell = saved;
    const double fd = (up - down) / (2 * eps);
    CHECK(res.grad_q.a[static_cast<std::size_t>(idx)] == doctest::Approx(fd).epsilon(1e-5));
  }

  // log-tau gradient by finite differences on log tau
  const double lt = std::log(tau), leps = 1e-6;
  const double up = info_nce(q, k, std::exp(lt + leps));
  const double down = info_nce(q, k, std::exp(lt - leps));
  CHECK(res.grad_log_tau == doctest::Approx((up - down) / (2 * leps)).epsilon(1e-5));
}

TEST_CASE("trimodal loss composes per-pair info_nce terms") {
  Rng rng(31);
  TriModalBatch batch;
  batch.tactile = random_unit_rows(6, 4, rng);
  batch.vision = random_unit_rows(6, 4, rng);
  batch.text = random_unit_rows(6, 4, rng);
  const double tau = 0.4;

  auto full = trimodal_loss(batch, PairSwitches{}, tau, false);
  CHECK(full.tv == doctest::Approx(info_nce(batch.tactile, batch.vision, tau)).epsilon(1e-12));
  CHECK(full.tl == doctest::Approx(info_nce(batch.tactile, batch.text, tau)).epsilon(1e-12));
  CHECK(full.vl == doctest::Approx(info_nce(batch.vision, batch.text, tau)).epsilon(1e-12));
  CHECK(full.total == doctest::Approx(full.tv + full.tl + full.vl).epsilon(1e-12));

  PairSwitches no_tl;
  no_tl.tactile_text = false;
  auto ablated = trimodal_loss(batch, no_tl, tau, false);
  CHECK(ablated.tl == 0.0);
  CHECK(ablated.total == doctest::Approx(full.tv + full.vl).epsilon(1e-12));
}

TEST_CASE("identical uniform batches hit 3 ln(B)") {
  TriModalBatch batch;
  batch.tactile = identical_rows(8, 4);
  batch.vision = identical_rows(8, 4);
  batch.text = identical_rows(8, 4);
  auto res = trimodal_loss(batch, PairSwitches{}, 0.07, false);
  CHECK(res.total == doctest::Approx(3.0 * std::log(8.0)).epsilon(1e-9));
}

TEST_CASE("training with every tactile pair disabled is rejected") {
  Rng rng(8);
  TriModalBatch batch;
  batch.tactile = random_unit_rows(4, 3, rng);
  batch.vision = random_unit_rows(4, 3, rng);
  batch.text = random_unit_rows(4, 3, rng);
  PairSwitches sw;
  sw.tactile_vision = false;
  sw.tactile_text = false;
  CHECK_THROWS_AS(trimodal_loss(batch, sw, 0.07, true), Error);
  CHECK_NOTHROW(trimodal_loss(batch, sw, 0.07, false));  // evaluation is fine
}

TEST_CASE("trimodal tactile gradient matches finite differences") {
  Rng rng(99);
  TriModalBatch batch;
  batch.tactile = random_unit_rows(5, 4, rng);
  batch.vision = random_unit_rows(5, 4, rng);
  batch.text = random_unit_rows(5, 4, rng);
  const double tau = 0.2;
  auto res = trimodal_loss(batch, PairSwitches{}, tau, true);
  REQUIRE(res.grad_tactile.rows == 5);

  const double eps = 1e-5;  // small enough to keep rows inside the norm tolerance
  for (int probe = 0; probe < 10; ++probe) {
    const auto idx = rng.below(batch.tactile.a.size());
    double& cell = batch.tactile.a[static_cast<std::size_t>(idx)];
    const double saved = cell;
    cell = saved + eps;
    const double up = trimodal_loss(batch, PairSwitches{}, tau, false).total;
    cell = saved - eps;
    const double down = trimodal_loss(batch, PairSwitches{}, tau, false).total;
    cell = saved;
    const double fd = (up - down) / (2 * eps);
    const double an = res.grad_tactile.a[static_cast<std::size_t>(idx)];
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("vision-text term contributes no gradient") {
  Rng rng(123);
  TriModalBatch batch;
  batch.tactile = random_unit_rows(4, 3, rng);
  batch.vision = random_unit_rows(4, 3, rng);
  batch.text = random_unit_rows(4, 3, rng);

  PairSwitches tv_only;
  tv_only.tactile_text = false;
  tv_only.vision_text = false;
  PairSwitches tv_and_vl;
  tv_and_vl.tactile_text = false;

  auto a = trimodal_loss(batch, tv_only, 0.3, true);
  auto b = trimodal_loss(batch, tv_and_vl, 0.3, true);
  CHECK(a.grad_tactile.a == b.grad_tactile.a);
  CHECK(a.grad_log_tau == b.grad_log_tau);
  CHECK(b.vl > 0.0);
}
