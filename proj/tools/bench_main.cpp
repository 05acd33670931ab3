// Serial vs OpenMP timing for the hot kernels and the full encoder step.
// Both paths produce bit-identical results (checked here as well); this tool
// reports the speedup actually realized on this machine.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "tact/encoder.hpp"
#include "tact/linalg.hpp"
#include "tact/loss.hpp"
#include "tact/parallel.hpp"
#include "tact/preprocess.hpp"
#include "tact/rng.hpp"

using namespace tact;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Case {
  std::string name;
  std::function<double()> run;  // returns a checksum so work cannot be elided
};

void run_case(const Case& c, int reps) {
  double serial_time = 1e300, omp_time = 1e300;
  double serial_sum = 0, omp_sum = 0;
  for (int r = 0; r < reps; ++r) {
    {
      par::ScopedMode guard(par::Mode::Serial);
      const double t0 = now_s();
      serial_sum = c.run();
      serial_time = std::min(serial_time, now_s() - t0);
    }
    {
      par::ScopedMode guard(par::Mode::OpenMP);
      const double t0 = now_s();
      omp_sum = c.run();
      omp_time = std::min(omp_time, now_s() - t0);
    }
  }
  const bool same = serial_sum == omp_sum;
  std::printf("%-34s %10.2f ms %10.2f ms %7.2fx   %s\n", c.name.c_str(), serial_time * 1e3,
              omp_time * 1e3, serial_time / omp_time, same ? "bit-identical" : "MISMATCH");
}

double checksum(const Mat& m) {
  double s = 0;
  for (double v : m.a) s += v;
  return s;
}

double checksum_image(const Image& img) {
  double s = 0;
  for (double v : img.px) s += v;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  const int reps = quick ? 1 : 3;
  const int n = quick ? 128 : 384;
  Rng rng(7);

  Mat a(n, n), b(n, n);
  for (double& v : a.a) v = rng.gaussian();
  for (double& v : b.a) v = rng.gaussian();

  const int B = quick ? 32 : 128;
  const int d = quick ? 64 : 256;
  Mat q(B, d), k(B, d);
  for (double& v : q.a) v = rng.gaussian();
  for (double& v : k.a) v = rng.gaussian();
  l2_normalize_rows(q);
  l2_normalize_rows(k);

  TactileEncoder enc(EncoderConfig::preset(EncoderSize::tiny_toy));
  Rng init(1);
  enc.init(init);
  std::vector<Image> batch;
  for (int i = 0; i < (quick ? 8 : 32); ++i) {
    Image img(32, 32);
    for (double& v : img.px) v = rng.uniform();
    batch.push_back(std::move(img));
  }

  Image big(quick ? 128 : 480, quick ? 160 : 640);
  for (double& v : big.px) v = rng.uniform();

  std::printf("threads available: %d\n", par::max_threads());
  std::printf("%-34s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  std::vector<Case> cases;
  cases.push_back({"matmul " + std::to_string(n) + "^3",
                   [&] { return checksum(matmul(a, b)); }});
  cases.push_back({"matmul_nt " + std::to_string(n) + "^3",
                   [&] { return checksum(matmul_nt(a, b)); }});
  cases.push_back({"softmax_rows " + std::to_string(n) + "x" + std::to_string(n), [&] {
                     Mat s = a;
                     softmax_rows(s);
                     return checksum(s);
                   }});
  cases.push_back({"info_nce B=" + std::to_string(B) + " d=" + std::to_string(d), [&] {
                     auto r = info_nce_with_grad(q, k, 0.07);
                     return r.loss + checksum(r.grad_q);
                   }});
  cases.push_back({"encoder fwd+bwd batch " + std::to_string(batch.size()), [&] {
                     EncoderCache cache;
                     Mat out = enc.forward(batch, &cache);
                     auto grads = enc.zero_grads();
                     Mat g(out.rows, out.cols);
                     for (double& v : g.a) v = 1e-3;
                     enc.backward(cache, g, grads);
                     double s = checksum(out);
                     for (const auto& gm : grads) s += checksum(gm);
                     return s;
                   }});
  cases.push_back({"resize_bilinear to 224", [&] {
                     return checksum_image(resize_bilinear(big, 224));
                   }});

  for (const auto& c : cases) run_case(c, reps);
  return 0;
}
