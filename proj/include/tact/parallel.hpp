#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tact::par {

// Execution mode for the data-parallel kernels. Every kernel computes each
// output element independently and in the same order under both modes, so
// Serial and OpenMP results are bit-identical; the test suite relies on that.
enum class Mode { Serial, OpenMP };

inline Mode& mode() {
#ifdef _OPENMP
  static Mode m = Mode::OpenMP;
#else
  static Mode m = Mode::Serial;
#endif
  return m;
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// RAII switch used by tests and the benchmark harness.
class ScopedMode {
 public:
  explicit ScopedMode(Mode m) : saved_(mode()) { mode() = m; }
  ~ScopedMode() { mode() = saved_; }
  ScopedMode(const ScopedMode&) = delete;
  ScopedMode& operator=(const ScopedMode&) = delete;

 private:
  Mode saved_;
};

/// Runs f(i) for i in [0, n). Parallel iff mode()==OpenMP and OpenMP is
/// compiled in. f must not depend on execution order across indices.
template <class F>
inline void for_each(std::int64_t n, F&& f) {
#ifdef _OPENMP
  if (mode() == Mode::OpenMP && n > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) f(i);
}

}  // namespace tact::par
