#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tact/encoder.hpp"
#include "tact/linalg.hpp"

namespace tact {

struct LrSchedule {
  double base_lr = 1.5e-4;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 0;
};

/// Linear warmup from 0 to base_lr, then cosine decay to 0 at total_steps.
double lr_at(std::int64_t step, const LrSchedule& sched);

/// AdamW with decoupled weight decay. Decay applies only to segments whose
/// layout entry says so (weight matrices; biases, norms and tokens skip it).
class AdamW {
 public:
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;

  void init(const std::vector<ParamSegment>& layout);
  void step(std::vector<Mat>& params, const std::vector<Mat>& grads,
            const std::vector<ParamSegment>& layout, double lr);

  std::int64_t step_count() const { return t_; }

  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);

 private:
  std::vector<Mat> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace tact
