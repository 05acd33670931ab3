#include "tact/optim.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "tact/error.hpp"
#include "tact/parallel.hpp"

namespace tact {

double lr_at(std::int64_t step, const LrSchedule& sched) {
  if (step < 0 || step > sched.total_steps)
    throw numeric_error("lr_at: step outside [0, total_steps]");
  if (sched.warmup_steps > 0 && step <= sched.warmup_steps)
    return sched.base_lr * static_cast<double>(step) / static_cast<double>(sched.warmup_steps);
  const std::int64_t span = sched.total_steps - sched.warmup_steps;
  if (span <= 0) return 0.0;
  const double frac = static_cast<double>(step - sched.warmup_steps) / static_cast<double>(span);
  return sched.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void AdamW::init(const std::vector<ParamSegment>& layout) {
  m_.clear();
  v_.clear();
  for (const auto& s : layout) {
    m_.emplace_back(s.rows, s.cols);
    v_.emplace_back(s.rows, s.cols);
  }
  t_ = 0;
}

void AdamW::step(std::vector<Mat>& params, const std::vector<Mat>& grads,
                 const std::vector<ParamSegment>& layout, double lr) {
  if (m_.size() != params.size()) throw numeric_error("AdamW not initialized for this layout");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t si = 0; si < params.size(); ++si) {
    Mat& p = params[si];
    const Mat& g = grads[si];
    Mat& m = m_[si];
    Mat& v = v_[si];
    const bool decay = layout[si].decay;
    par::for_each(p.rows, [&](std::int64_t r) {
      double* pr = p.row(r);
      const double* gr = g.row(r);
      double* mr = m.row(r);
      double* vr = v.row(r);
      for (std::int64_t j = 0; j < p.cols; ++j) {
        mr[j] = beta1 * mr[j] + (1.0 - beta1) * gr[j];
        vr[j] = beta2 * vr[j] + (1.0 - beta2) * gr[j] * gr[j];
        const double mhat = mr[j] / bc1;
        const double vhat = vr[j] / bc2;
        if (decay) pr[j] -= lr * weight_decay * pr[j];
        pr[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    });
  }
}

void AdamW::save_state(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
  for (const auto& mats : {&m_, &v_})
    for (const auto& m : *mats)
      out.write(reinterpret_cast<const char*>(m.a.data()),
                static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}

void AdamW::load_state(std::istream& in) {
  in.read(reinterpret_cast<char*>(&t_), sizeof(t_));
  for (auto* mats : {&m_, &v_})
    for (auto& m : *mats) {
      in.read(reinterpret_cast<char*>(m.a.data()),
              static_cast<std::streamsize>(m.a.size() * sizeof(double)));
      if (!in) throw io_error("truncated optimizer state");
    }
}

}  // namespace tact
