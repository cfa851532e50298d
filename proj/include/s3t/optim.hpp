// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "s3t/moco.hpp"

namespace s3t {

// Linear warm-up into cosine decay.
inline double lr_at(long step, long total_steps, long warmup_steps, double base_lr) {
  if (step < 0 || step > total_steps) throw std::invalid_argument("lr step out of range");
  if (warmup_steps > 0 && step < warmup_steps) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (total_steps == warmup_steps) return base_lr;
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

// Decoupled weight decay Adam. Decay applies only to parameters whose
// registry entry is flagged for it (weight matrices).
template <typename T>
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(const std::vector<ParamRef<T>>& refs, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& r : refs) {
      m_.push_back(nn::Mat<T>::Zero(r.value->rows(), r.value->cols()));
      v_.push_back(nn::Mat<T>::Zero(r.value->rows(), r.value->cols()));
    }
  }

  void step(const std::vector<ParamRef<T>>& refs, double lr, double weight_decay) {
    if (refs.size() != m_.size()) throw std::invalid_argument("optimizer attached to a different schema");
    if (lr < 0.0) throw std::invalid_argument("learning rate must be non-negative");
    for (const auto& r : refs) {
      if (!r.grad->allFinite()) {
        throw std::runtime_error("non-finite gradient in " + r.name + "; step aborted");
      }
    }
    ++t_;
    const T bc1 = static_cast<T>(1.0 - std::pow(beta1_, t_));
    const T bc2 = static_cast<T>(1.0 - std::pow(beta2_, t_));
    for (std::size_t i = 0; i < refs.size(); ++i) {
      auto& g = *refs[i].grad;
      m_[i] = static_cast<T>(beta1_) * m_[i] + static_cast<T>(1.0 - beta1_) * g;
      v_[i].array() = static_cast<T>(beta2_) * v_[i].array() +
                      static_cast<T>(1.0 - beta2_) * g.array().square();
      auto mhat = m_[i].array() / bc1;
      auto vhat = v_[i].array() / bc2;
      auto& theta = *refs[i].value;
      const T wd = refs[i].decay ? static_cast<T>(weight_decay) : T(0);
      theta.array() -= static_cast<T>(lr) *
                       (mhat / (vhat.sqrt() + static_cast<T>(eps_)) + wd * theta.array());
    }
  }

  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }
  std::vector<nn::Mat<T>>& first_moments() { return m_; }
  std::vector<nn::Mat<T>>& second_moments() { return v_; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<nn::Mat<T>> m_, v_;
};

}  // namespace s3t
