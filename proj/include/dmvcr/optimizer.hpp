#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dmvcr/model.hpp"

namespace dmvcr {

struct LearningRates {
  double dictionary = 0.02;
  double base = 0.0002;

  double for_group(ParamGroup group) const {
    return group == ParamGroup::kDictionary ? dictionary : base;
  }
};

/// Adam moments for a fixed, ordered list of parameters.
class AdamState {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  std::size_t step() const { return step_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  friend void adam_step(std::span<NamedTensor> params, AdamState& state, const LearningRates& lr);

  std::size_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// One bias-corrected Adam update using each parameter's accumulated grad,
/// then zeroes the grads. Groups with a zero learning rate are left
/// bit-identical. Throws NumericError naming the parameter if any gradient is
/// non-finite (before anything is modified).
void adam_step(std::span<NamedTensor> params, AdamState& state, const LearningRates& lr);

}  // namespace dmvcr
