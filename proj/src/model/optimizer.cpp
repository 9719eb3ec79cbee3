#include "dmvcr/optimizer.hpp"

#include <cmath>

#include "dmvcr/errors.hpp"

namespace dmvcr {

void adam_step(std::span<NamedTensor> params, AdamState& state, const LearningRates& lr) {
  if (!(lr.dictionary >= 0.0) || !(lr.base >= 0.0)) {
    throw ConfigError("learning_rate", "learning rates must be >= 0");
  }
  if (state.m_.empty()) {
    for (const auto& p : params) {
      state.m_.emplace_back(p.tensor.numel(), 0.0);
      state.v_.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.m_.size() != params.size()) {
    throw ContractError("adam_step: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m_[i].size() != params[i].tensor.numel()) {
      throw DimensionError("adam_step: moment shape mismatch for " + params[i].name);
    }
    for (double g : params[i].tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + params[i].name);
    }
  }

  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& tensor = params[i].tensor;
    auto values = tensor.mutable_data();
    auto grad = tensor.mutable_grad();
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    const double rate = lr.for_group(params[i].group);
    for (std::size_t k = 0; k < values.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * grad[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * grad[k] * grad[k];
      if (rate != 0.0) {
        const double m_hat = m[k] / correction1;
        const double v_hat = v[k] / correction2;
        values[k] -= rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
      }
      grad[k] = 0.0;
    }
  }
}

}  // namespace dmvcr
