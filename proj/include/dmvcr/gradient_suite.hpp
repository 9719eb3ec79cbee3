#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dmvcr/model.hpp"
#include "dmvcr/synthetic.hpp"

namespace dmvcr {

/// d_w=4, d_o=4, d_h=3, d_e=5, k=4, d_mlp=4, head not zeroed so that every
/// parameter carries gradient.
ModelConfig tiny_model_config();
/// A=3, R=2, feature width 4, up to 3 objects.
WorldConfig tiny_world_config();

struct GradientCheck {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return error < tolerance; }
};

struct GradientSuiteOptions {
  std::size_t seeds = 5;
  std::size_t max_extent = 8;
  double op_tolerance = 1e-4;
  double layer_tolerance = 1e-5;
  double model_tolerance = 1e-3;
};

/// Finite-difference checks of every differentiable op, the LSTM cell over a
/// 3-step rollout, both attentions, the dictionary lookup, and score_candidate
/// on the tiny config with respect to every parameter. One entry per check,
/// holding the worst error over seeds.
std::vector<GradientCheck> run_gradient_suite(const GradientSuiteOptions& options = {});

}  // namespace dmvcr
