#pragma once

#include <functional>

#include "dmvcr/tensor.hpp"

namespace dmvcr {

using ScalarFn = std::function<Tensor(const Tensor&)>;

/// Compares the reverse-mode gradient of `f` at `x` against central
/// differences with step `eps`. Returns
/// max_i |analytic_i - numeric_i| / max(1, |analytic_i|, |numeric_i|).
///
/// `x` must be a leaf with requires_grad. Its data is perturbed in place and
/// restored; its grad is left zeroed. Other leaves reachable from `f` get
/// their gradients accumulated once.
double finite_difference_check(const ScalarFn& f, Tensor x, double eps = 1e-5);

}  // namespace dmvcr
