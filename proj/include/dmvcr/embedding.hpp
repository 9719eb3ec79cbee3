#pragma once

#include <cstddef>
#include <span>

#include "dmvcr/tensor.hpp"

namespace dmvcr {

/// [L x d_w] matrix whose row t is table[ids[t]]. Differentiable w.r.t. the
/// [V x d_w] table. Throws IndexError for ids >= V.
Tensor embed_tokens(std::span<const std::size_t> ids, const Tensor& table);

}  // namespace dmvcr
