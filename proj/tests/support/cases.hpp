#pragma once

// Random fixtures shared by the unit and acceptance suites.

#include <random>

#include "dmvcr/encoder.hpp"
#include "dmvcr/fusion.hpp"
#include "support/oracles.hpp"

namespace cases {

inline std::size_t extent(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random mask with at least one valid entry.
inline dmvcr::Mask random_mask(std::mt19937_64& rng, std::size_t n) {
  dmvcr::Mask mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = extent(rng, 0, 3) != 0;
  mask[extent(rng, 0, n - 1)] = true;
  return mask;
}

inline dmvcr::LstmParams random_lstm(std::mt19937_64& rng, std::size_t input_dim,
                                     std::size_t hidden, double scale = 0.5) {
  auto p = dmvcr::LstmParams::zeros(input_dim, hidden);
  for (auto& t : p.tensors()) {
    const auto v = oracle::random_values(rng, t.numel(), scale);
    std::copy(v.begin(), v.end(), t.mutable_data().begin());
  }
  return p;
}

struct AttentionCase {
  dmvcr::Tensor attending;
  dmvcr::Tensor weight;
  dmvcr::HiddenSequence attended;
};

/// attending [rows x p], weight [p x q], attended [len x q] with a random mask.
inline AttentionCase random_attention(std::mt19937_64& rng, bool masked = true) {
  const std::size_t rows = extent(rng, 1, 5), p = extent(rng, 1, 6), q = extent(rng, 1, 6),
                    len = extent(rng, 1, 6);
  AttentionCase c;
  c.attending = oracle::random_tensor(rng, {rows, p});
  c.weight = oracle::random_tensor(rng, {p, q});
  c.attended.rows = oracle::random_tensor(rng, {len, q});
  c.attended.mask = masked ? random_mask(rng, len) : dmvcr::Mask(len, true);
  return c;
}

struct DictionaryCase {
  dmvcr::Tensor h;
  dmvcr::DictionaryMemory memory;
};

inline DictionaryCase random_dictionary(std::mt19937_64& rng) {
  const std::size_t width = extent(rng, 1, 8), size = extent(rng, 1, 8);
  return {oracle::random_tensor(rng, {1, width}, true, 2.0),
          {oracle::random_tensor(rng, {width, size})}};
}

}  // namespace cases
