#pragma once

#include <cstddef>

#include "dmvcr/fusion.hpp"
#include "dmvcr/tensor.hpp"

namespace dmvcr {

/// How the fused features are laid out as the encoder LSTM's input sequence.
enum class EncoderInput {
  /// Query-attended response rows, then object rows.
  kQueryThenObjects,
  /// Query-attended response rows twice (the literal reading of the encoder
  /// input formula); kept for comparison runs.
  kQueryTwice,
};

/// Trainable working memory: column k of `keys` ([d_e x k]) is one entry.
struct DictionaryMemory {
  Tensor keys;

  std::size_t width() const { return keys.dim(0); }
  std::size_t size() const { return keys.dim(1); }
};

struct DictionaryReadout {
  Tensor readout;  // 1 x d_e, the addressed mix of dictionary columns
  Tensor weights;  // 1 x k, softmax addressing weights
};

/// Final hidden state ([1 x d_e]) of a unidirectional LSTM over the fused rows.
Tensor encode_sequence(const LstmParams& params, const FusedFeatures& fused,
                       EncoderInput layout = EncoderInput::kQueryThenObjects);

/// weights = softmax(D^T h), readout = D * weights. `h` is a [1 x d_e] row.
DictionaryReadout dictionary_lookup(const Tensor& h, const DictionaryMemory& memory);

/// [1 x 2*d_e] concatenation of the encoder state and the memory readout.
Tensor combine_context(const Tensor& h, const Tensor& readout);

}  // namespace dmvcr
