#include "dmvcr/encoder.hpp"

#include <algorithm>

#include "dmvcr/errors.hpp"
#include "dmvcr/ops.hpp"

namespace dmvcr {
namespace {

Mask or_default(const Mask& mask, std::size_t rows) {
  return mask.empty() ? Mask(rows, true) : mask;
}

}  // namespace

Tensor encode_sequence(const LstmParams& params, const FusedFeatures& fused, EncoderInput layout) {
  const Tensor& first = fused.query_features;
  const Tensor& second =
      layout == EncoderInput::kQueryThenObjects ? fused.object_features : fused.query_features;
  if (first.rank() != 2 || second.rank() != 2 || first.dim(1) != second.dim(1)) {
    throw DimensionError("encode_sequence: fused features disagree in width: " +
                         to_string(first.shape()) + " vs " + to_string(second.shape()));
  }
  Mask mask = or_default(fused.query_mask, first.dim(0));
  const Mask tail = layout == EncoderInput::kQueryThenObjects
                        ? or_default(fused.object_mask, second.dim(0))
                        : mask;
  mask.insert(mask.end(), tail.begin(), tail.end());
  if (mask.size() != first.dim(0) + second.dim(0)) {
    throw DimensionError("encode_sequence: masks do not match feature rows");
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool v) { return v; })) {
    throw ContractError("encode_sequence: empty fused sequence");
  }

  const Tensor inputs = concat({first, second}, 0);
  const auto states = lstm_scan(params, inputs, mask, false);
  for (auto it = states.rbegin(); it != states.rend(); ++it) {
    if (it->defined()) return *it;
  }
  throw ContractError("encode_sequence: empty fused sequence");
}

DictionaryReadout dictionary_lookup(const Tensor& h, const DictionaryMemory& memory) {
  if (h.rank() != 2 || h.dim(0) != 1 || h.dim(1) != memory.width()) {
    throw DimensionError("dictionary_lookup: state " + to_string(h.shape()) +
                         " does not match dictionary " + to_string(memory.keys.shape()));
  }
  // (D^T h)^T = h D, kept as a row.
  const Tensor weights = softmax(matmul(h, memory.keys), 1);
  return {matmul(weights, transpose(memory.keys)), weights};
}

Tensor combine_context(const Tensor& h, const Tensor& readout) {
  if (h.shape() != readout.shape()) {
    throw DimensionError("combine_context: " + to_string(h.shape()) + " vs " +
                         to_string(readout.shape()));
  }
  return concat({h, readout}, 1);
}

}  // namespace dmvcr
