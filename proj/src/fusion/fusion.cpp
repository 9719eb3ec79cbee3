#include "dmvcr/fusion.hpp"

#include <algorithm>

#include "dmvcr/errors.hpp"
#include "dmvcr/ops.hpp"

namespace dmvcr {
namespace {

constexpr double kMaskedScore = -1e30;

Mask full_mask(const Mask& mask, std::size_t length) {
  if (mask.empty()) return Mask(length, true);
  if (mask.size() != length) {
    throw DimensionError("mask of length " + std::to_string(mask.size()) + " for " +
                         std::to_string(length) + " rows");
  }
  return mask;
}

bool all_valid(const Mask& mask) {
  return std::all_of(mask.begin(), mask.end(), [](bool v) { return v; });
}

// Adds -1e30 to the columns whose mask entry is false.
Tensor mask_columns(const Tensor& scores, const Mask& mask, const char* what) {
  if (std::none_of(mask.begin(), mask.end(), [](bool v) { return v; })) {
    throw ContractError(std::string(what) + ": every attended position is masked");
  }
  if (all_valid(mask)) return scores;
  const std::size_t rows = scores.dim(0), cols = scores.dim(1);
  std::vector<double> bias(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (!mask[j]) bias[i * cols + j] = kMaskedScore;
    }
  }
  return add(scores, Tensor::from({rows, cols}, std::move(bias)));
}

AttentionOutput attend(const Tensor& attending, const Tensor& weight, const HiddenSequence& attended,
                       const char* what) {
  if (attending.rank() != 2 || weight.rank() != 2 || attended.rows.rank() != 2) {
    throw DimensionError(std::string(what) + ": operands must be matrices");
  }
  if (attending.dim(1) != weight.dim(0) || weight.dim(1) != attended.rows.dim(1)) {
    throw DimensionError(std::string(what) + ": cannot form bilinear scores from " +
                         to_string(attending.shape()) + ", " + to_string(weight.shape()) +
                         ", " + to_string(attended.rows.shape()));
  }
  const Mask mask = full_mask(attended.mask, attended.rows.dim(0));
  const Tensor scores = matmul(matmul(attending, weight), transpose(attended.rows));
  const Tensor weights = softmax(mask_columns(scores, mask, what), 1);
  return {matmul(weights, attended.rows), weights};
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden) {
  const std::size_t fan_in = 2 * hidden + input_dim;
  auto w = [&] { return Tensor::zeros({fan_in, hidden}, true); };
  auto b = [&] { return Tensor::zeros({1, hidden}, true); };
  return {w(), w(), w(), w(), b(), b(), b(), b()};
}

std::vector<Tensor> LstmParams::tensors() const {
  return {w_input, w_output, w_forget, w_cell, b_input, b_output, b_forget, b_cell};
}

GroundedSequence ground(const Tensor& embeddings, std::span<const std::optional<std::size_t>> tags,
                        const Tensor& objects, Mask mask) {
  if (embeddings.rank() != 2 || objects.rank() != 2) {
    throw DimensionError("ground: embeddings and objects must be matrices");
  }
  const std::size_t length = embeddings.dim(0);
  if (tags.size() != length) {
    throw DimensionError("ground: " + std::to_string(tags.size()) + " tags for " +
                         std::to_string(length) + " embedding rows");
  }
  mask = full_mask(mask, length);
  const std::size_t object_count = objects.dim(0), object_dim = objects.dim(1);

  // Row 0 of `table` is the zero block used by untagged positions.
  const Tensor table = concat({Tensor::zeros({1, object_dim}), objects}, 0);
  std::vector<std::size_t> rows(length, 0);
  for (std::size_t t = 0; t < length; ++t) {
    if (!tags[t]) continue;
    if (*tags[t] >= object_count) {
      throw IndexError("ground: tag " + std::to_string(*tags[t]) + " but only " +
                       std::to_string(object_count) + " objects");
    }
    rows[t] = *tags[t] + 1;
  }
  Tensor grounded = concat({embeddings, gather_rows(table, rows)}, 1);
  if (!all_valid(mask)) {
    const std::size_t width = grounded.dim(1);
    std::vector<double> keep(length * width, 1.0);
    for (std::size_t t = 0; t < length; ++t) {
      if (!mask[t]) std::fill_n(keep.begin() + t * width, width, 0.0);
    }
    grounded = mul(grounded, Tensor::from({length, width}, std::move(keep)));
  }
  return {grounded, std::move(mask)};
}

LstmState lstm_cell(const LstmParams& p, const Tensor& cell_prev, const Tensor& hidden_prev,
                    const Tensor& input) {
  const std::size_t hidden = p.hidden();
  const Shape state_shape{1, hidden};
  if (cell_prev.shape() != state_shape || hidden_prev.shape() != state_shape) {
    throw DimensionError("lstm_cell: state must be " + to_string(state_shape) + ", got " +
                         to_string(cell_prev.shape()) + " and " + to_string(hidden_prev.shape()));
  }
  if (input.rank() != 2 || input.dim(0) != 1 || input.dim(1) != p.input_dim()) {
    throw DimensionError("lstm_cell: input must be [1x" + std::to_string(p.input_dim()) +
                         "], got " + to_string(input.shape()));
  }
  const Tensor z = concat({cell_prev, hidden_prev, input}, 1);
  const Tensor in_gate = sigmoid(add(matmul(z, p.w_input), p.b_input));
  const Tensor out_gate = sigmoid(add(matmul(z, p.w_output), p.b_output));
  const Tensor forget_gate = sigmoid(add(matmul(z, p.w_forget), p.b_forget));
  const Tensor candidate = tanh(add(matmul(z, p.w_cell), p.b_cell));
  const Tensor cell = add(mul(forget_gate, cell_prev), mul(in_gate, candidate));
  return {cell, mul(out_gate, tanh(cell))};
}

std::vector<Tensor> lstm_scan(const LstmParams& params, const Tensor& inputs, const Mask& mask,
                              bool reverse) {
  if (inputs.rank() != 2) throw DimensionError("lstm_scan: inputs must be a matrix");
  const std::size_t length = inputs.dim(0);
  const Mask valid = full_mask(mask, length);
  std::vector<Tensor> out(length);
  LstmState state{Tensor::zeros({1, params.hidden()}), Tensor::zeros({1, params.hidden()})};
  for (std::size_t step = 0; step < length; ++step) {
    const std::size_t t = reverse ? length - 1 - step : step;
    if (!valid[t]) continue;
    state = lstm_cell(params, state.cell, state.hidden, slice(inputs, 0, t, t + 1));
    out[t] = state.hidden;
  }
  return out;
}

HiddenSequence bilstm_forward(const BiLstmParams& params, const GroundedSequence& grounded) {
  const std::size_t length = grounded.rows.dim(0);
  if (length == 0) throw ContractError("bilstm_forward: empty sequence");
  if (params.forward.hidden() != params.backward.hidden()) {
    throw DimensionError("bilstm_forward: directions disagree on hidden size");
  }
  const Mask mask = full_mask(grounded.mask, length);
  const auto forward = lstm_scan(params.forward, grounded.rows, mask, false);
  const auto backward = lstm_scan(params.backward, grounded.rows, mask, true);
  const std::size_t width = 2 * params.hidden();
  std::vector<Tensor> rows;
  rows.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    rows.push_back(mask[t] ? concat({forward[t], backward[t]}, 1) : Tensor::zeros({1, width}));
  }
  return {concat(rows, 0), mask};
}

AttentionOutput object_response_attention(const Tensor& objects, const HiddenSequence& response,
                                          const AttentionParams& params) {
  return attend(objects, params.w_objects, response, "object_response_attention");
}

AttentionOutput response_query_attention(const HiddenSequence& response,
                                         const HiddenSequence& query,
                                         const AttentionParams& params) {
  return attend(response.rows, params.w_query, query, "response_query_attention");
}

}  // namespace dmvcr
