#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dmvcr/tensor.hpp"

namespace dmvcr {

/// Validity flags for the rows of a padded sequence (true = real token).
using Mask = std::vector<bool>;

/// Gate weights act on the row vector [c_{t-1}, h_{t-1}, x_t], so each weight
/// is [(2*hidden + input_dim) x hidden] and each bias is [1 x hidden].
struct LstmParams {
  Tensor w_input, w_output, w_forget, w_cell;
  Tensor b_input, b_output, b_forget, b_cell;

  /// All-zero parameters that require gradients.
  static LstmParams zeros(std::size_t input_dim, std::size_t hidden);

  std::size_t hidden() const { return w_input.dim(1); }
  std::size_t input_dim() const { return w_input.dim(0) - 2 * hidden(); }
  std::vector<Tensor> tensors() const;
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  std::size_t hidden() const { return forward.hidden(); }
};

/// Bilinear attention weights: w_objects is [d_o x 2*d_h] (object-response),
/// w_query is [2*d_h x 2*d_h] (response-query).
struct AttentionParams {
  Tensor w_objects;
  Tensor w_query;
};

/// Token embeddings with the referenced object feature appended per row.
struct GroundedSequence {
  Tensor rows;  // L x (d_w + d_o)
  Mask mask;
};

/// Per-position BiLSTM output, forward half then backward half.
struct HiddenSequence {
  Tensor rows;  // L x 2*d_h
  Mask mask;
};

struct LstmState {
  Tensor cell;    // 1 x hidden
  Tensor hidden;  // 1 x hidden
};

struct AttentionOutput {
  Tensor features;  // one row per attending position
  Tensor weights;   // rows x attended positions; masked entries are exactly 0
};

struct FusedFeatures {
  Tensor query_features;   // L_r x 2*d_h, response positions attending over the query
  Tensor object_features;  // m x 2*d_h, objects attending over the response
  Mask query_mask;
  Mask object_mask;
};

/// Row t = concat(embedding_t, objects[tag_t]) or concat(embedding_t, 0) when
/// untagged. Rows with a false mask entry are zeroed. An empty mask means all
/// rows are valid.
GroundedSequence ground(const Tensor& embeddings, std::span<const std::optional<std::size_t>> tags,
                        const Tensor& objects, Mask mask = {});

/// One step of the peephole-style cell: every gate reads [c_{t-1}, h_{t-1}, x_t].
LstmState lstm_cell(const LstmParams& params, const Tensor& cell_prev, const Tensor& hidden_prev,
                    const Tensor& input);

/// Runs the cell over the rows of `inputs` from a zero state, forward or in
/// reverse. Masked rows are skipped (no state update) and yield an undefined
/// tensor in the result, which is indexed by row.
std::vector<Tensor> lstm_scan(const LstmParams& params, const Tensor& inputs, const Mask& mask,
                              bool reverse);

/// Bidirectional pass; masked rows of the output are exactly zero and do not
/// depend on the masked input rows.
HiddenSequence bilstm_forward(const BiLstmParams& params, const GroundedSequence& grounded);

/// For every object i: softmax_j(o_i W h_rj) over valid response positions,
/// then the weighted sum of response rows.
AttentionOutput object_response_attention(const Tensor& objects, const HiddenSequence& response,
                                          const AttentionParams& params);

/// For every response position i: softmax_j(h_ri W h_qj) over valid query
/// positions, then the weighted sum of query rows.
AttentionOutput response_query_attention(const HiddenSequence& response,
                                         const HiddenSequence& query,
                                         const AttentionParams& params);

}  // namespace dmvcr
