#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmvcr/dataset.hpp"
#include "dmvcr/encoder.hpp"
#include "dmvcr/fusion.hpp"
#include "dmvcr/vocabulary.hpp"

namespace dmvcr {

struct ModelConfig {
  std::size_t word_dim = 32;
  std::size_t object_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t encoder_hidden = 64;
  std::size_t dict_size = 64;
  std::size_t mlp_hidden = 64;
  /// When false the memory readout is replaced by zeros of the same width, so
  /// the head keeps its shape.
  bool dictionary_enabled = true;
  EncoderInput encoder_input = EncoderInput::kQueryThenObjects;
  /// Start the head's output layer at zero so every candidate scores 0.
  bool zero_head_output = true;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Optimizer groups; the dictionary trains at its own learning rate.
enum class ParamGroup { kDictionary, kBase };

struct NamedTensor {
  std::string name;
  Tensor tensor;
  ParamGroup group;
};

/// Two-layer perceptron: tanh(ctx W1 + b1) W2 + b2.
struct HeadParams {
  Tensor w_hidden, b_hidden, w_out, b_out;
};

struct ModelParams {
  Tensor embedding;  // V x d_w
  BiLstmParams fusion;
  AttentionParams attention;
  LstmParams encoder;
  DictionaryMemory dictionary;  // d_e x k
  HeadParams head;

  /// Every trainable tensor, in a fixed order, tagged with its group.
  std::vector<NamedTensor> named() const;
};

/// Glorot-uniform weights, zero biases, N(0, 1/d_e) dictionary. Each tensor
/// draws from its own stream derived from (seed, name), so toggling one part
/// of the model never shifts another part's initialization.
ModelParams init_params(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed);

/// Parameters are tensor handles, so copying a Model aliases its weights;
/// use clone() for an independent copy.
class Model {
 public:
  Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed);
  Model(ModelConfig config, Vocabulary vocab, ModelParams params);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }

  void zero_grad();
  Model clone() const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ModelParams params_;
};

/// Scalar logit for one response: embed, ground, BiLSTM, both attentions,
/// encoder, dictionary readout, head.
Tensor score_candidate(const Model& model, const TaskInstance& instance, std::size_t candidate);

/// Logits for all four responses as a length-4 vector (query encoded once).
Tensor score_candidates(const Model& model, const TaskInstance& instance);

struct Prediction {
  std::array<double, kNumCandidates> probabilities{};
  std::size_t choice = 0;
};

/// Softmax over the four logits; ties go to the lowest index.
Prediction predict(const Model& model, const TaskInstance& instance);
Prediction predict_from_logits(std::span<const double> logits);

/// 4-way cross-entropy against instance.gold.
Tensor instance_loss(const Model& model, const TaskInstance& instance);

/// Mean of instance_loss over `batch` as one graph.
Tensor batch_loss(const Model& model, std::span<const TaskInstance> batch);

/// Fraction of instances whose prediction equals gold.
double accuracy(const Model& model, std::span<const TaskInstance> instances);

}  // namespace dmvcr
