#include "dmvcr/model.hpp"

#include <cmath>
#include <random>

#include "dmvcr/embedding.hpp"
#include "dmvcr/errors.hpp"
#include "dmvcr/ops.hpp"

namespace dmvcr {
namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::mt19937_64 stream_for(std::uint64_t seed, const std::string& name) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

Tensor glorot(std::size_t rows, std::size_t cols, std::uint64_t seed, const std::string& name) {
  auto rng = stream_for(seed, name);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = dist(rng);
  return Tensor::from({rows, cols}, std::move(values), true);
}

LstmParams init_lstm(std::size_t input_dim, std::size_t hidden, std::uint64_t seed,
                     const std::string& prefix) {
  LstmParams p = LstmParams::zeros(input_dim, hidden);
  const std::size_t fan_in = 2 * hidden + input_dim;
  p.w_input = glorot(fan_in, hidden, seed, prefix + ".w_input");
  p.w_output = glorot(fan_in, hidden, seed, prefix + ".w_output");
  p.w_forget = glorot(fan_in, hidden, seed, prefix + ".w_forget");
  p.w_cell = glorot(fan_in, hidden, seed, prefix + ".w_cell");
  return p;
}

void append_lstm(std::vector<NamedTensor>& out, const LstmParams& p, const std::string& prefix) {
  static const char* kNames[] = {"w_input", "w_output", "w_forget", "w_cell",
                                 "b_input", "b_output", "b_forget", "b_cell"};
  const auto tensors = p.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    out.push_back({prefix + "." + kNames[i], tensors[i], ParamGroup::kBase});
  }
}

Tensor deep_copy(const Tensor& t) {
  return Tensor::from(t.shape(), std::vector<double>(t.data().begin(), t.data().end()),
                      t.requires_grad());
}

LstmParams copy_lstm(const LstmParams& p) {
  return {deep_copy(p.w_input), deep_copy(p.w_output), deep_copy(p.w_forget),
          deep_copy(p.w_cell),  deep_copy(p.b_input),  deep_copy(p.b_output),
          deep_copy(p.b_forget), deep_copy(p.b_cell)};
}

Tensor objects_tensor(const Model& model, const TaskInstance& instance) {
  const std::size_t m = instance.objects.size();
  const std::size_t width = model.config().object_dim;
  if (m == 0) throw ContractError("instance has no objects");
  std::vector<double> values;
  values.reserve(m * width);
  for (const auto& o : instance.objects) {
    if (o.size() != width) {
      throw DimensionError("object feature width " + std::to_string(o.size()) +
                           " but the model expects " + std::to_string(width));
    }
    values.insert(values.end(), o.begin(), o.end());
  }
  return Tensor::from({m, width}, std::move(values));
}

HiddenSequence encode_text(const Model& model, const TaggedSequence& seq, const Tensor& objects) {
  const auto ids = model.vocab().encode(seq);
  Mask mask(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) mask[t] = ids[t] != Vocabulary::kPad;
  const Tensor embedded = embed_tokens(ids, model.params().embedding);
  return bilstm_forward(model.params().fusion, ground(embedded, seq.tags, objects, mask));
}

Tensor score_response(const Model& model, const Tensor& objects, const HiddenSequence& query,
                      const TaggedSequence& response) {
  const auto& p = model.params();
  const auto& cfg = model.config();
  const HiddenSequence resp = encode_text(model, response, objects);
  const AttentionOutput by_object = object_response_attention(objects, resp, p.attention);
  const AttentionOutput by_query = response_query_attention(resp, query, p.attention);
  const FusedFeatures fused{by_query.features, by_object.features, resp.mask,
                            Mask(objects.dim(0), true)};
  const Tensor h = encode_sequence(p.encoder, fused, cfg.encoder_input);
  const Tensor readout = cfg.dictionary_enabled ? dictionary_lookup(h, p.dictionary).readout
                                                : Tensor::zeros({1, cfg.encoder_hidden});
  const Tensor context = combine_context(h, readout);
  const Tensor hidden = tanh(add(matmul(context, p.head.w_hidden), p.head.b_hidden));
  return reshape(add(matmul(hidden, p.head.w_out), p.head.b_out), {1});
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* field) {
    if (v < 1) throw ConfigError(field, "must be >= 1");
  };
  positive(word_dim, "word_dim");
  positive(object_dim, "object_dim");
  positive(hidden_dim, "hidden_dim");
  positive(encoder_hidden, "encoder_hidden");
  positive(dict_size, "dict_size");
  positive(mlp_hidden, "mlp_hidden");
}

std::vector<NamedTensor> ModelParams::named() const {
  std::vector<NamedTensor> out;
  out.push_back({"embedding", embedding, ParamGroup::kBase});
  append_lstm(out, fusion.forward, "fusion.forward");
  append_lstm(out, fusion.backward, "fusion.backward");
  out.push_back({"attention.w_objects", attention.w_objects, ParamGroup::kBase});
  out.push_back({"attention.w_query", attention.w_query, ParamGroup::kBase});
  append_lstm(out, encoder, "encoder");
  out.push_back({"dictionary", dictionary.keys, ParamGroup::kDictionary});
  out.push_back({"head.w_hidden", head.w_hidden, ParamGroup::kBase});
  out.push_back({"head.b_hidden", head.b_hidden, ParamGroup::kBase});
  out.push_back({"head.w_out", head.w_out, ParamGroup::kBase});
  out.push_back({"head.b_out", head.b_out, ParamGroup::kBase});
  return out;
}

ModelParams init_params(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed) {
  config.validate();
  if (vocab_size == 0) throw ConfigError("vocab", "vocabulary is empty");
  const std::size_t grounded = config.word_dim + config.object_dim;
  const std::size_t fused = 2 * config.hidden_dim;

  ModelParams p;
  p.embedding = glorot(vocab_size, config.word_dim, seed, "embedding");
  p.fusion.forward = init_lstm(grounded, config.hidden_dim, seed, "fusion.forward");
  p.fusion.backward = init_lstm(grounded, config.hidden_dim, seed, "fusion.backward");
  p.attention.w_objects = glorot(config.object_dim, fused, seed, "attention.w_objects");
  p.attention.w_query = glorot(fused, fused, seed, "attention.w_query");
  p.encoder = init_lstm(fused, config.encoder_hidden, seed, "encoder");

  auto rng = stream_for(seed, "dictionary");
  std::normal_distribution<double> gauss(0.0,
                                         1.0 / std::sqrt(static_cast<double>(config.encoder_hidden)));
  std::vector<double> keys(config.encoder_hidden * config.dict_size);
  for (double& v : keys) v = gauss(rng);
  p.dictionary.keys = Tensor::from({config.encoder_hidden, config.dict_size}, std::move(keys), true);

  p.head.w_hidden = glorot(2 * config.encoder_hidden, config.mlp_hidden, seed, "head.w_hidden");
  p.head.b_hidden = Tensor::zeros({1, config.mlp_hidden}, true);
  p.head.w_out = config.zero_head_output ? Tensor::zeros({config.mlp_hidden, 1}, true)
                                         : glorot(config.mlp_hidden, 1, seed, "head.w_out");
  p.head.b_out = Tensor::zeros({1, 1}, true);
  return p;
}

Model::Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), params_(init_params(config_, vocab_.size(), seed)) {}

Model::Model(ModelConfig config, Vocabulary vocab, ModelParams params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
  config_.validate();
}

void Model::zero_grad() {
  for (auto& p : params_.named()) p.tensor.zero_grad();
}

Model Model::clone() const {
  ModelParams copy;
  copy.embedding = deep_copy(params_.embedding);
  copy.fusion = {copy_lstm(params_.fusion.forward), copy_lstm(params_.fusion.backward)};
  copy.attention = {deep_copy(params_.attention.w_objects), deep_copy(params_.attention.w_query)};
  copy.encoder = copy_lstm(params_.encoder);
  copy.dictionary = {deep_copy(params_.dictionary.keys)};
  copy.head = {deep_copy(params_.head.w_hidden), deep_copy(params_.head.b_hidden),
               deep_copy(params_.head.w_out), deep_copy(params_.head.b_out)};
  return Model(config_, vocab_, std::move(copy));
}

Tensor score_candidate(const Model& model, const TaskInstance& instance, std::size_t candidate) {
  if (candidate >= kNumCandidates) {
    throw IndexError("candidate " + std::to_string(candidate) + " out of range 0..3");
  }
  const Tensor objects = objects_tensor(model, instance);
  const HiddenSequence query = encode_text(model, instance.query, objects);
  return reshape(score_response(model, objects, query, instance.responses[candidate]), {});
}

Tensor score_candidates(const Model& model, const TaskInstance& instance) {
  const Tensor objects = objects_tensor(model, instance);
  const HiddenSequence query = encode_text(model, instance.query, objects);
  std::vector<Tensor> logits;
  logits.reserve(kNumCandidates);
  for (const auto& response : instance.responses) {
    logits.push_back(score_response(model, objects, query, response));
  }
  return concat(logits, 0);
}

Prediction predict_from_logits(std::span<const double> logits) {
  if (logits.size() != kNumCandidates) throw DimensionError("expected 4 logits");
  const Tensor probs =
      softmax(Tensor::from({kNumCandidates}, std::vector<double>(logits.begin(), logits.end())), 0);
  Prediction out;
  for (std::size_t c = 0; c < kNumCandidates; ++c) {
    out.probabilities[c] = probs.data()[c];
    if (logits[c] > logits[out.choice]) out.choice = c;
  }
  return out;
}

Prediction predict(const Model& model, const TaskInstance& instance) {
  NoGradGuard no_grad;
  const Tensor logits = score_candidates(model, instance);
  return predict_from_logits(logits.data());
}

Tensor instance_loss(const Model& model, const TaskInstance& instance) {
  return cross_entropy_logits(score_candidates(model, instance), instance.gold);
}

Tensor batch_loss(const Model& model, std::span<const TaskInstance> batch) {
  if (batch.empty()) throw ContractError("batch_loss: empty batch");
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  for (const auto& inst : batch) losses.push_back(reshape(instance_loss(model, inst), {1}));
  return reduce(ReduceOp::kMean, concat(losses, 0), 0);
}

double accuracy(const Model& model, std::span<const TaskInstance> instances) {
  if (instances.empty()) throw ContractError("accuracy of an empty set");
  std::size_t correct = 0;
  for (const auto& inst : instances) {
    if (predict(model, inst).choice == inst.gold) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

}  // namespace dmvcr
