#include "dmvcr/gradient_suite.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>

#include "dmvcr/gradcheck.hpp"
#include "dmvcr/ops.hpp"

namespace dmvcr {
namespace {

class Checks {
 public:
  explicit Checks(const GradientSuiteOptions& options) : options_(options) {}

  void record(const std::string& name, double error, double tolerance) {
    auto [it, fresh] = index_.emplace(name, out_.size());
    if (fresh) out_.push_back({name, error, tolerance});
    auto& entry = out_[it->second];
    entry.error = std::max(entry.error, error);
  }

  std::vector<GradientCheck> take() { return std::move(out_); }
  const GradientSuiteOptions& options() const { return options_; }

 private:
  GradientSuiteOptions options_;
  std::vector<GradientCheck> out_;
  std::map<std::string, std::size_t> index_;
};

Tensor random_tensor(std::mt19937_64& rng, Shape shape, bool grad = true) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> values(numel(shape));
  for (double& v : values) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(values), grad);
}

std::size_t extent(std::mt19937_64& rng, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(1, hi)(rng);
}

using UnaryOp = std::function<Tensor(const Tensor&)>;

// sum(op(x) * R) for a fixed random R, so every output element contributes.
double check_projected(std::mt19937_64& rng, const UnaryOp& op, const Tensor& x) {
  Shape out_shape;
  {
    NoGradGuard no_grad;
    out_shape = op(x).shape();
  }
  const Tensor weights = random_tensor(rng, out_shape, false);
  return finite_difference_check([&](const Tensor& v) { return sum(mul(op(v), weights)); }, x);
}

void check_ops(Checks& checks, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t hi = checks.options().max_extent;
  const double tol = checks.options().op_tolerance;
  const std::size_t m = extent(rng, hi), n = extent(rng, hi), p = extent(rng, hi);
  const Tensor a = random_tensor(rng, {m, n});
  const Tensor b = random_tensor(rng, {n, p});
  const Tensor c = random_tensor(rng, {m, n});

  checks.record("matmul", std::max(check_projected(rng, [&](const Tensor& x) { return matmul(x, b); }, a),
                                   check_projected(rng, [&](const Tensor& x) { return matmul(a, x); }, b)),
                tol);
  const std::pair<const char*, ElementwiseOp> binary[] = {
      {"add", ElementwiseOp::kAdd}, {"sub", ElementwiseOp::kSub}, {"mul", ElementwiseOp::kMul}};
  for (const auto& [name, op] : binary) {
    checks.record(name,
                  std::max(check_projected(rng, [&](const Tensor& x) { return elementwise(op, x, c); }, a),
                           check_projected(rng, [&](const Tensor& x) { return elementwise(op, a, x); }, c)),
                  tol);
  }
  checks.record("scale", check_projected(rng, [](const Tensor& x) { return scale(x, -1.7); }, a), tol);
  checks.record("sigmoid", check_projected(rng, [](const Tensor& x) { return sigmoid(x); }, a), tol);
  checks.record("tanh", check_projected(rng, [](const Tensor& x) { return tanh(x); }, a), tol);
  for (std::size_t axis : {0u, 1u}) {
    checks.record("softmax", check_projected(rng, [=](const Tensor& x) { return softmax(x, axis); }, a), tol);
    checks.record("reduce_sum", check_projected(rng, [=](const Tensor& x) { return reduce(ReduceOp::kSum, x, axis); }, a), tol);
    checks.record("reduce_mean", check_projected(rng, [=](const Tensor& x) { return reduce(ReduceOp::kMean, x, axis); }, a), tol);
  }
  checks.record("concat",
                std::max(check_projected(rng, [&](const Tensor& x) { return concat({x, c}, 1); }, a),
                         check_projected(rng, [&](const Tensor& x) { return concat({c, x}, 0); }, a)),
                tol);
  checks.record("slice", check_projected(rng, [&](const Tensor& x) { return slice(x, 1, n / 2, n); }, a), tol);
  checks.record("transpose", check_projected(rng, [](const Tensor& x) { return transpose(x); }, a), tol);
  checks.record("reshape", check_projected(rng, [&](const Tensor& x) { return reshape(x, {m * n}); }, a), tol);
  const std::vector<std::size_t> rows = {m - 1, 0, m - 1};
  checks.record("gather_rows", check_projected(rng, [&](const Tensor& x) { return gather_rows(x, rows); }, a), tol);
  checks.record("sum", finite_difference_check([](const Tensor& x) { return sum(x); }, a), tol);
  const Tensor logits = random_tensor(rng, {p + 1});
  checks.record("cross_entropy_logits",
                finite_difference_check([&](const Tensor& x) { return cross_entropy_logits(x, p); }, logits),
                tol);
}

LstmParams random_lstm(std::mt19937_64& rng, std::size_t input_dim, std::size_t hidden) {
  LstmParams p = LstmParams::zeros(input_dim, hidden);
  for (auto& t : p.tensors()) {
    const Tensor r = random_tensor(rng, t.shape());
    std::copy(r.data().begin(), r.data().end(), t.mutable_data().begin());
  }
  return p;
}

void check_layers(Checks& checks, std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1000);
  const double tol = checks.options().layer_tolerance;

  const LstmParams lstm = random_lstm(rng, 3, 2);
  const Tensor inputs = random_tensor(rng, {3, 3});
  const Tensor lstm_probe = random_tensor(rng, {1, 2}, false);
  auto rollout = [&](const Tensor&) {
    LstmState s{Tensor::zeros({1, 2}), Tensor::zeros({1, 2})};
    for (std::size_t t = 0; t < 3; ++t) s = lstm_cell(lstm, s.cell, s.hidden, slice(inputs, 0, t, t + 1));
    return sum(mul(add(s.hidden, s.cell), lstm_probe));
  };
  double lstm_error = finite_difference_check(rollout, inputs);
  for (const auto& t : lstm.tensors()) lstm_error = std::max(lstm_error, finite_difference_check(rollout, t));
  checks.record("lstm_cell", lstm_error, tol);

  const std::size_t m = extent(rng, 4), len = extent(rng, 5), lq = extent(rng, 5);
  const std::size_t d_o = extent(rng, 4), width = 2 * extent(rng, 3);
  const Tensor objects = random_tensor(rng, {m, d_o});
  const HiddenSequence response{random_tensor(rng, {len, width}), Mask(len, true)};
  Mask query_mask(lq, true);
  if (lq > 1) query_mask[lq - 1] = false;
  const HiddenSequence query{random_tensor(rng, {lq, width}), query_mask};
  const AttentionParams att{random_tensor(rng, {d_o, width}), random_tensor(rng, {width, width})};

  const Tensor object_probe = random_tensor(rng, {m, width}, false);
  auto object_side = [&](const Tensor&) {
    return sum(mul(object_response_attention(objects, response, att).features, object_probe));
  };
  double object_error = 0.0;
  for (const Tensor& x : {objects, response.rows, att.w_objects}) {
    object_error = std::max(object_error, finite_difference_check(object_side, x));
  }
  checks.record("object_response_attention", object_error, tol);

  const Tensor query_probe = random_tensor(rng, {len, width}, false);
  auto query_side = [&](const Tensor&) {
    return sum(mul(response_query_attention(response, query, att).features, query_probe));
  };
  double query_error = 0.0;
  for (const Tensor& x : {response.rows, query.rows, att.w_query}) {
    query_error = std::max(query_error, finite_difference_check(query_side, x));
  }
  checks.record("response_query_attention", query_error, tol);

  const std::size_t d_e = extent(rng, 6), k = extent(rng, 6);
  const Tensor h = random_tensor(rng, {1, d_e});
  const DictionaryMemory memory{random_tensor(rng, {d_e, k})};
  const Tensor dict_probe = random_tensor(rng, {1, d_e}, false);
  auto lookup = [&](const Tensor&) { return sum(mul(dictionary_lookup(h, memory).readout, dict_probe)); };
  checks.record("dictionary_lookup",
                std::max(finite_difference_check(lookup, h), finite_difference_check(lookup, memory.keys)),
                tol);
}

void check_model(Checks& checks, std::uint64_t seed) {
  const SyntheticWorld world(tiny_world_config());
  const auto instances = generate_synthetic(world, 2, seed);
  const Vocabulary vocab = build_vocab(instances, world.config().max_objects);
  const Model model(tiny_model_config(), vocab, seed);
  const auto& inst = instances.front();
  const std::size_t candidate = (inst.gold + 1) % kNumCandidates;
  auto score = [&](const Tensor&) { return score_candidate(model, inst, candidate); };
  double error = 0.0;
  for (auto& named : model.params().named()) {
    error = std::max(error, finite_difference_check(score, named.tensor));
  }
  checks.record("score_candidate", error, checks.options().model_tolerance);
}

}  // namespace

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.word_dim = 4;
  c.object_dim = 4;
  c.hidden_dim = 3;
  c.encoder_hidden = 5;
  c.dict_size = 4;
  c.mlp_hidden = 4;
  c.zero_head_output = false;
  return c;
}

WorldConfig tiny_world_config() {
  WorldConfig w;
  w.attributes = 3;
  w.relations = 2;
  w.feature_dim = 4;
  w.max_objects = 3;
  w.max_filler = 1;
  return w;
}

std::vector<GradientCheck> run_gradient_suite(const GradientSuiteOptions& options) {
  Checks checks(options);
  for (std::uint64_t seed = 1; seed <= options.seeds; ++seed) {
    check_ops(checks, seed);
    check_layers(checks, seed);
    check_model(checks, seed);
  }
  return checks.take();
}

}  // namespace dmvcr
