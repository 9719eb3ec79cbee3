#include <doctest.h>

#include <cmath>
#include <random>

#include "dmvcr/errors.hpp"
#include "dmvcr/gradcheck.hpp"
#include "dmvcr/ops.hpp"
#include "support/cases.hpp"
#include "support/oracles.hpp"

using namespace dmvcr;

namespace {

FusedFeatures random_fused(std::mt19937_64& rng, std::size_t query_rows, std::size_t object_rows,
                           std::size_t width) {
  return {oracle::random_tensor(rng, {query_rows, width}),
          oracle::random_tensor(rng, {object_rows, width}), Mask(query_rows, true),
          Mask(object_rows, true)};
}

}  // namespace

TEST_CASE("encode_sequence examples") {
  std::mt19937_64 rng(2);
  const auto fused = random_fused(rng, 3, 2, 4);
  const Tensor zero_h = encode_sequence(LstmParams::zeros(4, 5), fused);
  CHECK(zero_h.shape() == Shape{1, 5});
  for (double v : zero_h.data()) CHECK(v == 0.0);

  const auto p = cases::random_lstm(rng, 4, 5);
  const FusedFeatures one{oracle::random_tensor(rng, {1, 4}), Tensor::zeros({0, 4}), {}, {}};
  const Tensor h = encode_sequence(p, one);
  const Tensor zero_state = Tensor::zeros({1, 5});
  const Tensor expected = lstm_cell(p, zero_state, zero_state, one.query_features).hidden;
  for (std::size_t j = 0; j < 5; ++j) CHECK(h.at(0, j) == expected.at(0, j));

  // The default layout reads query rows then object rows; the other reads the query twice.
  auto scan_last = [&](const Tensor& rows) {
    LstmState s{zero_state, zero_state};
    for (std::size_t t = 0; t < rows.dim(0); ++t) s = lstm_cell(p, s.cell, s.hidden, slice(rows, 0, t, t + 1));
    return s.hidden;
  };
  const Tensor both = encode_sequence(p, fused);
  const Tensor ref_both = scan_last(concat({fused.query_features, fused.object_features}, 0));
  const Tensor twice = encode_sequence(p, fused, EncoderInput::kQueryTwice);
  const Tensor ref_twice = scan_last(concat({fused.query_features, fused.query_features}, 0));
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(both.at(0, j) == ref_both.at(0, j));
    CHECK(twice.at(0, j) == ref_twice.at(0, j));
  }

  FusedFeatures empty{Tensor::zeros({2, 4}), Tensor::zeros({0, 4}), Mask(2, false), {}};
  CHECK_THROWS_AS(encode_sequence(p, empty), ContractError);
  FusedFeatures ragged{Tensor::zeros({2, 4}), Tensor::zeros({2, 3}), {}, {}};
  CHECK_THROWS_AS(encode_sequence(p, ragged), DimensionError);
}

TEST_CASE("encode_sequence gradients on a 4-row input") {
  std::mt19937_64 rng(3);
  const auto p = cases::random_lstm(rng, 3, 4);
  const auto fused = random_fused(rng, 2, 2, 3);
  const Tensor probe = oracle::random_tensor(rng, {1, 4}, false);
  auto f = [&](const Tensor&) { return sum(mul(encode_sequence(p, fused), probe)); };
  for (const auto& t : p.tensors()) CHECK(finite_difference_check(f, t) < 1e-5);
  CHECK(finite_difference_check(f, fused.query_features) < 1e-5);
  CHECK(finite_difference_check(f, fused.object_features) < 1e-5);
}

TEST_CASE("dictionary lookup examples") {
  const DictionaryMemory eye{Tensor::from({2, 2}, {1, 0, 0, 1}, true)};
  const auto sym = dictionary_lookup(Tensor::from({1, 2}, {0.8, 0.8}), eye);
  for (double w : sym.weights.data()) CHECK(w == 0.5);
  for (double v : sym.readout.data()) CHECK(v == 0.5);

  const auto peaked = dictionary_lookup(Tensor::from({1, 2}, {10.0, 0.0}), eye);
  const double alpha = 1.0 / (1.0 + std::exp(-10.0));
  CHECK(peaked.weights.at(0, 0) == doctest::Approx(alpha).epsilon(1e-14));
  CHECK(peaked.weights.at(0, 0) == doctest::Approx(0.9999546).epsilon(1e-7));
  CHECK(peaked.readout.at(0, 0) == doctest::Approx(alpha).epsilon(1e-14));
  CHECK(peaked.readout.at(0, 1) == doctest::Approx(1.0 - alpha).epsilon(1e-10));

  CHECK_THROWS_AS(dictionary_lookup(Tensor::zeros({1, 3}), eye), DimensionError);
}

TEST_CASE("dictionary lookup matches the oracle") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 100; ++n) {
    const auto c = cases::random_dictionary(rng);
    const auto got = dictionary_lookup(c.h, c.memory);
    const auto expected = oracle::dictionary_lookup(
        std::vector<double>(c.h.data().begin(), c.h.data().end()), oracle::to_matrix(c.memory.keys));
    double total = 0.0;
    for (std::size_t k = 0; k < c.memory.size(); ++k) {
      CHECK(std::abs(got.weights.at(0, k) - expected.weights[k]) <= 1e-12);
      total += got.weights.at(0, k);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < c.memory.width(); ++i) {
      CHECK(std::abs(got.readout.at(0, i) - expected.readout[i]) <= 1e-12);
    }
  }
}

TEST_CASE("dictionary readout lies in the convex hull of the columns") {
  std::mt19937_64 rng(6);
  for (int n = 0; n < 50; ++n) {
    const Tensor h = oracle::random_tensor(rng, {1, 4}, false, 3.0);
    const DictionaryMemory d{oracle::random_tensor(rng, {4, 5})};
    const auto out = dictionary_lookup(h, d);
    for (std::size_t i = 0; i < 4; ++i) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t k = 0; k < 5; ++k) {
        lo = std::min(lo, d.keys.at(i, k));
        hi = std::max(hi, d.keys.at(i, k));
      }
      CHECK(out.readout.at(0, i) >= lo - 1e-12);
      CHECK(out.readout.at(0, i) <= hi + 1e-12);
    }
  }
}

TEST_CASE("dictionary addressing argmax is scale invariant") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 30; ++n) {
    const auto values = oracle::random_values(rng, 6);
    const DictionaryMemory d{oracle::random_tensor(rng, {6, 5})};
    auto argmax = [&](double s) {
      std::vector<double> scaled = values;
      for (double& v : scaled) v *= s;
      const auto w = dictionary_lookup(Tensor::from({1, 6}, scaled), d).weights;
      return std::max_element(w.data().begin(), w.data().end()) - w.data().begin();
    };
    CHECK(argmax(1.0) == argmax(0.5));
    CHECK(argmax(1.0) == argmax(4.0));
  }
}

TEST_CASE("dictionary gradients") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const auto c = cases::random_dictionary(rng);
    const Tensor probe = oracle::random_tensor(rng, {1, c.memory.width()}, false);
    auto f = [&](const Tensor&) { return sum(mul(dictionary_lookup(c.h, c.memory).readout, probe)); };
    CHECK(finite_difference_check(f, c.memory.keys) < 1e-5);
    CHECK(finite_difference_check(f, c.h) < 1e-5);
  }
}

TEST_CASE("combine_context examples") {
  const Tensor h = Tensor::zeros({1, 3});
  const Tensor r = Tensor::from({1, 3}, {1, 2, 3});
  const Tensor ctx = combine_context(h, r);
  CHECK(ctx.shape() == Shape{1, 6});
  CHECK(std::vector<double>(ctx.data().begin(), ctx.data().end()) ==
        std::vector<double>{0, 0, 0, 1, 2, 3});
  CHECK_THROWS_AS(combine_context(h, Tensor::zeros({1, 2})), DimensionError);
}
