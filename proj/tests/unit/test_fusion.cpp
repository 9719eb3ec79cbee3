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

using Tags = std::vector<std::optional<std::size_t>>;

std::vector<double> row(const Tensor& t, std::size_t r) {
  std::vector<double> out(t.dim(1));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = t.at(r, j);
  return out;
}

void check_attention_against_oracle(const cases::AttentionCase& c, const AttentionOutput& got) {
  const auto expected = oracle::bilinear_attention(
      oracle::to_matrix(c.attending), oracle::to_matrix(c.weight),
      oracle::to_matrix(c.attended.rows), c.attended.mask);
  for (std::size_t i = 0; i < c.attending.dim(0); ++i) {
    for (std::size_t j = 0; j < c.attended.rows.dim(1); ++j) {
      CHECK(std::abs(got.features.at(i, j) - expected.features[i][j]) <= 1e-12);
    }
    for (std::size_t j = 0; j < c.attended.rows.dim(0); ++j) {
      CHECK(std::abs(got.weights.at(i, j) - expected.weights[i][j]) <= 1e-12);
    }
  }
}

}  // namespace

TEST_CASE("ground examples") {
  std::mt19937_64 rng(1);
  const Tensor emb = oracle::random_tensor(rng, {3, 4});
  const Tensor objects = oracle::random_tensor(rng, {2, 5});
  const auto untagged = ground(emb, Tags(3), objects);
  CHECK(untagged.rows.shape() == Shape{3, 9});
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(untagged.rows.at(t, j) == emb.at(t, j));
    for (std::size_t j = 4; j < 9; ++j) CHECK(untagged.rows.at(t, j) == 0.0);
  }

  const auto tagged = ground(emb, Tags{std::nullopt, 1, 0}, objects);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(tagged.rows.at(1, 4 + j) == objects.at(1, j));
    CHECK(tagged.rows.at(2, 4 + j) == objects.at(0, j));
  }

  const auto masked = ground(emb, Tags{1, 1, 1}, objects, Mask{true, false, true});
  for (std::size_t j = 0; j < 9; ++j) CHECK(masked.rows.at(1, j) == 0.0);

  CHECK_THROWS_AS(ground(emb, Tags{2, std::nullopt, std::nullopt}, objects), IndexError);
  CHECK_THROWS_AS(ground(emb, Tags(2), objects), DimensionError);
}

TEST_CASE("lstm_cell with zero parameters") {
  const auto p = LstmParams::zeros(3, 2);
  const Tensor zero = Tensor::zeros({1, 2});
  const auto s = lstm_cell(p, zero, zero, Tensor::from({1, 3}, {0.4, -1.0, 2.0}));
  for (double v : s.cell.data()) CHECK(v == 0.0);
  for (double v : s.hidden.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm_cell forget gate saturates open") {
  auto p = LstmParams::zeros(3, 2);
  std::fill(p.b_forget.mutable_data().begin(), p.b_forget.mutable_data().end(), 20.0);
  const Tensor prev = Tensor::from({1, 2}, {0.7, -1.3});
  const auto s = lstm_cell(p, prev, Tensor::zeros({1, 2}), Tensor::from({1, 3}, {1, 2, 3}));
  CHECK(s.cell.at(0, 0) == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(s.cell.at(0, 1) == doctest::Approx(-1.3).epsilon(1e-8));
}

TEST_CASE("lstm_cell 3-step rollout gradients") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const auto p = cases::random_lstm(rng, 3, 2);
    const Tensor inputs = oracle::random_tensor(rng, {3, 3});
    const Tensor probe = oracle::random_tensor(rng, {1, 2}, false);
    auto rollout = [&] {
      LstmState s{Tensor::zeros({1, 2}), Tensor::zeros({1, 2})};
      for (std::size_t t = 0; t < 3; ++t) s = lstm_cell(p, s.cell, s.hidden, slice(inputs, 0, t, t + 1));
      return sum(mul(add(s.hidden, s.cell), probe));
    };
    for (const auto& t : p.tensors()) {
      CHECK(finite_difference_check([&](const Tensor&) { return rollout(); }, t) < 1e-5);
    }
    CHECK(finite_difference_check([&](const Tensor&) { return rollout(); }, inputs) < 1e-5);
  }
}

TEST_CASE("lstm_cell shape errors") {
  const auto p = LstmParams::zeros(3, 2);
  CHECK_THROWS_AS(lstm_cell(p, Tensor::zeros({1, 3}), Tensor::zeros({1, 2}), Tensor::zeros({1, 3})),
                  DimensionError);
  CHECK_THROWS_AS(lstm_cell(p, Tensor::zeros({1, 2}), Tensor::zeros({1, 2}), Tensor::zeros({1, 4})),
                  DimensionError);
}

TEST_CASE("bilstm examples") {
  std::mt19937_64 rng(4);
  BiLstmParams zero{LstmParams::zeros(4, 3), LstmParams::zeros(4, 3)};
  const auto out = bilstm_forward(zero, {oracle::random_tensor(rng, {5, 4}), Mask(5, true)});
  CHECK(out.rows.shape() == Shape{5, 6});
  for (double v : out.rows.data()) CHECK(v == 0.0);

  // A single row: each half is one cell application on the same input.
  BiLstmParams p{cases::random_lstm(rng, 4, 3), cases::random_lstm(rng, 4, 3)};
  const Tensor x = oracle::random_tensor(rng, {1, 4});
  const auto single = bilstm_forward(p, {x, {}});
  const Tensor zero_state = Tensor::zeros({1, 3});
  const auto f = lstm_cell(p.forward, zero_state, zero_state, x).hidden;
  const auto b = lstm_cell(p.backward, zero_state, zero_state, x).hidden;
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(single.rows.at(0, j) == f.at(0, j));
    CHECK(single.rows.at(0, 3 + j) == b.at(0, j));
  }
  CHECK_THROWS_AS(bilstm_forward(p, {Tensor::zeros({0, 4}), {}}), ContractError);
}

TEST_CASE("bilstm is mirror symmetric on palindromes") {
  std::mt19937_64 rng(8);
  const auto dir = cases::random_lstm(rng, 3, 4);
  const BiLstmParams p{dir, dir};
  const auto a = oracle::random_values(rng, 3), b = oracle::random_values(rng, 3),
             c = oracle::random_values(rng, 3);
  std::vector<double> values;
  for (const auto* r : {&a, &b, &c, &b, &a}) values.insert(values.end(), r->begin(), r->end());
  const auto out = bilstm_forward(p, {Tensor::from({5, 3}, values), {}});
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(out.rows.at(t, j) == out.rows.at(4 - t, 4 + j));
  }
}

TEST_CASE("bilstm ignores masked rows") {
  std::mt19937_64 rng(12);
  BiLstmParams p{cases::random_lstm(rng, 3, 2), cases::random_lstm(rng, 3, 2)};
  const Mask mask{true, false, true, false};
  auto values = oracle::random_values(rng, 12);
  const auto first = bilstm_forward(p, {Tensor::from({4, 3}, values), mask});
  for (std::size_t j = 3; j < 6; ++j) values[j] = 50.0;
  for (std::size_t j = 9; j < 12; ++j) values[j] = -7.0;
  const auto second = bilstm_forward(p, {Tensor::from({4, 3}, values), mask});
  CHECK(std::vector<double>(first.rows.data().begin(), first.rows.data().end()) ==
        std::vector<double>(second.rows.data().begin(), second.rows.data().end()));
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(first.rows.at(1, j) == 0.0);
    CHECK(first.rows.at(3, j) == 0.0);
  }
  // Equivalent to running on the valid rows alone.
  const auto compact = bilstm_forward(
      p, {Tensor::from({2, 3}, {values[0], values[1], values[2], values[6], values[7], values[8]}), {}});
  CHECK(row(first.rows, 0) == row(compact.rows, 0));
  CHECK(row(first.rows, 2) == row(compact.rows, 1));
}

TEST_CASE("object-response attention examples") {
  std::mt19937_64 rng(21);
  const Tensor objects = oracle::random_tensor(rng, {3, 4});
  const HiddenSequence response{oracle::random_tensor(rng, {4, 6}), Mask{true, true, false, true}};
  AttentionParams zero{Tensor::zeros({4, 6}), Tensor::zeros({6, 6})};
  const auto uniform = object_response_attention(objects, response, zero);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      const double mean =
          (response.rows.at(0, j) + response.rows.at(1, j) + response.rows.at(3, j)) / 3.0;
      CHECK(uniform.features.at(i, j) == doctest::Approx(mean).epsilon(1e-14));
    }
    CHECK(uniform.weights.at(i, 2) == 0.0);
  }

  const HiddenSequence one{oracle::random_tensor(rng, {1, 6}), {}};
  AttentionParams random{oracle::random_tensor(rng, {4, 6}), oracle::random_tensor(rng, {6, 6})};
  const auto single = object_response_attention(objects, one, random);
  for (std::size_t i = 0; i < 3; ++i) CHECK(row(single.features, i) == row(one.rows, 0));

  for (int n = 0; n < 100; ++n) {
    const auto c = cases::random_attention(rng);
    check_attention_against_oracle(
        c, object_response_attention(c.attending, c.attended, {c.weight, Tensor()}));
  }

  CHECK_THROWS_AS(object_response_attention(objects, {response.rows, Mask(4, false)}, random),
                  ContractError);
  CHECK_THROWS_AS(object_response_attention(objects, response, {Tensor::zeros({5, 6}), Tensor()}),
                  DimensionError);
}

TEST_CASE("response-query attention examples") {
  std::mt19937_64 rng(22);
  const HiddenSequence response{oracle::random_tensor(rng, {3, 4}), {}};
  const HiddenSequence query{oracle::random_tensor(rng, {5, 4}), Mask{true, false, true, true, false}};
  AttentionParams zero{Tensor(), Tensor::zeros({4, 4})};
  const auto uniform = response_query_attention(response, query, zero);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double mean = (query.rows.at(0, j) + query.rows.at(2, j) + query.rows.at(3, j)) / 3.0;
      CHECK(uniform.features.at(i, j) == doctest::Approx(mean).epsilon(1e-14));
    }
  }
  const HiddenSequence one{oracle::random_tensor(rng, {1, 4}), {}};
  const auto single =
      response_query_attention(response, one, {Tensor(), oracle::random_tensor(rng, {4, 4})});
  for (std::size_t i = 0; i < 3; ++i) CHECK(row(single.features, i) == row(one.rows, 0));

  for (int n = 0; n < 100; ++n) {
    const auto c = cases::random_attention(rng);
    check_attention_against_oracle(
        c, response_query_attention({c.attending, {}}, c.attended, {Tensor(), c.weight}));
  }
  CHECK_THROWS_AS(response_query_attention(response, {query.rows, Mask(5, false)}, zero),
                  ContractError);
}

TEST_CASE("attention outputs stay in the convex hull and rows are normalized") {
  std::mt19937_64 rng(30);
  for (int n = 0; n < 50; ++n) {
    const auto c = cases::random_attention(rng);
    const auto out = response_query_attention({c.attending, {}}, c.attended, {Tensor(), c.weight});
    for (std::size_t i = 0; i < c.attending.dim(0); ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < c.attended.rows.dim(0); ++j) {
        const double w = out.weights.at(i, j);
        if (!c.attended.mask[j]) CHECK(w == 0.0);
        total += w;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
      for (std::size_t q = 0; q < c.attended.rows.dim(1); ++q) {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t j = 0; j < c.attended.rows.dim(0); ++j) {
          if (!c.attended.mask[j]) continue;
          lo = std::min(lo, c.attended.rows.at(j, q));
          hi = std::max(hi, c.attended.rows.at(j, q));
        }
        CHECK(out.features.at(i, q) >= lo - 1e-12);
        CHECK(out.features.at(i, q) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("attention gradients") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const auto c = cases::random_attention(rng);
    const Tensor probe = oracle::random_tensor(rng, {c.attending.dim(0), c.attended.rows.dim(1)}, false);
    auto object_side = [&](const Tensor&) {
      return sum(mul(object_response_attention(c.attending, c.attended, {c.weight, Tensor()}).features, probe));
    };
    auto query_side = [&](const Tensor&) {
      return sum(mul(response_query_attention({c.attending, {}}, c.attended, {Tensor(), c.weight}).features, probe));
    };
    for (const Tensor& x : {c.attending, c.weight, c.attended.rows}) {
      CHECK(finite_difference_check(object_side, x) < 1e-5);
      CHECK(finite_difference_check(query_side, x) < 1e-5);
    }
  }
}
