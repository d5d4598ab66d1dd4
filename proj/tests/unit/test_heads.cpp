#include <doctest.h>

#include <cmath>
#include <numeric>

#include "augsum/heads.hpp"
#include "augsum/train.hpp"
#include "helpers.hpp"

using namespace augsum;
using namespace augsum::testing;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

HeadParams make_head(HeadKind kind, std::size_t d, std::uint64_t seed, std::size_t it_layers = 1) {
  HeadConfig c;
  c.kind = kind;
  c.d = d;
  c.it_layers = it_layers;
  c.it_heads = 2;
  c.it_d_ff = 2 * d;
  c.max_sentences = 6;
  c.init_stddev = 0.5;
  Rng rng(seed);
  return HeadParams::init(c, rng);
}

SentenceVectors vectors(const Matrix& m) {
  SentenceVectors v;
  v.vectors = m;
  v.sentences.resize(m.rows());
  std::iota(v.sentences.begin(), v.sentences.end(), 0);
  v.dropped.assign(m.rows(), false);
  return v;
}

Matrix logits(const HeadParams& p, const Matrix& t) {
  ag::Graph g(false);
  return g.value(head_logits(g, g.constant(t), p));
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& order) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(order[i], j);
  return out;
}

}  // namespace

TEST_CASE("head_sc: hand logistic") {
  HeadParams p = make_head(HeadKind::kSC, 2, 1);
  p.out_w.value.fill(0.0);
  p.out_b.value.fill(0.0);
  Rng rng(2);
  const SentenceScores zero = head_scores(vectors(random_matrix(4, 2, rng)), p);
  for (double s : zero.values) CHECK(s == 0.5);

  p.out_w.value(0, 0) = 1.0;
  p.out_w.value(1, 0) = -1.0;
  const SentenceScores s = head_scores(vectors(Matrix(1, 2, {2.0, 1.0})), p);
  CHECK(s.values[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(s.values[0] == doctest::Approx(sigmoid(1.0)).epsilon(1e-15));
}

TEST_CASE("head_sc: per-sentence independence; head_it: context dependence") {
  Rng rng(3);
  const Matrix t = random_matrix(4, 8, rng);
  Matrix changed = t;
  for (std::size_t j = 0; j < 8; ++j) changed(3, j) += double(j) - 3.5;

  const HeadParams sc = make_head(HeadKind::kSC, 8, 4);
  const Matrix a = logits(sc, t), b = logits(sc, changed);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a(i, 0) == b(i, 0));
  const std::vector<std::size_t> order = {2, 0, 3, 1};
  const Matrix permuted = logits(sc, permute_rows(t, order));
  for (std::size_t i = 0; i < 4; ++i) CHECK(permuted(i, 0) == a(order[i], 0));

  const HeadParams it = make_head(HeadKind::kIT, 8, 5);
  const Matrix c = logits(it, t), d = logits(it, changed);
  CHECK(std::abs(c(0, 0) - d(0, 0)) > 1e-9);
}

TEST_CASE("head_it: k=0 is SC over T plus sentence-position rows") {
  Rng rng(6);
  const Matrix t = random_matrix(5, 4, rng);
  const HeadParams it = make_head(HeadKind::kIT, 4, 7, 0);
  HeadParams sc = make_head(HeadKind::kSC, 4, 8);
  sc.out_w = it.out_w;
  sc.out_b = it.out_b;
  Matrix shifted = t;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) shifted(i, j) += it.sentence_position.value(i, j);
  CHECK(max_abs_diff(logits(it, t), logits(sc, shifted)) == 0.0);
}

TEST_CASE("head_it: attention rows, gradients and overflow") {
  Rng rng(9);
  HeadParams p = make_head(HeadKind::kIT, 8, 10, 2);
  const Matrix t = random_matrix(3, 8, rng);
  ag::Graph g(false);
  std::vector<ag::Var> attention;
  head_it(g, g.constant(t), p, &attention);
  REQUIRE(attention.size() == 4);
  for (const ag::Var a : attention) {
    const Matrix& probs = g.value(a);
    CHECK(probs.rows() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      double total = 0;
      for (std::size_t j = 0; j < 3; ++j) total += probs(i, j);
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }

  const std::vector<double> labels = {1, 0, 1};
  const std::vector<std::uint8_t> use = {1, 1, 1};
  Param input("t", 3, 8);
  input.value = t;
  std::vector<Param*> params = p.parameters();
  params.push_back(&input);
  const GradCheckReport r = grad_check(params, [&](ag::Graph& gg) {
    const ag::Var z = head_it(gg, gg.parameter(input), p);
    return gg.bce_with_logits(z, labels, use);
  });
  CAPTURE(r.worst_parameter);
  CHECK(r.max_relative_error <= 1e-5);

  CHECK_THROWS_AS(logits(p, random_matrix(7, 8, rng)), std::length_error);
}

TEST_CASE("head_rnn: one hand-computed GRU step at d=1, h=1") {
  HeadParams p = make_head(HeadKind::kRNN, 1, 11);
  const double x = 0.8;
  p.gru_wz.value(0, 0) = 0.5;
  p.gru_bz.value(0, 0) = -0.2;
  p.gru_wr.value(0, 0) = 1.1;
  p.gru_wh.value(0, 0) = -1.3;
  p.gru_bh.value(0, 0) = 0.4;
  p.out_w.value(0, 0) = 2.0;
  p.out_b.value(0, 0) = 0.1;
  const double z = sigmoid(0.5 * x - 0.2);
  const double candidate = std::tanh(-1.3 * x + 0.4);
  const double h = (1 - z) * candidate;  // zero initial state
  const SentenceScores s = head_scores(vectors(Matrix(1, 1, {x})), p);
  CHECK(s.values[0] == doctest::Approx(sigmoid(2.0 * h + 0.1)).epsilon(1e-14));
}

TEST_CASE("head_rnn: scores in (0,1) and the prefix property") {
  Rng rng(12);
  const HeadParams p = make_head(HeadKind::kRNN, 6, 13);
  const Matrix t = random_matrix(5, 6, rng, 3.0);
  const SentenceScores full = head_scores(vectors(t), p);
  for (double s : full.values) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  for (std::size_t j = 1; j < 5; ++j) {
    Matrix prefix(j, 6);
    for (std::size_t i = 0; i < j; ++i)
      for (std::size_t c = 0; c < 6; ++c) prefix(i, c) = t(i, c);
    const SentenceScores part = head_scores(vectors(prefix), p);
    for (std::size_t i = 0; i < j; ++i) CHECK(part.values[i] == full.values[i]);
  }
}

TEST_CASE("head_scores: dropped sentences score 0 and are absent") {
  const HeadParams p = make_head(HeadKind::kSC, 2, 14);
  SentenceVectors v;
  v.vectors = Matrix(2, 2, {1, 2, 3, 4});
  v.sentences = {0, 2};
  v.dropped = {false, true, false, true};
  const SentenceScores s = head_scores(v, p);
  REQUIRE(s.size() == 4);
  CHECK(s.present == std::vector<bool>{true, false, true, false});
  CHECK(s.values[1] == 0.0);
  CHECK(s.values[3] == 0.0);
  CHECK(s.values[0] > 0.0);
  CHECK_THROWS_AS(head_scores(SentenceVectors{}, p), std::invalid_argument);
}

TEST_CASE("bce_loss") {
  const std::vector<int> y = {1, 0, 1};
  CHECK(bce_loss(SentenceScores::all_present({1.0, 0.0, 1.0}), y) <= 1e-11);
  CHECK(bce_loss(SentenceScores::all_present({0.5}), std::vector<int>{1}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(3), q(3);
    std::vector<int> flipped(3);
    for (std::size_t i = 0; i < 3; ++i) {
      p[i] = uniform01(rng);
      q[i] = 1.0 - p[i];
      flipped[i] = 1 - y[i];
    }
    CHECK(bce_loss(SentenceScores::all_present(p), y) ==
          doctest::Approx(bce_loss(SentenceScores::all_present(q), flipped)).epsilon(1e-9));
  }
  SentenceScores partial = SentenceScores::all_present({0.5, 0.0});
  partial.present[1] = false;
  CHECK(bce_loss(partial, std::vector<int>{1, 1}) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(bce_loss(SentenceScores::all_present({0.5}), y), std::invalid_argument);
}

TEST_CASE("ranking depends only on logit order") {
  Rng rng(16);
  const HeadParams p = make_head(HeadKind::kIT, 8, 17);
  const Matrix z = logits(p, random_matrix(6, 8, rng));
  auto rank = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
  };
  std::vector<double> raw, probs, cubed;
  for (std::size_t i = 0; i < 6; ++i) {
    raw.push_back(z(i, 0));
    probs.push_back(sigmoid(z(i, 0)));
    cubed.push_back(std::pow(z(i, 0), 3) + 2.0);
  }
  CHECK(rank(raw) == rank(probs));
  CHECK(rank(raw) == rank(cubed));
}

TEST_CASE("head kind names") {
  for (HeadKind k : {HeadKind::kSC, HeadKind::kIT, HeadKind::kRNN}) CHECK(parse_head_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_head_kind("mlp"), std::invalid_argument);
}
