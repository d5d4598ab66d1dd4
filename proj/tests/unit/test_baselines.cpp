#include <doctest.h>

#include <cmath>
#include <numeric>

#include "augsum/baselines.hpp"
#include "augsum/eval.hpp"
#include "helpers.hpp"

using namespace augsum;
using namespace augsum::testing;

namespace {

struct Tables {
  Vocabulary vocab;
  IdfTable idf;
};

Tables tables(const Corpus& c) {
  Tables t{build_vocab(c, 1), {}};
  t.idf = compute_idf(c, t.vocab);
  return t;
}

IdfTable scaled(IdfTable idf, double c) {
  for (double& v : idf.idf) v *= c;
  idf.default_idf *= c;
  return idf;
}

std::vector<std::size_t> ranking(const SentenceScores& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.values[a] > s.values[b]; });
  return idx;
}

Document relabel(const Document& d) {
  Document out = d;
  for (Sentence& s : out.sentences)
    for (Token& t : s.tokens) t.surface = "w" + std::to_string(stable_hash(t.surface) % 100003);
  return out;
}

Corpus synthetic(std::uint64_t seed, std::size_t documents = 20) {
  SyntheticConfig sc;
  sc.documents = documents;
  return gen_synthetic(sc, seed);
}

}  // namespace

TEST_CASE("lead_rank") {
  const SentenceScores s = lead_rank(text_doc("d", {"a", "b", "c"}));
  CHECK(s.values[0] == 1.0);
  CHECK(s.values[1] == 0.5);
  CHECK(s.values[2] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  // Under the shared budget rule LEAD keeps a prefix up to the first
  // sentence that overflows; shorter later sentences may still fill the gap.
  for (const Document& d : synthetic(1).documents) {
    const SentenceScores l = lead_rank(d);
    for (double ratio : {0.05, 0.2, 0.5, 1.0}) {
      const std::vector<std::size_t> picked = select_summary(l, d, ratio);
      std::size_t prefix = 0;
      while (prefix < picked.size() && picked[prefix] == prefix) ++prefix;
      const std::size_t budget = std::size_t(ratio * double(d.word_count()));
      std::size_t used = 0;
      for (std::size_t i = 0; i < prefix; ++i) used += d.sentences[i].tokens.size();
      if (prefix > 0 && prefix < d.sentences.size())
        CHECK(used + d.sentences[prefix].tokens.size() > budget);
    }
  }
  // Equal-length sentences make the selection an exact prefix.
  const Document even = text_doc("e", {"a b", "c d", "e f", "g h", "i j"});
  CHECK(select_summary(lead_rank(even), even, 0.6) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("vsm_rank: hand cosines on a three-term fixture") {
  const Document d = text_doc("d", {"a a b", "c"});
  Tables t = tables(Corpus{{d}});
  t.idf.idf[t.vocab.id("a")] = 1.0;
  t.idf.idf[t.vocab.id("b")] = 2.0;
  t.idf.idf[t.vocab.id("c")] = 3.0;
  // Document vector (2, 2, 3); sentence vectors (2, 2, 0) and (0, 0, 3).
  const SentenceScores s = vsm_rank(d, t.idf, t.vocab);
  CHECK(s.values[0] == doctest::Approx(8.0 / (std::sqrt(8.0) * std::sqrt(17.0))).epsilon(1e-14));
  CHECK(s.values[1] == doctest::Approx(3.0 / std::sqrt(17.0)).epsilon(1e-14));
  CHECK(s.values[1] > s.values[0]);

  const TermSentenceMatrix m = term_sentence_matrix(d, t.idf, t.vocab);
  CHECK(m.terms == std::vector<std::string>{"a", "b", "c"});
  CHECK(m.weights == Matrix(3, 2, {2, 0, 2, 0, 0, 3}));
}

TEST_CASE("vsm_rank: degenerate and invariant cases") {
  const Document single = text_doc("s", {"x y z"});
  const Corpus c{{single, text_doc("o", {"x q"})}};
  const Tables t = tables(c);
  CHECK(vsm_rank(single, t.idf, t.vocab).values[0] == doctest::Approx(1.0).epsilon(1e-15));

  // A term present in every document has idf 0, so its sentence vector is zero.
  const Document zero = text_doc("z", {"x", "x y"});
  const Corpus cz{{zero, text_doc("o", {"x"})}};
  const Tables tz = tables(cz);
  CHECK(vsm_rank(zero, tz.idf, tz.vocab).values[0] == 0.0);

  const Corpus corpus = synthetic(2);
  const Tables ts = tables(corpus);
  const Corpus renamed{[&] {
    std::vector<Document> out;
    for (const Document& d : corpus.documents) out.push_back(relabel(d));
    return out;
  }()};
  const Tables tr = tables(renamed);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Document& d = corpus.documents[i];
    const SentenceScores base = vsm_rank(d, ts.idf, ts.vocab);
    const SentenceScores up = vsm_rank(d, scaled(ts.idf, 7.5), ts.vocab);
    const SentenceScores re = vsm_rank(renamed.documents[i], tr.idf, tr.vocab);
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(up.values[k] == doctest::Approx(base.values[k]).epsilon(1e-12));
      CHECK(re.values[k] == doctest::Approx(base.values[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("svd: hand cases") {
  Matrix eye(3, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  for (double s : svd(eye).sigma) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));

  const SvdResult d = svd(Matrix(2, 2, {3, 0, 0, 4}));
  CHECK(d.sigma[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(d.sigma[1] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(d.u(1, 0)) == doctest::Approx(1.0));

  Matrix bad(2, 2, 1.0);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(svd(bad), std::invalid_argument);
}

TEST_CASE("svd: reconstruction and orthonormality on random matrices") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{8, 6}, {6, 8}, {5, 5}}) {
      const Matrix a = random_matrix(m, n, rng);
      const SvdResult r = svd(a);
      const std::size_t k = std::min(m, n);
      REQUIRE(r.sigma.size() == k);
      REQUIRE(r.u.rows() == m);
      REQUIRE(r.u.cols() == k);
      REQUIRE(r.vt.rows() == k);
      REQUIRE(r.vt.cols() == n);
      for (std::size_t i = 1; i < k; ++i) CHECK(r.sigma[i - 1] >= r.sigma[i]);
      Matrix rebuilt(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t s = 0; s < k; ++s) rebuilt(i, j) += r.u(i, s) * r.sigma[s] * r.vt(s, j);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) rebuilt(i, j) -= a(i, j);
      CHECK(frobenius_norm(rebuilt) <= 1e-9 * frobenius_norm(a));
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t q = 0; q < k; ++q) {
          double uu = 0, vv = 0;
          for (std::size_t i = 0; i < m; ++i) uu += r.u(i, p) * r.u(i, q);
          for (std::size_t j = 0; j < n; ++j) vv += r.vt(p, j) * r.vt(q, j);
          CHECK(std::abs(uu - (p == q)) <= 1e-9);
          CHECK(std::abs(vv - (p == q)) <= 1e-9);
        }
    }
  }
}

TEST_CASE("lsa_rank") {
  const Document one = text_doc("s", {"a b"});
  const Tables t1 = tables(Corpus{{one, text_doc("o", {"c"})}});
  CHECK(lsa_rank(one, t1.idf, t1.vocab, 3).values[0] > 0.0);

  // Column 2 is twice column 1, so the only right singular vector is ∝ (1, 2).
  const Document rank1 = text_doc("r", {"a b", "a b a b", "c"});
  const Tables tr = tables(Corpus{{rank1, text_doc("o", {"c"})}});
  const SentenceScores s = lsa_rank(rank1, tr.idf, tr.vocab, 1);
  CHECK(ranking(s).front() == 1);
  CHECK(s.values[1] > s.values[0]);

  const Corpus corpus = synthetic(4);
  const Tables ts = tables(corpus);
  for (const Document& d : corpus.documents) {
    const auto base = ranking(lsa_rank(d, ts.idf, ts.vocab, 3));
    CHECK(ranking(lsa_rank(d, scaled(ts.idf, 0.25), ts.vocab, 3)) == base);
    CHECK(ranking(lsa_rank(d, ts.idf, ts.vocab, 3)) == base);
  }
}

TEST_CASE("lsa_rank: invariant under relabeling") {
  const Corpus corpus = synthetic(5);
  std::vector<Document> renamed;
  for (const Document& d : corpus.documents) renamed.push_back(relabel(d));
  const Tables ts = tables(corpus), tr = tables(Corpus{renamed});
  for (std::size_t i = 0; i < corpus.size(); ++i)
    CHECK(ranking(lsa_rank(corpus.documents[i], ts.idf, ts.vocab, 3)) ==
          ranking(lsa_rank(renamed[i], tr.idf, tr.vocab, 3)));
}

TEST_CASE("baseline method names") {
  for (BaselineMethod m : {BaselineMethod::kLead, BaselineMethod::kVsm, BaselineMethod::kLsa})
    CHECK(parse_baseline_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_baseline_method("ilp"), std::invalid_argument);
}
