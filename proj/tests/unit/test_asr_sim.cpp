#include <doctest.h>

#include <map>
#include <sstream>

#include "augsum/asr_sim.hpp"
#include "augsum/parallel.hpp"
#include "helpers.hpp"

using namespace augsum;
using namespace augsum::testing;

namespace {

Corpus small_corpus(std::uint64_t seed, std::size_t documents = 40) {
  SyntheticConfig sc;
  sc.documents = documents;
  sc.topic_vocab = documents * 2;
  return gen_synthetic(sc, seed);
}

}  // namespace

TEST_CASE("wer: hand alignments") {
  const TokenList abc = words("a b c");
  CHECK(wer(abc, abc) == 0.0);
  CHECK(wer(abc, words("a x c d")) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(wer(abc, TokenList{}) == 1.0);
  CHECK(wer(words("a"), words("x y z")) == 3.0);
  CHECK_THROWS_AS(wer(TokenList{}, abc), std::invalid_argument);
}

TEST_CASE("align_counts: split of a minimum alignment") {
  const EditCounts c = align_counts(words("a b c"), words("a x c d"));
  CHECK(c.substitutions == 1);
  CHECK(c.insertions == 1);
  CHECK(c.deletions == 0);
  CHECK(c.reference_length == 3);
  // Two substitutions tie with a deletion plus an insertion.
  const EditCounts tie = align_counts(words("a b"), words("b c"));
  CHECK(tie.substitutions == 2);
  CHECK(tie.deletions + tie.insertions == 0);
  const EditCounts del = align_counts(words("a b c"), words("a c"));
  CHECK(del.deletions == 1);
  CHECK(del.errors() == 1);
}

TEST_CASE("cer: character streams") {
  CHECK(cer(words("abc"), words("abc")) == 0.0);
  CHECK(cer(words("abc"), words("abd")) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  // Word boundaries do not count as characters.
  CHECK(cer(words("ab c"), words("a bc")) == 0.0);
  CHECK(character_stream(words("ab c")) == TokenList{"a", "b", "c"});
  // One long word wholly wrong: CER above WER is legitimate.
  const TokenList ref = words("a b c dddddddd");
  const TokenList hyp = words("a b c xxxxxxxx");
  CHECK(wer(ref, hyp) == 0.25);
  CHECK(cer(ref, hyp) > wer(ref, hyp));
}

TEST_CASE("edit distance: relabeling invariance and triangle inequality") {
  Rng rng(11);
  auto sequence = [&](std::size_t n) {
    TokenList s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(std::string(1, char('a' + uniform_index(rng, 4))));
    return s;
  };
  const std::map<std::string, std::string> relabel = {{"a", "q"}, {"b", "a"}, {"c", "zz"}, {"d", "b"}};
  auto mapped = [&](const TokenList& s) {
    TokenList out;
    for (const auto& w : s) out.push_back(relabel.at(w));
    return out;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const TokenList x = sequence(1 + uniform_index(rng, 7));
    const TokenList y = sequence(uniform_index(rng, 8));
    const TokenList z = sequence(uniform_index(rng, 8));
    CHECK(wer(x, y) == wer(mapped(x), mapped(y)));
    CHECK(edit_distance(x, z) <= edit_distance(x, y) + edit_distance(y, z));
    CHECK(edit_distance(x, y) == align_counts(x, y).errors());
  }
}

TEST_CASE("NoiseConfig validation") {
  NoiseConfig n;
  CHECK_NOTHROW(n.validate());
  n.target_wer = 1.0;
  CHECK_THROWS_AS(n.validate(), std::invalid_argument);
  n = {};
  n.deletion_share = 0.3;
  CHECK_THROWS_AS(n.validate(), std::invalid_argument);
  n = {};
  n.error_beta = 0.0;
  CHECK_THROWS_AS(n.validate(), std::invalid_argument);
  const Corpus c = small_corpus(1, 2);
  NoiseConfig bad;
  bad.target_wer = 1.5;
  CHECK_THROWS(corrupt_document(c.documents[0], bad, build_vocab(c, 1)));
}

TEST_CASE("corrupt_document: zero target is the identity") {
  const Corpus c = small_corpus(2, 10);
  const Vocabulary vocab = build_vocab(c, 1);
  NoiseConfig n;
  n.target_wer = 0.0;
  for (const Document& d : c.documents) {
    const Document out = corrupt_document(d, n, vocab);
    CHECK(out.kind == DocKind::kSpoken);
    CHECK(out.all_tokens() == d.all_tokens());
    for (const Sentence& s : out.sentences)
      for (const Token& t : s.tokens) {
        CHECK(*t.correct);
        CHECK(*t.confidence >= 0.0);
        CHECK(*t.confidence <= 1.0);
      }
    CHECK(out.references == d.references);
  }
}

TEST_CASE("corrupt_document: structure, determinism and confidence separation") {
  const Vocabulary vocab = build_vocab(small_corpus(3), 1);
  for (std::uint64_t seed : {1, 2, 3}) {
    const Corpus c = small_corpus(seed);
    NoiseConfig n;
    n.seed = seed;
    double ok_sum = 0, bad_sum = 0;
    std::size_t ok_n = 0, bad_n = 0;
    for (const Document& d : c.documents) {
      const Document out = corrupt_document(d, n, vocab);
      CHECK(out == corrupt_document(d, n, vocab));
      REQUIRE(out.sentences.size() == d.sentences.size());
      CHECK_NOTHROW(validate_document(out));
      for (const Sentence& s : out.sentences) {
        CHECK_FALSE(s.tokens.empty());
        for (const Token& t : s.tokens) {
          REQUIRE(t.confidence);
          REQUIRE(t.correct);
          CHECK(t.surface.front() != '[');
          (*t.correct ? ok_sum : bad_sum) += *t.confidence;
          (*t.correct ? ok_n : bad_n) += 1;
        }
      }
    }
    REQUIRE(bad_n > 0);
    CHECK(ok_sum / double(ok_n) > bad_sum / double(bad_n));
  }
}

TEST_CASE("corrupt_document: substitutions never reproduce the original") {
  const Corpus c = small_corpus(4);
  const Vocabulary vocab = build_vocab(c, 1);
  NoiseConfig n;
  n.substitution_share = 1.0;
  n.deletion_share = n.insertion_share = 0.0;
  n.target_wer = 0.5;
  for (const Document& d : c.documents) {
    const Document out = corrupt_document(d, n, vocab);
    for (std::size_t s = 0; s < d.sentences.size(); ++s) {
      REQUIRE(out.sentences[s].tokens.size() == d.sentences[s].tokens.size());
      for (std::size_t i = 0; i < d.sentences[s].tokens.size(); ++i) {
        const Token& t = out.sentences[s].tokens[i];
        CHECK(*t.correct == (t.surface == d.sentences[s].tokens[i].surface));
      }
    }
  }
}

TEST_CASE("corrupt_document: deletions never empty a sentence") {
  const Corpus c{{text_doc("d", {"a", "b c", "d e f"})}};
  const Vocabulary vocab = build_vocab(small_corpus(1), 1);
  NoiseConfig n;
  n.deletion_share = 1.0;
  n.substitution_share = n.insertion_share = 0.0;
  n.target_wer = 0.95;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    n.seed = seed;
    const Document out = corrupt_document(c.documents[0], n, vocab);
    REQUIRE(out.sentences.size() == 3);
    for (const Sentence& s : out.sentences) CHECK_FALSE(s.tokens.empty());
  }
}

TEST_CASE("corrupt_corpus: order and thread count do not matter") {
  const Corpus c = small_corpus(5);
  const Vocabulary vocab = build_vocab(c, 1);
  NoiseConfig n;
  n.seed = 77;
  const Corpus serial = corrupt_corpus(c, n, vocab);
  Corpus parallel;
  parallel.documents.resize(c.size());
  parallel_for(c.size(), 4, [&](std::size_t i) {
    const std::size_t j = c.size() - 1 - i;
    parallel.documents[j] = corrupt_document(c.documents[j], n, vocab);
  });
  CHECK(parallel == serial);
  CHECK(document_seed(77, "x") == (77 ^ stable_hash("x")));
}

TEST_CASE("corrupt_corpus: default target is met at scale") {
  SyntheticConfig sc;
  sc.documents = 250;
  sc.topic_vocab = 400;
  const Corpus c = gen_synthetic(sc, 8);
  NoiseConfig n;
  n.seed = 8;
  const Corpus sd = corrupt_corpus(c, n, build_vocab(c, 1));
  EditCounts total;
  for (const AsrDocumentReport& r : measure_corruption(c, sd)) total += r.words;
  REQUIRE(total.reference_length >= 10000);
  const double w = double(total.errors()) / double(total.reference_length);
  CHECK(w == doctest::Approx(0.237).epsilon(0.02 / 0.237));
}

TEST_CASE("write_asr_report: per-document rows and a total") {
  const Corpus td{{text_doc("x", {"a b c"}), text_doc("y", {"d e"})}};
  Corpus sd{{with_confidence(text_doc("x", {"a q c"}), 0.5), with_confidence(text_doc("y", {"d"}), 0.5)}};
  const auto rows = measure_corruption(td, sd);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].words.substitutions == 1);
  CHECK(rows[1].words.deletions == 1);
  std::ostringstream out;
  write_asr_report(rows, out);
  const std::string text = out.str();
  CHECK(text.starts_with("id\tref_words\tsub\tdel\tins\twer\tref_chars\tcer\n"));
  CHECK(text.find("TOTAL\t5\t1\t1\t0\t0.400000\t") != std::string::npos);

  sd.documents[1].id = "z";
  CHECK_THROWS(measure_corruption(td, sd));
}
