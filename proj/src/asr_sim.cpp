#include "augsum/asr_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "augsum/random.hpp"

namespace augsum {

EditCounts& EditCounts::operator+=(const EditCounts& other) {
  substitutions += other.substitutions;
  deletions += other.deletions;
  insertions += other.insertions;
  reference_length += other.reference_length;
  return *this;
}

std::size_t edit_distance(std::span<const std::string> reference,
                          std::span<const std::string> hypothesis) {
  std::vector<std::size_t> prev(hypothesis.size() + 1);
  std::vector<std::size_t> curr(hypothesis.size() + 1);
  for (std::size_t j = 0; j <= hypothesis.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= reference.size(); ++i) {
    curr[0] = i;
    for (std::size_t j = 1; j <= hypothesis.size(); ++j) {
      const std::size_t diag =
          prev[j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      curr[j] = std::min({diag, prev[j] + 1, curr[j - 1] + 1});
    }
    std::swap(prev, curr);
  }
  return prev[hypothesis.size()];
}

EditCounts align_counts(std::span<const std::string> reference,
                        std::span<const std::string> hypothesis) {
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1),
                           at(i - 1, j) + 1, at(i, j - 1) + 1});

  EditCounts counts;
  counts.reference_length = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++counts.insertions;
      --j;
    } else {
      ++counts.deletions;
      --i;
    }
  }
  return counts;
}

double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  if (reference.empty()) throw std::invalid_argument("wer: empty reference");
  return static_cast<double>(edit_distance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

TokenList character_stream(std::span<const std::string> tokens) {
  TokenList chars;
  for (const std::string& t : tokens) {
    TokenList c = utf8_chars(t);
    chars.insert(chars.end(), c.begin(), c.end());
  }
  return chars;
}

double cer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  const TokenList ref = character_stream(reference);
  if (ref.empty()) throw std::invalid_argument("cer: empty reference");
  const TokenList hyp = character_stream(hypothesis);
  return wer(ref, hyp);
}

void NoiseConfig::validate() const {
  if (!(target_wer >= 0.0 && target_wer < 1.0))
    throw std::invalid_argument("target_wer must lie in [0, 1)");
  if (substitution_share < 0.0 || deletion_share < 0.0 || insertion_share < 0.0)
    throw std::invalid_argument("error-type shares must be nonnegative");
  if (std::abs(substitution_share + deletion_share + insertion_share - 1.0) > 1e-9)
    throw std::invalid_argument("error-type shares must sum to 1");
  if (!(correct_alpha > 0.0 && correct_beta > 0.0 && error_alpha > 0.0 && error_beta > 0.0))
    throw std::invalid_argument("Beta parameters must be positive");
}

std::uint64_t document_seed(std::uint64_t seed, const std::string& doc_id) {
  return seed ^ stable_hash(doc_id);
}

namespace {

std::string draw_token(Rng& rng, const Vocabulary& vocab, const std::string* exclude) {
  const std::size_t regular = vocab.size() - Vocabulary::kSpecialCount;
  if (regular == 0 || (exclude != nullptr && regular == 1 && vocab.find(*exclude)))
    throw std::invalid_argument("vocabulary too small to draw replacement tokens");
  for (;;) {
    const auto id = static_cast<TokenId>(Vocabulary::kSpecialCount + uniform_index(rng, regular));
    const std::string& s = vocab.surface(id);
    if (exclude == nullptr || s != *exclude) return s;
  }
}

}  // namespace

Document corrupt_document(const Document& doc, const NoiseConfig& config,
                          const Vocabulary& vocab) {
  config.validate();
  if (doc.kind != DocKind::kText)
    throw std::invalid_argument("corrupt_document: input must be a TD document");
  Rng rng(document_seed(config.seed, doc.id));
  const double p_error = config.target_wer * (config.substitution_share + config.deletion_share);
  const double p_sub_given_error =
      config.substitution_share + config.deletion_share > 0.0
          ? config.substitution_share / (config.substitution_share + config.deletion_share)
          : 1.0;
  const double p_insert = config.target_wer * config.insertion_share;

  auto correct_token = [&](const std::string& surface) {
    return Token{surface, beta(rng, config.correct_alpha, config.correct_beta), true};
  };
  auto error_token = [&](std::string surface) {
    return Token{std::move(surface), beta(rng, config.error_alpha, config.error_beta), false};
  };

  Document out;
  out.id = doc.id;
  out.references = doc.references;
  out.kind = DocKind::kSpoken;
  for (const Sentence& sentence : doc.sentences) {
    Sentence s;
    s.index = sentence.index;
    const std::size_t len = sentence.tokens.size();
    for (std::size_t i = 0; i < len; ++i) {
      const std::string& original = sentence.tokens[i].surface;
      if (uniform01(rng) < p_error) {
        bool substitute = uniform01(rng) < p_sub_given_error;
        // Deleting the last surviving token would empty the sentence.
        if (!substitute && i + 1 == len && s.tokens.empty()) substitute = true;
        if (substitute) s.tokens.push_back(error_token(draw_token(rng, vocab, &original)));
      } else {
        s.tokens.push_back(correct_token(original));
      }
      if (uniform01(rng) < p_insert) s.tokens.push_back(error_token(draw_token(rng, vocab, nullptr)));
    }
    out.sentences.push_back(std::move(s));
  }
  return out;
}

Corpus corrupt_corpus(const Corpus& corpus, const NoiseConfig& config, const Vocabulary& vocab) {
  Corpus out;
  out.documents.reserve(corpus.size());
  for (const Document& doc : corpus.documents)
    out.documents.push_back(corrupt_document(doc, config, vocab));
  return out;
}

std::vector<AsrDocumentReport> measure_corruption(const Corpus& text, const Corpus& spoken) {
  if (text.size() != spoken.size())
    throw CorpusError("paired corpora differ in document count");
  std::vector<AsrDocumentReport> rows;
  for (std::size_t d = 0; d < text.size(); ++d) {
    const Document& ref = text.documents[d];
    const Document& hyp = spoken.documents[d];
    if (ref.id != hyp.id)
      throw CorpusError(fmt::format("paired corpora disagree at position {}: {} vs {}", d,
                                    ref.id, hyp.id));
    const TokenList r = ref.all_tokens();
    const TokenList h = hyp.all_tokens();
    rows.push_back({ref.id, align_counts(r, h),
                    align_counts(character_stream(r), character_stream(h))});
  }
  return rows;
}

void write_asr_report(std::span<const AsrDocumentReport> rows, std::ostream& out) {
  out << "id\tref_words\tsub\tdel\tins\twer\tref_chars\tcer\n";
  auto rate = [](const EditCounts& c) {
    return c.reference_length ? static_cast<double>(c.errors()) /
                                    static_cast<double>(c.reference_length)
                              : 0.0;
  };
  EditCounts words;
  EditCounts chars;
  auto emit = [&](const std::string& id, const EditCounts& w, const EditCounts& c) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{:.6f}\t{}\t{:.6f}\n", id, w.reference_length,
                       w.substitutions, w.deletions, w.insertions, rate(w),
                       c.reference_length, rate(c));
  };
  for (const auto& row : rows) {
    emit(row.id, row.words, row.chars);
    words += row.words;
    chars += row.chars;
  }
  emit("TOTAL", words, chars);
}

}  // namespace augsum
