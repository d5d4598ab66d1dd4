#pragma once
// Corpus data model: documents made of sentences made of (optionally
// confidence-annotated) tokens, their JSONL serialization, vocabulary
// construction, Table-1 style statistics, oracle training labels and the
// synthetic corpus generator.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace augsum {

using TokenId = std::uint32_t;
using TokenList = std::vector<std::string>;
/// One reference summary: an ordered list of sentences.
using Reference = std::vector<TokenList>;

enum class DocKind {
  kText,    // TD: clean transcript
  kSpoken,  // SD: recognizer output, every token carries a confidence
};

std::string_view kind_name(DocKind kind);

struct Token {
  std::string surface;
  std::optional<double> confidence;
  /// Ground-truth recognition correctness; present only in simulated corpora.
  std::optional<bool> correct;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::size_t index = 0;

  TokenList surfaces() const;
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
  std::vector<Reference> references;
  DocKind kind = DocKind::kText;

  std::size_t word_count() const;
  /// All sentence tokens in document order.
  TokenList all_tokens() const;
  /// True when at least one reference contains at least one token.
  bool has_reference() const;
  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> documents;

  bool empty() const { return documents.empty(); }
  std::size_t size() const { return documents.size(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws CorpusError if a document violates the data-model invariants.
void validate_document(const Document& doc);
/// Renumbers sentence indices and infers kind from confidence presence.
void normalize_document(Document& doc);

Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

enum class TokenizeMode { kWhitespace, kCharacter };

/// Splits raw text into whitespace-delimited words or into UTF-8 characters
/// (whitespace dropped).
TokenList tokenize(std::string_view text, TokenizeMode mode);
/// Splits a UTF-8 string into code-point substrings. Invalid bytes become
/// single-byte units.
TokenList utf8_chars(std::string_view text);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kMask = 4;
  static constexpr std::size_t kSpecialCount = 5;

  Vocabulary();

  /// Id of surface, or kUnk if absent.
  TokenId id(std::string_view surface) const;
  std::optional<TokenId> find(std::string_view surface) const;
  const std::string& surface(TokenId id) const { return surfaces_.at(id); }
  std::size_t count(TokenId id) const { return counts_.at(id); }
  std::size_t size() const { return surfaces_.size(); }
  static bool is_special(TokenId id) { return id < kSpecialCount; }

  /// Appends a surface (no-op if present) and returns its id.
  TokenId add(const std::string& surface, std::size_t count = 0);

  /// TSV: id, surface, corpus count. Special tokens are included.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.surfaces_ == b.surfaces_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> surfaces_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Special tokens plus every sentence-token surface with frequency >=
/// min_count, ordered by descending frequency, ties lexicographic.
Vocabulary build_vocab(const Corpus& corpus, std::size_t min_count);

struct CorpusStats {
  std::size_t documents = 0;
  double sentences_per_document = 0.0;
  /// Mean over documents of that document's words-per-sentence.
  double words_per_sentence = 0.0;
  double words_per_document = 0.0;
  std::optional<double> wer_percent;
  std::optional<double> cer_percent;
};

CorpusStats corpus_stats(const Corpus& corpus);
/// Adds WER/CER of `spoken` measured against the paired clean `text` corpus.
/// Documents are paired by position and must share ids.
CorpusStats corpus_stats(const Corpus& spoken, const Corpus& text);
/// Two-column TSV using the row names of the usual corpus statistics table.
void write_stats_tsv(const CorpusStats& stats, std::ostream& out);

struct OracleLabels {
  std::string document_id;
  std::vector<int> labels;
  /// Set when the document had no usable reference; labels are then all 0.
  bool empty_reference = false;
};

/// Greedy extractive oracle: repeatedly adds the sentence with the largest
/// gain in mean(ROUGE-1 F, ROUGE-2 F) against the references until no
/// sentence improves the score or max_summary_sentences are chosen. N-grams
/// are counted within sentences on both sides. Ties go to the earlier
/// sentence.
OracleLabels oracle_labels(const Document& doc, std::size_t max_summary_sentences);

/// JSONL, one {"id", "labels", "empty_reference"} record per document.
void save_labels(std::span<const OracleLabels> labels, std::ostream& out);
std::vector<OracleLabels> load_labels(const std::filesystem::path& path);

struct SyntheticConfig {
  std::size_t documents = 50;
  std::size_t min_sentences = 8;
  std::size_t max_sentences = 12;
  std::size_t min_words = 6;
  std::size_t max_words = 10;
  std::size_t common_vocab = 40;
  /// Rare "topic" tokens; each is used by at most two documents.
  std::size_t topic_vocab = 75;
  std::size_t topic_words_per_document = 3;
  std::size_t topic_tokens_per_sentence = 2;
  /// Fraction of a document's sentences that form its reference summary.
  double summary_rate = 0.2;
  /// Number of cue tokens; when non-zero every topic sentence carries one.
  std::size_t marker_vocab = 0;
  /// Moves the cue to the front of its sentence, next to [CLS].
  bool marker_leads = false;
  /// Zipf exponent of the common-token distribution.
  double zipf_exponent = 1.0;
  std::string id_prefix = "doc";
};

/// Generates a TD corpus whose references are exactly its topic sentences.
/// Throws std::invalid_argument on degenerate settings (e.g. summary_rate 0).
Corpus gen_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace augsum
