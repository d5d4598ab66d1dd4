#pragma once
// Input side of the summarizer: corpus-level IDF statistics, the
// [CLS] s1 [SEP] [CLS] s2 [SEP] ... packing of a document, and composition
// of per-token input vectors (word + position + segment, auxiliary IDF and
// confidence channels, learned sentence-position rows at [CLS]).

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "augsum/autograd.hpp"
#include "augsum/corpus.hpp"

namespace augsum {

struct IdfTable {
  std::size_t document_count = 0;
  /// Indexed by token id.
  std::vector<std::size_t> df;
  std::vector<double> idf;
  /// Used for surfaces the table has never seen: ln(N / 0.5).
  double default_idf = 0.0;
  /// Standardization statistics over the token occurrences of the corpus the
  /// table was computed on.
  double mean = 0.0;
  double stddev = 1.0;

  /// Raw idf of a vocabulary id; ids beyond the table or with df = 0 get the
  /// default.
  double value(TokenId id) const;
  /// (idf - mean) / stddev.
  double standardize(double raw_idf) const { return (raw_idf - mean) / stddev; }

  /// TSV: token, df, idf, preceded by '#' lines carrying N, mean and stddev.
  void write_tsv(std::ostream& out, const Vocabulary& vocab) const;
  static IdfTable read_tsv(std::istream& in, const Vocabulary& vocab);
  static IdfTable read_tsv(const std::filesystem::path& path, const Vocabulary& vocab);
};

/// df(t) = number of documents containing t; idf = ln(N / df); unseen
/// tokens use df = 0.5; special tokens get 0.
IdfTable compute_idf(const Corpus& corpus, const Vocabulary& vocab);

enum class PositionalMode { kNone, kClsLearned };
enum class AuxInjection { kConcatProject, kSumProject };
enum class BaseComposition { kSum, kConcat };

std::string_view to_string(PositionalMode mode);
std::string_view to_string(AuxInjection mode);
std::string_view to_string(BaseComposition mode);
PositionalMode parse_positional_mode(std::string_view text);
AuxInjection parse_aux_injection(std::string_view text);
BaseComposition parse_base_composition(std::string_view text);

struct FeatureConfig {
  bool use_idf = false;
  bool use_confidence = false;
  PositionalMode positional = PositionalMode::kNone;
  AuxInjection aux_injection = AuxInjection::kConcatProject;
  BaseComposition base = BaseComposition::kSum;
  std::size_t max_positions = 128;
  std::size_t max_sentences = 32;

  std::size_t aux_channels() const { return (use_idf ? 1 : 0) + (use_confidence ? 1 : 0); }
};

struct PackedDocument {
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> segment_ids;
  std::vector<std::size_t> position_ids;
  /// Document sentence index of every packed token.
  std::vector<std::size_t> sentence_of_token;
  /// One entry per surviving sentence, in order.
  std::vector<std::size_t> cls_positions;
  std::vector<std::size_t> surviving_sentences;
  std::vector<std::size_t> dropped_sentences;
  /// Aux channels aligned with token_ids: standardized idf (0 when off or for
  /// special tokens) and confidence (1 for [CLS]/[SEP] and for TD tokens).
  std::vector<double> idf;
  std::vector<double> confidence;
  std::vector<std::uint8_t> attention_mask;
  std::size_t sentence_count = 0;

  std::size_t length() const { return token_ids.size(); }
};

/// Packs a document, truncating to cfg.max_positions. Whole sentences are
/// dropped from the end; only a first sentence that alone exceeds the limit
/// is cut mid-sentence (its [SEP] is kept). Throws std::invalid_argument for
/// use_confidence on a TD document.
PackedDocument tokenize_pack(const Document& doc, const Vocabulary& vocab, const IdfTable& idf,
                             const FeatureConfig& cfg);

/// Token ids of each surviving sentence's span between [CLS] and [SEP].
std::vector<std::vector<TokenId>> unpack_sentences(const PackedDocument& packed);

struct EncoderParams;

/// Builds the n x d encoder input for a packed document on the graph.
ag::Var compose_embeddings(ag::Graph& graph, const PackedDocument& packed,
                           const EncoderParams& params, const FeatureConfig& cfg);
Matrix compose_embeddings(const PackedDocument& packed, const EncoderParams& params,
                          const FeatureConfig& cfg);

}  // namespace augsum
