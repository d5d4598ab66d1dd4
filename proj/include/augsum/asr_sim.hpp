#pragma once
// Simulated speech recognition: corrupts clean documents at a target word
// error rate and attaches correctness-conditioned confidence scores. Also
// hosts the edit-distance scorer used for WER and CER.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "augsum/corpus.hpp"

namespace augsum {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_length = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  EditCounts& operator+=(const EditCounts& other);
};

/// Minimum unit-cost edit distance.
std::size_t edit_distance(std::span<const std::string> reference,
                          std::span<const std::string> hypothesis);
/// S/D/I split of a minimum-cost alignment. Backtrace prefers substitution,
/// then insertion, then deletion when costs tie.
EditCounts align_counts(std::span<const std::string> reference,
                        std::span<const std::string> hypothesis);

/// (S + D + I) / |reference|. Throws std::invalid_argument on an empty
/// reference.
double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis);
/// WER over the UTF-8 character streams of the concatenated tokens.
double cer(std::span<const std::string> reference, std::span<const std::string> hypothesis);
/// The character stream cer() operates on.
TokenList character_stream(std::span<const std::string> tokens);

struct NoiseConfig {
  double target_wer = 0.237;
  double substitution_share = 0.6;
  double deletion_share = 0.2;
  double insertion_share = 0.2;
  /// Beta(alpha, beta) for confidences of correctly recognized tokens.
  double correct_alpha = 8.0;
  double correct_beta = 2.0;
  /// Beta(alpha, beta) for substituted and inserted tokens.
  double error_alpha = 2.0;
  double error_beta = 5.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

/// Per-document seed: seed xor stable_hash(id), so documents can be corrupted
/// in any order or in parallel with identical results.
std::uint64_t document_seed(std::uint64_t seed, const std::string& doc_id);

/// TD -> SD. Substitutions and insertions draw non-special tokens uniformly
/// from `vocab`; a substitution never reproduces the original token. The last
/// remaining token of a sentence is never deleted (it is substituted instead).
Document corrupt_document(const Document& doc, const NoiseConfig& config,
                          const Vocabulary& vocab);
Corpus corrupt_corpus(const Corpus& corpus, const NoiseConfig& config,
                      const Vocabulary& vocab);

struct AsrDocumentReport {
  std::string id;
  EditCounts words;
  EditCounts chars;
};

/// Realized word/character edit statistics of `spoken` against `text`,
/// paired by position (ids must match).
std::vector<AsrDocumentReport> measure_corruption(const Corpus& text,
                                                  const Corpus& spoken);
/// TSV with one row per document and a final TOTAL row.
void write_asr_report(std::span<const AsrDocumentReport> rows, std::ostream& out);

}  // namespace augsum
