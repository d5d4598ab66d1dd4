#pragma once
// Summary evaluation: ROUGE-1/2/L, budgeted sentence selection, confidence
// quality (NCE, EER/DET) and TD/SD result tables.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "augsum/corpus.hpp"
#include "augsum/scores.hpp"

namespace augsum {

enum class RougeVariant { kR1, kR2, kRL };

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  RougeVariant variant = RougeVariant::kR1;
};

/// ROUGE-N for n in {1, 2} with clipped n-gram counts. With several
/// references the single-reference score with the largest F is returned.
RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const TokenList> references, int n);
/// ROUGE-L over whole-sequence LCS, F with beta = 1.
RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const TokenList> references);
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Concatenates a reference's sentences.
TokenList flatten(const Reference& reference);
std::vector<TokenList> flatten_references(const Document& doc);

/// Budgeted extractive selection: budget = floor(ratio * words); sentences
/// are visited by descending score (ties to the smaller index) and kept when
/// they fit. Falls back to the single best sentence. Result sorted ascending.
std::vector<std::size_t> select_summary(const SentenceScores& scores,
                                        const Document& doc, double ratio);

struct ConfidenceSample {
  double confidence = 0.0;
  bool correct = false;
};

/// Collects (confidence, correct) pairs from tokens that carry both fields.
std::vector<ConfidenceSample> confidence_samples(const Corpus& corpus);

/// Normalized cross entropy in bits. Throws std::invalid_argument when only
/// one class is present.
double nce(std::span<const ConfidenceSample> samples);

struct DetPoint {
  double threshold = 0.0;
  double false_accept = 0.0;  // incorrect tokens accepted / incorrect tokens
  double false_reject = 0.0;  // correct tokens rejected / correct tokens
};

struct EerResult {
  double eer = 0.0;
  std::vector<DetPoint> curve;
};

/// Threshold sweep over every distinct confidence (accept iff c >= t); EER is
/// linearly interpolated at the FAR = FRR crossing.
EerResult eer_det(std::span<const ConfidenceSample> samples);
void write_det_csv(const EerResult& result, std::ostream& out);

/// One document's system output in the run format.
struct SystemOutput {
  std::string id;
  std::vector<std::size_t> selected;
  std::vector<double> scores;
};

void write_run(std::span<const SystemOutput> outputs, std::ostream& out);
std::vector<SystemOutput> read_run(std::istream& in);
std::vector<SystemOutput> read_run(const std::filesystem::path& path);

struct SystemScores {
  RougeScore rouge1{0, 0, 0, RougeVariant::kR1};
  RougeScore rouge2{0, 0, 0, RougeVariant::kR2};
  RougeScore rougeL{0, 0, 0, RougeVariant::kRL};
  std::size_t documents = 0;
};

/// Per-document ROUGE of the concatenated selected sentences; each field is
/// the unweighted mean over documents. Outputs are matched to documents by
/// id; a document without reference is an error. Documents are scored on up
/// to `threads` workers and reduced in output order.
SystemScores evaluate_system(std::span<const SystemOutput> outputs,
                             const Corpus& corpus, std::size_t threads = 1);
SystemScores evaluate_document(const SystemOutput& output, const Document& doc);

struct ReportCells {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

struct ReportRow {
  std::string system;
  std::optional<ReportCells> text;    // TD
  std::optional<ReportCells> spoken;  // SD
};

/// Rows keep insertion order.
class Report {
 public:
  void set(const std::string& system, DocKind kind, const ReportCells& cells);
  const std::vector<ReportRow>& rows() const { return rows_; }

  void write_tsv(std::ostream& out) const;
  void write_text(std::ostream& out) const;

 private:
  std::vector<ReportRow> rows_;
};

/// Three decimals, half-up.
std::string format_score(double value);

}  // namespace augsum
