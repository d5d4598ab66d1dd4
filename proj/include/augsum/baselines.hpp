#pragma once
// Unsupervised comparison systems: LEAD, tf-idf cosine (VSM) and LSA.

#include <string>
#include <string_view>
#include <vector>

#include "augsum/corpus.hpp"
#include "augsum/features.hpp"
#include "augsum/matrix.hpp"
#include "augsum/scores.hpp"

namespace augsum {

/// score_i = 1 / (1 + i).
SentenceScores lead_rank(const Document& doc);

/// Rows are the document's distinct surfaces in lexicographic order; entry
/// (t, i) is count of t in sentence i times idf(t). Surfaces missing from the
/// vocabulary use the table's default idf.
struct TermSentenceMatrix {
  std::vector<std::string> terms;
  Matrix weights;
};

TermSentenceMatrix term_sentence_matrix(const Document& doc, const IdfTable& idf,
                                        const Vocabulary& vocab);

/// Cosine between each sentence's tf-idf vector and the whole document's.
SentenceScores vsm_rank(const Document& doc, const IdfTable& idf, const Vocabulary& vocab);

/// Thin SVD: u is m x r, vt is r x n with r = min(m, n), sigma descending.
struct SvdResult {
  Matrix u;
  std::vector<double> sigma;
  Matrix vt;
};

/// One-sided Jacobi. A pair of columns is rotated while |a_p . a_q| exceeds
/// tolerance * |a_p| |a_q|. Throws std::runtime_error if max_sweeps pass
/// without convergence and std::invalid_argument on non-finite input.
SvdResult svd(const Matrix& m, double tolerance = 1e-10, std::size_t max_sweeps = 100);

/// For k = 1..min(K, rank) the unselected sentence with the largest |V(., k)|
/// is taken; the rest follow by |V(., 1)|. Earlier picks score higher.
SentenceScores lsa_rank(const Document& doc, const IdfTable& idf, const Vocabulary& vocab,
                        std::size_t k);

enum class BaselineMethod { kLead, kVsm, kLsa };
BaselineMethod parse_baseline_method(std::string_view text);
std::string_view to_string(BaselineMethod method);

}  // namespace augsum
