#pragma once
// Small builders shared by the unit suites.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "augsum/corpus.hpp"
#include "augsum/matrix.hpp"
#include "augsum/random.hpp"

namespace augsum::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(AUGSUM_FIXTURE_DIR) / name;
}

/// Unique scratch directory under the system temp dir, emptied first.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("augsum-unit-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline TokenList words(const std::string& text) { return tokenize(text, TokenizeMode::kWhitespace); }

/// TD document from whitespace-separated sentences; the reference (if any)
/// is one summary made of the given sentences.
inline Document text_doc(const std::string& id, const std::vector<std::string>& sentences,
                         const std::vector<std::string>& reference = {}) {
  Document d;
  d.id = id;
  for (const std::string& s : sentences) {
    Sentence sent;
    for (const std::string& w : words(s)) sent.tokens.push_back({w, {}, {}});
    d.sentences.push_back(std::move(sent));
  }
  if (!reference.empty()) {
    Reference r;
    for (const std::string& s : reference) r.push_back(words(s));
    d.references.push_back(std::move(r));
  }
  normalize_document(d);
  return d;
}

/// SD copy of a TD document with every token at the given confidence.
inline Document with_confidence(Document d, double confidence) {
  for (Sentence& s : d.sentences)
    for (Token& t : s.tokens) t.confidence = confidence;
  normalize_document(d);
  return d;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double sd = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = normal(rng, 0.0, sd);
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  return worst;
}

}  // namespace augsum::testing
