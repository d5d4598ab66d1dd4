#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace augsum {

/// Per-sentence inclusion scores for one document. Sentences that did not
/// survive packing are marked absent and score 0.
struct SentenceScores {
  std::vector<double> values;
  std::vector<bool> present;

  static SentenceScores all_present(std::vector<double> values) {
    SentenceScores s;
    s.present.assign(values.size(), true);
    s.values = std::move(values);
    return s;
  }
  std::size_t size() const { return values.size(); }
};

}  // namespace augsum
