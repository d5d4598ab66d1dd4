#include "augsum/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace augsum {

SentenceScores lead_rank(const Document& doc) {
  if (doc.sentences.empty()) throw std::invalid_argument("lead_rank: empty document");
  std::vector<double> v(doc.sentences.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + static_cast<double>(i));
  return SentenceScores::all_present(std::move(v));
}

TermSentenceMatrix term_sentence_matrix(const Document& doc, const IdfTable& idf,
                                        const Vocabulary& vocab) {
  std::map<std::string, std::size_t> index;
  for (const Sentence& s : doc.sentences)
    for (const Token& t : s.tokens) index.emplace(t.surface, 0);
  TermSentenceMatrix tsm;
  for (auto& [surface, row] : index) {
    row = tsm.terms.size();
    tsm.terms.push_back(surface);
  }
  tsm.weights = Matrix(tsm.terms.size(), doc.sentences.size());
  std::vector<double> weight(tsm.terms.size());
  for (std::size_t r = 0; r < tsm.terms.size(); ++r) {
    const auto id = vocab.find(tsm.terms[r]);
    weight[r] = id ? idf.value(*id) : idf.default_idf;
  }
  for (std::size_t i = 0; i < doc.sentences.size(); ++i)
    for (const Token& t : doc.sentences[i].tokens) {
      const std::size_t r = index.at(t.surface);
      tsm.weights(r, i) += weight[r];
    }
  return tsm;
}

SentenceScores vsm_rank(const Document& doc, const IdfTable& idf, const Vocabulary& vocab) {
  if (doc.sentences.empty()) throw std::invalid_argument("vsm_rank: empty document");
  const TermSentenceMatrix tsm = term_sentence_matrix(doc, idf, vocab);
  const Matrix& w = tsm.weights;
  std::vector<double> total(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t i = 0; i < w.cols(); ++i) total[r] += w(r, i);
  double total_norm = 0.0;
  for (double x : total) total_norm += x * x;
  total_norm = std::sqrt(total_norm);

  std::vector<double> scores(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.cols(); ++i) {
    double dot = 0.0;
    double norm = 0.0;
    for (std::size_t r = 0; r < w.rows(); ++r) {
      dot += w(r, i) * total[r];
      norm += w(r, i) * w(r, i);
    }
    norm = std::sqrt(norm);
    if (norm > 0.0 && total_norm > 0.0) scores[i] = dot / (norm * total_norm);
  }
  return SentenceScores::all_present(std::move(scores));
}

namespace {

double column_dot(const Matrix& a, std::size_t p, std::size_t q) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, p) * a(r, q);
  return s;
}

void rotate_columns(Matrix& a, std::size_t p, std::size_t q, double c, double s) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double x = a(r, p);
    const double y = a(r, q);
    a(r, p) = c * x - s * y;
    a(r, q) = s * x + c * y;
  }
}

/// Jacobi on a tall (rows >= cols) matrix.
SvdResult svd_tall(const Matrix& m, double tolerance, std::size_t max_sweeps) {
  const std::size_t rows = m.rows();
  const std::size_t n = m.cols();
  Matrix a = m;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  bool converged = n < 2;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = column_dot(a, p, p);
        const double beta = column_dot(a, q, q);
        const double gamma = column_dot(a, p, q);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_columns(a, p, q, c, s);
        rotate_columns(v, p, q, c, s);
      }
    converged = !rotated;
  }
  if (!converged)
    throw std::runtime_error(fmt::format("svd: no convergence after {} sweeps", max_sweeps));

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(column_dot(a, j, j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult out;
  out.u = Matrix(rows, n);
  out.vt = Matrix(n, n);
  out.sigma.resize(n);
  const double largest = n ? norms[order[0]] : 0.0;
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    for (std::size_t c = 0; c < n; ++c) out.vt(k, c) = v(c, j);
    if (norms[j] > 0.0 && norms[j] > largest * 1e-15) {
      for (std::size_t r = 0; r < rows; ++r) out.u(r, k) = a(r, j) / norms[j];
      filled[k] = true;
    }
  }
  // Null directions: complete U with Gram-Schmidt over the standard basis.
  std::size_t basis = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (filled[k]) continue;
    for (; basis < rows; ++basis) {
      std::vector<double> e(rows, 0.0);
      e[basis] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t o = 0; o < n; ++o) {
          if (!filled[o]) continue;
          double d = 0.0;
          for (std::size_t r = 0; r < rows; ++r) d += out.u(r, o) * e[r];
          for (std::size_t r = 0; r < rows; ++r) e[r] -= d * out.u(r, o);
        }
      double norm = 0.0;
      for (double x : e) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (std::size_t r = 0; r < rows; ++r) out.u(r, k) = e[r] / norm;
        out.sigma[k] = 0.0;
        filled[k] = true;
        ++basis;
        break;
      }
    }
  }
  return out;
}

}  // namespace

SvdResult svd(const Matrix& m, double tolerance, std::size_t max_sweeps) {
  for (double x : m.values())
    if (!std::isfinite(x)) throw std::invalid_argument("svd: non-finite entry");
  if (m.rows() >= m.cols()) return svd_tall(m, tolerance, max_sweeps);
  SvdResult t = svd_tall(transpose(m), tolerance, max_sweeps);
  return {transpose(t.vt), std::move(t.sigma), transpose(t.u)};
}

SentenceScores lsa_rank(const Document& doc, const IdfTable& idf, const Vocabulary& vocab,
                        std::size_t k) {
  if (doc.sentences.empty()) throw std::invalid_argument("lsa_rank: empty document");
  if (k == 0) throw std::invalid_argument("lsa_rank: K must be at least 1");
  const std::size_t n = doc.sentences.size();
  const SvdResult s = svd(term_sentence_matrix(doc, idf, vocab).weights);
  std::size_t rank = 0;
  for (double sigma : s.sigma)
    if (sigma > 1e-10 * s.sigma.front()) ++rank;

  std::vector<std::size_t> picked;
  std::vector<bool> taken(n, false);
  for (std::size_t topic = 0; topic < std::min(k, rank); ++topic) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j)
      if (!taken[j] && (best == n || std::abs(s.vt(topic, j)) > std::abs(s.vt(topic, best))))
        best = j;
    if (best == n) break;
    taken[best] = true;
    picked.push_back(best);
  }
  std::vector<std::size_t> rest;
  for (std::size_t j = 0; j < n; ++j)
    if (!taken[j]) rest.push_back(j);
  if (!s.vt.empty())
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(s.vt(0, a)) > std::abs(s.vt(0, b));
    });
  picked.insert(picked.end(), rest.begin(), rest.end());

  std::vector<double> scores(n);
  for (std::size_t p = 0; p < n; ++p)
    scores[picked[p]] = static_cast<double>(n - p) / static_cast<double>(n);
  return SentenceScores::all_present(std::move(scores));
}

BaselineMethod parse_baseline_method(std::string_view text) {
  if (text == "lead") return BaselineMethod::kLead;
  if (text == "vsm") return BaselineMethod::kVsm;
  if (text == "lsa") return BaselineMethod::kLsa;
  throw std::invalid_argument(fmt::format("unknown baseline method '{}'", text));
}

std::string_view to_string(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::kLead: return "lead";
    case BaselineMethod::kVsm: return "vsm";
    case BaselineMethod::kLsa: return "lsa";
  }
  return "?";
}

}  // namespace augsum
