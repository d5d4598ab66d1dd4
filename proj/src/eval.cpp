#include "augsum/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "augsum/parallel.hpp"

namespace augsum {
namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts count_ngrams(std::span<const std::string> tokens, int n,
                         std::size_t& total) {
  NgramCounts counts;
  total = 0;
  const auto width = static_cast<std::size_t>(n);
  if (tokens.size() < width) return counts;
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < width; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
    ++total;
  }
  return counts;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

RougeScore best_of(const std::vector<RougeScore>& scores, RougeVariant variant) {
  RougeScore best{0.0, 0.0, 0.0, variant};
  bool first = true;
  for (const RougeScore& s : scores) {
    if (first || s.f1 > best.f1) best = s;
    first = false;
  }
  best.variant = variant;
  return best;
}

}  // namespace

RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const TokenList> references, int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("rouge_n: n must be 1 or 2");
  const RougeVariant variant = n == 1 ? RougeVariant::kR1 : RougeVariant::kR2;
  std::size_t cand_total = 0;
  const NgramCounts cand = count_ngrams(candidate, n, cand_total);
  std::vector<RougeScore> per_reference;
  for (const TokenList& ref : references) {
    std::size_t ref_total = 0;
    const NgramCounts ref_counts = count_ngrams(ref, n, ref_total);
    RougeScore s{0.0, 0.0, 0.0, variant};
    if (cand_total > 0 && ref_total > 0) {
      std::size_t match = 0;
      for (const auto& [gram, count] : cand) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) match += std::min(count, it->second);
      }
      s.precision = static_cast<double>(match) / static_cast<double>(cand_total);
      s.recall = static_cast<double>(match) / static_cast<double>(ref_total);
      s.f1 = harmonic(s.precision, s.recall);
    }
    per_reference.push_back(s);
  }
  return best_of(per_reference, variant);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const TokenList> references) {
  std::vector<RougeScore> per_reference;
  for (const TokenList& ref : references) {
    RougeScore s{0.0, 0.0, 0.0, RougeVariant::kRL};
    if (!candidate.empty() && !ref.empty()) {
      const auto lcs = static_cast<double>(lcs_length(candidate, ref));
      s.precision = lcs / static_cast<double>(candidate.size());
      s.recall = lcs / static_cast<double>(ref.size());
      s.f1 = harmonic(s.precision, s.recall);
    }
    per_reference.push_back(s);
  }
  return best_of(per_reference, RougeVariant::kRL);
}

TokenList flatten(const Reference& reference) {
  TokenList out;
  for (const TokenList& sentence : reference)
    out.insert(out.end(), sentence.begin(), sentence.end());
  return out;
}

std::vector<TokenList> flatten_references(const Document& doc) {
  std::vector<TokenList> refs;
  for (const Reference& r : doc.references) {
    TokenList flat = flatten(r);
    if (!flat.empty()) refs.push_back(std::move(flat));
  }
  return refs;
}

std::vector<std::size_t> select_summary(const SentenceScores& scores,
                                        const Document& doc, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument("select_summary: ratio must lie in (0, 1]");
  const std::size_t m = doc.sentences.size();
  if (scores.values.size() != m)
    throw std::invalid_argument("select_summary: score count != sentence count");
  // The epsilon keeps products such as 0.29 * 100 from flooring one short.
  const auto budget = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(doc.word_count()) + 1e-9));

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < m; ++i)
    if (scores.present.empty() || scores.present[i]) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.values[a] > scores.values[b];
  });

  std::vector<std::size_t> selected;
  std::size_t used = 0;
  for (std::size_t i : order) {
    const std::size_t len = doc.sentences[i].tokens.size();
    if (used + len <= budget) {
      selected.push_back(i);
      used += len;
    }
  }
  if (selected.empty() && !order.empty()) selected.push_back(order.front());
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<ConfidenceSample> confidence_samples(const Corpus& corpus) {
  std::vector<ConfidenceSample> out;
  for (const Document& doc : corpus.documents)
    for (const Sentence& s : doc.sentences)
      for (const Token& t : s.tokens)
        if (t.confidence && t.correct) out.push_back({*t.confidence, *t.correct});
  return out;
}

double nce(std::span<const ConfidenceSample> samples) {
  constexpr double kFloor = 1e-6;
  std::size_t correct = 0;
  for (const auto& s : samples) correct += s.correct ? 1 : 0;
  if (correct == 0 || correct == samples.size())
    throw std::invalid_argument("nce: needs both correct and incorrect tokens");
  const double n = static_cast<double>(samples.size());
  const double p = static_cast<double>(correct) / n;
  const double h_max = -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
  double h_conf = 0.0;
  for (const auto& s : samples) {
    const double c = std::clamp(s.confidence, kFloor, 1.0 - kFloor);
    h_conf -= s.correct ? std::log2(c) : std::log2(1.0 - c);
  }
  h_conf /= n;
  return (h_max - h_conf) / h_max;
}

EerResult eer_det(std::span<const ConfidenceSample> samples) {
  std::vector<double> correct_c;
  std::vector<double> incorrect_c;
  for (const auto& s : samples) (s.correct ? correct_c : incorrect_c).push_back(s.confidence);
  if (correct_c.empty() || incorrect_c.empty())
    throw std::invalid_argument("eer_det: needs both correct and incorrect tokens");
  std::sort(correct_c.begin(), correct_c.end());
  std::sort(incorrect_c.begin(), incorrect_c.end());

  std::vector<double> thresholds;
  thresholds.reserve(samples.size());
  for (const auto& s : samples) thresholds.push_back(s.confidence);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto n_cor = static_cast<double>(correct_c.size());
  const auto n_inc = static_cast<double>(incorrect_c.size());
  EerResult result;
  for (double t : thresholds) {
    // Accept iff c >= t.
    const auto inc_rejected = std::lower_bound(incorrect_c.begin(), incorrect_c.end(), t) -
                              incorrect_c.begin();
    const auto cor_rejected =
        std::lower_bound(correct_c.begin(), correct_c.end(), t) - correct_c.begin();
    DetPoint p;
    p.threshold = t;
    p.false_accept = (n_inc - static_cast<double>(inc_rejected)) / n_inc;
    p.false_reject = static_cast<double>(cor_rejected) / n_cor;
    result.curve.push_back(p);
  }

  // FAR - FRR starts at 1 (accept everything) and ends <= 0, so a crossing
  // always exists.
  const auto& c = result.curve;
  result.eer = c.back().false_accept;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d0 = c[i].false_accept - c[i].false_reject;
    if (d0 == 0.0) {
      result.eer = c[i].false_accept;
      break;
    }
    if (i + 1 < c.size()) {
      const double d1 = c[i + 1].false_accept - c[i + 1].false_reject;
      if (d0 > 0.0 && d1 < 0.0) {
        const double alpha = d0 / (d0 - d1);
        result.eer = c[i].false_accept + alpha * (c[i + 1].false_accept - c[i].false_accept);
        break;
      }
    }
  }
  return result;
}

void write_det_csv(const EerResult& result, std::ostream& out) {
  out << "threshold,far,frr\n";
  for (const DetPoint& p : result.curve)
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", p.threshold, p.false_accept,
                       p.false_reject);
}

void write_run(std::span<const SystemOutput> outputs, std::ostream& out) {
  for (const SystemOutput& o : outputs) {
    nlohmann::ordered_json j;
    j["id"] = o.id;
    j["selected"] = o.selected;
    j["scores"] = o.scores;
    out << j.dump() << '\n';
  }
}

std::vector<SystemOutput> read_run(std::istream& in) {
  std::vector<SystemOutput> outputs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SystemOutput o;
      o.id = j.at("id").get<std::string>();
      o.selected = j.at("selected").get<std::vector<std::size_t>>();
      o.scores = j.at("scores").get<std::vector<double>>();
      outputs.push_back(std::move(o));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(fmt::format("run file line {}: {}", line_no, e.what()));
    }
  }
  return outputs;
}

std::vector<SystemOutput> read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open run file " + path.string());
  return read_run(in);
}

SystemScores evaluate_document(const SystemOutput& output, const Document& doc) {
  const std::vector<TokenList> refs = flatten_references(doc);
  if (refs.empty()) throw CorpusError("document " + doc.id + " has no reference");
  TokenList candidate;
  std::vector<std::size_t> selected = output.selected;
  std::sort(selected.begin(), selected.end());
  for (std::size_t i : selected) {
    if (i >= doc.sentences.size())
      throw CorpusError(fmt::format("document {}: selected index {} out of range", doc.id, i));
    for (const Token& t : doc.sentences[i].tokens) candidate.push_back(t.surface);
  }
  SystemScores s;
  s.rouge1 = rouge_n(candidate, refs, 1);
  s.rouge2 = rouge_n(candidate, refs, 2);
  s.rougeL = rouge_l(candidate, refs);
  s.documents = 1;
  return s;
}

SystemScores evaluate_system(std::span<const SystemOutput> outputs, const Corpus& corpus,
                             std::size_t threads) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const Document& d : corpus.documents) by_id.emplace(d.id, &d);
  std::vector<const Document*> docs;
  docs.reserve(outputs.size());
  for (const SystemOutput& o : outputs) {
    auto it = by_id.find(o.id);
    if (it == by_id.end()) throw CorpusError("run references unknown document " + o.id);
    docs.push_back(it->second);
  }
  std::vector<SystemScores> per_doc(outputs.size());
  parallel_for(outputs.size(), threads,
               [&](std::size_t i) { per_doc[i] = evaluate_document(outputs[i], *docs[i]); });

  SystemScores total;
  auto accumulate = [](RougeScore& acc, const RougeScore& s) {
    acc.precision += s.precision;
    acc.recall += s.recall;
    acc.f1 += s.f1;
  };
  for (const SystemScores& s : per_doc) {
    accumulate(total.rouge1, s.rouge1);
    accumulate(total.rouge2, s.rouge2);
    accumulate(total.rougeL, s.rougeL);
    ++total.documents;
  }
  if (total.documents > 0) {
    const auto n = static_cast<double>(total.documents);
    for (RougeScore* r : {&total.rouge1, &total.rouge2, &total.rougeL}) {
      r->precision /= n;
      r->recall /= n;
      r->f1 /= n;
    }
  }
  return total;
}

std::string format_score(double value) {
  // Half-up on the decimal value; the epsilon absorbs binary representation
  // error such as 0.4305 -> 0.43049999...
  const double scaled = std::floor(value * 1000.0 + 0.5 + 1e-9);
  return fmt::format("{:.3f}", scaled / 1000.0);
}

void Report::set(const std::string& system, DocKind kind, const ReportCells& cells) {
  auto it = std::find_if(rows_.begin(), rows_.end(),
                         [&](const ReportRow& r) { return r.system == system; });
  if (it == rows_.end()) {
    rows_.push_back(ReportRow{system, std::nullopt, std::nullopt});
    it = rows_.end() - 1;
  }
  (kind == DocKind::kText ? it->text : it->spoken) = cells;
}

namespace {

std::vector<std::string> row_cells(const ReportRow& row) {
  std::vector<std::string> cells{row.system};
  for (const auto* group : {&row.text, &row.spoken}) {
    if (*group) {
      cells.push_back(format_score((*group)->rouge1));
      cells.push_back(format_score((*group)->rouge2));
      cells.push_back(format_score((*group)->rougeL));
    } else {
      cells.insert(cells.end(), 3, "-");
    }
  }
  return cells;
}

const std::vector<std::string> kHeader{"Method",     "TD ROUGE-1", "TD ROUGE-2",
                                       "TD ROUGE-L", "SD ROUGE-1", "SD ROUGE-2",
                                       "SD ROUGE-L"};

}  // namespace

void Report::write_tsv(std::ostream& out) const {
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
    out << '\n';
  };
  emit(kHeader);
  for (const ReportRow& row : rows_) emit(row_cells(row));
}

void Report::write_text(std::ostream& out) const {
  std::vector<std::vector<std::string>> table{kHeader};
  for (const ReportRow& row : rows_) table.push_back(row_cells(row));
  std::vector<std::size_t> width(kHeader.size(), 0);
  for (const auto& r : table)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());

  std::size_t group_width = 0;
  for (std::size_t i = 1; i <= 3; ++i) group_width += width[i] + 2;
  out << fmt::format("{:<{}}  {:^{}}{:^{}}\n", "", width[0], "Text Documents (TD)",
                     group_width, "Spoken Documents (SD)", group_width);
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line = fmt::format("{:<{}}", table[r][0], width[0]);
    for (std::size_t i = 1; i < table[r].size(); ++i) {
      // Column titles drop their TD/SD prefix under the group banner.
      const std::string& cell = r == 0 ? table[r][i].substr(3) : table[r][i];
      line += fmt::format("  {:>{}}", cell, width[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
}

}  // namespace augsum
