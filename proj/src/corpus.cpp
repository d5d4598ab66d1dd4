#include "augsum/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "augsum/asr_sim.hpp"
#include "augsum/eval.hpp"
#include "augsum/random.hpp"

namespace augsum {

using nlohmann::json;

std::string_view kind_name(DocKind kind) { return kind == DocKind::kText ? "TD" : "SD"; }

TokenList Sentence::surfaces() const {
  TokenList out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.surface);
  return out;
}

std::size_t Document::word_count() const {
  std::size_t n = 0;
  for (const Sentence& s : sentences) n += s.tokens.size();
  return n;
}

TokenList Document::all_tokens() const {
  TokenList out;
  for (const Sentence& s : sentences)
    for (const Token& t : s.tokens) out.push_back(t.surface);
  return out;
}

bool Document::has_reference() const {
  for (const Reference& r : references)
    for (const TokenList& s : r)
      if (!s.empty()) return true;
  return false;
}

void validate_document(const Document& doc) {
  if (doc.sentences.empty()) throw CorpusError("document " + doc.id + " has no sentences");
  std::size_t with_conf = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const Sentence& s = doc.sentences[i];
    if (s.index != i)
      throw CorpusError(fmt::format("document {}: sentence {} carries index {}", doc.id, i, s.index));
    if (s.tokens.empty())
      throw CorpusError(fmt::format("document {}: sentence {} is empty", doc.id, i));
    for (const Token& t : s.tokens) {
      if (t.surface.empty()) throw CorpusError("document " + doc.id + ": empty token surface");
      if (t.confidence) {
        if (!(*t.confidence >= 0.0 && *t.confidence <= 1.0))
          throw CorpusError(fmt::format("document {}: confidence {} outside [0, 1]", doc.id,
                                        *t.confidence));
        ++with_conf;
      }
      ++total;
    }
  }
  if (with_conf != 0 && with_conf != total)
    throw CorpusError("document " + doc.id + ": confidence present on only some tokens");
  const bool spoken = with_conf == total;
  if (spoken != (doc.kind == DocKind::kSpoken))
    throw CorpusError(fmt::format("document {}: kind {} does not match confidence presence",
                                  doc.id, kind_name(doc.kind)));
}

void normalize_document(Document& doc) {
  bool any_conf = false;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    doc.sentences[i].index = i;
    for (const Token& t : doc.sentences[i].tokens) any_conf = any_conf || t.confidence.has_value();
  }
  doc.kind = any_conf ? DocKind::kSpoken : DocKind::kText;
}

namespace {

Document document_from_json(const json& j) {
  Document doc;
  doc.id = j.at("id").get<std::string>();
  const auto& sentences = j.at("sentences");
  if (!sentences.is_array()) throw CorpusError("\"sentences\" must be an array");
  for (const auto& js : sentences) {
    Sentence s;
    s.index = doc.sentences.size();
    for (const auto& jt : js) {
      Token t;
      t.surface = jt.at("w").get<std::string>();
      if (auto it = jt.find("c"); it != jt.end() && !it->is_null()) t.confidence = it->get<double>();
      if (auto it = jt.find("ok"); it != jt.end() && !it->is_null()) t.correct = it->get<bool>();
      s.tokens.push_back(std::move(t));
    }
    doc.sentences.push_back(std::move(s));
  }
  if (auto it = j.find("references"); it != j.end())
    doc.references = it->get<std::vector<Reference>>();

  normalize_document(doc);
  if (auto it = j.find("kind"); it != j.end()) {
    const auto declared = it->get<std::string>();
    if (declared != "TD" && declared != "SD")
      throw CorpusError("\"kind\" must be \"TD\" or \"SD\", got \"" + declared + "\"");
    const DocKind declared_kind = declared == "SD" ? DocKind::kSpoken : DocKind::kText;
    if (declared_kind == DocKind::kSpoken && doc.kind == DocKind::kText)
      throw CorpusError("kind SD declared but tokens carry no confidence");
    if (declared_kind == DocKind::kText && doc.kind == DocKind::kSpoken)
      throw CorpusError("kind TD declared but tokens carry confidences");
  }
  validate_document(doc);
  return doc;
}

nlohmann::ordered_json document_to_json(const Document& doc) {
  using ojson = nlohmann::ordered_json;
  ojson sentences = ojson::array();
  for (const Sentence& s : doc.sentences) {
    ojson tokens = ojson::array();
    for (const Token& t : s.tokens) {
      ojson jt = ojson::object();
      jt["w"] = t.surface;
      if (t.confidence) jt["c"] = *t.confidence;
      if (t.correct) jt["ok"] = *t.correct;
      tokens.push_back(std::move(jt));
    }
    sentences.push_back(std::move(tokens));
  }
  ojson out;
  out["id"] = doc.id;
  out["kind"] = std::string(kind_name(doc.kind));
  out["sentences"] = std::move(sentences);
  out["references"] = doc.references;
  return out;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      corpus.documents.push_back(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw CorpusError(fmt::format("line {}: malformed document record: {}", line_no, e.what()));
    } catch (const CorpusError& e) {
      throw CorpusError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  try {
    return parse_corpus(in);
  } catch (const CorpusError& e) {
    throw CorpusError(path.string() + ":" + e.what());
  }
}

void save_corpus(const Corpus& corpus, std::ostream& out) {
  for (const Document& doc : corpus.documents) out << document_to_json(doc).dump() << '\n';
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file " + path.string());
  save_corpus(corpus, out);
}

TokenList utf8_chars(std::string_view text) {
  TokenList out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) len = 1;
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

TokenList tokenize(std::string_view text, TokenizeMode mode) {
  TokenList out;
  if (mode == TokenizeMode::kCharacter) {
    for (std::string& ch : utf8_chars(text))
      if (ch.size() != 1 || !std::isspace(static_cast<unsigned char>(ch[0])))
        out.push_back(std::move(ch));
    return out;
  }
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

// ----------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"}) add(s);
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view surface) const { return find(surface).value_or(kUnk); }

TokenId Vocabulary::add(const std::string& surface, std::size_t count) {
  if (auto existing = find(surface)) return *existing;
  const auto id = static_cast<TokenId>(surfaces_.size());
  surfaces_.push_back(surface);
  counts_.push_back(count);
  ids_.emplace(surface, id);
  return id;
}

void Vocabulary::save(std::ostream& out) const {
  for (std::size_t i = 0; i < surfaces_.size(); ++i)
    out << i << '\t' << surfaces_[i] << '\t' << counts_[i] << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id_text, surface, count_text;
    if (!std::getline(fields, id_text, '\t') || !std::getline(fields, surface, '\t') ||
        !std::getline(fields, count_text, '\t'))
      throw CorpusError(fmt::format("vocabulary line {}: expected id, surface, count", line_no));
    std::size_t id = 0;
    std::size_t count = 0;
    try {
      id = std::stoul(id_text);
      count = std::stoul(count_text);
    } catch (const std::exception&) {
      throw CorpusError(fmt::format("vocabulary line {}: bad number", line_no));
    }
    if (id < kSpecialCount) {
      if (vocab.surface(static_cast<TokenId>(id)) != surface)
        throw CorpusError(fmt::format("vocabulary line {}: special id {} is not {}", line_no, id,
                                      vocab.surface(static_cast<TokenId>(id))));
      vocab.counts_[id] = count;
      continue;
    }
    if (id != vocab.size())
      throw CorpusError(fmt::format("vocabulary line {}: ids must be consecutive", line_no));
    vocab.add(surface, count);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open vocabulary file " + path.string());
  return load(in);
}

Vocabulary build_vocab(const Corpus& corpus, std::size_t min_count) {
  if (min_count == 0) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const Document& doc : corpus.documents)
    for (const Sentence& s : doc.sentences)
      for (const Token& t : s.tokens) ++freq[t.surface];
  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
  // std::map iteration is lexicographic, so a stable sort keeps ties in order.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [surface, count] : entries) {
    if (count < min_count) continue;
    if (vocab.find(surface)) continue;  // a literal special-token surface
    vocab.add(surface, count);
  }
  return vocab;
}

// ----------------------------------------------------------------------------
// Statistics

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.documents = corpus.size();
  if (corpus.empty()) return stats;
  double sentences = 0.0;
  double words_per_sentence = 0.0;
  double words = 0.0;
  for (const Document& doc : corpus.documents) {
    const auto m = static_cast<double>(doc.sentences.size());
    const auto w = static_cast<double>(doc.word_count());
    sentences += m;
    words += w;
    words_per_sentence += m > 0.0 ? w / m : 0.0;
  }
  const auto n = static_cast<double>(corpus.size());
  stats.sentences_per_document = sentences / n;
  stats.words_per_sentence = words_per_sentence / n;
  stats.words_per_document = words / n;
  return stats;
}

CorpusStats corpus_stats(const Corpus& spoken, const Corpus& text) {
  CorpusStats stats = corpus_stats(spoken);
  EditCounts words;
  EditCounts chars;
  for (const AsrDocumentReport& row : measure_corruption(text, spoken)) {
    words += row.words;
    chars += row.chars;
  }
  if (words.reference_length > 0)
    stats.wer_percent = 100.0 * static_cast<double>(words.errors()) /
                        static_cast<double>(words.reference_length);
  if (chars.reference_length > 0)
    stats.cer_percent = 100.0 * static_cast<double>(chars.errors()) /
                        static_cast<double>(chars.reference_length);
  return stats;
}

void write_stats_tsv(const CorpusStats& stats, std::ostream& out) {
  out << "Number of Doc.\t" << stats.documents << '\n';
  out << fmt::format("Avg. Num. of Sent. per Doc.\t{:.1f}\n", stats.sentences_per_document);
  out << fmt::format("Avg. Num. of words per Sent.\t{:.1f}\n", stats.words_per_sentence);
  out << fmt::format("Avg. Num. of words per Doc\t{:.1f}\n", stats.words_per_document);
  if (stats.wer_percent) out << fmt::format("Word Error Rate (WER%)\t{:.1f}\n", *stats.wer_percent);
  if (stats.cer_percent) out << fmt::format("Char. Error Rate (CER%)\t{:.1f}\n", *stats.cer_percent);
}

// ----------------------------------------------------------------------------
// Oracle labels

namespace {

struct Ngrams {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;

  /// Adds the n-grams of one sentence; none span a sentence boundary.
  void add(const TokenList& sentence, std::size_t n) {
    for (std::size_t i = 0; i + n <= sentence.size(); ++i) {
      std::string key = sentence[i];
      for (std::size_t j = 1; j < n; ++j) key += '\x1f' + sentence[i + j];
      ++counts[key];
      ++total;
    }
  }
  void add(const Ngrams& other) {
    for (const auto& [key, c] : other.counts) counts[key] += c;
    total += other.total;
  }
};

double overlap_f(const Ngrams& candidate, const Ngrams& reference) {
  std::size_t match = 0;
  for (const auto& [key, c] : candidate.counts)
    if (auto it = reference.counts.find(key); it != reference.counts.end())
      match += std::min(c, it->second);
  if (match == 0) return 0.0;
  const double p = static_cast<double>(match) / static_cast<double>(candidate.total);
  const double r = static_cast<double>(match) / static_cast<double>(reference.total);
  return 2.0 * p * r / (p + r);
}

}  // namespace

OracleLabels oracle_labels(const Document& doc, std::size_t max_summary_sentences) {
  OracleLabels out;
  out.document_id = doc.id;
  out.labels.assign(doc.sentences.size(), 0);
  if (!doc.has_reference()) {
    out.empty_reference = true;
    return out;
  }
  // Counting within sentences makes the objective a function of the selected
  // set alone, so relabeling follows any reordering of the document.
  std::vector<std::array<Ngrams, 2>> refs;
  for (const Reference& r : doc.references) {
    std::array<Ngrams, 2> g;
    for (const TokenList& s : r)
      for (std::size_t n = 1; n <= 2; ++n) g[n - 1].add(s, n);
    if (g[0].total > 0) refs.push_back(std::move(g));
  }
  std::vector<std::array<Ngrams, 2>> sentences(doc.sentences.size());
  for (std::size_t i = 0; i < doc.sentences.size(); ++i)
    for (std::size_t n = 1; n <= 2; ++n) sentences[i][n - 1].add(doc.sentences[i].surfaces(), n);

  std::array<Ngrams, 2> chosen;
  auto objective = [&](const std::array<Ngrams, 2>& cand) {
    double f1 = 0.0, f2 = 0.0;
    for (const auto& r : refs) {
      f1 = std::max(f1, overlap_f(cand[0], r[0]));
      f2 = std::max(f2, overlap_f(cand[1], r[1]));
    }
    return 0.5 * (f1 + f2);
  };

  double current = 0.0;
  for (std::size_t picked = 0; picked < max_summary_sentences; ++picked) {
    double best_gain = 0.0;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      if (out.labels[i]) continue;
      std::array<Ngrams, 2> trial = chosen;
      trial[0].add(sentences[i][0]);
      trial[1].add(sentences[i][1]);
      const double gain = objective(trial) - current;
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (!best) break;
    out.labels[*best] = 1;
    chosen[0].add(sentences[*best][0]);
    chosen[1].add(sentences[*best][1]);
    current = objective(chosen);
  }
  return out;
}

void save_labels(std::span<const OracleLabels> labels, std::ostream& out) {
  for (const OracleLabels& l : labels) {
    nlohmann::ordered_json j;
    j["id"] = l.document_id;
    j["labels"] = l.labels;
    j["empty_reference"] = l.empty_reference;
    out << j.dump() << '\n';
  }
}

std::vector<OracleLabels> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open labels file " + path.string());
  std::vector<OracleLabels> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      OracleLabels l;
      l.document_id = j.at("id").get<std::string>();
      l.labels = j.at("labels").get<std::vector<int>>();
      l.empty_reference = j.value("empty_reference", false);
      for (int v : l.labels)
        if (v != 0 && v != 1) throw CorpusError("labels must be 0 or 1");
      out.push_back(std::move(l));
    } catch (const json::exception& e) {
      throw CorpusError(fmt::format("{}:{}: malformed labels record: {}", path.string(), line_no,
                                    e.what()));
    } catch (const CorpusError& e) {
      throw CorpusError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

// ----------------------------------------------------------------------------
// Synthetic corpora

Corpus gen_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (!(config.summary_rate > 0.0 && config.summary_rate <= 1.0))
    throw std::invalid_argument("summary_rate must lie in (0, 1]");
  if (config.documents == 0) throw std::invalid_argument("documents must be positive");
  if (config.min_sentences == 0 || config.min_sentences > config.max_sentences)
    throw std::invalid_argument("sentence range is empty");
  if (config.min_words == 0 || config.min_words > config.max_words)
    throw std::invalid_argument("word range is empty");
  if (config.common_vocab == 0) throw std::invalid_argument("common_vocab must be positive");
  if (config.topic_words_per_document == 0 || config.topic_tokens_per_sentence == 0)
    throw std::invalid_argument("topic sentences need at least one topic token");
  const std::size_t reserved = config.topic_tokens_per_sentence + (config.marker_vocab ? 1 : 0);
  if (reserved > config.min_words)
    throw std::invalid_argument("min_words too small for the topic/marker tokens");
  if (2 * config.topic_vocab < config.documents * config.topic_words_per_document)
    throw std::invalid_argument("topic_vocab too small: each topic token may serve two documents");

  Rng rng(seed);
  std::vector<double> zipf_cdf(config.common_vocab);
  double total = 0.0;
  for (std::size_t r = 0; r < config.common_vocab; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), config.zipf_exponent);
    zipf_cdf[r] = total;
  }
  auto draw_common = [&] {
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(zipf_cdf.begin(), zipf_cdf.end(), u);
    const auto rank = std::min<std::size_t>(it - zipf_cdf.begin(), config.common_vocab - 1);
    return fmt::format("c{}", rank);
  };

  std::vector<std::size_t> topic_uses(config.topic_vocab, 0);
  Corpus corpus;
  for (std::size_t d = 0; d < config.documents; ++d) {
    // Least-used topic tokens first keeps every document frequency <= 2.
    std::vector<std::size_t> order(config.topic_vocab);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return topic_uses[a] < topic_uses[b]; });
    std::vector<std::string> topic_words;
    for (std::size_t k = 0; k < config.topic_words_per_document; ++k) {
      ++topic_uses[order[k]];
      topic_words.push_back(fmt::format("t{}", order[k]));
    }

    Document doc;
    doc.id = fmt::format("{}{:04d}", config.id_prefix, d);
    doc.kind = DocKind::kText;
    const std::size_t m =
        config.min_sentences + uniform_index(rng, config.max_sentences - config.min_sentences + 1);
    const auto summary_count = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(config.summary_rate * static_cast<double>(m))), 1, m);
    std::vector<std::size_t> positions(m);
    std::iota(positions.begin(), positions.end(), 0);
    shuffle(positions, rng);
    std::vector<bool> is_topic(m, false);
    for (std::size_t k = 0; k < summary_count; ++k) is_topic[positions[k]] = true;

    Reference reference;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t len =
          config.min_words + uniform_index(rng, config.max_words - config.min_words + 1);
      std::vector<std::string> words(len);
      for (auto& w : words) w = draw_common();
      if (is_topic[i]) {
        std::vector<std::size_t> slots(len);
        std::iota(slots.begin(), slots.end(), 0);
        shuffle(slots, rng);
        std::size_t slot = 0;
        for (std::size_t k = 0; k < config.topic_tokens_per_sentence; ++k)
          words[slots[slot++]] = topic_words[uniform_index(rng, topic_words.size())];
        if (config.marker_vocab) {
          const std::size_t at = slots[slot++];
          words[at] = fmt::format("m{}", uniform_index(rng, config.marker_vocab));
          if (config.marker_leads) std::swap(words[at], words[0]);
        }
      }
      Sentence s;
      s.index = i;
      for (auto& w : words) s.tokens.push_back(Token{w, std::nullopt, std::nullopt});
      if (is_topic[i]) reference.push_back(s.surfaces());
      doc.sentences.push_back(std::move(s));
    }
    doc.references.push_back(std::move(reference));
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace augsum
