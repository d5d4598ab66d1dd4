#include "augsum/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include <fmt/format.h>

#include "augsum/encoder.hpp"

namespace augsum {

double IdfTable::value(TokenId id) const {
  if (id >= idf.size() || (df[id] == 0 && !Vocabulary::is_special(id))) return default_idf;
  return idf[id];
}

namespace {

double raw_idf_of(const IdfTable& table, const Vocabulary& vocab, const std::string& surface) {
  const auto id = vocab.find(surface);
  return id ? table.value(*id) : table.default_idf;
}

}  // namespace

IdfTable compute_idf(const Corpus& corpus, const Vocabulary& vocab) {
  if (corpus.empty()) throw std::invalid_argument("compute_idf: empty corpus");
  IdfTable table;
  table.document_count = corpus.size();
  table.df.assign(vocab.size(), 0);
  table.idf.assign(vocab.size(), 0.0);
  const double n = static_cast<double>(corpus.size());
  table.default_idf = std::log(n / 0.5);

  for (const Document& doc : corpus.documents) {
    std::unordered_set<TokenId> seen;
    for (const Sentence& s : doc.sentences)
      for (const Token& t : s.tokens)
        if (auto id = vocab.find(t.surface); id && !Vocabulary::is_special(*id)) seen.insert(*id);
    for (TokenId id : seen) ++table.df[id];
  }
  for (TokenId id = Vocabulary::kSpecialCount; id < vocab.size(); ++id)
    table.idf[id] = table.df[id] > 0 ? std::log(n / static_cast<double>(table.df[id]))
                                     : table.default_idf;

  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (const Document& doc : corpus.documents)
    for (const Sentence& s : doc.sentences)
      for (const Token& t : s.tokens) {
        const double v = raw_idf_of(table, vocab, t.surface);
        sum += v;
        sum_sq += v * v;
        ++count;
      }
  if (count > 0) {
    table.mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq / static_cast<double>(count) - table.mean * table.mean);
    table.stddev = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return table;
}

void IdfTable::write_tsv(std::ostream& out, const Vocabulary& vocab) const {
  if (vocab.size() != idf.size())
    throw std::invalid_argument("IdfTable::write_tsv: vocabulary size mismatch");
  out << fmt::format("# documents\t{}\n", document_count);
  out << fmt::format("# default_idf\t{:.17g}\n", default_idf);
  out << fmt::format("# mean\t{:.17g}\n", mean);
  out << fmt::format("# stddev\t{:.17g}\n", stddev);
  out << "token\tdf\tidf\n";
  for (TokenId id = 0; id < vocab.size(); ++id)
    out << fmt::format("{}\t{}\t{:.17g}\n", vocab.surface(id), df[id], idf[id]);
}

IdfTable IdfTable::read_tsv(std::istream& in, const Vocabulary& vocab) {
  IdfTable table;
  table.df.assign(vocab.size(), 0);
  table.idf.assign(vocab.size(), 0.0);
  std::vector<bool> filled(vocab.size(), false);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw CorpusError(fmt::format("idf table line {}: expected tab-separated fields", line_no));
    if (line.starts_with("# ")) {
      const std::string key = line.substr(2, tab - 2);
      const std::string val = line.substr(tab + 1);
      if (key == "documents") table.document_count = std::stoull(val);
      else if (key == "default_idf") table.default_idf = std::stod(val);
      else if (key == "mean") table.mean = std::stod(val);
      else if (key == "stddev") table.stddev = std::stod(val);
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line == "token\tdf\tidf") continue;
    }
    const auto tab2 = line.find('\t', tab + 1);
    if (tab2 == std::string::npos)
      throw CorpusError(fmt::format("idf table line {}: expected 3 fields", line_no));
    const auto id = vocab.find(std::string_view(line).substr(0, tab));
    if (!id) continue;
    table.df[*id] = std::stoull(line.substr(tab + 1, tab2 - tab - 1));
    table.idf[*id] = std::stod(line.substr(tab2 + 1));
    filled[*id] = true;
  }
  if (table.document_count == 0) throw CorpusError("idf table: missing document count");
  for (TokenId id = Vocabulary::kSpecialCount; id < vocab.size(); ++id)
    if (!filled[id]) table.idf[id] = table.default_idf;
  return table;
}

IdfTable IdfTable::read_tsv(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw CorpusError(fmt::format("cannot open {}", path.string()));
  return read_tsv(in, vocab);
}

std::string_view to_string(PositionalMode mode) {
  return mode == PositionalMode::kNone ? "none" : "cls_learned";
}
std::string_view to_string(AuxInjection mode) {
  return mode == AuxInjection::kConcatProject ? "concat_project" : "sum_project";
}
std::string_view to_string(BaseComposition mode) {
  return mode == BaseComposition::kSum ? "sum" : "concat";
}

PositionalMode parse_positional_mode(std::string_view text) {
  if (text == "none") return PositionalMode::kNone;
  if (text == "cls_learned") return PositionalMode::kClsLearned;
  throw std::invalid_argument(fmt::format("unknown positional mode '{}'", text));
}
AuxInjection parse_aux_injection(std::string_view text) {
  if (text == "concat_project") return AuxInjection::kConcatProject;
  if (text == "sum_project") return AuxInjection::kSumProject;
  throw std::invalid_argument(fmt::format("unknown aux injection mode '{}'", text));
}
BaseComposition parse_base_composition(std::string_view text) {
  if (text == "sum") return BaseComposition::kSum;
  if (text == "concat") return BaseComposition::kConcat;
  throw std::invalid_argument(fmt::format("unknown base composition '{}'", text));
}

PackedDocument tokenize_pack(const Document& doc, const Vocabulary& vocab, const IdfTable& idf,
                             const FeatureConfig& cfg) {
  if (doc.sentences.empty()) throw std::invalid_argument("tokenize_pack: document has no sentences");
  if (cfg.use_confidence && doc.kind != DocKind::kSpoken)
    throw std::invalid_argument(
        fmt::format("tokenize_pack: confidence feature requested for TD document {}", doc.id));
  if (cfg.max_positions < 3) throw std::invalid_argument("tokenize_pack: max_positions < 3");

  PackedDocument p;
  p.sentence_count = doc.sentences.size();
  auto push = [&](TokenId id, std::size_t sentence, double idf_value, double confidence) {
    p.position_ids.push_back(p.token_ids.size());
    p.token_ids.push_back(id);
    p.segment_ids.push_back(static_cast<std::uint8_t>((p.cls_positions.size() - 1) % 2));
    p.sentence_of_token.push_back(sentence);
    p.idf.push_back(idf_value);
    p.confidence.push_back(confidence);
    p.attention_mask.push_back(1);
  };

  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const Sentence& s = doc.sentences[si];
    std::size_t take = s.tokens.size();
    if (p.length() + take + 2 > cfg.max_positions) {
      if (!p.cls_positions.empty()) {
        for (std::size_t rest = si; rest < doc.sentences.size(); ++rest)
          p.dropped_sentences.push_back(rest);
        break;
      }
      take = cfg.max_positions - 2;
    }
    p.cls_positions.push_back(p.length());
    p.surviving_sentences.push_back(si);
    push(Vocabulary::kCls, si, 0.0, 1.0);
    for (std::size_t k = 0; k < take; ++k) {
      const Token& t = s.tokens[k];
      const auto found = vocab.find(t.surface);
      const TokenId id = found ? *found : Vocabulary::kUnk;
      double idf_value = 0.0;
      if (cfg.use_idf)
        idf_value = idf.standardize(found ? idf.value(*found) : idf.default_idf);
      push(id, si, idf_value, t.confidence.value_or(1.0));
    }
    push(Vocabulary::kSep, si, 0.0, 1.0);
  }
  return p;
}

std::vector<std::vector<TokenId>> unpack_sentences(const PackedDocument& packed) {
  std::vector<std::vector<TokenId>> out;
  for (std::size_t i = 0; i < packed.cls_positions.size(); ++i) {
    const std::size_t begin = packed.cls_positions[i] + 1;
    const std::size_t end =
        i + 1 < packed.cls_positions.size() ? packed.cls_positions[i + 1] - 1 : packed.length() - 1;
    out.emplace_back(packed.token_ids.begin() + static_cast<std::ptrdiff_t>(begin),
                     packed.token_ids.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

ag::Var compose_embeddings(ag::Graph& graph, const PackedDocument& packed,
                           const EncoderParams& params, const FeatureConfig& cfg) {
  const std::size_t n = packed.length();
  if (n > params.config.max_positions)
    throw std::length_error(fmt::format("packed length {} exceeds max_positions {}", n,
                                        params.config.max_positions));
  std::vector<std::size_t> word_rows(packed.token_ids.begin(), packed.token_ids.end());
  for (std::size_t r : word_rows)
    if (r >= params.word.value.rows())
      throw std::out_of_range(fmt::format("token id {} outside the embedding table", r));
  std::vector<std::size_t> segment_rows(packed.segment_ids.begin(), packed.segment_ids.end());

  const ag::Var word = graph.gather_rows(graph.parameter(params.word), word_rows);
  const ag::Var pos = graph.gather_rows(graph.parameter(params.token_position), packed.position_ids);
  const ag::Var seg = graph.gather_rows(graph.parameter(params.segment), segment_rows);

  ag::Var base;
  if (cfg.base == BaseComposition::kSum) {
    base = graph.add(graph.add(word, pos), seg);
  } else {
    const ag::Var parts[] = {word, pos, seg};
    base = graph.concat_cols(parts);
  }

  const std::size_t k = cfg.aux_channels();
  ag::Var aux{};
  if (k > 0) {
    Matrix m(n, k);
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t c = 0;
      if (cfg.use_idf) m(t, c++) = packed.idf[t];
      if (cfg.use_confidence) m(t, c++) = packed.confidence[t];
    }
    aux = graph.constant(std::move(m));
  }

  const bool project_input = !params.input_proj.value.empty();
  ag::Var x = base;
  if (cfg.aux_injection == AuxInjection::kConcatProject) {
    if (project_input) {
      ag::Var widened = base;
      if (k > 0) {
        const ag::Var parts[] = {base, aux};
        widened = graph.concat_cols(parts);
      }
      if (graph.value(widened).cols() != params.input_proj.value.rows())
        throw std::invalid_argument("compose_embeddings: projection does not match features");
      x = graph.add_row(graph.matmul(widened, graph.parameter(params.input_proj)),
                        graph.parameter(params.input_proj_bias));
    } else if (k > 0 || cfg.base == BaseComposition::kConcat) {
      throw std::invalid_argument("compose_embeddings: parameters lack the input projection");
    }
  } else {
    if (cfg.base == BaseComposition::kConcat) {
      if (!project_input)
        throw std::invalid_argument("compose_embeddings: parameters lack the input projection");
      x = graph.add_row(graph.matmul(base, graph.parameter(params.input_proj)),
                        graph.parameter(params.input_proj_bias));
    }
    if (k > 0) {
      if (params.aux_proj.value.rows() != k)
        throw std::invalid_argument("compose_embeddings: aux projection does not match features");
      x = graph.add(x, graph.add_row(graph.matmul(aux, graph.parameter(params.aux_proj)),
                                     graph.parameter(params.aux_proj_bias)));
    }
  }

  if (cfg.positional == PositionalMode::kClsLearned) {
    const std::size_t rows = params.sentence_position.value.rows();
    std::vector<std::size_t> index;
    for (std::size_t s : packed.surviving_sentences) index.push_back(std::min(s, rows - 1));
    x = graph.add_rows_at(x, packed.cls_positions,
                          graph.gather_rows(graph.parameter(params.sentence_position), index));
  }
  return x;
}

Matrix compose_embeddings(const PackedDocument& packed, const EncoderParams& params,
                          const FeatureConfig& cfg) {
  ag::Graph graph(false);
  return graph.value(compose_embeddings(graph, packed, params, cfg));
}

}  // namespace augsum
