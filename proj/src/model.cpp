#include "augsum/model.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <fmt/format.h>

namespace augsum {

void ModelConfig::sync() {
  features.max_positions = encoder.max_positions;
  features.max_sentences = encoder.max_sentences;
  head.d = encoder.d;
  head.max_sentences = encoder.max_sentences;
  head.ln_eps = encoder.ln_eps;
  head.init_stddev = encoder.init_stddev;
}

void ModelConfig::validate() const {
  encoder.validate();
  head.validate();
  if (features.max_positions != encoder.max_positions ||
      features.max_sentences != encoder.max_sentences || head.d != encoder.d)
    throw std::invalid_argument("model config: feature/head sizes disagree with the encoder");
}

Summarizer Summarizer::init(ModelConfig config, std::uint64_t seed) {
  config.validate();
  Summarizer s;
  s.config_ = config;
  Rng rng(seed);
  s.encoder_ = EncoderParams::init(config.encoder, config.features, rng);
  s.head_ = HeadParams::init(config.head, rng);
  return s;
}

std::vector<Param*> Summarizer::parameters() {
  std::vector<Param*> out = encoder_.parameters();
  for (Param* p : head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Param*> Summarizer::parameters() const {
  auto list = const_cast<Summarizer*>(this)->parameters();
  return {list.begin(), list.end()};
}

void Summarizer::set_encoder_frozen(bool frozen) {
  for (Param* p : encoder_.core_parameters()) p->frozen = frozen;
}

PackedDocument Summarizer::pack(const Document& doc, const Vocabulary& vocab,
                                const IdfTable& idf) const {
  return tokenize_pack(doc, vocab, idf, config_.features);
}

ag::Var Summarizer::logits(ag::Graph& g, const PackedDocument& packed) const {
  const ag::Var x = compose_embeddings(g, packed, encoder_, config_.features);
  const ag::Var hidden = encoder_forward(g, x, packed.attention_mask, encoder_);
  return head_logits(g, extract_cls(g, hidden, packed), head_);
}

ag::Var Summarizer::loss(ag::Graph& g, const PackedDocument& packed,
                         std::span<const int> labels) const {
  if (labels.size() != packed.sentence_count)
    throw std::invalid_argument(fmt::format("loss: {} labels for {} sentences", labels.size(),
                                            packed.sentence_count));
  std::vector<double> y;
  for (std::size_t s : packed.surviving_sentences) y.push_back(labels[s]);
  const std::vector<std::uint8_t> include(y.size(), 1);
  return g.bce_with_logits(logits(g, packed), y, include);
}

SentenceScores Summarizer::score(const PackedDocument& packed) const {
  ag::Graph g(false);
  const Matrix& probs = g.value(g.sigmoid(logits(g, packed)));
  SentenceScores scores;
  scores.values.assign(packed.sentence_count, 0.0);
  scores.present.assign(packed.sentence_count, false);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    scores.values[packed.surviving_sentences[r]] = probs(r, 0);
    scores.present[packed.surviving_sentences[r]] = true;
  }
  return scores;
}

}  // namespace augsum

namespace augsum {

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["encoder"] = {{"vocab_size", c.encoder.vocab_size}, {"d", c.encoder.d},
                  {"heads", c.encoder.heads},           {"layers", c.encoder.layers},
                  {"d_ff", c.encoder.d_ff},             {"max_positions", c.encoder.max_positions},
                  {"max_sentences", c.encoder.max_sentences},
                  {"ln_eps", c.encoder.ln_eps},         {"init_stddev", c.encoder.init_stddev}};
  j["features"] = {{"use_idf", c.features.use_idf},
                   {"use_confidence", c.features.use_confidence},
                   {"positional", to_string(c.features.positional)},
                   {"aux_injection", to_string(c.features.aux_injection)},
                   {"base", to_string(c.features.base)}};
  j["head"] = {{"kind", to_string(c.head.kind)},
               {"it_layers", c.head.it_layers},
               {"it_heads", c.head.it_heads},
               {"it_d_ff", c.head.it_d_ff},
               {"rnn_hidden", c.head.rnn_hidden},
               {"rnn_reverse", c.head.rnn_reverse}};
  return j;
}

std::string system_name(const ModelConfig& config) {
  std::string head(to_string(config.head.kind));
  std::transform(head.begin(), head.end(), head.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  const bool positional = config.features.positional == PositionalMode::kClsLearned;
  std::string aux;
  if (config.features.use_confidence) aux = "Confidence";
  if (config.features.use_idf) aux += aux.empty() ? "IDF" : " + IDF";
  if (aux.empty()) return positional ? head + " w/ Positional Embedding" : head;
  return head + " w/ " + aux + (positional ? "" : " (no Positional Embedding)");
}

namespace {

template <typename T>
void read_field(const nlohmann::json& section, const char* key, T& field) {
  if (section.contains(key)) field = section.at(key).get<T>();
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    read_field(e, "vocab_size", c.encoder.vocab_size);
    read_field(e, "d", c.encoder.d);
    read_field(e, "heads", c.encoder.heads);
    read_field(e, "layers", c.encoder.layers);
    read_field(e, "d_ff", c.encoder.d_ff);
    read_field(e, "max_positions", c.encoder.max_positions);
    read_field(e, "max_sentences", c.encoder.max_sentences);
    read_field(e, "ln_eps", c.encoder.ln_eps);
    read_field(e, "init_stddev", c.encoder.init_stddev);
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    read_field(f, "use_idf", c.features.use_idf);
    read_field(f, "use_confidence", c.features.use_confidence);
    if (f.contains("positional"))
      c.features.positional = parse_positional_mode(f.at("positional").get<std::string>());
    if (f.contains("aux_injection"))
      c.features.aux_injection = parse_aux_injection(f.at("aux_injection").get<std::string>());
    if (f.contains("base")) c.features.base = parse_base_composition(f.at("base").get<std::string>());
  }
  if (j.contains("head")) {
    const auto& h = j.at("head");
    if (h.contains("kind")) c.head.kind = parse_head_kind(h.at("kind").get<std::string>());
    read_field(h, "it_layers", c.head.it_layers);
    read_field(h, "it_heads", c.head.it_heads);
    read_field(h, "it_d_ff", c.head.it_d_ff);
    read_field(h, "rnn_hidden", c.head.rnn_hidden);
    read_field(h, "rnn_reverse", c.head.rnn_reverse);
  }
  c.sync();
  return c;
}

}  // namespace augsum
