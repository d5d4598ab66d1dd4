#include "augsum/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace augsum {

std::string_view to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::kSC: return "sc";
    case HeadKind::kIT: return "it";
    case HeadKind::kRNN: return "rnn";
  }
  return "?";
}

HeadKind parse_head_kind(std::string_view text) {
  if (text == "sc" || text == "SC") return HeadKind::kSC;
  if (text == "it" || text == "IT") return HeadKind::kIT;
  if (text == "rnn" || text == "RNN") return HeadKind::kRNN;
  throw std::invalid_argument(fmt::format("unknown head '{}'", text));
}

void HeadConfig::validate() const {
  if (d == 0) throw std::invalid_argument("head: d must be positive");
  if (kind == HeadKind::kIT) {
    if (max_sentences == 0) throw std::invalid_argument("head: max_sentences must be positive");
    if (it_layers > 0 && (it_heads == 0 || d % it_heads != 0 || it_d_ff == 0))
      throw std::invalid_argument("head: invalid inter-sentence transformer shape");
  }
}

namespace {

Param make(std::string name, std::size_t rows, std::size_t cols, double stddev, Rng* rng,
           double fill = 0.0) {
  Param p(std::move(name), rows, cols);
  if (rng)
    for (double& v : p.value.values()) v = normal(*rng, 0.0, stddev);
  else
    p.value.fill(fill);
  return p;
}

ag::Var output_layer(ag::Graph& g, ag::Var x, const HeadParams& p) {
  return g.add_row(g.matmul(x, g.parameter(p.out_w)), g.parameter(p.out_b));
}

}  // namespace

HeadParams HeadParams::init(const HeadConfig& config, Rng& rng) {
  config.validate();
  HeadParams p;
  p.config = config;
  const std::size_t d = config.d;
  const double sd = config.init_stddev;
  std::size_t out_width = d;
  switch (config.kind) {
    case HeadKind::kSC:
      break;
    case HeadKind::kIT:
      p.sentence_position = make("head.sentence_position", config.max_sentences, d, sd, &rng);
      for (std::size_t l = 0; l < config.it_layers; ++l)
        p.layers.push_back(
            LayerParams::init(fmt::format("head.layer{}", l), d, config.it_d_ff, sd, rng));
      if (config.it_layers > 0) {
        p.final_gain = make("head.final_gain", 1, d, 0, nullptr, 1.0);
        p.final_offset = make("head.final_offset", 1, d, 0, nullptr, 0.0);
      }
      break;
    case HeadKind::kRNN: {
      const std::size_t h = config.hidden_width();
      p.gru_wz = make("head.gru_wz", d + h, h, sd, &rng);
      p.gru_bz = make("head.gru_bz", 1, h, 0, nullptr);
      p.gru_wr = make("head.gru_wr", d + h, h, sd, &rng);
      p.gru_br = make("head.gru_br", 1, h, 0, nullptr);
      p.gru_wh = make("head.gru_wh", d + h, h, sd, &rng);
      p.gru_bh = make("head.gru_bh", 1, h, 0, nullptr);
      out_width = h;
      break;
    }
  }
  p.out_w = make("head.out_w", out_width, 1, sd, &rng);
  p.out_b = make("head.out_b", 1, 1, 0, nullptr);
  return p;
}

std::vector<Param*> HeadParams::parameters() {
  std::vector<Param*> out;
  auto add = [&](Param& q) {
    if (!q.value.empty()) out.push_back(&q);
  };
  add(sentence_position);
  for (LayerParams& l : layers)
    for (Param* q : l.parameters()) out.push_back(q);
  add(final_gain);
  add(final_offset);
  for (Param* q : {&gru_wz, &gru_bz, &gru_wr, &gru_br, &gru_wh, &gru_bh}) add(*q);
  add(out_w);
  add(out_b);
  return out;
}

std::vector<const Param*> HeadParams::parameters() const {
  auto list = const_cast<HeadParams*>(this)->parameters();
  return {list.begin(), list.end()};
}

ag::Var head_sc(ag::Graph& g, ag::Var t, const HeadParams& p) { return output_layer(g, t, p); }

ag::Var head_it(ag::Graph& g, ag::Var t, const HeadParams& p, std::vector<ag::Var>* attention) {
  const std::size_t m = g.value(t).rows();
  if (m > p.config.max_sentences)
    throw std::length_error(fmt::format("{} sentences exceed the head's max_sentences {}", m,
                                        p.config.max_sentences));
  std::vector<std::size_t> rows(m);
  for (std::size_t i = 0; i < m; ++i) rows[i] = i;
  ag::Var x = g.add(t, g.gather_rows(g.parameter(p.sentence_position), rows));
  for (const LayerParams& layer : p.layers)
    x = transformer_layer(g, x, layer, p.config.it_heads, p.config.ln_eps, {}, attention);
  if (!p.layers.empty())
    x = g.layer_norm(x, g.parameter(p.final_gain), g.parameter(p.final_offset), p.config.ln_eps);
  return output_layer(g, x, p);
}

ag::Var head_rnn(ag::Graph& g, ag::Var t, const HeadParams& p) {
  const std::size_t m = g.value(t).rows();
  const std::size_t hw = p.config.hidden_width();
  const ag::Var wz = g.parameter(p.gru_wz), bz = g.parameter(p.gru_bz);
  const ag::Var wr = g.parameter(p.gru_wr), br = g.parameter(p.gru_br);
  const ag::Var wh = g.parameter(p.gru_wh), bh = g.parameter(p.gru_bh);
  auto affine = [&](ag::Var x, ag::Var w, ag::Var b) { return g.add_row(g.matmul(x, w), b); };

  std::vector<ag::Var> states(m);
  ag::Var h = g.constant(Matrix(1, hw));
  for (std::size_t step = 0; step < m; ++step) {
    const std::size_t i = p.config.rnn_reverse ? m - 1 - step : step;
    const std::size_t row[] = {i};
    const ag::Var x = g.gather_rows(t, row);
    const ag::Var xh[] = {x, h};
    const ag::Var joined = g.concat_cols(xh);
    const ag::Var z = g.sigmoid(affine(joined, wz, bz));
    const ag::Var r = g.sigmoid(affine(joined, wr, br));
    const ag::Var xrh[] = {x, g.mul(r, h)};
    const ag::Var candidate = g.tanh(affine(g.concat_cols(xrh), wh, bh));
    h = g.add(g.mul(g.affine(z, -1.0, 1.0), candidate), g.mul(z, h));
    states[i] = h;
  }
  return output_layer(g, g.concat_rows(states), p);
}

ag::Var head_logits(ag::Graph& g, ag::Var t, const HeadParams& p) {
  switch (p.config.kind) {
    case HeadKind::kSC: return head_sc(g, t, p);
    case HeadKind::kIT: return head_it(g, t, p);
    case HeadKind::kRNN: return head_rnn(g, t, p);
  }
  throw std::logic_error("unreachable head kind");
}

SentenceScores head_scores(const SentenceVectors& vectors, const HeadParams& params) {
  if (vectors.vectors.rows() == 0) throw std::invalid_argument("head_scores: no sentence vectors");
  ag::Graph g(false);
  const Matrix& probs = g.value(g.sigmoid(head_logits(g, g.constant(vectors.vectors), params)));
  const std::size_t total = vectors.dropped.empty() ? probs.rows() : vectors.dropped.size();
  SentenceScores scores;
  scores.values.assign(total, 0.0);
  scores.present.assign(total, false);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const std::size_t s = vectors.sentences.empty() ? r : vectors.sentences[r];
    scores.values.at(s) = probs(r, 0);
    scores.present.at(s) = true;
  }
  return scores;
}

double bce_loss(const SentenceScores& scores, std::span<const int> labels) {
  if (labels.size() != scores.size() || scores.present.size() != scores.size())
    throw std::invalid_argument(fmt::format("bce_loss: {} scores but {} labels", scores.size(),
                                            labels.size()));
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!scores.present[i]) continue;
    const double p = std::clamp(scores.values[i], 1e-12, 1.0 - 1e-12);
    total -= labels[i] ? std::log(p) : std::log1p(-p);
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace augsum
