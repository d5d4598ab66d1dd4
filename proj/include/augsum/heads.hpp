#pragma once
// Summarization layers mapping sentence vectors to inclusion scores.

#include <span>
#include <string_view>
#include <vector>

#include "augsum/autograd.hpp"
#include "augsum/corpus.hpp"
#include "augsum/encoder.hpp"
#include "augsum/scores.hpp"

namespace augsum {

enum class HeadKind { kSC, kIT, kRNN };

std::string_view to_string(HeadKind kind);
HeadKind parse_head_kind(std::string_view text);

struct HeadConfig {
  HeadKind kind = HeadKind::kIT;
  std::size_t d = 32;
  /// Inter-sentence transformer depth k.
  std::size_t it_layers = 2;
  std::size_t it_heads = 2;
  std::size_t it_d_ff = 64;
  std::size_t max_sentences = 32;
  /// GRU state width; 0 means d.
  std::size_t rnn_hidden = 0;
  bool rnn_reverse = false;
  double ln_eps = 1e-6;
  double init_stddev = 0.02;

  std::size_t hidden_width() const { return rnn_hidden == 0 ? d : rnn_hidden; }
  void validate() const;
};

struct HeadParams {
  HeadConfig config;
  // IT
  Param sentence_position;
  std::vector<LayerParams> layers;
  Param final_gain, final_offset;
  // RNN: maps from [x, h] (d + h rows) to h columns.
  Param gru_wz, gru_bz, gru_wr, gru_br, gru_wh, gru_bh;
  // Output affine map, shared by all variants.
  Param out_w, out_b;

  static HeadParams init(const HeadConfig& config, Rng& rng);
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
};

/// Each returns an m x 1 column of logits for the m rows of t.
ag::Var head_sc(ag::Graph& graph, ag::Var t, const HeadParams& params);
ag::Var head_it(ag::Graph& graph, ag::Var t, const HeadParams& params,
                std::vector<ag::Var>* attention = nullptr);
ag::Var head_rnn(ag::Graph& graph, ag::Var t, const HeadParams& params);
ag::Var head_logits(ag::Graph& graph, ag::Var t, const HeadParams& params);

/// Sigmoid scores laid out over all document sentences; dropped sentences
/// are absent and score 0.
SentenceScores head_scores(const SentenceVectors& vectors, const HeadParams& params);

/// Mean binary cross-entropy over present sentences, p clamped to
/// [1e-12, 1 - 1e-12]. Throws std::invalid_argument on a length mismatch.
double bce_loss(const SentenceScores& scores, std::span<const int> labels);

}  // namespace augsum
