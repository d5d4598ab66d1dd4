#pragma once
// Transformer encoder H_theta with tied-embedding masked-LM objective and
// [CLS] read-out.

#include <cstdint>
#include <span>
#include <vector>

#include "augsum/autograd.hpp"
#include "augsum/corpus.hpp"
#include "augsum/features.hpp"
#include "augsum/random.hpp"

namespace augsum {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d = 32;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t d_ff = 64;
  std::size_t max_positions = 128;
  std::size_t max_sentences = 32;
  double ln_eps = 1e-6;
  double init_stddev = 0.02;

  /// Throws std::invalid_argument on zero sizes or d % heads != 0.
  void validate() const;
};

/// One pre-LN block: x + Attn(LN1(x)), then + FFN(LN2(.)). Keys carry no
/// bias: softmax rows are shift-invariant, so its gradient is identically 0.
struct LayerParams {
  Param ln1_gain, ln1_offset;
  Param wq, bq, wk, wv, bv, wo, bo;
  Param ln2_gain, ln2_offset;
  Param w1, b1, w2, b2;

  static LayerParams init(const std::string& prefix, std::size_t d, std::size_t d_ff,
                          double stddev, Rng& rng);
  std::vector<Param*> parameters();
};

struct EncoderParams {
  EncoderConfig config;
  Param word;              // V x d, shared with the output softmax
  Param token_position;    // max_positions x d
  Param segment;           // 2 x d
  Param sentence_position; // max_sentences x d
  /// (base width + aux channels) x d; empty unless the input is widened.
  Param input_proj, input_proj_bias;
  /// aux channels x d; used by the sum_project injection.
  Param aux_proj, aux_proj_bias;
  std::vector<LayerParams> layers;
  Param final_gain, final_offset;

  static EncoderParams init(const EncoderConfig& config, const FeatureConfig& features,
                            Rng& rng);
  /// Every parameter group in a fixed order; empty groups are skipped.
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  /// Groups that belong to the contextual encoder proper (everything except
  /// the feature projections and the sentence-position table).
  std::vector<Param*> core_parameters();
};

/// Applies one block on the graph. key_valid marks attendable columns; an
/// empty span means all. If attention is non-null the per-head probability
/// matrices are appended to it.
ag::Var transformer_layer(ag::Graph& graph, ag::Var x, const LayerParams& layer,
                          std::size_t heads, double ln_eps, std::span<const std::uint8_t> key_valid,
                          std::vector<ag::Var>* attention = nullptr);

/// Layers followed by a final layer norm. Throws std::length_error when the
/// sequence exceeds max_positions.
ag::Var encoder_forward(ag::Graph& graph, ag::Var inputs, std::span<const std::uint8_t> attention_mask,
                        const EncoderParams& params, std::vector<ag::Var>* attention = nullptr);
Matrix encoder_forward(const Matrix& inputs, std::span<const std::uint8_t> attention_mask,
                       const EncoderParams& params);

struct MaskingPolicy {
  double rate = 0.15;
  double mask_share = 0.8;
  double random_share = 0.1;
};

struct MaskedBatch {
  std::vector<TokenId> input;  // x-hat
  std::vector<bool> masked;    // m_t
  std::vector<std::size_t> positions;
  std::vector<TokenId> targets;  // original ids at positions
  std::vector<std::uint8_t> attention_mask;
};

bool is_maskable(TokenId id);

/// Selects maskable positions independently with policy.rate; selected
/// positions become [MASK], a random non-special token, or stay unchanged.
MaskedBatch mask_tokens(std::span<const TokenId> ids, const MaskingPolicy& policy,
                        std::size_t vocab_size, std::uint64_t seed,
                        std::span<const std::uint8_t> attention_mask = {});

/// Mean negative log-likelihood of the targets under the tied softmax
/// hidden_t . e(.), over masked positions; 0 if nothing is masked.
ag::Var masked_lm_loss(ag::Graph& graph, const MaskedBatch& batch, ag::Var hidden,
                       const EncoderParams& params);
double masked_lm_loss(const MaskedBatch& batch, const Matrix& hidden, const EncoderParams& params);

struct SentenceVectors {
  Matrix vectors;  // one row per surviving sentence
  std::vector<std::size_t> sentences;
  /// Indexed by document sentence; true for sentences lost to truncation.
  std::vector<bool> dropped;
};

ag::Var extract_cls(ag::Graph& graph, ag::Var hidden, const PackedDocument& packed);
SentenceVectors extract_cls(const Matrix& hidden, const PackedDocument& packed);

}  // namespace augsum
