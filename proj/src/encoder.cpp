#include "augsum/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace augsum {

void EncoderConfig::validate() const {
  if (vocab_size <= Vocabulary::kSpecialCount)
    throw std::invalid_argument("encoder: vocabulary has no regular tokens");
  if (d == 0 || heads == 0 || d_ff == 0 || max_positions == 0 || max_sentences == 0)
    throw std::invalid_argument("encoder: sizes must be positive");
  if (d % heads != 0)
    throw std::invalid_argument(fmt::format("encoder: d={} not divisible by heads={}", d, heads));
  if (!(ln_eps > 0.0)) throw std::invalid_argument("encoder: ln_eps must be positive");
}

namespace {

Param normal_param(std::string name, std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Param p(std::move(name), rows, cols);
  for (double& v : p.value.values()) v = normal(rng, 0.0, stddev);
  return p;
}

Param constant_param(std::string name, std::size_t rows, std::size_t cols, double value) {
  Param p(std::move(name), rows, cols);
  p.value.fill(value);
  return p;
}

void push_nonempty(std::vector<Param*>& out, Param& p) {
  if (!p.value.empty()) out.push_back(&p);
}

}  // namespace

LayerParams LayerParams::init(const std::string& prefix, std::size_t d, std::size_t d_ff,
                              double stddev, Rng& rng) {
  LayerParams l;
  l.ln1_gain = constant_param(prefix + ".ln1_gain", 1, d, 1.0);
  l.ln1_offset = constant_param(prefix + ".ln1_offset", 1, d, 0.0);
  l.wq = normal_param(prefix + ".wq", d, d, stddev, rng);
  l.bq = constant_param(prefix + ".bq", 1, d, 0.0);
  l.wk = normal_param(prefix + ".wk", d, d, stddev, rng);
  l.wv = normal_param(prefix + ".wv", d, d, stddev, rng);
  l.bv = constant_param(prefix + ".bv", 1, d, 0.0);
  l.wo = normal_param(prefix + ".wo", d, d, stddev, rng);
  l.bo = constant_param(prefix + ".bo", 1, d, 0.0);
  l.ln2_gain = constant_param(prefix + ".ln2_gain", 1, d, 1.0);
  l.ln2_offset = constant_param(prefix + ".ln2_offset", 1, d, 0.0);
  l.w1 = normal_param(prefix + ".w1", d, d_ff, stddev, rng);
  l.b1 = constant_param(prefix + ".b1", 1, d_ff, 0.0);
  l.w2 = normal_param(prefix + ".w2", d_ff, d, stddev, rng);
  l.b2 = constant_param(prefix + ".b2", 1, d, 0.0);
  return l;
}

std::vector<Param*> LayerParams::parameters() {
  return {&ln1_gain, &ln1_offset, &wq, &bq, &wk, &wv, &bv, &wo,
          &bo,       &ln2_gain,   &ln2_offset, &w1, &b1, &w2, &b2};
}

EncoderParams EncoderParams::init(const EncoderConfig& config, const FeatureConfig& features,
                                  Rng& rng) {
  config.validate();
  const std::size_t d = config.d;
  const double sd = config.init_stddev;
  EncoderParams p;
  p.config = config;
  p.word = normal_param("word", config.vocab_size, d, sd, rng);
  p.token_position = normal_param("token_position", config.max_positions, d, sd, rng);
  p.segment = normal_param("segment", 2, d, sd, rng);
  p.sentence_position = normal_param("sentence_position", config.max_sentences, d, sd, rng);

  const std::size_t base_width = features.base == BaseComposition::kSum ? d : 3 * d;
  const std::size_t k = features.aux_channels();
  std::size_t proj_rows = 0;
  if (features.aux_injection == AuxInjection::kConcatProject) {
    if (k > 0 || features.base == BaseComposition::kConcat) proj_rows = base_width + k;
  } else if (features.base == BaseComposition::kConcat) {
    proj_rows = base_width;
  }
  if (proj_rows > 0) {
    // Identity on the base block so that enabling a feature starts from the
    // plain embedding path; only the aux rows are random.
    p.input_proj = Param("input_proj", proj_rows, d);
    for (std::size_t r = 0; r < base_width; ++r) p.input_proj.value(r, r % d) = 1.0;
    for (std::size_t r = base_width; r < proj_rows; ++r)
      for (std::size_t c = 0; c < d; ++c) p.input_proj.value(r, c) = normal(rng, 0.0, sd);
    p.input_proj_bias = constant_param("input_proj_bias", 1, d, 0.0);
  }
  if (features.aux_injection == AuxInjection::kSumProject && k > 0) {
    p.aux_proj = normal_param("aux_proj", k, d, sd, rng);
    p.aux_proj_bias = constant_param("aux_proj_bias", 1, d, 0.0);
  }
  for (std::size_t l = 0; l < config.layers; ++l)
    p.layers.push_back(LayerParams::init(fmt::format("layer{}", l), d, config.d_ff, sd, rng));
  p.final_gain = constant_param("final_gain", 1, d, 1.0);
  p.final_offset = constant_param("final_offset", 1, d, 0.0);
  return p;
}

std::vector<Param*> EncoderParams::parameters() {
  std::vector<Param*> out;
  for (Param* q : {&word, &token_position, &segment, &sentence_position, &input_proj,
                   &input_proj_bias, &aux_proj, &aux_proj_bias})
    push_nonempty(out, *q);
  for (LayerParams& l : layers)
    for (Param* q : l.parameters()) out.push_back(q);
  out.push_back(&final_gain);
  out.push_back(&final_offset);
  return out;
}

std::vector<const Param*> EncoderParams::parameters() const {
  auto mutable_list = const_cast<EncoderParams*>(this)->parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

std::vector<Param*> EncoderParams::core_parameters() {
  std::vector<Param*> out = {&word, &token_position, &segment};
  for (LayerParams& l : layers)
    for (Param* q : l.parameters()) out.push_back(q);
  out.push_back(&final_gain);
  out.push_back(&final_offset);
  return out;
}

ag::Var transformer_layer(ag::Graph& g, ag::Var x, const LayerParams& layer, std::size_t heads,
                          double ln_eps, std::span<const std::uint8_t> key_valid,
                          std::vector<ag::Var>* attention) {
  const std::size_t d = g.value(x).cols();
  if (heads == 0 || d % heads != 0)
    throw std::invalid_argument("transformer_layer: width not divisible by head count");
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto affine = [&](ag::Var in, const Param& w, const Param& b) {
    return g.add_row(g.matmul(in, g.parameter(w)), g.parameter(b));
  };

  const ag::Var h = g.layer_norm(x, g.parameter(layer.ln1_gain), g.parameter(layer.ln1_offset),
                                 ln_eps);
  const ag::Var q = affine(h, layer.wq, layer.bq);
  const ag::Var k = g.matmul(h, g.parameter(layer.wk));
  const ag::Var v = affine(h, layer.wv, layer.bv);
  std::vector<ag::Var> contexts;
  for (std::size_t a = 0; a < heads; ++a) {
    const ag::Var qa = heads == 1 ? q : g.slice_cols(q, a * dh, dh);
    const ag::Var ka = heads == 1 ? k : g.slice_cols(k, a * dh, dh);
    const ag::Var va = heads == 1 ? v : g.slice_cols(v, a * dh, dh);
    const ag::Var probs = g.softmax_rows(g.scale(g.matmul_nt(qa, ka), scale), key_valid);
    if (attention) attention->push_back(probs);
    contexts.push_back(g.matmul(probs, va));
  }
  const ag::Var context = heads == 1 ? contexts.front() : g.concat_cols(contexts);
  const ag::Var x1 = g.add(x, affine(context, layer.wo, layer.bo));

  const ag::Var h2 = g.layer_norm(x1, g.parameter(layer.ln2_gain), g.parameter(layer.ln2_offset),
                                  ln_eps);
  const ag::Var ff = affine(g.gelu(affine(h2, layer.w1, layer.b1)), layer.w2, layer.b2);
  return g.add(x1, ff);
}

ag::Var encoder_forward(ag::Graph& g, ag::Var inputs, std::span<const std::uint8_t> attention_mask,
                        const EncoderParams& params, std::vector<ag::Var>* attention) {
  const Matrix& in = g.value(inputs);
  if (in.rows() > params.config.max_positions)
    throw std::length_error(fmt::format("sequence length {} exceeds max_positions {}", in.rows(),
                                        params.config.max_positions));
  if (in.cols() != params.config.d)
    throw std::invalid_argument("encoder_forward: input width differs from d");
  if (!attention_mask.empty() && attention_mask.size() != in.rows())
    throw std::invalid_argument("encoder_forward: attention mask length mismatch");
  ag::Var x = inputs;
  for (const LayerParams& layer : params.layers)
    x = transformer_layer(g, x, layer, params.config.heads, params.config.ln_eps, attention_mask,
                          attention);
  return g.layer_norm(x, g.parameter(params.final_gain), g.parameter(params.final_offset),
                      params.config.ln_eps);
}

Matrix encoder_forward(const Matrix& inputs, std::span<const std::uint8_t> attention_mask,
                       const EncoderParams& params) {
  ag::Graph g(false);
  return g.value(encoder_forward(g, g.constant(inputs), attention_mask, params));
}

bool is_maskable(TokenId id) {
  return id != Vocabulary::kPad && id != Vocabulary::kCls && id != Vocabulary::kSep;
}

MaskedBatch mask_tokens(std::span<const TokenId> ids, const MaskingPolicy& policy,
                        std::size_t vocab_size, std::uint64_t seed,
                        std::span<const std::uint8_t> attention_mask) {
  if (!(policy.rate >= 0.0 && policy.rate < 1.0))
    throw std::invalid_argument("mask_tokens: rate must lie in [0, 1)");
  if (!attention_mask.empty() && attention_mask.size() != ids.size())
    throw std::invalid_argument("mask_tokens: attention mask length mismatch");
  MaskedBatch batch;
  batch.input.assign(ids.begin(), ids.end());
  batch.masked.assign(ids.size(), false);
  batch.attention_mask = attention_mask.empty()
                             ? std::vector<std::uint8_t>(ids.size(), 1)
                             : std::vector<std::uint8_t>(attention_mask.begin(), attention_mask.end());
  const std::size_t regular = vocab_size > Vocabulary::kSpecialCount
                                  ? vocab_size - Vocabulary::kSpecialCount
                                  : 0;
  Rng rng(seed);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (!is_maskable(ids[t]) || !batch.attention_mask[t]) continue;
    if (!(uniform01(rng) < policy.rate)) continue;
    batch.masked[t] = true;
    batch.positions.push_back(t);
    batch.targets.push_back(ids[t]);
    const double u = uniform01(rng);
    if (u < policy.mask_share) {
      batch.input[t] = Vocabulary::kMask;
    } else if (u < policy.mask_share + policy.random_share && regular > 0) {
      batch.input[t] = static_cast<TokenId>(Vocabulary::kSpecialCount + uniform_index(rng, regular));
    }
  }
  return batch;
}

ag::Var masked_lm_loss(ag::Graph& g, const MaskedBatch& batch, ag::Var hidden,
                       const EncoderParams& params) {
  if (g.value(hidden).rows() != batch.input.size())
    throw std::invalid_argument("masked_lm_loss: hidden states not aligned with batch");
  if (batch.positions.empty()) return g.constant(Matrix(1, 1, 0.0));
  const ag::Var h = g.gather_rows(hidden, batch.positions);
  const ag::Var logits = g.matmul_nt(h, g.parameter(params.word));
  const std::vector<std::size_t> targets(batch.targets.begin(), batch.targets.end());
  return g.softmax_cross_entropy(logits, targets);
}

double masked_lm_loss(const MaskedBatch& batch, const Matrix& hidden, const EncoderParams& params) {
  ag::Graph g(false);
  return g.value(masked_lm_loss(g, batch, g.constant(hidden), params))(0, 0);
}

ag::Var extract_cls(ag::Graph& g, ag::Var hidden, const PackedDocument& packed) {
  if (g.value(hidden).rows() != packed.length())
    throw std::invalid_argument("extract_cls: hidden states not aligned with packed document");
  return g.gather_rows(hidden, packed.cls_positions);
}

SentenceVectors extract_cls(const Matrix& hidden, const PackedDocument& packed) {
  ag::Graph g(false);
  SentenceVectors out;
  out.vectors = g.value(extract_cls(g, g.constant(hidden), packed));
  out.sentences = packed.surviving_sentences;
  out.dropped.assign(packed.sentence_count, false);
  for (std::size_t s : packed.dropped_sentences) out.dropped[s] = true;
  return out;
}

}  // namespace augsum
