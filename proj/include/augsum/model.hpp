#pragma once
// Features + encoder + head wired into one scoring model.

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "augsum/encoder.hpp"
#include "augsum/features.hpp"
#include "augsum/heads.hpp"

namespace augsum {

struct ModelConfig {
  EncoderConfig encoder;
  FeatureConfig features;
  HeadConfig head;

  /// Copies shared sizes (d, max_positions, max_sentences) from the encoder
  /// into the feature and head sections.
  void sync();
  void validate() const;
};

/// Keys mirror the field names; missing keys keep the values of `base`.
nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

/// Row name of a configuration in the TD/SD result table, e.g.
/// "IT w/ Confidence + IDF". Rows with IDF or confidence assume the learned
/// sentence-position rows; without them the name says so.
std::string system_name(const ModelConfig& config);

class Summarizer {
 public:
  Summarizer() = default;
  static Summarizer init(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  EncoderParams& encoder() { return encoder_; }
  const EncoderParams& encoder() const { return encoder_; }
  HeadParams& head() { return head_; }
  const HeadParams& head() const { return head_; }

  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  /// Marks the contextual encoder frozen (or not); feature projections, the
  /// sentence-position table and the head stay trainable.
  void set_encoder_frozen(bool frozen);

  PackedDocument pack(const Document& doc, const Vocabulary& vocab, const IdfTable& idf) const;
  /// One logit per surviving sentence.
  ag::Var logits(ag::Graph& graph, const PackedDocument& packed) const;
  /// BCE over surviving sentences; labels are indexed by document sentence.
  ag::Var loss(ag::Graph& graph, const PackedDocument& packed, std::span<const int> labels) const;
  SentenceScores score(const PackedDocument& packed) const;

 private:
  ModelConfig config_;
  EncoderParams encoder_;
  HeadParams head_;
};

}  // namespace augsum
