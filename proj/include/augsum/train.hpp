#pragma once
// Optimizer, gradient verification, training loops and checkpoints.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "augsum/autograd.hpp"
#include "augsum/corpus.hpp"
#include "augsum/encoder.hpp"
#include "augsum/model.hpp"

namespace augsum {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm bound; 0 disables clipping.
  double clip_norm = 1.0;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::string> names;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  static OptimizerState create(std::span<Param* const> params, const AdamConfig& config);
};

/// Scales non-frozen gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradients(std::span<Param* const> params, double max_norm);

/// One bias-corrected Adam update after clipping. Frozen parameters are left
/// untouched. Throws TrainingError naming the first group with a non-finite
/// gradient, before anything is modified.
void adam_step(std::span<Param* const> params, OptimizerState& state);

struct GradCheckOptions {
  double step = 1e-3;
  std::size_t max_coordinates = 5000;
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  bool passed = true;
};

/// Builds the scalar loss on a fresh graph each call.
using LossBuilder = std::function<ag::Var(ag::Graph&)>;

/// Compares reverse-mode gradients of every non-frozen coordinate (or a
/// random sample of max_coordinates) with a fourth-order central difference.
GradCheckReport grad_check(std::span<Param* const> params, const LossBuilder& build,
                           const GradCheckOptions& options = {});

/// Step-indexed data order: epoch e visits documents in a permutation drawn
/// from mix_seed(seed, e).
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::uint64_t epoch);

struct PretrainConfig {
  std::size_t steps = 200;
  AdamConfig adam{};
  MaskingPolicy masking{};
  /// Only the base composition is used; auxiliary channels are ignored.
  FeatureConfig features{};
  std::uint64_t seed = 0;
};

/// Runs MLM steps from optimizer.step up to cfg.steps. Returns the loss of
/// every executed step. Documents are packed without auxiliary features.
std::vector<double> pretrain(EncoderParams& params, OptimizerState& optimizer,
                             std::span<const PackedDocument> documents, const PretrainConfig& cfg);

/// MLM loss at a fixed masking seed, averaged over documents, no update.
double mlm_evaluate(const EncoderParams& params, std::span<const PackedDocument> documents,
                    const MaskingPolicy& masking, std::uint64_t seed,
                    const FeatureConfig& features = {});

struct LabeledDocument {
  PackedDocument packed;
  std::vector<int> labels;
};

struct FinetuneConfig {
  std::size_t epochs = 30;
  AdamConfig adam{3e-4};
  bool freeze_encoder = false;
  double ratio = 0.1;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// Mean held-out ROUGE-1 F; absent without a held-out set.
  std::optional<double> dev_rouge1;
};

struct DevSet {
  std::span<const Document> documents;
  std::span<const PackedDocument> packed;
};

struct FinetuneResult {
  std::vector<EpochLog> log;
  /// Epoch (1-based) whose parameters were kept; 0 means the initial ones.
  std::size_t best_epoch = 0;
  std::optional<double> best_dev_rouge1;
  Summarizer best;
};

/// Fine-tunes end to end for epochs [first_epoch, cfg.epochs). The returned
/// best model is the one with the highest held-out ROUGE-1 (the last one if
/// there is no held-out set); `model` holds the final parameters.
FinetuneResult finetune(Summarizer& model, OptimizerState& optimizer,
                        std::span<const LabeledDocument> train, const DevSet& dev,
                        const FinetuneConfig& cfg, std::size_t first_epoch = 0);

/// Mean ROUGE-1 F of budgeted selections over documents with references.
double mean_rouge1(const Summarizer& model, const DevSet& dev, double ratio);

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  static constexpr int kFormatVersion = 1;
  nlohmann::ordered_json config;
  std::vector<NamedMatrix> parameters;
  std::optional<OptimizerState> optimizer;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  static Checkpoint capture(std::span<const Param* const> params, nlohmann::ordered_json config,
                            const OptimizerState* optimizer, std::uint64_t seed,
                            std::uint64_t step);
  /// Copies groups with matching names into params. A group whose stored
  /// matrix has fewer rows but the same column count fills the leading rows
  /// (a projection that gained aux rows). Returns the number of groups set.
  std::size_t restore(std::span<Param* const> params, bool require_all) const;
};

/// Directory layout: manifest.json, params/<name>.bin, and optimizer
/// moments in optimizer/<name>.m.bin / .v.bin; little-endian doubles.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Rebuilds a model from a checkpoint whose config holds a "model" section.
Summarizer load_summarizer(const Checkpoint& checkpoint);

void write_curve_csv(std::span<const double> values, const std::filesystem::path& path,
                     std::string_view value_name = "loss");

}  // namespace augsum
