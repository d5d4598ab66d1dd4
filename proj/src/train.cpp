#include "augsum/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "augsum/eval.hpp"
#include "augsum/random.hpp"

namespace augsum {

OptimizerState OptimizerState::create(std::span<Param* const> params, const AdamConfig& config) {
  OptimizerState s;
  s.config = config;
  for (const Param* p : params) {
    s.names.push_back(p->name);
    s.m.emplace_back(p->value.rows(), p->value.cols());
    s.v.emplace_back(p->value.rows(), p->value.cols());
  }
  return s;
}

double clip_gradients(std::span<Param* const> params, double max_norm) {
  double sq = 0.0;
  for (const Param* p : params)
    if (!p->frozen)
      for (double g : p->grad.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Param* p : params)
      if (!p->frozen)
        for (double& g : p->grad.values()) g *= factor;
  }
  return norm;
}

void adam_step(std::span<Param* const> params, OptimizerState& state) {
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Param& p = *params[i];
    if (!p.grad.same_shape(p.value) || !state.m[i].same_shape(p.value))
      throw std::invalid_argument(fmt::format("adam_step: shape mismatch in '{}'", p.name));
    if (p.frozen) continue;
    for (double g : p.grad.values())
      if (!std::isfinite(g))
        throw TrainingError(fmt::format("non-finite gradient in parameter group '{}'", p.name));
  }
  clip_gradients(params, state.config.clip_norm);

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    if (p.frozen) continue;
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    double* w = p.value.data();
    const double* g = p.grad.data();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      w[k] -= c.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + c.eps);
    }
  }
}

namespace {

double loss_value(const LossBuilder& build) {
  ag::Graph g(false);
  const ag::Var loss = build(g);
  return g.value(loss)(0, 0);
}

void compute_gradients(std::span<Param* const> params, const LossBuilder& build) {
  for (Param* p : params) p->zero_grad();
  ag::Graph g;
  const ag::Var loss = build(g);
  g.backward(loss);
  g.accumulate_param_grads(params);
}

}  // namespace

GradCheckReport grad_check(std::span<Param* const> params, const LossBuilder& build,
                           const GradCheckOptions& options) {
  compute_gradients(params, build);

  struct Coordinate {
    std::size_t param;
    std::size_t index;
  };
  std::vector<Coordinate> coords;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i]->frozen)
      for (std::size_t k = 0; k < params[i]->value.size(); ++k) coords.push_back({i, k});
  if (coords.size() > options.max_coordinates) {
    Rng rng(options.seed);
    shuffle(coords, rng);
    coords.resize(options.max_coordinates);
    std::sort(coords.begin(), coords.end(), [](const Coordinate& a, const Coordinate& b) {
      return a.param != b.param ? a.param < b.param : a.index < b.index;
    });
  }

  GradCheckReport report;
  report.max_relative_error = 0.0;
  const double h = options.step;
  for (const Coordinate& c : coords) {
    Param& p = *params[c.param];
    double& x = p.value.data()[c.index];
    const double original = x;
    auto at = [&](double offset) {
      x = original + offset;
      return loss_value(build);
    };
    // Paired differences first, so an unused coordinate yields exactly 0.
    const double near = at(h) - at(-h);
    const double far = at(2 * h) - at(-2 * h);
    const double numeric = (8.0 * near - far) / (12.0 * h);
    x = original;
    const double analytic = p.grad.data()[c.index];
    const double rel =
        std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric));
    ++report.checked;
    if (report.worst_parameter.empty() || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_parameter = p.name;
      report.worst_index = c.index;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(mix_seed(seed, epoch));
  shuffle(order, rng);
  return order;
}

namespace {

constexpr std::uint64_t kMaskSalt = 0x6d61736b696e67ULL;

double mlm_step_loss(ag::Graph& g, const EncoderParams& params, const PackedDocument& doc,
                     const FeatureConfig& features, const MaskingPolicy& masking,
                     std::uint64_t mask_seed, bool train) {
  const MaskedBatch batch = mask_tokens(doc.token_ids, masking, params.config.vocab_size,
                                        mask_seed, doc.attention_mask);
  PackedDocument masked = doc;
  masked.token_ids = batch.input;
  const ag::Var x = compose_embeddings(g, masked, params, features);
  const ag::Var hidden = encoder_forward(g, x, masked.attention_mask, params);
  const ag::Var loss = masked_lm_loss(g, batch, hidden, params);
  if (train) g.backward(loss);
  return g.value(loss)(0, 0);
}

FeatureConfig plain_features(FeatureConfig f) {
  f.use_idf = false;
  f.use_confidence = false;
  f.positional = PositionalMode::kNone;
  return f;
}

}  // namespace

std::vector<double> pretrain(EncoderParams& params, OptimizerState& optimizer,
                             std::span<const PackedDocument> documents, const PretrainConfig& cfg) {
  if (documents.empty() && optimizer.step < cfg.steps)
    throw TrainingError("pretrain: no documents");
  const FeatureConfig features = plain_features(cfg.features);
  std::vector<Param*> list = params.parameters();
  if (optimizer.names.empty()) optimizer = OptimizerState::create(list, cfg.adam);
  std::vector<double> losses;
  std::uint64_t cached_epoch = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::size_t> order;
  while (optimizer.step < cfg.steps) {
    const std::uint64_t s = optimizer.step;
    const std::uint64_t epoch = s / documents.size();
    if (epoch != cached_epoch) {
      order = epoch_order(documents.size(), cfg.seed, epoch);
      cached_epoch = epoch;
    }
    const PackedDocument& doc = documents[order[s % documents.size()]];
    for (Param* p : list) p->zero_grad();
    ag::Graph g;
    losses.push_back(mlm_step_loss(g, params, doc, features, cfg.masking,
                                   mix_seed(cfg.seed ^ kMaskSalt, s), true));
    g.accumulate_param_grads(list);
    adam_step(list, optimizer);
  }
  return losses;
}

double mlm_evaluate(const EncoderParams& params, std::span<const PackedDocument> documents,
                    const MaskingPolicy& masking, std::uint64_t seed,
                    const FeatureConfig& base_features) {
  const FeatureConfig features = plain_features(base_features);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const MaskedBatch probe = mask_tokens(documents[i].token_ids, masking,
                                          params.config.vocab_size, mix_seed(seed, i),
                                          documents[i].attention_mask);
    if (probe.positions.empty()) continue;
    ag::Graph g(false);
    total += mlm_step_loss(g, params, documents[i], features, masking, mix_seed(seed, i), false);
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

double mean_rouge1(const Summarizer& model, const DevSet& dev, double ratio) {
  if (dev.documents.size() != dev.packed.size())
    throw std::invalid_argument("mean_rouge1: documents and packed forms differ in count");
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < dev.documents.size(); ++i) {
    const Document& doc = dev.documents[i];
    if (!doc.has_reference()) continue;
    const SentenceScores scores = model.score(dev.packed[i]);
    SystemOutput out{doc.id, select_summary(scores, doc, ratio), scores.values};
    total += evaluate_document(out, doc).rouge1.f1;
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

FinetuneResult finetune(Summarizer& model, OptimizerState& optimizer,
                        std::span<const LabeledDocument> train, const DevSet& dev,
                        const FinetuneConfig& cfg, std::size_t first_epoch) {
  if (train.empty()) throw TrainingError("finetune: no labeled training documents");
  model.set_encoder_frozen(cfg.freeze_encoder);
  std::vector<Param*> list = model.parameters();
  if (optimizer.names.empty()) optimizer = OptimizerState::create(list, cfg.adam);

  const bool has_dev = !dev.documents.empty();
  FinetuneResult result;
  result.best = model;
  result.best_epoch = first_epoch;
  if (has_dev) result.best_dev_rouge1 = mean_rouge1(model, dev, cfg.ratio);

  for (std::size_t e = first_epoch; e < cfg.epochs; ++e) {
    double total = 0.0;
    for (std::size_t i : epoch_order(train.size(), cfg.seed, e)) {
      for (Param* p : list) p->zero_grad();
      ag::Graph g;
      const ag::Var loss = model.loss(g, train[i].packed, train[i].labels);
      g.backward(loss);
      g.accumulate_param_grads(list);
      adam_step(list, optimizer);
      total += g.value(loss)(0, 0);
    }
    EpochLog entry{e + 1, total / static_cast<double>(train.size()), std::nullopt};
    if (has_dev) {
      entry.dev_rouge1 = mean_rouge1(model, dev, cfg.ratio);
      if (*entry.dev_rouge1 > *result.best_dev_rouge1) {
        result.best_dev_rouge1 = entry.dev_rouge1;
        result.best = model;
        result.best_epoch = e + 1;
      }
    } else {
      result.best = model;
      result.best_epoch = e + 1;
    }
    result.log.push_back(entry);
  }
  return result;
}

Checkpoint Checkpoint::capture(std::span<const Param* const> params, nlohmann::ordered_json config,
                               const OptimizerState* optimizer, std::uint64_t seed,
                               std::uint64_t step) {
  Checkpoint c;
  c.config = std::move(config);
  for (const Param* p : params) c.parameters.push_back({p->name, p->value});
  if (optimizer) c.optimizer = *optimizer;
  c.seed = seed;
  c.step = step;
  return c;
}

std::size_t Checkpoint::restore(std::span<Param* const> params, bool require_all) const {
  std::unordered_map<std::string, const Matrix*> stored;
  for (const NamedMatrix& nm : parameters) stored[nm.name] = &nm.value;
  std::size_t set = 0;
  for (Param* p : params) {
    const auto it = stored.find(p->name);
    if (it == stored.end()) {
      if (require_all) throw CorpusError(fmt::format("checkpoint lacks parameter '{}'", p->name));
      continue;
    }
    const Matrix& src = *it->second;
    if (src.same_shape(p->value)) {
      p->value = src;
    } else if (!require_all && src.cols() == p->value.cols() && src.rows() < p->value.rows()) {
      std::copy(src.values().begin(), src.values().end(), p->value.values().begin());
    } else {
      throw CorpusError(fmt::format("checkpoint parameter '{}' is {}x{}, expected {}x{}", p->name,
                                    src.rows(), src.cols(), p->value.rows(), p->value.cols()));
    }
    ++set;
  }
  return set;
}

namespace {

void write_doubles(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError(fmt::format("cannot write {}", path.string()));
  for (double v : m.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

Matrix read_doubles(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(fmt::format("cannot open {}", path.string()));
  Matrix m(rows, cols);
  for (double& v : m.values()) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8))
      throw CorpusError(fmt::format("{}: truncated", path.string()));
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[b];
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::ifstream::traits_type::eof())
    throw CorpusError(fmt::format("{}: trailing bytes", path.string()));
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "params");
  nlohmann::ordered_json manifest;
  manifest["format_version"] = Checkpoint::kFormatVersion;
  manifest["config"] = c.config;
  nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
  for (const NamedMatrix& nm : c.parameters) {
    shapes.push_back({{"name", nm.name}, {"rows", nm.value.rows()}, {"cols", nm.value.cols()}});
    write_doubles(dir / "params" / (nm.name + ".bin"), nm.value);
  }
  manifest["parameters"] = shapes;
  if (c.optimizer) {
    const OptimizerState& o = *c.optimizer;
    fs::create_directories(dir / "optimizer");
    nlohmann::ordered_json names = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < o.names.size(); ++i) {
      names.push_back({{"name", o.names[i]}, {"rows", o.m[i].rows()}, {"cols", o.m[i].cols()}});
      write_doubles(dir / "optimizer" / (o.names[i] + ".m.bin"), o.m[i]);
      write_doubles(dir / "optimizer" / (o.names[i] + ".v.bin"), o.v[i]);
    }
    manifest["optimizer"] = {{"step", o.step},
                             {"lr", o.config.lr},
                             {"beta1", o.config.beta1},
                             {"beta2", o.config.beta2},
                             {"eps", o.config.eps},
                             {"clip_norm", o.config.clip_norm},
                             {"groups", names}};
  } else {
    manifest["optimizer"] = nullptr;
  }
  manifest["rng"] = {{"seed", c.seed}, {"step", c.step}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw CorpusError(fmt::format("cannot write {}", (dir / "manifest.json").string()));
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw CorpusError(fmt::format("no checkpoint manifest in {}", dir.string()));
  nlohmann::ordered_json manifest;
  try {
    manifest = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(fmt::format("checkpoint manifest: {}", e.what()));
  }
  const int version = manifest.value("format_version", 0);
  if (version != Checkpoint::kFormatVersion)
    throw CorpusError(fmt::format("checkpoint format version {} (expected {})", version,
                                  Checkpoint::kFormatVersion));
  Checkpoint c;
  c.config = manifest.at("config");
  for (const auto& entry : manifest.at("parameters")) {
    const std::string name = entry.at("name");
    c.parameters.push_back({name, read_doubles(dir / "params" / (name + ".bin"), entry.at("rows"),
                                               entry.at("cols"))});
  }
  if (!manifest.at("optimizer").is_null()) {
    const auto& o = manifest.at("optimizer");
    OptimizerState s;
    s.step = o.at("step");
    s.config = {o.at("lr"), o.at("beta1"), o.at("beta2"), o.at("eps"), o.at("clip_norm")};
    for (const auto& g : o.at("groups")) {
      const std::string name = g.at("name");
      s.names.push_back(name);
      s.m.push_back(read_doubles(dir / "optimizer" / (name + ".m.bin"), g.at("rows"), g.at("cols")));
      s.v.push_back(read_doubles(dir / "optimizer" / (name + ".v.bin"), g.at("rows"), g.at("cols")));
    }
    c.optimizer = std::move(s);
  }
  c.seed = manifest.at("rng").at("seed");
  c.step = manifest.at("rng").at("step");
  return c;
}

Summarizer load_summarizer(const Checkpoint& checkpoint) {
  if (!checkpoint.config.contains("model"))
    throw CorpusError("checkpoint config has no model section");
  Summarizer model = Summarizer::init(model_config_from_json(checkpoint.config.at("model")), 0);
  checkpoint.restore(model.parameters(), true);
  return model;
}

void write_curve_csv(std::span<const double> values, const std::filesystem::path& path,
                     std::string_view value_name) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CorpusError(fmt::format("cannot write {}", path.string()));
  out << "step," << value_name << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) out << fmt::format("{},{:.17g}\n", i + 1, values[i]);
}

}  // namespace augsum
