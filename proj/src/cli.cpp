#include "augsum/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "augsum/asr_sim.hpp"
#include "augsum/baselines.hpp"
#include "augsum/corpus.hpp"
#include "augsum/eval.hpp"
#include "augsum/features.hpp"
#include "augsum/model.hpp"
#include "augsum/parallel.hpp"

namespace augsum {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// Config + flag overlay

/// Flags are bound to private storage; after parsing, every flag that was
/// given is written into the config document at its JSON pointer, so config
/// fields are the single source the subcommands read from.
class Overlay {
 public:
  template <class T>
  CLI::Option* option(CLI::App* app, const std::string& names, const std::string& pointer,
                      const std::string& help) {
    auto box = std::make_shared<T>();
    CLI::Option* opt = app->add_option(names, *box, help);
    writers_.push_back([opt, pointer, box](json& j) {
      if (opt->count()) j[json::json_pointer(pointer)] = *box;
    });
    return opt;
  }

  /// Paths given on the command line are made absolute, so that only paths
  /// that come from the config file are resolved against output_dir.
  CLI::Option* path(CLI::App* app, const std::string& names, const std::string& pointer,
                    const std::string& help) {
    auto box = std::make_shared<std::string>();
    CLI::Option* opt = app->add_option(names, *box, help);
    writers_.push_back([opt, pointer, box](json& j) {
      if (opt->count()) j[json::json_pointer(pointer)] = fs::absolute(*box).lexically_normal().string();
    });
    return opt;
  }

  /// --name / --no-name pair.
  CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& pointer,
                    const std::string& help) {
    auto box = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag("--" + name + ",!--no-" + name, *box, help);
    writers_.push_back([opt, pointer, box](json& j) {
      if (opt->count()) j[json::json_pointer(pointer)] = *box;
    });
    return opt;
  }

  void apply(json& j) const {
    for (const auto& w : writers_) w(j);
  }

 private:
  std::vector<std::function<void(json&)>> writers_;
};

class Settings {
 public:
  explicit Settings(json root) : root_(std::move(root)) {
    if (has("/output_dir")) base_ = fs::path(get<std::string>("/output_dir"));
  }

  const json& root() const { return root_; }
  bool has(const std::string& pointer) const {
    return root_.contains(json::json_pointer(pointer)) &&
           !root_.at(json::json_pointer(pointer)).is_null();
  }

  template <class T>
  T get(const std::string& pointer) const {
    try {
      return root_.at(json::json_pointer(pointer)).get<T>();
    } catch (const json::exception& e) {
      throw UsageError(fmt::format("config field {}: {}", pointer, e.what()));
    }
  }
  template <class T>
  T get(const std::string& pointer, T fallback) const {
    return has(pointer) ? get<T>(pointer) : fallback;
  }

  /// First configured pointer wins; relative paths resolve against output_dir.
  std::optional<fs::path> path(std::initializer_list<std::string> pointers) const {
    for (const std::string& p : pointers)
      if (has(p)) return resolve(get<std::string>(p));
    return std::nullopt;
  }
  fs::path require_path(std::initializer_list<std::string> pointers, const char* flag) const {
    if (auto p = path(pointers)) return *p;
    throw UsageError(fmt::format("missing {} (or config field {})", flag, *pointers.begin()));
  }
  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_ / p; }

  std::uint64_t seed() const {
    if (!has("/seed")) throw UsageError("a seed is required: pass --seed or set \"seed\" in the config");
    return get<std::uint64_t>("/seed");
  }
  std::size_t threads() const { return get<std::size_t>("/threads", 0); }

 private:
  json root_;
  fs::path base_;
};

// ----------------------------------------------------------------------------
// File helpers

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::ofstream open_out(const fs::path& p) {
  ensure_parent(p);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + p.string());
  return out;
}

template <class F>
void write_file(const fs::path& p, F&& body) {
  std::ofstream out = open_out(p);
  body(out);
  out.flush();
  if (!out) throw CorpusError("write failed: " + p.string());
}

void write_json(const fs::path& p, const ojson& j) {
  write_file(p, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw CorpusError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CorpusError(fmt::format("{}: {}", p.string(), e.what()));
  }
}

/// "dir/name.jsonl" -> "dir/name<suffix>".
fs::path sibling(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out.replace_extension();
  out += suffix;
  return out;
}

Vocabulary load_vocab(const fs::path& p) { return Vocabulary::load(p); }

IdfTable load_idf_or_empty(const std::optional<fs::path>& p, const Vocabulary& vocab) {
  if (p && fs::exists(*p)) return IdfTable::read_tsv(*p, vocab);
  return IdfTable{};
}

template <class E, class F>
E parse_enum(const std::string& text, F parse) {
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string format_rouge(const SystemScores& s) {
  return fmt::format("R1 {} R2 {} RL {}", format_score(s.rouge1.f1), format_score(s.rouge2.f1),
                     format_score(s.rougeL.f1));
}

ModelConfig model_from(const Settings& s, std::size_t vocab_size) {
  ModelConfig mc;
  try {
    if (s.has("/model")) mc = model_config_from_json(s.root().at("model"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config field /model: {}", e.what()));
  }
  mc.encoder.vocab_size = vocab_size;
  mc.sync();
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return mc;
}

AdamConfig adam_from(const Settings& s, const std::string& section, double default_lr) {
  AdamConfig a;
  a.lr = s.get<double>(section + "/lr", default_lr);
  a.beta1 = s.get<double>(section + "/beta1", a.beta1);
  a.beta2 = s.get<double>(section + "/beta2", a.beta2);
  a.eps = s.get<double>(section + "/eps", a.eps);
  a.clip_norm = s.get<double>(section + "/clip_norm", a.clip_norm);
  return a;
}

void copy_side_files(const fs::path& dir, const fs::path& vocab, const std::optional<fs::path>& idf) {
  fs::create_directories(dir);
  fs::copy_file(vocab, dir / "vocab.tsv", fs::copy_options::overwrite_existing);
  if (idf && fs::exists(*idf)) fs::copy_file(*idf, dir / "idf.tsv", fs::copy_options::overwrite_existing);
}

struct Context {
  const Settings& settings;
  std::ostream& out;
};

// ----------------------------------------------------------------------------
// Subcommands

void cmd_gen_synthetic(const Context& c) {
  const Settings& s = c.settings;
  SyntheticConfig g;
  const std::string k = "/gen_synthetic/";
  g.documents = s.get(k + "documents", g.documents);
  g.min_sentences = s.get(k + "min_sentences", g.min_sentences);
  g.max_sentences = s.get(k + "max_sentences", g.max_sentences);
  g.min_words = s.get(k + "min_words", g.min_words);
  g.max_words = s.get(k + "max_words", g.max_words);
  g.common_vocab = s.get(k + "common_vocab", g.common_vocab);
  g.topic_vocab = s.get(k + "topic_vocab", g.topic_vocab);
  g.topic_words_per_document = s.get(k + "topic_words_per_document", g.topic_words_per_document);
  g.topic_tokens_per_sentence = s.get(k + "topic_tokens_per_sentence", g.topic_tokens_per_sentence);
  g.summary_rate = s.get(k + "summary_rate", g.summary_rate);
  g.marker_vocab = s.get(k + "marker_vocab", g.marker_vocab);
  g.marker_leads = s.get(k + "marker_leads", g.marker_leads);
  g.zipf_exponent = s.get(k + "zipf_exponent", g.zipf_exponent);
  g.id_prefix = s.get(k + "id_prefix", g.id_prefix);
  const fs::path out = s.require_path({k + "out", "/corpus/td"}, "--out");

  Corpus corpus;
  try {
    corpus = gen_synthetic(g, s.seed());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ensure_parent(out);
  save_corpus(corpus, out);
  const CorpusStats stats = corpus_stats(corpus);
  if (auto p = s.path({k + "stats"})) write_file(*p, [&](std::ostream& o) { write_stats_tsv(stats, o); });
  c.out << fmt::format("gen-synthetic: {} documents, {:.1f} sentences/doc, {:.1f} words/sentence -> {}\n",
                       stats.documents, stats.sentences_per_document, stats.words_per_sentence,
                       out.string());
}

void cmd_simulate_asr(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/simulate_asr/";
  NoiseConfig n;
  n.target_wer = s.get(k + "target_wer", n.target_wer);
  n.substitution_share = s.get(k + "substitution_share", n.substitution_share);
  n.deletion_share = s.get(k + "deletion_share", n.deletion_share);
  n.insertion_share = s.get(k + "insertion_share", n.insertion_share);
  n.correct_alpha = s.get(k + "correct_alpha", n.correct_alpha);
  n.correct_beta = s.get(k + "correct_beta", n.correct_beta);
  n.error_alpha = s.get(k + "error_alpha", n.error_alpha);
  n.error_beta = s.get(k + "error_beta", n.error_beta);
  n.seed = s.seed();
  try {
    n.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path in = s.require_path({k + "in", "/corpus/td"}, "--in");
  const fs::path out = s.require_path({k + "out", "/corpus/sd"}, "--out");
  const fs::path report = s.path({k + "report"}).value_or(sibling(out, ".asr.tsv"));

  const Corpus text = load_corpus(in);
  for (const Document& d : text.documents)
    if (d.kind != DocKind::kText) throw CorpusError("simulate-asr input must be TD; " + d.id + " is SD");
  const Vocabulary vocab = build_vocab(text, 1);
  Corpus spoken;
  spoken.documents.resize(text.documents.size());
  parallel_for(text.documents.size(), s.threads(), [&](std::size_t i) {
    spoken.documents[i] = corrupt_document(text.documents[i], n, vocab);
  });
  ensure_parent(out);
  save_corpus(spoken, out);
  const auto rows = measure_corruption(text, spoken);
  write_file(report, [&](std::ostream& o) { write_asr_report(rows, o); });
  const CorpusStats stats = corpus_stats(spoken, text);
  if (auto p = s.path({k + "stats"})) write_file(*p, [&](std::ostream& o) { write_stats_tsv(stats, o); });
  c.out << fmt::format("simulate-asr: {} documents, WER {:.2f}%, CER {:.2f}% -> {}\n",
                       stats.documents, stats.wer_percent.value_or(0.0),
                       stats.cer_percent.value_or(0.0), out.string());
}

void cmd_build_vocab(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/build_vocab/";
  const fs::path in = s.require_path({k + "in", "/corpus/td"}, "--in");
  const fs::path out = s.require_path({k + "out", "/corpus/vocab"}, "--out");
  const auto min_count = s.get<std::size_t>(k + "min_count", 1);
  const Corpus corpus = load_corpus(in);
  const Vocabulary vocab = build_vocab(corpus, min_count);
  write_file(out, [&](std::ostream& o) { vocab.save(o); });
  if (auto p = s.path({k + "stats"})) {
    CorpusStats stats = corpus_stats(corpus);
    if (auto paired = s.path({k + "paired"})) stats = corpus_stats(corpus, load_corpus(*paired));
    write_file(*p, [&](std::ostream& o) { write_stats_tsv(stats, o); });
  }
  c.out << fmt::format("build-vocab: {} entries ({} documents, min count {}) -> {}\n", vocab.size(),
                       corpus.documents.size(), min_count, out.string());
}

void cmd_idf(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/idf/";
  const fs::path in = s.require_path({k + "in", "/corpus/td"}, "--in");
  const fs::path vocab_path = s.require_path({k + "vocab", "/corpus/vocab"}, "--vocab");
  const fs::path out = s.require_path({k + "out", "/corpus/idf"}, "--out");
  const Vocabulary vocab = load_vocab(vocab_path);
  const IdfTable idf = compute_idf(load_corpus(in), vocab);
  write_file(out, [&](std::ostream& o) { idf.write_tsv(o, vocab); });
  c.out << fmt::format("idf: {} documents, default idf {:.4f}, mean {:.4f}, stddev {:.4f} -> {}\n",
                       idf.document_count, idf.default_idf, idf.mean, idf.stddev, out.string());
}

void cmd_oracle_labels(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/oracle_labels/";
  const fs::path in = s.require_path({k + "in", "/corpus/td"}, "--in");
  const fs::path out = s.require_path({k + "out", "/corpus/labels"}, "--out");
  const auto max_sentences = s.get<std::size_t>(k + "max_sentences", 0);
  const Corpus corpus = load_corpus(in);
  std::vector<OracleLabels> labels(corpus.documents.size());
  parallel_for(corpus.documents.size(), s.threads(), [&](std::size_t i) {
    const Document& d = corpus.documents[i];
    labels[i] = oracle_labels(d, max_sentences ? max_sentences : d.sentences.size());
  });
  write_file(out, [&](std::ostream& o) { save_labels(labels, o); });
  std::size_t positive = 0, sentences = 0, empty = 0;
  for (const OracleLabels& l : labels) {
    positive += static_cast<std::size_t>(std::count(l.labels.begin(), l.labels.end(), 1));
    sentences += l.labels.size();
    empty += l.empty_reference ? 1 : 0;
  }
  c.out << fmt::format("oracle-labels: {} documents, {} of {} sentences selected, {} without reference -> {}\n",
                       labels.size(), positive, sentences, empty, out.string());
}

std::vector<double> read_curve(const fs::path& p, std::size_t keep) {
  std::vector<double> values;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);  // header
  while (values.size() < keep && std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) break;
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (values.size() != keep)
    throw CorpusError(fmt::format("{} holds {} loss values, checkpoint expects {}", p.string(),
                                  values.size(), keep));
  return values;
}

void cmd_pretrain(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/pretrain/";
  const fs::path corpus_path = s.require_path({k + "corpus", "/corpus/td"}, "--corpus");
  const fs::path vocab_path = s.require_path({k + "vocab", "/corpus/vocab"}, "--vocab");
  const fs::path out = s.path({k + "out"}).value_or(s.resolve("pretrain"));
  const std::optional<fs::path> resume = s.path({k + "resume"});
  if (resume && fs::weakly_canonical(*resume) == fs::weakly_canonical(out))
    throw UsageError("pretrain: --resume and --out must differ (inputs are never modified)");

  const Vocabulary vocab = load_vocab(vocab_path);
  const ModelConfig mc = model_from(s, vocab.size());
  PretrainConfig pc;
  pc.steps = s.get(k + "steps", pc.steps);
  pc.adam = adam_from(s, "/pretrain", 1e-3);
  pc.masking.rate = s.get(k + "mask_rate", pc.masking.rate);
  pc.features = mc.features;
  pc.seed = s.seed();

  const Corpus corpus = load_corpus(corpus_path);
  FeatureConfig plain = mc.features;
  plain.use_idf = false;
  plain.use_confidence = false;
  std::vector<PackedDocument> packed;
  for (const Document& d : corpus.documents) packed.push_back(tokenize_pack(d, vocab, IdfTable{}, plain));

  Rng rng(pc.seed);
  EncoderParams params = EncoderParams::init(mc.encoder, plain, rng);
  OptimizerState optimizer;
  std::vector<double> curve;
  if (resume) {
    const Checkpoint ck = load_checkpoint(*resume);
    if (ck.seed != pc.seed)
      throw UsageError(fmt::format("pretrain: checkpoint seed {} differs from configured seed {}",
                                   ck.seed, pc.seed));
    ck.restore(params.parameters(), true);
    if (!ck.optimizer) throw CorpusError("pretrain: resume checkpoint has no optimizer state");
    optimizer = *ck.optimizer;
    optimizer.config = pc.adam;
    curve = read_curve(*resume / "loss.csv", ck.step);
  }
  const std::vector<double> losses = pretrain(params, optimizer, packed, pc);
  curve.insert(curve.end(), losses.begin(), losses.end());

  ojson config;
  config["stage"] = "pretrain";
  config["model"] = to_json(mc);
  config["experiment"] = s.root();
  std::vector<const Param*> list;
  for (Param* p : params.parameters()) list.push_back(p);
  save_checkpoint(Checkpoint::capture(list, config, &optimizer, pc.seed, optimizer.step), out);
  write_curve_csv(curve, out / "loss.csv");
  copy_side_files(out, vocab_path, std::nullopt);
  c.out << fmt::format("pretrain: {} steps, loss {:.4f} -> {:.4f} (ln V = {:.4f}) -> {}\n",
                       optimizer.step, curve.empty() ? 0.0 : curve.front(),
                       curve.empty() ? 0.0 : curve.back(), std::log(double(vocab.size())),
                       out.string());
}

std::vector<LabeledDocument> attach_labels(const Corpus& corpus, const std::vector<OracleLabels>& labels,
                                          const Summarizer& model, const Vocabulary& vocab,
                                          const IdfTable& idf) {
  std::map<std::string, const OracleLabels*> by_id;
  for (const OracleLabels& l : labels) by_id[l.document_id] = &l;
  std::vector<LabeledDocument> out;
  for (const Document& d : corpus.documents) {
    const auto it = by_id.find(d.id);
    if (it == by_id.end() || it->second->empty_reference) continue;
    if (it->second->labels.size() != d.sentences.size())
      throw CorpusError(fmt::format("labels of {} cover {} sentences, document has {}", d.id,
                                    it->second->labels.size(), d.sentences.size()));
    out.push_back({model.pack(d, vocab, idf), it->second->labels});
  }
  return out;
}

void save_model_dir(const Summarizer& model, const ojson& config, const OptimizerState* optimizer,
                    std::uint64_t seed, std::uint64_t step, const fs::path& dir,
                    const fs::path& vocab, const std::optional<fs::path>& idf) {
  const std::vector<const Param*> list = model.parameters();
  save_checkpoint(Checkpoint::capture(list, config, optimizer, seed, step), dir);
  copy_side_files(dir, vocab, idf);
}

void cmd_finetune(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/finetune/";
  const fs::path corpus_path = s.require_path({k + "corpus", "/corpus/td"}, "--corpus");
  const fs::path labels_path = s.require_path({k + "labels", "/corpus/labels"}, "--labels");
  const fs::path vocab_path = s.require_path({k + "vocab", "/corpus/vocab"}, "--vocab");
  const std::optional<fs::path> idf_path = s.path({k + "idf", "/corpus/idf"});
  const std::optional<fs::path> dev_path = s.path({k + "dev"});
  const std::optional<fs::path> init = s.path({k + "init"});
  const std::optional<fs::path> resume = s.path({k + "resume"});
  const fs::path out = s.path({k + "out"}).value_or(s.resolve("finetune"));

  const Vocabulary vocab = load_vocab(vocab_path);
  ModelConfig mc = model_from(s, vocab.size());
  std::optional<Checkpoint> pretrained;
  if (init) {
    pretrained = load_checkpoint(*init);
    if (pretrained->config.contains("model")) {
      // The encoder shape is fixed by the pretrained weights.
      const ModelConfig pm = model_config_from_json(pretrained->config.at("model"));
      mc.encoder = pm.encoder;
      mc.sync();
    }
  }
  if (mc.features.use_idf && !(idf_path && fs::exists(*idf_path)))
    throw UsageError("finetune: the model uses IDF features but no idf table was given (--idf)");
  const IdfTable idf = load_idf_or_empty(idf_path, vocab);

  FinetuneConfig fc;
  fc.epochs = s.get(k + "epochs", fc.epochs);
  fc.adam = adam_from(s, "/finetune", fc.adam.lr);
  fc.freeze_encoder = s.get(k + "freeze_encoder", fc.freeze_encoder);
  fc.ratio = s.get("/eval/ratio", fc.ratio);
  fc.seed = s.seed();

  Summarizer model = Summarizer::init(mc, mix_seed(fc.seed, 1));
  if (pretrained) pretrained->restore(model.parameters(), false);

  Corpus train = load_corpus(corpus_path);
  std::vector<Document> dev_docs;
  if (dev_path) {
    dev_docs = load_corpus(*dev_path).documents;
  } else if (const double fraction = s.get<double>(k + "dev_fraction", 0.0); fraction > 0.0) {
    if (fraction >= 1.0) throw UsageError("finetune: dev_fraction must lie in [0, 1)");
    const auto n_dev = static_cast<std::size_t>(fraction * double(train.documents.size()));
    dev_docs.assign(train.documents.end() - static_cast<std::ptrdiff_t>(n_dev), train.documents.end());
    train.documents.resize(train.documents.size() - n_dev);
  }
  const std::vector<LabeledDocument> labeled =
      attach_labels(train, load_labels(labels_path), model, vocab, idf);
  if (labeled.empty()) throw CorpusError("finetune: no labeled training documents");
  std::vector<PackedDocument> dev_packed;
  for (const Document& d : dev_docs) dev_packed.push_back(model.pack(d, vocab, idf));

  OptimizerState optimizer;
  std::size_t first_epoch = 0;
  if (resume) {
    const Checkpoint ck = load_checkpoint(*resume);
    ck.restore(model.parameters(), true);
    if (!ck.optimizer) throw CorpusError("finetune: resume checkpoint has no optimizer state");
    optimizer = *ck.optimizer;
    optimizer.config = fc.adam;
    first_epoch = ck.step;
  }
  const FinetuneResult result =
      finetune(model, optimizer, labeled, DevSet{dev_docs, dev_packed}, fc, first_epoch);

  ojson config;
  config["stage"] = "finetune";
  config["model"] = to_json(mc);
  config["experiment"] = s.root();
  save_model_dir(result.best, config, nullptr, fc.seed, result.best_epoch, out / "best", vocab_path,
                 idf_path);
  save_model_dir(model, config, &optimizer, fc.seed, std::max(first_epoch, fc.epochs),
                 out / "last", vocab_path, idf_path);
  std::ofstream curve = open_out(out / "curve.csv");
  curve << "epoch,train_loss,dev_rouge1\n";
  for (const EpochLog& e : result.log)
    curve << fmt::format("{},{:.17g},{}\n", e.epoch, e.train_loss,
                         e.dev_rouge1 ? fmt::format("{:.17g}", *e.dev_rouge1) : std::string());
  c.out << fmt::format(
      "finetune: {} ({} documents) {} epochs, loss {:.4f}, best epoch {}{} -> {}\n",
      system_name(mc), labeled.size(), result.log.size(),
      result.log.empty() ? 0.0 : result.log.back().train_loss, result.best_epoch,
      result.best_dev_rouge1 ? fmt::format(" (dev R1 {:.4f})", *result.best_dev_rouge1) : "",
      out.string());
}

void write_run_with_meta(const std::vector<SystemOutput>& outputs, const fs::path& out,
                         const std::string& system, double ratio) {
  write_file(out, [&](std::ostream& o) { write_run(outputs, o); });
  ojson meta;
  meta["system"] = system;
  meta["ratio"] = ratio;
  write_json(sibling(out, ".meta.json"), meta);
}

void cmd_summarize(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/summarize/";
  const fs::path model_dir =
      s.path({k + "model"}).value_or(s.path({"/finetune/out"}).value_or(s.resolve("finetune")) / "best");
  const fs::path in = s.require_path({k + "in"}, "--in");
  const fs::path out = s.require_path({k + "out"}, "--out");
  const double ratio = s.get("/eval/ratio", 0.1);

  const Checkpoint ck = load_checkpoint(model_dir);
  const Summarizer model = load_summarizer(ck);
  const Vocabulary vocab = load_vocab(model_dir / "vocab.tsv");
  const IdfTable idf = load_idf_or_empty(model_dir / "idf.tsv", vocab);
  const Corpus corpus = load_corpus(in);
  std::vector<SystemOutput> outputs(corpus.documents.size());
  parallel_for(corpus.documents.size(), s.threads(), [&](std::size_t i) {
    const Document& d = corpus.documents[i];
    const SentenceScores scores = model.score(model.pack(d, vocab, idf));
    outputs[i] = {d.id, select_summary(scores, d, ratio), scores.values};
  });
  const std::string system = system_name(model.config());
  write_run_with_meta(outputs, out, system, ratio);
  std::size_t selected = 0;
  for (const SystemOutput& o : outputs) selected += o.selected.size();
  c.out << fmt::format("summarize: {}, {} documents, {} sentences selected -> {}\n", system,
                       outputs.size(), selected, out.string());
}

void cmd_baseline(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/baseline/";
  const auto method = parse_enum<BaselineMethod>(s.get<std::string>(k + "method", "lead"),
                                                 parse_baseline_method);
  const fs::path in = s.require_path({k + "in"}, "--in");
  const fs::path out = s.require_path({k + "out"}, "--out");
  const double ratio = s.get("/eval/ratio", 0.1);
  const auto topics = s.get<std::size_t>(k + "k", 3);
  if (topics == 0) throw UsageError("baseline: --k must be at least 1");

  Vocabulary vocab;
  IdfTable idf;
  if (method != BaselineMethod::kLead) {
    vocab = load_vocab(s.require_path({k + "vocab", "/corpus/vocab"}, "--vocab"));
    idf = IdfTable::read_tsv(s.require_path({k + "idf", "/corpus/idf"}, "--idf"), vocab);
  }
  const Corpus corpus = load_corpus(in);
  std::vector<SystemOutput> outputs(corpus.documents.size());
  parallel_for(corpus.documents.size(), s.threads(), [&](std::size_t i) {
    const Document& d = corpus.documents[i];
    SentenceScores scores;
    switch (method) {
      case BaselineMethod::kLead: scores = lead_rank(d); break;
      case BaselineMethod::kVsm: scores = vsm_rank(d, idf, vocab); break;
      case BaselineMethod::kLsa: scores = lsa_rank(d, idf, vocab, topics); break;
    }
    outputs[i] = {d.id, select_summary(scores, d, ratio), scores.values};
  });
  std::string system(to_string(method));
  std::transform(system.begin(), system.end(), system.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  write_run_with_meta(outputs, out, system, ratio);
  c.out << fmt::format("baseline: {}, {} documents -> {}\n", system, outputs.size(), out.string());
}

ojson rouge_json(const RougeScore& r) {
  ojson j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  return j;
}

void cmd_evaluate(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/evaluate/";
  const fs::path run = s.require_path({k + "run"}, "--run");
  const fs::path corpus_path = s.require_path({k + "corpus"}, "--corpus");
  const fs::path out = s.path({k + "out"}).value_or(sibling(run, ".scores.json"));

  std::string system = run.stem().string();
  if (s.has(k + "system")) {
    system = s.get<std::string>(k + "system");
  } else if (const fs::path meta = sibling(run, ".meta.json"); fs::exists(meta)) {
    system = read_json(meta).value("system", system);
  }
  const Corpus corpus = load_corpus(corpus_path);
  if (corpus.documents.empty()) throw CorpusError("evaluate: empty reference corpus");
  const DocKind kind = corpus.documents.front().kind;
  for (const Document& d : corpus.documents)
    if (d.kind != kind) throw CorpusError("evaluate: corpus mixes TD and SD documents");
  const SystemScores scores = evaluate_system(read_run(run), corpus, s.threads());

  ojson j;
  j["system"] = system;
  j["kind"] = std::string(kind_name(kind));
  j["documents"] = scores.documents;
  j["rouge1"] = rouge_json(scores.rouge1);
  j["rouge2"] = rouge_json(scores.rouge2);
  j["rougeL"] = rouge_json(scores.rougeL);
  write_json(out, j);
  c.out << fmt::format("evaluate: {} ({}, {} documents) {} -> {}\n", system, kind_name(kind),
                       scores.documents, format_rouge(scores), out.string());
}

void cmd_conf_metrics(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/conf_metrics/";
  const fs::path in = s.require_path({k + "in", "/corpus/sd"}, "--in");
  const std::vector<ConfidenceSample> samples = confidence_samples(load_corpus(in));
  const double n = nce(samples);
  const EerResult e = eer_det(samples);
  if (auto p = s.path({k + "det"})) write_file(*p, [&](std::ostream& o) { write_det_csv(e, o); });
  std::size_t correct = 0;
  for (const ConfidenceSample& x : samples) correct += x.correct ? 1 : 0;
  if (auto p = s.path({k + "out"})) {
    ojson j;
    j["tokens"] = samples.size();
    j["correct"] = correct;
    j["nce"] = n;
    j["eer"] = e.eer;
    write_json(*p, j);
  }
  c.out << fmt::format("conf-metrics: {} tokens ({} correct), NCE {:.4f}, EER {:.4f}\n",
                       samples.size(), correct, n, e.eer);
}

void cmd_grad_check(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/grad_check/";
  const std::string head = s.get<std::string>(k + "head", "all");
  std::vector<HeadKind> heads;
  if (head == "all") heads = {HeadKind::kSC, HeadKind::kIT, HeadKind::kRNN};
  else heads.push_back(parse_enum<HeadKind>(head, parse_head_kind));
  GradCheckOptions opts;
  opts.step = s.get(k + "step", opts.step);
  opts.tolerance = s.get(k + "tolerance", opts.tolerance);
  opts.max_coordinates = s.get(k + "max_coordinates", opts.max_coordinates);
  const std::uint64_t seed = s.seed();
  opts.seed = seed;
  const double init_stddev = s.get(k + "init_stddev", 0.3);

  bool passed = true;
  std::string parts;
  for (HeadKind h : heads) {
    const GradCheckReport r = pipeline_grad_check(h, seed, opts, init_stddev);
    passed = passed && r.passed;
    parts += fmt::format("{}{} {:.3e} at {}[{}] over {}", parts.empty() ? "" : "; ", to_string(h),
                         r.max_relative_error, r.worst_parameter, r.worst_index, r.checked);
  }
  c.out << fmt::format("grad-check: {} (tolerance {:.0e}) {}\n", parts, opts.tolerance,
                       passed ? "PASS" : "FAIL");
  if (!passed) throw TrainingError("grad-check: relative error above tolerance");
}

void cmd_report(const Context& c) {
  const Settings& s = c.settings;
  const std::string k = "/report/";
  const fs::path runs = s.require_path({k + "runs"}, "--runs");
  const fs::path out = s.path({k + "out"}).value_or(runs / "report");
  if (!fs::is_directory(runs)) throw CorpusError("report: not a directory: " + runs.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(runs)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 12 &&
        name.compare(name.size() - 12, 12, ".scores.json") == 0)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, std::map<DocKind, ReportCells>> cells;
  for (const fs::path& f : files) {
    const json j = read_json(f);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "TD" && kind != "SD") throw CorpusError(f.string() + ": kind must be TD or SD");
    const DocKind dk = kind == "SD" ? DocKind::kSpoken : DocKind::kText;
    const std::string system = j.at("system").get<std::string>();
    if (cells[system].count(dk))
      throw CorpusError(fmt::format("report: two {} results for {}", kind, system));
    cells[system][dk] = {j.at("rouge1").at("f1").get<double>(), j.at("rouge2").at("f1").get<double>(),
                         j.at("rougeL").at("f1").get<double>()};
  }
  std::vector<std::string> names;
  for (const auto& [name, _] : cells) names.push_back(name);
  Report report;
  for (const std::string& name : canonical_row_order(names))
    for (const auto& [kind, v] : cells.at(name)) report.set(name, kind, v);

  fs::path tsv = out;
  tsv += ".tsv";
  fs::path txt = out;
  txt += ".txt";
  write_file(tsv, [&](std::ostream& o) { report.write_tsv(o); });
  write_file(txt, [&](std::ostream& o) { report.write_text(o); });
  c.out << fmt::format("report: {} systems from {} result files -> {}\n", names.size(), files.size(),
                       tsv.string());
}

// ----------------------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  void (*run)(const Context&);
  void (*options)(CLI::App*, Overlay&);
};

void corpus_in(CLI::App* a, Overlay& o, const std::string& section) {
  o.path(a, "--in", "/" + section + "/in", "input corpus (JSONL)");
}

const Command kCommands[] = {
    {"gen-synthetic", "Generate a synthetic TD corpus whose references are its topic sentences",
     cmd_gen_synthetic,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/gen_synthetic/";
       o.path(a, "--out", k + "out", "output corpus (default: corpus.td)");
       o.path(a, "--stats", k + "stats", "corpus statistics TSV");
       o.option<std::size_t>(a, "--documents", k + "documents", "number of documents");
       o.option<std::size_t>(a, "--min-sentences", k + "min_sentences", "sentences per document, low");
       o.option<std::size_t>(a, "--max-sentences", k + "max_sentences", "sentences per document, high");
       o.option<std::size_t>(a, "--min-words", k + "min_words", "words per sentence, low");
       o.option<std::size_t>(a, "--max-words", k + "max_words", "words per sentence, high");
       o.option<std::size_t>(a, "--common-vocab", k + "common_vocab", "common token types");
       o.option<std::size_t>(a, "--topic-vocab", k + "topic_vocab", "topic token types");
       o.option<std::size_t>(a, "--topic-words-per-document", k + "topic_words_per_document",
                             "topic types drawn per document");
       o.option<std::size_t>(a, "--topic-tokens-per-sentence", k + "topic_tokens_per_sentence",
                             "topic tokens in each summary sentence");
       o.option<double>(a, "--summary-rate", k + "summary_rate", "share of summary sentences");
       o.option<std::size_t>(a, "--marker-vocab", k + "marker_vocab", "cue token types (0 = none)");
       o.flag(a, "marker-leads", k + "marker_leads", "put the cue first in its sentence");
       o.option<double>(a, "--zipf-exponent", k + "zipf_exponent", "common-token Zipf exponent");
       o.option<std::string>(a, "--id-prefix", k + "id_prefix", "document id prefix");
     }},
    {"simulate-asr", "Corrupt a TD corpus into a simulated-ASR SD corpus with confidences",
     cmd_simulate_asr,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/simulate_asr/";
       corpus_in(a, o, "simulate_asr");
       o.path(a, "--out", k + "out", "output SD corpus (default: corpus.sd)");
       o.path(a, "--report", k + "report", "per-document WER/CER TSV (default: <out>.asr.tsv)");
       o.path(a, "--stats", k + "stats", "corpus statistics TSV");
       o.option<double>(a, "--target-wer", k + "target_wer", "word error rate to simulate");
       o.option<double>(a, "--substitution-share", k + "substitution_share", "share of substitutions");
       o.option<double>(a, "--deletion-share", k + "deletion_share", "share of deletions");
       o.option<double>(a, "--insertion-share", k + "insertion_share", "share of insertions");
       o.option<double>(a, "--correct-alpha", k + "correct_alpha", "Beta alpha, correct tokens");
       o.option<double>(a, "--correct-beta", k + "correct_beta", "Beta beta, correct tokens");
       o.option<double>(a, "--error-alpha", k + "error_alpha", "Beta alpha, erroneous tokens");
       o.option<double>(a, "--error-beta", k + "error_beta", "Beta beta, erroneous tokens");
     }},
    {"build-vocab", "Build the token vocabulary of a corpus", cmd_build_vocab,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/build_vocab/";
       corpus_in(a, o, "build_vocab");
       o.path(a, "--out", k + "out", "vocabulary TSV (default: corpus.vocab)");
       o.option<std::size_t>(a, "--min-count", k + "min_count", "minimum token frequency");
       o.path(a, "--stats", k + "stats", "corpus statistics TSV");
       o.path(a, "--paired", k + "paired", "clean corpus paired with --in, adds WER/CER to the stats");
     }},
    {"idf", "Compute the IDF table of a corpus", cmd_idf,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/idf/";
       corpus_in(a, o, "idf");
       o.path(a, "--vocab", k + "vocab", "vocabulary TSV (default: corpus.vocab)");
       o.path(a, "--out", k + "out", "IDF TSV (default: corpus.idf)");
     }},
    {"oracle-labels", "Derive greedy ROUGE oracle labels", cmd_oracle_labels,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/oracle_labels/";
       corpus_in(a, o, "oracle_labels");
       o.path(a, "--out", k + "out", "labels JSONL (default: corpus.labels)");
       o.option<std::size_t>(a, "--max-sentences", k + "max_sentences", "selection cap (0 = none)");
     }},
    {"pretrain", "Masked-LM pretraining of the encoder", cmd_pretrain,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/pretrain/";
       o.path(a, "--corpus", k + "corpus", "training corpus (default: corpus.td)");
       o.path(a, "--vocab", k + "vocab", "vocabulary TSV (default: corpus.vocab)");
       o.path(a, "--out", k + "out", "checkpoint directory (default: <output_dir>/pretrain)");
       o.path(a, "--resume", k + "resume", "continue from this checkpoint directory");
       o.option<std::size_t>(a, "--steps", k + "steps", "total optimizer steps");
       o.option<double>(a, "--lr", k + "lr", "learning rate");
       o.option<double>(a, "--clip-norm", k + "clip_norm", "global gradient-norm bound (0 = off)");
       o.option<double>(a, "--mask-rate", k + "mask_rate", "share of tokens selected for masking");
       o.option<std::size_t>(a, "--d", "/model/encoder/d", "hidden width");
       o.option<std::size_t>(a, "--layers", "/model/encoder/layers", "encoder layers");
       o.option<std::size_t>(a, "--heads", "/model/encoder/heads", "attention heads");
       o.option<std::size_t>(a, "--d-ff", "/model/encoder/d_ff", "feed-forward width");
     }},
    {"finetune", "Supervised fine-tuning of encoder + summarization head", cmd_finetune,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/finetune/";
       o.path(a, "--corpus", k + "corpus", "training corpus (default: corpus.td)");
       o.path(a, "--labels", k + "labels", "oracle labels JSONL (default: corpus.labels)");
       o.path(a, "--vocab", k + "vocab", "vocabulary TSV (default: corpus.vocab)");
       o.path(a, "--idf", k + "idf", "IDF TSV (default: corpus.idf)");
       o.path(a, "--dev", k + "dev", "held-out corpus for model selection");
       o.option<double>(a, "--dev-fraction", k + "dev_fraction",
                        "without --dev, hold out this trailing share of the training corpus");
       o.path(a, "--init", k + "init", "pretrained checkpoint directory");
       o.path(a, "--resume", k + "resume", "continue from a 'last' checkpoint directory");
       o.path(a, "--out", k + "out", "output directory (default: <output_dir>/finetune)");
       o.option<std::size_t>(a, "--epochs", k + "epochs", "total epochs");
       o.option<double>(a, "--lr", k + "lr", "learning rate");
       o.option<double>(a, "--clip-norm", k + "clip_norm", "global gradient-norm bound (0 = off)");
       o.flag(a, "freeze-encoder", k + "freeze_encoder", "train only head and projections");
       o.option<std::string>(a, "--head", "/model/head/kind", "sc | it | rnn");
       o.flag(a, "use-idf", "/model/features/use_idf", "IDF embedding");
       o.flag(a, "use-confidence", "/model/features/use_confidence", "confidence embedding");
       o.option<std::string>(a, "--positional", "/model/features/positional", "none | cls_learned");
       o.option<std::string>(a, "--aux-injection", "/model/features/aux_injection",
                             "concat_project | sum_project");
       o.option<double>(a, "--ratio", "/eval/ratio", "summary ratio for held-out ROUGE");
     }},
    {"summarize", "Score and select summary sentences with a trained model", cmd_summarize,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/summarize/";
       o.path(a, "--model", k + "model", "model directory (default: <finetune out>/best)");
       corpus_in(a, o, "summarize");
       o.path(a, "--out", k + "out", "run output JSONL");
       o.option<double>(a, "--ratio", "/eval/ratio", "summary word budget as a share of the document");
     }},
    {"baseline", "Run LEAD, VSM or LSA", cmd_baseline,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/baseline/";
       o.option<std::string>(a, "--method", k + "method", "lead | vsm | lsa");
       corpus_in(a, o, "baseline");
       o.path(a, "--out", k + "out", "run output JSONL");
       o.path(a, "--vocab", k + "vocab", "vocabulary TSV (default: corpus.vocab)");
       o.path(a, "--idf", k + "idf", "IDF TSV (default: corpus.idf)");
       o.option<std::size_t>(a, "--k", k + "k", "LSA topics");
       o.option<double>(a, "--ratio", "/eval/ratio", "summary word budget as a share of the document");
     }},
    {"evaluate", "ROUGE of a run against the corpus references", cmd_evaluate,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/evaluate/";
       o.path(a, "--run", k + "run", "run output JSONL");
       o.path(a, "--corpus", k + "corpus", "corpus with references");
       o.path(a, "--out", k + "out", "scores JSON (default: run path with .scores.json in place of its extension)");
       o.option<std::string>(a, "--system", k + "system", "row name (default: from <run>.meta.json)");
     }},
    {"conf-metrics", "NCE, EER and DET curve of corpus confidences", cmd_conf_metrics,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/conf_metrics/";
       o.path(a, "--in", k + "in", "SD corpus with correctness flags (default: corpus.sd)");
       o.path(a, "--det", k + "det", "DET curve CSV");
       o.path(a, "--out", k + "out", "metrics JSON");
     }},
    {"grad-check", "Finite-difference check of pipeline gradients", cmd_grad_check,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/grad_check/";
       o.option<std::string>(a, "--head", k + "head", "sc | it | rnn | all");
       o.option<double>(a, "--tolerance", k + "tolerance", "maximum relative error");
       o.option<double>(a, "--step", k + "step", "finite-difference step");
       o.option<std::size_t>(a, "--max-coordinates", k + "max_coordinates", "sampling cap");
       o.option<double>(a, "--init-stddev", k + "init_stddev", "initialization scale of the fixture");
     }},
    {"report", "Assemble evaluated runs into the TD/SD results table", cmd_report,
     [](CLI::App* a, Overlay& o) {
       const std::string k = "/report/";
       o.path(a, "--runs", k + "runs", "directory searched for *.scores.json");
       o.path(a, "--out", k + "out", "output prefix; writes <out>.tsv and <out>.txt");
     }},
};

}  // namespace

GradCheckReport pipeline_grad_check(HeadKind head, std::uint64_t seed,
                                    const GradCheckOptions& options, double init_stddev) {
  SyntheticConfig g;
  g.documents = 4;
  g.min_sentences = 2;
  g.max_sentences = 3;
  g.min_words = 3;
  g.max_words = 4;
  g.common_vocab = 6;
  g.topic_vocab = 6;
  g.topic_words_per_document = 2;
  g.topic_tokens_per_sentence = 1;
  g.summary_rate = 0.5;
  const Corpus text = gen_synthetic(g, seed);
  const Vocabulary vocab = build_vocab(text, 1);
  NoiseConfig noise;
  noise.seed = seed;
  const Corpus spoken = corrupt_corpus(text, noise, vocab);
  const IdfTable idf = compute_idf(spoken, vocab);

  ModelConfig mc;
  mc.encoder.vocab_size = vocab.size();
  mc.encoder.d = 8;
  mc.encoder.layers = 1;
  mc.encoder.heads = 2;
  mc.encoder.d_ff = 16;
  mc.encoder.max_positions = 32;
  mc.encoder.max_sentences = 4;
  mc.encoder.init_stddev = init_stddev;
  mc.features.use_idf = true;
  mc.features.use_confidence = true;
  mc.features.aux_injection = AuxInjection::kConcatProject;
  mc.features.positional = PositionalMode::kClsLearned;
  mc.head.kind = head;
  mc.head.it_layers = 1;
  mc.head.it_heads = 2;
  mc.head.it_d_ff = 16;
  mc.head.rnn_hidden = 8;
  mc.sync();
  mc.head.init_stddev = init_stddev;

  Summarizer model = Summarizer::init(mc, seed);
  const Document& doc = spoken.documents.front();
  const PackedDocument packed = model.pack(doc, vocab, idf);
  const std::vector<int> labels = oracle_labels(doc, doc.sentences.size()).labels;
  const std::vector<Param*> params = model.parameters();
  return grad_check(params, [&](ag::Graph& graph) { return model.loss(graph, packed, labels); },
                    options);
}

std::vector<std::string> canonical_row_order(std::span<const std::string> systems) {
  std::vector<std::string> order = {"LEAD", "VSM", "LSA"};
  for (const char* suffix : {"", " w/ Positional Embedding", " w/ Confidence", " w/ IDF",
                             " w/ Confidence + IDF"})
    for (const char* head : {"SC", "IT", "RNN"}) order.push_back(std::string(head) + suffix);
  std::vector<std::string> known, other;
  for (const std::string& name : order)
    if (std::find(systems.begin(), systems.end(), name) != systems.end()) known.push_back(name);
  for (const std::string& name : systems)
    if (std::find(order.begin(), order.end(), name) == order.end()) other.push_back(name);
  std::sort(other.begin(), other.end());
  other.erase(std::unique(other.begin(), other.end()), other.end());
  known.insert(known.end(), other.begin(), other.end());
  return known;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extractive summarization with IDF and ASR-confidence augmented embeddings",
               "augsum"};
  app.require_subcommand(1);
  Overlay overlay;
  std::string config_path;
  app.add_option("--config", config_path, "experiment config (JSON)");
  overlay.option<std::uint64_t>(&app, "--seed", "/seed", "run seed");
  overlay.option<std::size_t>(&app, "--threads", "/threads", "worker cap for per-document work (0 = all cores)");
  overlay.path(&app, "--output-dir", "/output_dir", "base directory for relative config paths");

  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->fallthrough();
    cmd.options(sub, overlay);
    subs.emplace_back(sub, &cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    json root = json::object();
    if (!config_path.empty()) {
      root = read_json(config_path);
      if (!root.is_object()) throw UsageError("config must be a JSON object");
    }
    overlay.apply(root);
    const Settings settings(std::move(root));
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) {
        cmd->run(Context{settings, out});
        return kExitOk;
      }
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace augsum
