// Acceptance suite. Prints one PASS/FAIL line per criterion; arguments pick
// criteria by number (default: all). Pipeline criteria drive the augsum CLI
// in-process inside a scratch directory.
//
//   acceptance [--work DIR] [1..9 ...]

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "augsum/asr_sim.hpp"
#include "augsum/baselines.hpp"
#include "augsum/cli.hpp"
#include "augsum/corpus.hpp"
#include "augsum/eval.hpp"
#include "augsum/features.hpp"
#include "augsum/heads.hpp"
#include "augsum/train.hpp"

namespace fs = std::filesystem;
using namespace augsum;

namespace {

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, std::string note) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "!") + std::move(note));
  }
};

fs::path g_work;

void cli(std::vector<std::string> args) {
  args.insert(args.begin(), "augsum");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != kExitOk) {
    std::string line;
    for (const auto& a : args) line += a + " ";
    throw std::runtime_error(fmt::format("`{}` exited {}: {}", line, code, err.str()));
  }
}

std::string str(const fs::path& p) { return p.string(); }

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = g_work / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------- 1

Verdict metric_oracles() {
  Verdict v;
  const TokenList sat = {"the", "cat", "sat"};
  const std::vector<TokenList> ate = {{"the", "cat", "ate"}};
  auto f_of = [](double p, double r) { return 2 * p * r / (p + r); };

  const RougeScore r1 = rouge_n(sat, ate, 1);
  const RougeScore r2 = rouge_n(sat, ate, 2);
  const RougeScore rl = rouge_l(sat, ate);
  v.check(near(r1.f1, f_of(2.0 / 3, 2.0 / 3), 1e-9), fmt::format("R1 {:.6f}", r1.f1));
  v.check(near(r2.f1, f_of(0.5, 0.5), 1e-9), fmt::format("R2 {:.6f}", r2.f1));
  v.check(near(rl.f1, f_of(2.0 / 3, 2.0 / 3), 1e-9), fmt::format("RL {:.6f}", rl.f1));
  const RougeScore same = rouge_n(sat, std::vector<TokenList>{sat}, 1);
  v.check(same.precision == 1 && same.recall == 1 && same.f1 == 1, "R1 identity");

  const TokenList abc = {"a", "b", "c"};
  const double w = wer(abc, TokenList{"a", "x", "c", "d"});
  v.check(near(w, 2.0 / 3, 1e-9), fmt::format("WER {:.6f}", w));
  v.check(wer(abc, TokenList{}) == 1.0, "WER all deletions");
  const double c = cer(TokenList{"abc"}, TokenList{"abd"});
  v.check(near(c, 1.0 / 3, 1e-9), fmt::format("CER {:.6f}", c));

  const std::vector<ConfidenceSample> two = {{0.8, true}, {0.4, false}};
  const double h_conf = -(std::log2(0.8) + std::log2(0.6)) / 2;
  const double n = nce(two);
  v.check(near(n, 1.0 - h_conf, 1e-9) && near(n, 0.4706, 1e-4), fmt::format("NCE {:.6f}", n));

  const std::vector<ConfidenceSample> split = {{0.9, true}, {0.7, true}, {0.6, false}, {0.2, false}};
  const std::vector<ConfidenceSample> crossed = {{0.9, true}, {0.5, true}, {0.6, false}, {0.2, false}};
  const double e0 = eer_det(split).eer;
  const double e1 = eer_det(crossed).eer;
  v.check(near(e0, 0.0, 1e-9), fmt::format("EER separable {:.3f}", e0));
  v.check(near(e1, 0.5, 1e-9), fmt::format("EER crossed {:.3f}", e1));
  return v;
}

// ---------------------------------------------------------------- 2

Verdict gradient_check() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (HeadKind head : {HeadKind::kSC, HeadKind::kIT, HeadKind::kRNN}) {
    const GradCheckReport r = pipeline_grad_check(head, 1);
    v.check(r.max_relative_error <= 1e-5,
            fmt::format("{} {:.2e} over {} coords", to_string(head), r.max_relative_error, r.checked));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.check(secs < 30.0, fmt::format("{:.1f}s", secs));
  return v;
}

// ---------------------------------------------------------------- 3

Verdict masked_lm() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed : kSeeds) {
    const Corpus corpus = gen_synthetic(SyntheticConfig{}, seed);
    const Vocabulary vocab = build_vocab(corpus, 1);
    const IdfTable idf = compute_idf(corpus, vocab);
    std::vector<PackedDocument> docs;
    for (const Document& d : corpus.documents) docs.push_back(tokenize_pack(d, vocab, idf, {}));
    EncoderConfig ec;
    ec.vocab_size = vocab.size();
    Rng rng(seed);
    EncoderParams params = EncoderParams::init(ec, {}, rng);
    const MaskingPolicy masking;
    const double ln_v = std::log(static_cast<double>(vocab.size()));
    const double before = mlm_evaluate(params, docs, masking, mix_seed(seed, 99));
    OptimizerState optimizer;
    PretrainConfig pc;
    pc.steps = 200;
    pc.seed = seed;
    pretrain(params, optimizer, docs, pc);
    const double after = mlm_evaluate(params, docs, masking, mix_seed(seed, 99));
    v.check(std::abs(before - ln_v) <= 0.2 && after < ln_v - 0.5,
            fmt::format("seed {} V {} lnV {:.3f} loss {:.3f} -> {:.3f}", seed, vocab.size(), ln_v,
                        before, after));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.check(secs < 120.0, fmt::format("{:.1f}s", secs));
  return v;
}

// ------------------------------------------------------- 4, 5, 6 helpers

/// Area under the ROC curve with tied scores sharing their mean rank.
double auc(std::vector<std::pair<double, int>> points) {
  std::sort(points.begin(), points.end());
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < points.size();) {
    std::size_t j = i;
    while (j < points.size() && points[j].first == points[i].first) ++j;
    const double rank = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (points[k].second) {
        rank_sum += rank;
        ++pos;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

struct Split {
  fs::path train, dev, test;
};

/// 60/20/20 split in file order.
Split split_corpus(const fs::path& in, const fs::path& dir) {
  const Corpus all = load_corpus(in);
  const std::size_t n = all.size();
  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_dev = n * 2 / 10;
  auto part = [&](std::size_t begin, std::size_t end, const std::string& name) {
    Corpus c;
    c.documents.assign(all.documents.begin() + static_cast<std::ptrdiff_t>(begin),
                       all.documents.begin() + static_cast<std::ptrdiff_t>(end));
    const fs::path p = dir / name;
    save_corpus(c, p);
    return p;
  };
  return {part(0, n_train, "train.jsonl"), part(n_train, n_train + n_dev, "dev.jsonl"),
          part(n_train + n_dev, n, "test.jsonl")};
}

std::vector<std::string> shape_flags(std::size_t documents) {
  return {"--documents",   std::to_string(documents),
          "--topic-vocab", std::to_string(documents * 3 / 2 + 5),
          "--min-sentences", "4", "--max-sentences", "6",
          "--min-words",   "4", "--max-words", "6"};
}

struct ArmResult {
  double rouge1 = 0.0;
  double lead_rouge1 = 0.0;
  double auc = 0.0;
};

/// Prepared corpus: vocabulary over the full corpus, IDF and oracle labels
/// over the training split.
struct Prepared {
  fs::path dir;
  Split split;
  fs::path vocab, idf, labels;
};

Prepared prepare(const fs::path& dir, const fs::path& corpus, const fs::path& vocab_source) {
  Prepared p{dir, split_corpus(corpus, dir), dir / "vocab.tsv", dir / "idf.tsv", dir / "train.labels"};
  cli({"build-vocab", "--in", str(vocab_source), "--out", str(p.vocab)});
  cli({"idf", "--in", str(p.split.train), "--vocab", str(p.vocab), "--out", str(p.idf)});
  cli({"oracle-labels", "--in", str(p.split.train), "--out", str(p.labels)});
  return p;
}

ArmResult train_and_score(const Prepared& p, std::uint64_t seed, const std::string& arm,
                          double lr, std::vector<std::string> model_flags) {
  const fs::path out = p.dir / arm;
  const std::string s = std::to_string(seed);
  std::vector<std::string> ft = {"--seed",  s,          "finetune",
                                 "--corpus", str(p.split.train), "--labels", str(p.labels),
                                 "--vocab", str(p.vocab), "--idf",    str(p.idf),
                                 "--dev",   str(p.split.dev),   "--epochs", "30",
                                 "--lr",    fmt::format("{}", lr), "--out", str(out)};
  ft.insert(ft.end(), model_flags.begin(), model_flags.end());
  cli(ft);
  const fs::path run = out / "test.run.jsonl";
  cli({"summarize", "--model", str(out / "best"), "--in", str(p.split.test), "--out", str(run)});
  cli({"evaluate", "--run", str(run), "--corpus", str(p.split.test)});
  const fs::path lead = p.dir / "lead.run.jsonl";
  cli({"baseline", "--method", "lead", "--in", str(p.split.test), "--out", str(lead), "--vocab",
       str(p.vocab), "--idf", str(p.idf)});
  cli({"evaluate", "--run", str(lead), "--corpus", str(p.split.test)});

  const fs::path test_labels = p.dir / "test.labels";
  if (!fs::exists(test_labels))
    cli({"oracle-labels", "--in", str(p.split.test), "--out", str(test_labels)});
  std::map<std::string, std::vector<int>> labels;
  for (OracleLabels& l : load_labels(test_labels)) labels[l.document_id] = std::move(l.labels);
  std::vector<std::pair<double, int>> points;
  for (const SystemOutput& o : read_run(run)) {
    const std::vector<int>& y = labels.at(o.id);
    for (std::size_t i = 0; i < o.scores.size(); ++i) points.emplace_back(o.scores[i], y.at(i));
  }

  ArmResult r;
  r.rouge1 = read_json(out / "test.run.scores.json")["rouge1"]["f1"].get<double>();
  r.lead_rouge1 = read_json(p.dir / "lead.run.scores.json")["rouge1"]["f1"].get<double>();
  r.auc = auc(points);
  return r;
}

// ---------------------------------------------------------------- 4

Verdict learnability() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed : kSeeds) {
    const fs::path dir = fresh_dir(fmt::format("c4/seed{}", seed));
    const fs::path td = dir / "td.jsonl";
    std::vector<std::string> gen = {"--seed", std::to_string(seed), "gen-synthetic", "--out", str(td),
                                    "--marker-vocab", "1", "--marker-leads"};
    for (const std::string& f : shape_flags(300)) gen.push_back(f);
    cli(gen);
    const Prepared p = prepare(dir, td, td);
    const ArmResult r = train_and_score(p, seed, "sc", 1e-3, {"--head", "sc"});
    v.check(r.auc >= 0.9 && r.rouge1 >= r.lead_rouge1 + 0.05,
            fmt::format("seed {} AUC {:.3f} R1 {:.3f} LEAD {:.3f}", seed, r.auc, r.rouge1,
                        r.lead_rouge1));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.check(secs < 300.0, fmt::format("{:.1f}s", secs));
  return v;
}

// ---------------------------------------------------------------- 5

Verdict confidence_claim() {
  Verdict v;
  double with = 0.0, without = 0.0;
  for (std::uint64_t seed : kSeeds) {
    const std::string s = std::to_string(seed);
    const fs::path dir = fresh_dir(fmt::format("c5/seed{}", seed));
    const fs::path td = dir / "td.jsonl";
    const fs::path sd = dir / "sd.jsonl";
    std::vector<std::string> gen = {"--seed", s, "gen-synthetic", "--out", str(td)};
    for (const std::string& f : shape_flags(600)) gen.push_back(f);
    cli(gen);
    cli({"--seed", s, "simulate-asr", "--in", str(td), "--out", str(sd)});
    const Prepared p = prepare(dir, sd, td);
    const ArmResult on = train_and_score(p, seed, "conf", 3e-4,
                                         {"--head", "sc", "--use-idf", "--use-confidence"});
    const ArmResult off = train_and_score(p, seed, "noconf", 3e-4,
                                          {"--head", "sc", "--use-idf", "--no-use-confidence"});
    with += on.rouge1 / kSeeds.size();
    without += off.rouge1 / kSeeds.size();
    v.notes.push_back(fmt::format("seed {} {:.3f} vs {:.3f}", seed, on.rouge1, off.rouge1));
  }
  v.check(with > without, fmt::format("mean SD R1 with confidence {:.4f} > without {:.4f}", with, without));
  return v;
}

// ---------------------------------------------------------------- 6

Verdict idf_claim() {
  Verdict v;
  double with = 0.0, without = 0.0;
  for (std::uint64_t seed : kSeeds) {
    const fs::path dir = fresh_dir(fmt::format("c6/seed{}", seed));
    const fs::path td = dir / "td.jsonl";
    std::vector<std::string> gen = {"--seed", std::to_string(seed), "gen-synthetic", "--out", str(td)};
    for (const std::string& f : shape_flags(300)) gen.push_back(f);
    cli(gen);
    const Prepared p = prepare(dir, td, td);
    const ArmResult on = train_and_score(p, seed, "idf", 1e-3, {"--head", "sc", "--use-idf"});
    const ArmResult off = train_and_score(p, seed, "noidf", 1e-3, {"--head", "sc", "--no-use-idf"});
    with += on.rouge1 / kSeeds.size();
    without += off.rouge1 / kSeeds.size();
    v.notes.push_back(fmt::format("seed {} {:.3f} vs {:.3f}", seed, on.rouge1, off.rouge1));
  }
  v.check(with > without, fmt::format("mean TD R1 with IDF {:.4f} > without {:.4f}", with, without));
  return v;
}

// ---------------------------------------------------------------- 7

using Counts = std::map<std::vector<std::string>, int>;

void count_ngrams(const TokenList& sentence, std::size_t n, Counts& counts) {
  for (std::size_t i = 0; i + n <= sentence.size(); ++i)
    ++counts[{sentence.begin() + static_cast<std::ptrdiff_t>(i),
              sentence.begin() + static_cast<std::ptrdiff_t>(i + n)}];
}

double overlap_f(const Counts& cand, const Counts& ref) {
  double match = 0, total_c = 0, total_r = 0;
  for (const auto& [g, k] : cand) {
    total_c += k;
    if (auto it = ref.find(g); it != ref.end()) match += std::min(k, it->second);
  }
  for (const auto& [g, k] : ref) total_r += k;
  if (match == 0) return 0.0;
  const double p = match / total_c, r = match / total_r;
  return 2 * p * r / (p + r);
}

/// Best subset of at most `cap` sentences under mean(R1 F, R2 F) with
/// n-grams counted inside sentences; ties go to the smaller subset.
std::vector<int> brute_force_labels(const Document& doc, std::size_t cap) {
  Counts ref1, ref2;
  for (const TokenList& s : doc.references.at(0)) {
    count_ngrams(s, 1, ref1);
    count_ngrams(s, 2, ref2);
  }
  const std::size_t m = doc.sentences.size();
  double best = 0.0;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > cap) continue;
    Counts c1, c2;
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1u) {
        count_ngrams(doc.sentences[i].surfaces(), 1, c1);
        count_ngrams(doc.sentences[i].surfaces(), 2, c2);
      }
    const double score = 0.5 * (overlap_f(c1, ref1) + overlap_f(c2, ref2));
    if (score > best + 1e-12 ||
        (std::abs(score - best) <= 1e-12 && std::popcount(mask) < std::popcount(best_mask))) {
      best = score;
      best_mask = mask;
    }
  }
  std::vector<int> labels(m, 0);
  for (std::size_t i = 0; i < m; ++i) labels[i] = best_mask >> i & 1u;
  return labels;
}

Document text_doc(const std::string& id, const std::vector<std::string>& sentences,
                  const std::vector<std::string>& reference) {
  Document d;
  d.id = id;
  for (const std::string& s : sentences) {
    Sentence sent;
    for (const std::string& w : tokenize(s, TokenizeMode::kWhitespace)) sent.tokens.push_back({w, {}, {}});
    d.sentences.push_back(std::move(sent));
  }
  Reference r;
  for (const std::string& s : reference) r.push_back(tokenize(s, TokenizeMode::kWhitespace));
  d.references.push_back(std::move(r));
  normalize_document(d);
  return d;
}

Verdict parity_and_brute_force() {
  Verdict v;

  // IT at depth 0 against SC on T + sentence-position rows.
  double worst = 0.0;
  for (std::uint64_t seed : kSeeds) {
    HeadConfig hc;
    hc.kind = HeadKind::kIT;
    hc.d = 8;
    hc.it_layers = 0;
    hc.max_sentences = 8;
    hc.init_stddev = 0.5;
    Rng rng(seed);
    const HeadParams it = HeadParams::init(hc, rng);
    HeadParams sc = it;
    sc.config.kind = HeadKind::kSC;
    Matrix t(5, 8);
    for (double& x : t.values()) x = normal(rng, 0.0, 1.0);
    Matrix shifted = t;
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t c = 0; c < t.cols(); ++c) shifted(i, c) += it.sentence_position.value(i, c);
    ag::Graph g(false);
    const Matrix a = g.value(head_it(g, g.constant(t), it));
    const Matrix b = g.value(head_sc(g, g.constant(shifted), sc));
    for (std::size_t i = 0; i < a.rows(); ++i) worst = std::max(worst, std::abs(a(i, 0) - b(i, 0)));
  }
  v.check(worst <= 1e-12, fmt::format("IT(k=0) vs SC max diff {:.1e}", worst));

  // Greedy oracle against exhaustive search on small documents.
  std::vector<std::pair<Document, std::size_t>> fixtures = {
      {text_doc("exact", {"a b c", "d e f", "g h i", "j k"}, {"d e f"}), 2},
      {text_doc("pair", {"x y", "a b c", "q r", "d e f"}, {"a b c d e f"}), 2},
      {text_doc("partial", {"a b x", "c d y", "e f z", "a b c d"}, {"a b c d"}), 2},
      {text_doc("three", {"u v", "w", "u v w"}, {"u v w"}), 3},
      {text_doc("single", {"p q r"}, {"p q"}), 1},
      {text_doc("capped", {"a b", "c d", "e f", "g h"}, {"a b c d e f"}), 2},
  };
  for (std::uint64_t seed : kSeeds) {
    SyntheticConfig sc;
    sc.documents = 20;
    sc.min_sentences = 2;
    sc.max_sentences = 4;
    sc.topic_vocab = 35;
    sc.summary_rate = 0.5;
    for (Document& d : gen_synthetic(sc, seed).documents) fixtures.emplace_back(d, d.sentences.size());
  }
  std::size_t matched = 0;
  for (const auto& [doc, cap] : fixtures) {
    if (oracle_labels(doc, cap).labels == brute_force_labels(doc, cap)) ++matched;
    else v.notes.push_back("!oracle mismatch on " + doc.id);
  }
  v.check(matched == fixtures.size(), fmt::format("oracle = brute force on {}/{} fixtures", matched,
                                                  fixtures.size()));

  // SVD reconstruction.
  double residual = 0.0;
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m(8, 6);
    for (double& x : m.values()) x = normal(rng, 0.0, 1.0);
    const SvdResult s = svd(m);
    Matrix us = s.u;
    for (std::size_t r = 0; r < us.rows(); ++r)
      for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= s.sigma[c];
    const Matrix back = matmul(us, s.vt);
    double diff = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) diff += std::pow(back.values()[i] - m.values()[i], 2);
    residual = std::max(residual, std::sqrt(diff) / frobenius_norm(m));
  }
  v.check(residual <= 1e-9, fmt::format("SVD 8x6 relative residual {:.1e}", residual));
  return v;
}

// ---------------------------------------------------------------- 8

/// Small end-to-end pipeline; returns the report bytes.
std::string pipeline_report(const fs::path& dir) {
  const std::string d = str(dir);
  const fs::path config = dir / "experiment.json";
  {
    nlohmann::ordered_json j;
    j["seed"] = 5;
    j["output_dir"] = d;
    j["corpus"] = {{"td", "td.jsonl"}, {"sd", "sd.jsonl"}, {"vocab", "vocab.tsv"},
                   {"idf", "idf.tsv"}, {"labels", "td.labels"}};
    j["gen_synthetic"] = {{"documents", 24}, {"topic_vocab", 45}, {"min_sentences", 4},
                          {"max_sentences", 6}, {"min_words", 4}, {"max_words", 6}};
    j["model"] = {{"encoder", {{"d", 16}, {"layers", 1}, {"heads", 2}, {"d_ff", 32}}},
                  {"features", {{"positional", "cls_learned"}}},
                  {"head", {{"kind", "it"}, {"it_layers", 1}}}};
    j["pretrain"] = {{"steps", 30}};
    j["finetune"] = {{"epochs", 3}, {"dev_fraction", 0.25}};
    std::ofstream(config) << j.dump(2) << "\n";
  }
  const std::string cfg = str(config);
  cli({"--config", cfg, "gen-synthetic"});
  cli({"--config", cfg, "simulate-asr"});
  cli({"--config", cfg, "build-vocab"});
  cli({"--config", cfg, "idf"});
  cli({"--config", cfg, "oracle-labels", "--in", str(dir / "td.jsonl")});
  cli({"--config", cfg, "pretrain"});
  for (const std::string kind : {"td", "sd"}) {
    const std::string corpus = str(dir / (kind + ".jsonl"));
    std::vector<std::string> feats = {"--use-idf"};
    if (kind == "sd") feats.push_back("--use-confidence");
    // Corruption keeps sentence boundaries, so the TD labels serve SD too.
    std::vector<std::string> ft = {"--config", cfg, "finetune", "--corpus", corpus,
                                   "--init", str(dir / "pretrain"), "--out", str(dir / ("ft_" + kind))};
    ft.insert(ft.end(), feats.begin(), feats.end());
    cli(ft);
    const std::string run = str(dir / "runs" / (kind + "_it.jsonl"));
    cli({"--config", cfg, "summarize", "--model", str(dir / ("ft_" + kind) / "best"), "--in", corpus,
         "--out", run});
    cli({"--config", cfg, "evaluate", "--run", run, "--corpus", corpus});
    for (const std::string method : {"lead", "vsm", "lsa"}) {
      const std::string base = str(dir / "runs" / (kind + "_" + method + ".jsonl"));
      cli({"--config", cfg, "baseline", "--method", method, "--in", corpus, "--out", base});
      cli({"--config", cfg, "evaluate", "--run", base, "--corpus", corpus});
    }
  }
  cli({"--config", cfg, "report", "--runs", str(dir / "runs"), "--out", str(dir / "report")});
  return read_bytes(dir / "report.tsv") + read_bytes(dir / "report.txt");
}

/// Every file under dir, by relative path.
std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_bytes(e.path());
  return out;
}

Verdict determinism() {
  Verdict v;
  const std::string a = pipeline_report(fresh_dir("c8/run_a"));
  const std::string b = pipeline_report(fresh_dir("c8/run_b"));
  const bool rows = a.find("IT w/ Confidence + IDF") != std::string::npos;
  v.check(!a.empty() && a == b && rows, fmt::format("report {} bytes, identical across runs", a.size()));

  bool exact = true;
  std::size_t files = 0;
  for (const std::string which : {"pretrain", "ft_sd/last", "ft_td/best"}) {
    const fs::path src = g_work / "c8/run_a" / which;
    const fs::path copy = g_work / "c8/resaved" / which;
    fs::remove_all(copy);
    save_checkpoint(load_checkpoint(src), copy);
    auto original = tree_bytes(src);
    for (auto it = original.begin(); it != original.end();)
      it = it->first.ends_with(".tsv") || it->first.ends_with(".csv") ? original.erase(it) : std::next(it);
    const auto resaved = tree_bytes(copy);
    exact = exact && original == resaved;
    files += resaved.size();
  }
  v.check(exact, fmt::format("checkpoint save/load/save byte-exact over {} files", files));
  return v;
}

// ---------------------------------------------------------------- 9

Verdict simulator_calibration() {
  Verdict v;
  for (std::uint64_t seed : kSeeds) {
    const std::string s = std::to_string(seed);
    const fs::path dir = fresh_dir(fmt::format("c9/seed{}", seed));
    const fs::path td = dir / "td.jsonl";
    const fs::path sd = dir / "sd.jsonl";
    cli({"--seed", s, "gen-synthetic", "--documents", "1000", "--topic-vocab", "1600", "--out", str(td)});
    cli({"--seed", s, "simulate-asr", "--in", str(td), "--out", str(sd)});
    cli({"conf-metrics", "--in", str(sd), "--out", str(dir / "conf.json")});

    std::ifstream report(dir / "sd.asr.tsv");
    std::string line, total;
    while (std::getline(report, line))
      if (line.starts_with("TOTAL\t")) total = line;
    std::istringstream fields(total);
    std::string id;
    std::size_t ref = 0, sub = 0, del = 0, ins = 0;
    fields >> id >> ref >> sub >> del >> ins;
    const double w = static_cast<double>(sub + del + ins) / static_cast<double>(ref);
    const double eer = read_json(dir / "conf.json")["eer"].get<double>();
    v.check(ref >= 10000 && std::abs(w - 0.237) <= 0.02 && eer > 0.05 && eer < 0.45,
            fmt::format("seed {} {} tokens WER {:.4f} EER {:.4f}", seed, ref, w, eer));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"metric oracles", metric_oracles},
      {"gradient verification", gradient_check},
      {"masked-LM sanity", masked_lm},
      {"supervised learnability", learnability},
      {"confidence embedding helps on SD", confidence_claim},
      {"IDF embedding helps on TD", idf_claim},
      {"head parity and brute force", parity_and_brute_force},
      {"determinism", determinism},
      {"simulator calibration", simulator_calibration},
  };
  std::set<std::size_t> picked;
  g_work = fs::temp_directory_path() / "augsum-acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      g_work = argv[++i];
    } else {
      try {
        const std::size_t n = std::stoul(a);
        if (n < 1 || n > criteria.size()) throw std::out_of_range(a);
        picked.insert(n);
      } catch (const std::exception&) {
        std::cerr << "usage: acceptance [--work DIR] [criterion ...]\n";
        return 1;
      }
    }
  }
  if (picked.empty())
    for (std::size_t n = 1; n <= criteria.size(); ++n) picked.insert(n);
  g_work = fs::absolute(g_work);
  fs::create_directories(g_work);

  int failures = 0;
  for (std::size_t n : picked) {
    const auto& [name, run] = criteria[n - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string detail;
    for (const std::string& note : v.notes) detail += (detail.empty() ? "" : "; ") + note;
    std::cout << fmt::format("{} [{}] {} ({:.1f}s): {}\n", v.pass ? "PASS" : "FAIL", n, name, secs, detail)
              << std::flush;
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
