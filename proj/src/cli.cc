// src/cli.cc

// Copyright 2026  kgrescore authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "kgrescore/cli.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgrescore/compiler.h"
#include "kgrescore/experiment.h"
#include "kgrescore/expander.h"
#include "kgrescore/features.h"
#include "kgrescore/fst.h"
#include "kgrescore/kg.h"
#include "kgrescore/rescorer.h"
#include "kgrescore/symbol_table.h"
#include "kgrescore/synth.h"
#include "kgrescore/trainer.h"

namespace kgr {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string Sha256File(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 is unavailable");
  }
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

namespace {

// Records what a run read, wrote and how it was configured.
class Manifest {
 public:
  Manifest(const std::string &command, int argc, const char *const *argv) {
    doc_["tool"] = "kgrescore";
    doc_["command"] = command;
    json args = json::array();
    for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
    doc_["argv"] = args;
    doc_["config"] = json::object();
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }
  json &config() { return doc_["config"]; }
  void Input(const std::string &path) { Add("inputs", path); }
  void Output(const std::string &path) { Add("outputs", path); }
  void InputDir(const std::string &dir) {
    std::vector<std::string> files;
    for (const auto &e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const std::string &f : files) Input(f);
  }
  void Write(const std::string &path) const {
    if (path.empty()) return;
    std::ofstream os(path);
    if (!os) throw Error("cannot write '" + path + "'");
    os << doc_.dump(2) << '\n';
  }

 private:
  void Add(const char *key, const std::string &path) {
    doc_[key].push_back({{"path", path}, {"sha256", Sha256File(path)}});
  }
  json doc_;
};

std::ofstream OpenOut(const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path + "'");
  return os;
}

std::string Fires(const std::map<int, int> &counts) {
  std::string s;
  for (auto [id, c] : counts) {
    if (!s.empty()) s += ',';
    s += std::to_string(id) + ':' + std::to_string(c);
  }
  return s;
}

// A lattice directory: words.txt plus one <utt>.fst per utterance.
struct LatticeDir {
  SymbolTable symbols;
  std::vector<std::pair<std::string, std::string>> files;  // (utt, path)
};

LatticeDir OpenLatticeDir(const std::string &dir) {
  LatticeDir ld;
  const std::string words = dir + "/words.txt";
  std::ifstream is(words);
  if (!is) throw Error("lattice directory '" + dir + "' has no words.txt");
  try {
    ld.symbols = SymbolTable::ReadText(is);
  } catch (const ParseError &e) {
    throw ParseError(words + ": " + e.what());
  }
  for (const auto &e : fs::directory_iterator(dir))
    if (e.path().extension() == ".fst")
      ld.files.emplace_back(e.path().stem().string(), e.path().string());
  std::sort(ld.files.begin(), ld.files.end());
  return ld;
}

Wfst LoadLattice(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  try {
    return ReadFstText(is);
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string DefaultManifest(const std::string &manifest, const std::string &out) {
  return manifest.empty() ? out + ".manifest.json" : manifest;
}

// ---------------------------------------------------------------------------

struct CompileArgs {
  std::string model, out, symbols, manifest;
};

int Compile(const CompileArgs &a, Manifest &m, std::ostream &out) {
  Model model = LoadModel(a.model);
  RTop rtop = BuildRTop(model);
  const std::string syms = a.symbols.empty() ? a.out + ".syms" : a.symbols;
  SaveRTop(rtop, a.out, syms);
  out << "states " << rtop.fst.NumStates() << " arcs " << rtop.fst.NumArcs()
      << " features " << rtop.num_features << '\n';
  m.Input(a.model);
  m.Output(a.out);
  m.Output(syms);
  m.Write(DefaultManifest(a.manifest, a.out));
  return 0;
}

struct RescoreArgs {
  std::string kg, model, lattices, out, rtop, rtop_symbols, manifest;
  bool shared_cache = false;
  int workers = 1;
};

int Rescore(const RescoreArgs &a, Manifest &m, std::ostream &out,
            std::ostream &err) {
  KnowledgeGraph graph = LoadKnowledgeGraph(a.kg);
  Model model = LoadModel(a.model);
  RTop rtop;
  if (!a.rtop.empty()) {
    rtop = LoadRTop(a.rtop, a.rtop_symbols.empty() ? a.rtop + ".syms" : a.rtop_symbols);
    if (rtop.num_features != static_cast<int>(model.features.size()))
      throw Error("compiled automaton has " + std::to_string(rtop.num_features) +
                  " features but the model has " +
                  std::to_string(model.features.size()));
  } else {
    rtop = BuildRTop(model);
  }
  LatticeDir ld = OpenLatticeDir(a.lattices);
  LatticeRescorer rescorer(model, rtop, graph, a.shared_cache);
  std::vector<std::string> lines(ld.files.size());
  std::vector<char> failed(ld.files.size(), 0);
  ParallelFor(ld.files.size(), a.workers, [&](size_t i) {
    const auto &[utt, path] = ld.files[i];
    try {
      RescoreResult r = rescorer.Rescore(LoadLattice(path), ld.symbols);
      lines[i] = utt + '\t' + JoinWords(r.best.words) + '\t' +
                 FormatWeight(r.best.total) + '\t' +
                 FormatWeight(r.best.base_score) + '\t' +
                 Fires(r.best.feature_counts);
    } catch (const std::exception &e) {
      lines[i] = utt + "\tERROR\t" + e.what();
      failed[i] = 1;
    }
  });
  {
    std::ofstream os = OpenOut(a.out);
    for (const std::string &l : lines) os << l << '\n';
  }
  size_t errors = std::count(failed.begin(), failed.end(), 1);
  for (size_t i = 0; i < lines.size(); ++i)
    if (failed[i]) err << "error: " << lines[i].substr(lines[i].find('\t') + 7) << '\n';
  out << "rescored " << lines.size() - errors << " of " << lines.size()
      << " utterances\n";
  m.config()["shared_cache"] = a.shared_cache;
  m.config()["workers"] = a.workers;
  m.Input(a.kg);
  m.Input(a.model);
  m.InputDir(a.lattices);
  m.Output(a.out);
  m.Write(DefaultManifest(a.manifest, a.out));
  return errors ? 1 : 0;
}

struct TrainArgs {
  std::string kg, features, examples, out, manifest;
  TrainerConfig config;
  bool no_averaging = false, no_shuffle = false, fixed_base = false;
};

int Train(TrainArgs a, Manifest &m, std::ostream &out) {
  KnowledgeGraph graph = LoadKnowledgeGraph(a.kg);
  auto features = LoadFeatures(a.features);
  auto examples = LoadTrainingExamples(a.examples);
  a.config.averaging = !a.no_averaging;
  a.config.shuffle = !a.no_shuffle;
  a.config.train_base_weight = !a.fixed_base;
  TrainStats stats;
  Model model = kgr::Train(examples, features, graph, a.config, &stats);
  {
    std::ofstream os = OpenOut(a.out);
    WriteModel(model, os);
  }
  out << "examples " << examples.size() << " features " << features.size()
      << " updates " << stats.updates << "\nmistakes per epoch";
  for (int e : stats.mistakes_per_epoch) out << ' ' << e;
  out << '\n';
  json &c = m.config();
  c["epochs"] = a.config.epochs;
  c["learning_rate"] = a.config.learning_rate;
  c["averaging"] = a.config.averaging;
  c["seed"] = a.config.seed;
  c["shuffle"] = a.config.shuffle;
  c["train_base_weight"] = a.config.train_base_weight;
  c["initial_base_weight"] = a.config.initial_base_weight;
  m.Input(a.kg);
  m.Input(a.features);
  m.Input(a.examples);
  m.Output(a.out);
  m.Write(DefaultManifest(a.manifest, a.out));
  return 0;
}

struct SynthArgs {
  std::string kg, templates, out_dir, confusions, stratum = "head", prefix = "utt",
      manifest;
  size_t n = 100;
  uint64_t seed = 1;
  double entity_rate = 0.3, context_rate = 0.03;
  int breadth = 3, nbest = 10;
};

int Synth(const SynthArgs &a, Manifest &m, std::ostream &out) {
  auto tier = ParsePopTier(a.stratum);
  if (!tier) throw ParseError("unknown stratum '" + a.stratum + "'");
  KnowledgeGraph graph = LoadKnowledgeGraph(a.kg);
  auto templates = LoadTemplates(a.templates);
  ConfusionPool extra;
  if (!a.confusions.empty()) extra = LoadConfusions(a.confusions);
  NoiseChannelConfig channel;
  channel.breadth = a.breadth;
  channel.nbest = a.nbest;
  channel.pool = DefaultConfusionPool(graph, {&templates}, extra, a.breadth);
  channel.Validate();
  SymbolTable syms;
  auto noisy = SynthesizeNoisy(templates, graph, *tier, a.n, a.seed,
                               a.entity_rate, a.context_rate, &channel, &syms);

  const fs::path dir(a.out_dir), lat_dir = dir / "lattices";
  fs::create_directories(lat_dir);
  std::vector<std::pair<std::string, std::vector<std::string>>> corpus;
  std::vector<TrainingExample> examples;
  std::vector<std::string> written;
  char buf[32];
  for (size_t i = 0; i < noisy.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%05zu", i);
    const std::string id = a.prefix + buf;
    corpus.emplace_back(id, noisy[i].sample.words);
    examples.push_back({id, noisy[i].sample.words, noisy[i].corrupt.nbest});
    const std::string path = (lat_dir / (id + ".fst")).string();
    std::ofstream os = OpenOut(path);
    WriteFstText(noisy[i].corrupt.lattice, os);
    written.push_back(path);
  }
  const std::string words = (lat_dir / "words.txt").string();
  const std::string corpus_path = (dir / "corpus.txt").string();
  const std::string nbest_path = (dir / "nbest.txt").string();
  {
    std::ofstream os = OpenOut(words);
    syms.WriteText(os);
  }
  {
    std::ofstream os = OpenOut(corpus_path);
    WriteCorpus(corpus, os);
  }
  {
    std::ofstream os = OpenOut(nbest_path);
    WriteTrainingExamples(examples, os);
  }
  out << "utterances " << noisy.size() << '\n';
  json &c = m.config();
  c["stratum"] = a.stratum;
  c["n"] = a.n;
  c["seed"] = a.seed;
  c["entity_rate"] = a.entity_rate;
  c["context_rate"] = a.context_rate;
  c["breadth"] = a.breadth;
  c["nbest"] = a.nbest;
  m.Input(a.kg);
  m.Input(a.templates);
  if (!a.confusions.empty()) m.Input(a.confusions);
  m.Output(corpus_path);
  m.Output(nbest_path);
  m.Output(words);
  for (const std::string &p : written) m.Output(p);
  m.Write(a.manifest.empty() ? (dir / "manifest.json").string() : a.manifest);
  return 0;
}

// System output: utt<TAB>words, extra columns (as in rescore output) ignored.
std::map<std::string, std::vector<std::string>> LoadOutputs(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (TrimView(line).empty()) continue;
    auto f = SplitTabs(line);
    if (f[0].empty())
      throw ParseError(path + ": line " + std::to_string(lineno) + ": missing utterance id");
    if (!out.emplace(f[0], f.size() > 1 ? SplitWords(ToLower(f[1]))
                                        : std::vector<std::string>{}).second)
      throw ParseError(path + ": line " + std::to_string(lineno) +
                       ": duplicate utterance id '" + f[0] + "'");
  }
  return out;
}

struct EvalArgs {
  std::string hyp, ref, lattices, manifest;
};

int Eval(const EvalArgs &a, Manifest &m, std::ostream &out) {
  auto hyp = LoadOutputs(a.hyp);
  auto ref = LoadCorpusMap(a.ref);
  EvalReport r;
  if (a.lattices.empty()) {
    r = Evaluate(hyp, ref);
  } else {
    LatticeDir ld = OpenLatticeDir(a.lattices);
    std::map<std::string, Wfst> owned;
    std::map<std::string, const Wfst *> ptrs;
    for (const auto &[utt, path] : ld.files)
      if (ref.count(utt)) ptrs[utt] = &(owned[utt] = LoadLattice(path));
    r = Evaluate(hyp, ref, &ptrs, &ld.symbols);
    m.InputDir(a.lattices);
  }
  char buf[64];
  out << "utterances " << r.utterances << "\nerrors " << r.errors << '\n';
  std::snprintf(buf, sizeof(buf), "SER %.4f\n", r.ser);
  out << buf;
  if (r.oracle_ser) {
    std::snprintf(buf, sizeof(buf), "oracle SER %.4f\n", *r.oracle_ser);
    out << buf;
  }
  m.Input(a.hyp);
  m.Input(a.ref);
  m.Write(a.manifest);
  return 0;
}

struct DumpArgs {
  std::string model, kg, out, symbols, manifest;
  size_t max_states = 1000000;
};

int DumpRkgCmd(const DumpArgs &a, Manifest &m, std::ostream &out) {
  Model model = LoadModel(a.model);
  KnowledgeGraph graph = LoadKnowledgeGraph(a.kg);
  RTop rtop = BuildRTop(model);
  ExpansionContext context(rtop, graph);
  const std::string syms = a.symbols.empty() ? a.out + ".syms" : a.symbols;
  std::ostringstream fst_text, sym_text;
  DumpRkg(context, a.max_states, fst_text, sym_text);
  OpenOut(a.out) << fst_text.str();
  OpenOut(syms) << sym_text.str();
  std::istringstream back(fst_text.str());
  Wfst rkg = ReadFstText(back);
  out << "states " << rkg.NumStates() << " arcs " << rkg.NumArcs() << '\n';
  m.config()["max_states"] = a.max_states;
  m.Input(a.model);
  m.Input(a.kg);
  m.Output(a.out);
  m.Output(syms);
  m.Write(DefaultManifest(a.manifest, a.out));
  return 0;
}

struct FeaturesArgs {
  std::vector<std::string> templates;
  std::string out, factor = "none", manifest;
  bool no_relations = false;
};

int FeaturesCmd(const FeaturesArgs &a, Manifest &m, std::ostream &out) {
  std::vector<Template> all;
  for (const std::string &path : a.templates) {
    auto t = LoadTemplates(path);
    all.insert(all.end(), t.begin(), t.end());
    m.Input(path);
  }
  ExtractOptions options;
  options.relations = !a.no_relations;
  auto features = FactorFeatures(ExtractFeatures(all, options), ParseFactorMode(a.factor));
  {
    std::ofstream os = OpenOut(a.out);
    WriteFeatures(features, os);
  }
  out << "features " << features.size() << '\n';
  m.config()["relations"] = options.relations;
  m.config()["factor"] = a.factor;
  m.Output(a.out);
  m.Write(DefaultManifest(a.manifest, a.out));
  return 0;
}

struct ExperimentArgs {
  ExperimentConfig config;
  std::string report, models_dir, manifest;
  bool no_shared_cache = false, fixed_base = false;
};

int ExperimentCmd(ExperimentArgs a, Manifest &m, std::ostream &out,
                  std::ostream &err) {
  a.config.shared_cache = !a.no_shared_cache;
  a.config.trainer.train_base_weight = !a.fixed_base;
  ExperimentResult result = RunExperiment(a.config, &err);
  std::ostringstream table;
  WriteReport(result, table);
  out << table.str();
  if (!a.report.empty()) {
    OpenOut(a.report) << table.str();
    m.Output(a.report);
  }
  if (!a.models_dir.empty()) {
    fs::create_directories(a.models_dir);
    for (size_t i = 0; i < result.models.size(); ++i) {
      const std::string path = a.models_dir + "/" + result.variant_names[i] + ".model";
      std::ofstream os = OpenOut(path);
      WriteModel(result.models[i], os);
      os.close();
      m.Output(path);
    }
  }
  const ExperimentConfig &c = a.config;
  json &j = m.config();
  j["seed"] = c.seed;
  j["train_synthesized"] = c.train_synthesized;
  j["train_general"] = c.train_general;
  j["test_size"] = c.test_size;
  j["rates"] = {{"context", c.context_rate}, {"head", c.head_rate},
                {"torso", c.torso_rate}, {"tail", c.tail_rate}};
  j["breadth"] = c.breadth;
  j["nbest"] = c.nbest;
  j["epochs"] = c.trainer.epochs;
  j["train_base_weight"] = c.trainer.train_base_weight;
  j["workers"] = c.workers;
  j["shared_cache"] = c.shared_cache;
  m.Input(c.kg_path);
  for (const std::string &s : c.entity_sets) m.Input(c.templates_dir + "/" + s + ".tsv");
  m.Input(c.templates_dir + "/" + c.general_set + ".tsv");
  if (!c.confusions_path.empty()) m.Input(c.confusions_path);
  m.Write(a.manifest.empty() && !a.report.empty() ? a.report + ".manifest.json"
                                                  : a.manifest);
  return 0;
}

}  // namespace

int RunCli(int argc, const char *const *argv, std::ostream &out,
           std::ostream &err) {
  CLI::App app{"Knowledge-graph feature rescoring of ASR lattices", "kgrescore"};
  app.require_subcommand(1);

  CompileArgs compile;
  auto *c = app.add_subcommand("compile", "Compile a model into its tagging automaton");
  c->add_option("model", compile.model, "Model file")->required()->check(CLI::ExistingFile);
  c->add_option("out", compile.out, "Output automaton (text)")->required();
  c->add_option("--symbols", compile.symbols, "Output symbol table (default: OUT.syms)");
  c->add_option("--manifest", compile.manifest, "Manifest path (default: OUT.manifest.json)");

  RescoreArgs rescore;
  auto *r = app.add_subcommand("rescore", "Rescore a directory of lattices");
  r->add_option("kg", rescore.kg, "Knowledge graph (JSON)")->required()->check(CLI::ExistingFile);
  r->add_option("model", rescore.model, "Model file")->required()->check(CLI::ExistingFile);
  r->add_option("lattices", rescore.lattices, "Lattice directory")
      ->required()->check(CLI::ExistingDirectory);
  r->add_option("out", rescore.out, "Output file")->required();
  r->add_option("--rtop", rescore.rtop, "Precompiled automaton (default: compile the model)")
      ->check(CLI::ExistingFile);
  r->add_option("--rtop-symbols", rescore.rtop_symbols, "Symbol table of --rtop")
      ->check(CLI::ExistingFile);
  r->add_flag("--shared-cache", rescore.shared_cache,
              "Keep expanded states across utterances");
  r->add_option("--workers", rescore.workers, "Worker threads")
      ->check(CLI::PositiveNumber);
  r->add_option("--manifest", rescore.manifest, "Manifest path (default: OUT.manifest.json)");

  TrainArgs train;
  auto *t = app.add_subcommand("train", "Train feature weights on n-best lists");
  t->add_option("kg", train.kg, "Knowledge graph (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("features", train.features, "Feature file (weights ignored)")
      ->required()->check(CLI::ExistingFile);
  t->add_option("examples", train.examples, "Training n-best file")
      ->required()->check(CLI::ExistingFile);
  t->add_option("out", train.out, "Output model")->required();
  t->add_option("--epochs", train.config.epochs, "Epochs")->check(CLI::PositiveNumber);
  t->add_option("--learning-rate", train.config.learning_rate, "Update step");
  t->add_flag("--no-averaging", train.no_averaging, "Return the last weights");
  t->add_option("--seed", train.config.seed, "Shuffle seed");
  t->add_flag("--no-shuffle", train.no_shuffle, "Keep file order");
  t->add_flag("--fixed-base-weight", train.fixed_base, "Do not train the base-score weight");
  t->add_option("--base-weight", train.config.initial_base_weight, "Initial base-score weight");
  t->add_option("--manifest", train.manifest, "Manifest path (default: OUT.manifest.json)");

  SynthArgs synth;
  auto *s = app.add_subcommand("synth", "Synthesize utterances, lattices and n-best lists");
  s->add_option("kg", synth.kg, "Knowledge graph (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("templates", synth.templates, "Template file")->required()->check(CLI::ExistingFile);
  s->add_option("out_dir", synth.out_dir, "Output directory")->required();
  s->add_option("--stratum", synth.stratum, "head, torso or tail");
  s->add_option("-n,--count", synth.n, "Number of utterances");
  s->add_option("--seed", synth.seed, "Seed");
  s->add_option("--entity-rate", synth.entity_rate, "Confusion rate of entity words");
  s->add_option("--context-rate", synth.context_rate, "Confusion rate of other words");
  s->add_option("--breadth", synth.breadth, "Competing words per confusable position");
  s->add_option("--nbest", synth.nbest, "n-best list size");
  s->add_option("--confusions", synth.confusions, "Extra confusion pairs")->check(CLI::ExistingFile);
  s->add_option("--prefix", synth.prefix, "Utterance id prefix");
  s->add_option("--manifest", synth.manifest, "Manifest path (default: OUT_DIR/manifest.json)");

  EvalArgs eval;
  auto *e = app.add_subcommand("eval", "Sentence error rate of system output");
  e->add_option("hyp", eval.hyp, "System output (utt<TAB>words...)")
      ->required()->check(CLI::ExistingFile);
  e->add_option("ref", eval.ref, "References (utt<TAB>words)")->required()->check(CLI::ExistingFile);
  e->add_option("--lattices", eval.lattices, "Lattice directory for oracle SER")
      ->check(CLI::ExistingDirectory);
  e->add_option("--manifest", eval.manifest, "Manifest path");

  DumpArgs dump;
  auto *d = app.add_subcommand("dump-rkg", "Fully expand the knowledge-graph automaton");
  d->add_option("model", dump.model, "Model file")->required()->check(CLI::ExistingFile);
  d->add_option("kg", dump.kg, "Knowledge graph (JSON)")->required()->check(CLI::ExistingFile);
  d->add_option("out", dump.out, "Output automaton (text)")->required();
  d->add_option("--symbols", dump.symbols, "Output symbol table (default: OUT.syms)");
  d->add_option("--max-states", dump.max_states, "Expansion limit");
  d->add_option("--manifest", dump.manifest, "Manifest path (default: OUT.manifest.json)");

  FeaturesArgs feats;
  auto *f = app.add_subcommand("features", "Extract feature n-grams from templates");
  f->add_option("templates", feats.templates, "Template files")
      ->required()->check(CLI::ExistingFile);
  f->add_option("-o,--out", feats.out, "Output feature file")->required();
  f->add_flag("--no-relations", feats.no_relations, "Skip relation-conditioned variants");
  f->add_option("--factor", feats.factor, "none, wc, pop or both");
  f->add_option("--manifest", feats.manifest, "Manifest path (default: OUT.manifest.json)");

  ExperimentArgs exp;
  ExperimentConfig &ec = exp.config;
  auto *x = app.add_subcommand("experiment", "Run the desk-scale rescoring experiment");
  x->add_option("--kg", ec.kg_path, "Knowledge graph (JSON)")->check(CLI::ExistingFile);
  x->add_option("--templates-dir", ec.templates_dir, "Template directory")
      ->check(CLI::ExistingDirectory);
  x->add_option("--confusions", ec.confusions_path, "Extra confusion pairs")
      ->check(CLI::ExistingFile);
  x->add_option("--seed", ec.seed, "Seed");
  x->add_option("--train-synthesized", ec.train_synthesized, "Synthesized training utterances");
  x->add_option("--train-general", ec.train_general, "General training utterances");
  x->add_option("--test-size", ec.test_size, "Utterances per test set");
  x->add_option("--epochs", ec.trainer.epochs, "Training epochs")->check(CLI::PositiveNumber);
  x->add_flag("--fixed-base-weight", exp.fixed_base, "Do not train the base-score weight");
  x->add_option("--breadth", ec.breadth, "Competing words per confusable position");
  x->add_option("--nbest", ec.nbest, "n-best list size");
  x->add_option("--workers", ec.workers, "Worker threads")->check(CLI::PositiveNumber);
  x->add_flag("--no-shared-cache", exp.no_shared_cache, "Expand per utterance");
  x->add_option("--report", exp.report, "Write the report table here");
  x->add_option("--models-dir", exp.models_dir, "Write trained models here");
  x->add_option("--manifest", exp.manifest, "Manifest path (default: REPORT.manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &ex) {
    int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Manifest manifest(name, argc, argv);
  try {
    if (c->parsed()) return Compile(compile, manifest, out);
    if (r->parsed()) return Rescore(rescore, manifest, out, err);
    if (t->parsed()) return Train(train, manifest, out);
    if (s->parsed()) return Synth(synth, manifest, out);
    if (e->parsed()) return Eval(eval, manifest, out);
    if (d->parsed()) return DumpRkgCmd(dump, manifest, out);
    if (f->parsed()) return FeaturesCmd(feats, manifest, out);
    if (x->parsed()) return ExperimentCmd(exp, manifest, out, err);
  } catch (const ParseError &ex) {
    err << "kgrescore " << name << ": " << ex.what() << '\n';
    return 2;
  } catch (const std::exception &ex) {
    err << "kgrescore " << name << ": " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace kgr
