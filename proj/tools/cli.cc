// Copyright 2026 The Polydef Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "polydef/artifacts.h"
#include "polydef/common.h"
#include "polydef/corpus.h"
#include "polydef/define.h"
#include "polydef/diagnostics.h"
#include "polydef/eval.h"
#include "polydef/match.h"
#include "polydef/parallel.h"
#include "polydef/postprocess.h"
#include "polydef/sparse_decomp.h"

namespace polydef::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Global {
  std::uint64_t seed = 1;
  int jobs = 1;
};

std::string Fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string SerializeLexicon(const PosLexicon& lex) {
  std::string out;
  for (const auto& [w, p] : lex) out += w + "\t" + std::string(PosName(p)) + "\n";
  return out;
}

PosLexicon ParseLexicon(const std::string& text) {
  PosLexicon lex;
  std::stringstream s(text);
  std::string line;
  while (std::getline(s, line)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    lex[line.substr(0, tab)] = ParsePos(line.substr(tab + 1));
  }
  return lex;
}

// ------------------------------------------------------------------ stats

struct StatsArgs {
  std::string corpus;
  std::vector<double> fractions;
};

int Stats(const StatsArgs& a, const Global& g, std::ostream& out) {
  const auto entries = LoadDictionary(a.corpus);
  std::vector<std::pair<std::string, CorpusStats>> columns;
  if (a.fractions.empty()) {
    columns.emplace_back("all", ComputeCorpusStats(entries));
  } else {
    if (a.fractions.size() != 3) throw Error("--fractions needs three values");
    auto split = SplitCorpus(entries, {a.fractions[0], a.fractions[1], a.fractions[2]}, g.seed);
    columns.emplace_back("train", ComputeCorpusStats(split.train));
    columns.emplace_back("valid", ComputeCorpusStats(split.valid));
    columns.emplace_back("test", ComputeCorpusStats(split.test));
  }
  out << FormatStatsTable(columns);
  return 0;
}

// -------------------------------------------------------------- decompose

struct DecomposeArgs {
  std::string embeddings;
  std::string atoms_out;
  std::size_t num_atoms = 0;
  std::size_t sparsity = 5;
  int iterations = 30;
  double tol = 1e-4;
  int starts = 3;
};

int Decompose(const DecomposeArgs& a, const Global& g, std::ostream& out) {
  const auto table = LoadEmbeddings(a.embeddings);
  DecompConfig cfg;
  cfg.num_atoms = a.num_atoms;
  cfg.sparsity = a.sparsity;
  cfg.iterations = a.iterations;
  cfg.tol = a.tol;
  cfg.starts = a.starts;
  cfg.seed = g.seed;
  cfg.jobs = g.jobs;
  FitTrace trace;
  const auto set = FitAtoms(table, cfg, &trace);
  SaveAtoms(set, a.atoms_out);
  for (std::size_t i = 0; i < trace.objective.size(); ++i) {
    out << "iteration " << i << " objective " << FormatReal(trace.objective[i]) << '\n';
  }
  out << "atoms " << set.num_atoms() << " words " << set.num_words() << " reseeded "
      << trace.reseeded_atoms << '\n';
  return 0;
}

// ------------------------------------------------------------------ match

struct MatchArgs {
  std::string corpus;
  std::string embeddings;
  std::string atoms;
  std::string out;
  std::string stopwords;
};

int Match(const MatchArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  const auto table = LoadEmbeddings(a.embeddings);
  const auto atoms = LoadAtoms(a.atoms, &table);
  const auto entries = LoadDictionary(a.corpus);
  const auto stop = a.stopwords.empty() ? StopwordList::Default() : StopwordList::Load(a.stopwords);
  std::vector<std::optional<MatchRecord>> results(entries.size());
  std::vector<std::string> problems(entries.size());
  ParallelFor(entries.size(), g.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    if (!atoms.Find(e.word)) {
      problems[i] = "'" + e.word + "' has no atoms";
      return;
    }
    try {
      auto r = MatchHeuristic(e, WordAtomVectors(atoms, e.word), table, stop);
      results[i] = MatchRecord{e.word, e.definition, r.chosen_atom, r.scores};
    } catch (const Error& ex) {
      problems[i] = ex.what();
    }
  });
  std::vector<MatchRecord> records;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (results[i]) {
      records.push_back(std::move(*results[i]));
    } else {
      err << "warning: skipping entry " << i + 1 << ": " << problems[i] << '\n';
    }
  }
  SaveMatches(a.out, records);
  out << "matched " << records.size() << " of " << entries.size() << " entries\n";
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string mode = "gs";
  std::string corpus;
  std::string valid;
  std::string embeddings;
  std::string atoms;
  std::string matches;
  std::string ckpt_out;
  std::string log_out;
  std::string precision = "f32";
  bool no_pos = false;
  bool no_char = false;
  bool single_sense = false;
  bool shuffle_definitions = false;
  ModelConfig model;
  TrainConfig train;
};

template <typename T>
int TrainWith(const TrainArgs& a, const ModelConfig& mcfg, const TrainConfig& tcfg,
              std::ostream& out, std::ostream& err) {
  auto entries = LoadDictionary(a.corpus);
  if (a.shuffle_definitions) entries = BaselineRandom(entries, tcfg.seed);
  std::vector<DictEntry> valid;
  if (!a.valid.empty()) valid = LoadDictionary(a.valid);
  const auto table = LoadEmbeddings(a.embeddings);
  AtomSet atoms;
  if (mcfg.use_atom) atoms = LoadAtoms(a.atoms, &table);
  std::optional<MatchTable> matches;
  if (mcfg.use_atom && mcfg.mode == MatchMode::kHeuristic) {
    if (a.matches.empty()) throw Error("--mode heu needs --matches (see 'polydef match')");
    auto recs = LoadMatches(a.matches);
    matches = IndexMatches(recs);
  }
  auto model = DefineModel<T>::Create(mcfg, entries, table.dim(), tcfg.seed);
  std::vector<std::string> warnings;
  auto train_ex = model.Prepare(entries, table, atoms, matches ? &*matches : nullptr, &warnings);
  auto valid_ex = model.Prepare(valid, table, atoms, matches ? &*matches : nullptr, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  auto result = Train(model, train_ex, valid_ex, tcfg);
  for (const auto& e : result.log) {
    out << "epoch " << e.epoch << " loss " << Fixed(e.train_loss) << " ce " << Fixed(e.train_ce)
        << " valid " << (e.valid_loss ? Fixed(*e.valid_loss) : std::string("-")) << " lr "
        << FormatReal(e.lr) << " tau " << Fixed(e.tau, 3) << " max_weight "
        << (e.mean_max_weight ? Fixed(*e.mean_max_weight) : std::string("-")) << '\n';
  }
  out << "stopped: " << result.stop_reason << '\n';
  model.Save(a.ckpt_out, {{"pos_lexicon", SerializeLexicon(BuildPosLexicon(entries))},
                          {"train_seed", std::to_string(tcfg.seed)}});
  if (!a.log_out.empty()) WriteFile(a.log_out, TrainLogJsonl(result.log));
  return 0;
}

int TrainCmd(const TrainArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  ModelConfig mcfg = a.model;
  mcfg.mode = ParseMatchMode(a.mode);
  mcfg.use_pos = !a.no_pos;
  mcfg.use_char = !a.no_char;
  if (a.single_sense) mcfg = SingleSenseConfig(mcfg);
  TrainConfig tcfg = a.train;
  tcfg.seed = g.seed;
  if (a.precision == "f32") return TrainWith<float>(a, mcfg, tcfg, out, err);
  if (a.precision == "f64") return TrainWith<double>(a, mcfg, tcfg, out, err);
  throw Error("--precision must be f32 or f64");
}

// --------------------------------------------------------------- generate

struct GenerateArgs {
  std::string ckpt;
  std::string words;
  std::string embeddings;
  std::string atoms;
  std::string out;
  std::string gates_out;
  std::string baseline;
  std::string corpus;
  std::size_t cap = 3;
  DecodeConfig decode;
};

std::string GateJson(const DefinitionOutput& o, const std::vector<GateDump>& gates) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  std::ostringstream s;
  s << "{\"word\":\"" << o.word << "\",\"atom_id\":"
    << (o.atom_id ? std::to_string(*o.atom_id) : std::string("null")) << ",\"steps\":[";
  for (std::size_t t = 0; t < gates.size(); ++t) {
    const auto& gd = gates[t];
    if (t) s << ',';
    s << "{\"token\":\"" << gd.token << "\",\"z\":" << FormatReal(mean(gd.z))
      << ",\"r_word\":" << FormatReal(mean(gd.r_word)) << ",\"r_atom\":" << FormatReal(mean(gd.r_atom))
      << ",\"r_pos\":" << FormatReal(mean(gd.r_pos)) << ",\"r_char\":" << FormatReal(mean(gd.r_char))
      << '}';
  }
  s << "]}";
  return s.str();
}

int GenerateBaseline(const GenerateArgs& a, const Global& g, std::ostream& out,
                     std::ostream& err) {
  if (a.corpus.empty()) throw Error("--baseline needs --corpus (training entries)");
  const auto table = LoadEmbeddings(a.embeddings);
  const auto train = LoadDictionary(a.corpus);
  const auto lex = BuildPosLexicon(train);
  std::optional<std::size_t> cap;
  if (a.baseline == "ne-star") {
    cap = a.cap;
  } else if (a.baseline != "ne") {
    throw Error("--baseline must be ne or ne-star");
  }
  std::vector<GenerationRecord> records;
  for (const auto& req : LoadWordList(a.words)) {
    if (!table.Contains(req.word)) {
      err << "warning: skipping '" << req.word << "': no embedding\n";
      continue;
    }
    for (auto& def : BaselineNearestEntry(req.word, train, table, cap, g.seed)) {
      GenerationRecord r;
      r.output.word = req.word;
      r.output.pos = req.pos ? *req.pos : (lex.count(req.word) ? lex.at(req.word) : Pos::kNoun);
      r.output.tokens = def;
      r.output.tokens.push_back("</s>");
      records.push_back(std::move(r));
    }
  }
  SaveGenerations(a.out, records);
  out << "wrote " << records.size() << " baseline definitions\n";
  return 0;
}

int Generate(const GenerateArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  if (!a.baseline.empty()) return GenerateBaseline(a, g, out, err);
  if (a.ckpt.empty()) throw Error("generate needs --ckpt (or --baseline)");
  const auto model = DefineModel<double>::Load(a.ckpt);
  const auto table = LoadEmbeddings(a.embeddings);
  AtomSet atoms;
  if (model.config().use_atom) {
    if (a.atoms.empty()) throw Error("this model needs --atoms");
    atoms = LoadAtoms(a.atoms, &table);
  }
  PosLexicon lex;
  if (auto it = model.metadata().find("pos_lexicon"); it != model.metadata().end()) {
    lex = ParseLexicon(it->second);
  }
  struct Job {
    Example ex;
    std::optional<std::size_t> atom;
  };
  std::vector<Job> jobs;
  for (const auto& req : LoadWordList(a.words)) {
    if (!table.Contains(req.word)) {
      err << "warning: skipping '" << req.word << "': no embedding\n";
      continue;
    }
    if (model.config().use_atom) {
      if (!atoms.Find(req.word)) {
        err << "warning: skipping '" << req.word << "': no atoms\n";
        continue;
      }
      for (const auto& av : WordAtomVectors(atoms, req.word)) {
        Pos pos = req.pos ? *req.pos : InferPos(av.vec, table, lex).pos;
        jobs.push_back({model.InferenceExample(req.word, pos, table, atoms), av.id});
      }
    } else {
      Pos pos = Pos::kNoun;
      if (req.pos) {
        pos = *req.pos;
      } else if (lex.count(req.word)) {
        pos = lex.at(req.word);
      } else {
        pos = InferPos(table.at(req.word), table, lex).pos;
      }
      jobs.push_back({model.InferenceExample(req.word, pos, table, atoms), std::nullopt});
    }
  }
  const bool want_gates = !a.gates_out.empty();
  std::vector<std::vector<DefinitionOutput>> outs(jobs.size());
  std::vector<std::vector<GateDump>> gates(jobs.size());
  ParallelFor(jobs.size(), g.jobs, [&](std::size_t i) {
    outs[i] = model.Generate(jobs[i].ex, jobs[i].atom, a.decode, want_gates ? &gates[i] : nullptr);
  });
  std::vector<GenerationRecord> records;
  std::string gate_text;
  if (want_gates) gate_text = "{\"format\":\"polydef-gates\",\"version\":1}\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (auto& o : outs[i]) records.push_back({o, std::nullopt, std::nullopt});
    if (want_gates) gate_text += GateJson(outs[i][0], gates[i]) + "\n";
  }
  SaveGenerations(a.out, records);
  if (want_gates) WriteFile(a.gates_out, gate_text);
  out << "wrote " << records.size() << " definitions\n";
  return 0;
}

// ------------------------------------------------------------------ prune

struct PruneArgs {
  std::string in;
  std::string out;
  double threshold = 0.6;
};

int Prune(const PruneArgs& a, const Global& g, std::ostream& out) {
  auto records = LoadGenerations(a.in);
  std::vector<std::string> words;
  std::map<std::string, std::vector<std::size_t>> by_word;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& v = by_word[records[i].output.word];
    if (v.empty()) words.push_back(records[i].output.word);
    v.push_back(i);
  }
  std::vector<MergedOutputs> merged(words.size());
  ParallelFor(words.size(), g.jobs, [&](std::size_t w) {
    std::vector<DefinitionOutput> outs;
    for (auto i : by_word[words[w]]) outs.push_back(records[i].output);
    merged[w] = MergeOutputs(outs, a.threshold);
  });
  std::size_t groups = 0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& idx = by_word[words[w]];
    const auto& m = merged[w];
    std::set<std::size_t> reps(m.representatives.begin(), m.representatives.end());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      records[idx[k]].group = m.group_of[k];
      records[idx[k]].representative = reps.count(k) > 0;
    }
    groups += m.groups.size();
  }
  SaveGenerations(a.out, records);
  out << "words " << words.size() << " outputs " << records.size() << " groups " << groups << '\n';
  return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string outputs;
  std::string truths;
  std::string metric = "all";
  std::string csv_out;
  std::string labels;
  bool representatives_only = false;
  double a = 0.6;
  double b = 0.3;
};

int Evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const auto truth_entries = LoadDictionary(a.truths);
  std::ostringstream csv;
  csv << "# polydef-eval 1\n";
  if (a.metric == "manual") {
    if (a.labels.empty()) throw Error("--metric manual needs --labels");
    const ScoreScheme scheme{a.a, a.b};
    const auto groups = CollectTruthGroups(truth_entries);
    csv << "model,word,precision,recall\n";
    for (const auto& [model, labels] : LoadLabels(a.labels)) {
      const auto rep = ManualPrecisionRecall(labels, groups, scheme);
      out << model << " precision " << Fixed(rep.macro.precision) << " recall "
          << Fixed(rep.macro.recall) << '\n';
      for (const auto& [w, pr] : rep.per_word) {
        csv << model << ',' << w << ',' << FormatReal(pr.precision) << ','
            << FormatReal(pr.recall) << '\n';
      }
      csv << model << ",ALL," << FormatReal(rep.macro.precision) << ','
          << FormatReal(rep.macro.recall) << '\n';
    }
  } else {
    const std::set<std::string> metrics = {"bleu", "rbleu", "fbleu", "all"};
    if (!metrics.count(a.metric)) throw Error("--metric must be bleu, rbleu, fbleu, all or manual");
    DefinitionSets outputs;
    for (const auto& r : LoadGenerations(a.outputs)) {
      if (a.representatives_only && !r.representative.value_or(false)) continue;
      auto toks = StripEos(r.output.tokens);
      if (toks.empty()) {
        err << "warning: ignoring an empty output for '" << r.output.word << "'\n";
        continue;
      }
      outputs[r.output.word].push_back(std::move(toks));
    }
    const auto truths = GroupDefinitions(truth_entries);
    const auto bleu = CorpusBleu(outputs, truths);
    const auto rbleu = ReverseBleu(outputs, truths);
    for (const auto& w : bleu.skipped) {
      err << "warning: '" << w << "' lacks outputs or ground truth; skipped\n";
    }
    const bool all = a.metric == "all";
    if (all || a.metric == "bleu") out << "BLEU " << Fixed(bleu.score) << '\n';
    if (all || a.metric == "rbleu") out << "rBLEU " << Fixed(rbleu.score) << '\n';
    if (all || a.metric == "fbleu") out << "fBLEU " << Fixed(FBleu(bleu.score, rbleu.score)) << '\n';
    out << "words scored " << bleu.words_scored << " skipped " << bleu.skipped.size() << '\n';
    csv << "word,bleu,rbleu,fbleu\n";
    for (const auto& [w, s] : bleu.per_word) {
      const double r = rbleu.per_word.at(w);
      csv << w << ',' << FormatReal(s) << ',' << FormatReal(r) << ',' << FormatReal(FBleu(s, r))
          << '\n';
    }
    csv << "ALL," << FormatReal(bleu.score) << ',' << FormatReal(rbleu.score) << ','
        << FormatReal(FBleu(bleu.score, rbleu.score)) << '\n';
  }
  if (!a.csv_out.empty()) WriteFile(a.csv_out, csv.str());
  return 0;
}

// ------------------------------------------------------------------ sweep

struct SweepArgs {
  std::string labels;
  std::string truths;
  std::string grid = "a=0.1:0.9:0.1,b<a";
  std::string out;
};

int Sweep(const SweepArgs& a, std::ostream& out) {
  const auto labels = LoadLabels(a.labels);
  const auto groups = CollectTruthGroups(LoadDictionary(a.truths));
  const auto grid = ParseSweepGrid(a.grid);
  const auto result = SensitivitySweep(labels, groups, grid);
  const auto csv = SweepCsv(result);
  if (a.out.empty()) {
    out << csv;
  } else {
    WriteFile(a.out, csv);
    out << "grid points " << grid.size() << " models " << labels.size() << " ranking stable "
        << (result.stable() ? "yes" : "no") << '\n';
  }
  return 0;
}

// ---------------------------------------------------------- inspect-atoms

struct InspectArgs {
  std::string embeddings;
  std::string atoms;
  std::string atom_ids;
  std::string words;
  std::size_t k = 10;
  std::size_t limit = 10;
  std::string features_out;
  std::string corpus;
  std::string truths;
};

int Inspect(const InspectArgs& a, std::ostream& out) {
  const auto table = LoadEmbeddings(a.embeddings);
  const auto atoms = LoadAtoms(a.atoms, &table);
  std::vector<std::size_t> ids;
  const auto words = SplitList(a.words);
  for (const auto& s : SplitList(a.atom_ids)) {
    const double v = ParseReal(s);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)) ||
        static_cast<std::size_t>(v) >= atoms.num_atoms()) {
      throw Error("bad atom id '" + s + "'");
    }
    ids.push_back(static_cast<std::size_t>(v));
  }
  for (const auto& w : words) {
    for (const auto& c : WordAtoms(atoms, w)) ids.push_back(c.atom);
  }
  if (ids.empty()) {
    for (std::size_t j = 0; j < std::min(a.limit, atoms.num_atoms()); ++j) ids.push_back(j);
  }
  std::vector<std::vector<Neighbor>> neighbors;
  for (auto id : ids) neighbors.push_back(DescribeAtom(atoms, id, table, a.k));
  out << FormatAtomTable(ids, neighbors);
  if (!a.features_out.empty()) {
    if (a.corpus.empty() || a.truths.empty()) {
      throw Error("--features-out needs --corpus and --truths");
    }
    const auto train = LoadDictionary(a.corpus);
    const auto truths = LoadDictionary(a.truths);
    std::vector<std::string> fw = words;
    if (fw.empty()) {
      std::set<std::string> seen;
      for (const auto& e : truths) {
        if (atoms.Find(e.word) && seen.insert(e.word).second) fw.push_back(e.word);
      }
    }
    const auto rows = AtomFeatureTable(fw, atoms, table, truths, train, BuildPosLexicon(train));
    WriteFile(a.features_out, AtomFeatureCsv(rows));
  }
  return 0;
}

// ------------------------------------------------------------- grad-check

struct GradArgs {
  double tolerance = 1e-4;
  double eps = 1e-5;
};

int GradCheckCmd(const GradArgs& a, const Global& g, std::ostream& out) {
  double worst = 0.0;
  for (const auto& r : RunGradientSuite(g.seed, a.eps)) {
    out << std::left << std::setw(16) << r.component << " max_rel_error "
        << std::scientific << std::setprecision(3) << r.result.max_rel_error << std::defaultfloat
        << " checked " << r.result.checked << " worst " << r.result.worst << '\n';
    worst = std::max(worst, r.result.max_rel_error);
  }
  const bool ok = worst < a.tolerance;
  out << "max relative error " << std::scientific << std::setprecision(3) << worst
      << std::defaultfloat << (ok ? " < " : " >= ") << a.tolerance << (ok ? " PASS" : " FAIL")
      << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"polydef: sparse sense decomposition and definition generation", "polydef"};
  app.set_version_flag("--version",
                       std::string("polydef ") + kVersion + "\nformats: atoms " +
                           std::to_string(kAtomFormatVersion) + ", checkpoint " +
                           std::to_string(neural::kCheckpointVersion) + ", artifacts " +
                           std::to_string(kArtifactVersion));
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  Global global;
  app.add_option("--seed", global.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--jobs", global.jobs, "Worker threads for parallel stages")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics per split");
  c_stats->add_option("--corpus", stats.corpus, "Dictionary JSONL")->required()->check(CLI::ExistingFile);
  c_stats->add_option("--fractions", stats.fractions, "train valid test fractions")->delimiter(',');

  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "Learn sparse atoms from embeddings");
  c_dec->add_option("--embeddings", dec.embeddings)->required()->check(CLI::ExistingFile);
  c_dec->add_option("--atoms-out", dec.atoms_out)->required();
  c_dec->add_option("--num-atoms", dec.num_atoms)->required();
  c_dec->add_option("--sparsity", dec.sparsity)->capture_default_str();
  c_dec->add_option("--iterations", dec.iterations)->capture_default_str();
  c_dec->add_option("--tol", dec.tol)->capture_default_str();
  c_dec->add_option("--starts", dec.starts, "Independent initializations, best kept")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  MatchArgs mat;
  auto* c_mat = app.add_subcommand("match", "Heuristic definition-to-atom matching");
  c_mat->add_option("--corpus", mat.corpus)->required()->check(CLI::ExistingFile);
  c_mat->add_option("--embeddings", mat.embeddings)->required()->check(CLI::ExistingFile);
  c_mat->add_option("--atoms", mat.atoms)->required()->check(CLI::ExistingFile);
  c_mat->add_option("--out", mat.out)->required();
  c_mat->add_option("--stopwords", mat.stopwords)->check(CLI::ExistingFile);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train the definition model");
  c_tr->add_option("--mode", tr.mode, "heu, gs or stgs")->capture_default_str();
  c_tr->add_option("--corpus", tr.corpus)->required()->check(CLI::ExistingFile);
  c_tr->add_option("--valid", tr.valid)->check(CLI::ExistingFile);
  c_tr->add_option("--embeddings", tr.embeddings)->required()->check(CLI::ExistingFile);
  c_tr->add_option("--atoms", tr.atoms)->check(CLI::ExistingFile);
  c_tr->add_option("--matches", tr.matches)->check(CLI::ExistingFile);
  c_tr->add_option("--ckpt-out", tr.ckpt_out)->required();
  c_tr->add_option("--log-out", tr.log_out);
  c_tr->add_option("--precision", tr.precision, "f32 or f64")->capture_default_str();
  c_tr->add_flag("--no-pos", tr.no_pos);
  c_tr->add_flag("--no-char", tr.no_char);
  c_tr->add_flag("--single-sense", tr.single_sense, "Zero the atom input");
  c_tr->add_flag("--shuffle-definitions", tr.shuffle_definitions, "Random-mapping baseline");
  c_tr->add_option("--rep-penalty", tr.train.rep_penalty)->capture_default_str();
  c_tr->add_option("--units", tr.model.units)->capture_default_str();
  c_tr->add_option("--layers", tr.model.layers)->capture_default_str();
  c_tr->add_option("--token-width", tr.model.token_width)->capture_default_str();
  c_tr->add_option("--pos-width", tr.model.pos_width)->capture_default_str();
  c_tr->add_option("--char-width", tr.model.char_width)->capture_default_str();
  c_tr->add_option("--min-count", tr.model.min_count)->capture_default_str();
  c_tr->add_option("--init-gain", tr.model.init_gain,
                   "Xavier gain for weight matrices (0 keeps uniform +-0.05)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c_tr->add_option("--epochs", tr.train.max_epochs)->capture_default_str();
  c_tr->add_option("--batch-size", tr.train.batch_size)->capture_default_str();
  c_tr->add_option("--lr", tr.train.learning_rate)->capture_default_str();
  c_tr->add_option("--lr-decay", tr.train.lr_decay)->capture_default_str();
  c_tr->add_option("--dropout", tr.train.dropout)->capture_default_str();
  c_tr->add_option("--patience", tr.train.patience)->capture_default_str();
  c_tr->add_option("--min-improvement", tr.train.min_improvement)->capture_default_str();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate definitions per (word, atom)");
  c_gen->add_option("--ckpt", gen.ckpt)->check(CLI::ExistingFile);
  c_gen->add_option("--words", gen.words)->required()->check(CLI::ExistingFile);
  c_gen->add_option("--embeddings", gen.embeddings)->required()->check(CLI::ExistingFile);
  c_gen->add_option("--atoms", gen.atoms)->check(CLI::ExistingFile);
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--gates-out", gen.gates_out, "Per-token gate activations (greedy only)");
  c_gen->add_option("--max-len", gen.decode.max_len)->capture_default_str();
  c_gen->add_option("--beam", gen.decode.beam)->capture_default_str();
  c_gen->add_option("--top-n", gen.decode.top_n)->capture_default_str();
  c_gen->add_option("--baseline", gen.baseline, "ne or ne-star instead of a model");
  c_gen->add_option("--corpus", gen.corpus, "Training entries for --baseline")->check(CLI::ExistingFile);
  c_gen->add_option("--cap", gen.cap, "Definitions kept by ne-star")->capture_default_str();

  PruneArgs pr;
  auto* c_pr = app.add_subcommand("prune", "Merge redundant generations per word");
  c_pr->add_option("--in", pr.in)->required()->check(CLI::ExistingFile);
  c_pr->add_option("--out", pr.out)->required();
  c_pr->add_option("--threshold", pr.threshold)->capture_default_str();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "BLEU, rBLEU, fBLEU or manual precision/recall");
  c_ev->add_option("--outputs", ev.outputs)->check(CLI::ExistingFile);
  c_ev->add_option("--truths", ev.truths)->required()->check(CLI::ExistingFile);
  c_ev->add_option("--metric", ev.metric, "bleu, rbleu, fbleu, all or manual")->capture_default_str();
  c_ev->add_option("--csv-out", ev.csv_out);
  c_ev->add_option("--labels", ev.labels)->check(CLI::ExistingFile);
  c_ev->add_flag("--representatives-only", ev.representatives_only);
  c_ev->add_option("--a", ev.a, "Score of category II")->capture_default_str();
  c_ev->add_option("--b", ev.b, "Score of category III")->capture_default_str();

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Scoring-scheme sensitivity sweep");
  c_sw->add_option("--labels", sw.labels)->required()->check(CLI::ExistingFile);
  c_sw->add_option("--truths", sw.truths)->required()->check(CLI::ExistingFile);
  c_sw->add_option("--grid", sw.grid)->capture_default_str();
  c_sw->add_option("--out", sw.out, "CSV path (stdout when omitted)");

  InspectArgs in;
  auto* c_in = app.add_subcommand("inspect-atoms", "Nearest words of atoms");
  c_in->add_option("--embeddings", in.embeddings)->required()->check(CLI::ExistingFile);
  c_in->add_option("--atoms", in.atoms)->required()->check(CLI::ExistingFile);
  c_in->add_option("--atom-ids", in.atom_ids, "Comma-separated atom ids");
  c_in->add_option("--words", in.words, "Comma-separated words whose atoms to list");
  c_in->add_option("--k", in.k)->capture_default_str();
  c_in->add_option("--limit", in.limit)->capture_default_str();
  c_in->add_option("--features-out", in.features_out, "Per-atom feature CSV");
  c_in->add_option("--corpus", in.corpus)->check(CLI::ExistingFile);
  c_in->add_option("--truths", in.truths)->check(CLI::ExistingFile);

  GradArgs ga;
  auto* c_ga = app.add_subcommand("grad-check", "Finite-difference gradient checks");
  c_ga->add_option("--tolerance", ga.tolerance)->capture_default_str();
  c_ga->add_option("--eps", ga.eps)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    // name a mistyped subcommand instead of "a subcommand is required"
    for (std::size_t i = 0; i < args.size(); ++i) {
      const auto& t = args[i];
      if (t == "--seed" || t == "--jobs" || t == "--config") {
        ++i;
        continue;
      }
      if (t.empty() || t[0] == '-') continue;
      if (app.get_subcommand_no_throw(t) == nullptr) {
        err << "error: unknown subcommand '" << t << "'\n\n" << app.help();
        return 2;
      }
      break;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (c_stats->parsed()) return Stats(stats, global, out);
    if (c_dec->parsed()) return Decompose(dec, global, out);
    if (c_mat->parsed()) return Match(mat, global, out, err);
    if (c_tr->parsed()) return TrainCmd(tr, global, out, err);
    if (c_gen->parsed()) return Generate(gen, global, out, err);
    if (c_pr->parsed()) return Prune(pr, global, out);
    if (c_ev->parsed()) return Evaluate(ev, out, err);
    if (c_sw->parsed()) return Sweep(sw, out);
    if (c_in->parsed()) return Inspect(in, out);
    if (c_ga->parsed()) return GradCheckCmd(ga, global, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace polydef::cli
