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

#include "polydef/define.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace polydef {

using neural::Graph;
using neural::Var;

namespace {

std::string JoinTokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

template <typename T>
std::vector<T> Cast(std::span<const double> v) {
  return std::vector<T>(v.begin(), v.end());
}

}  // namespace

// ------------------------------------------------------------------ config

void ModelConfig::Validate() const {
  if (units == 0 || layers == 0 || token_width == 0 || pos_width == 0 || char_width == 0) {
    throw Error("model widths and layer count must be positive");
  }
  if (min_count == 0) throw Error("min_count must be at least 1");
  if (!(init_gain >= 0.0)) throw Error("init_gain must be non-negative");
}

std::string ModelConfigToJson(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["units"] = cfg.units;
  j["layers"] = cfg.layers;
  j["token_width"] = cfg.token_width;
  j["pos_width"] = cfg.pos_width;
  j["char_width"] = cfg.char_width;
  j["use_pos"] = cfg.use_pos;
  j["use_char"] = cfg.use_char;
  j["use_atom"] = cfg.use_atom;
  j["mode"] = std::string(MatchModeName(cfg.mode));
  j["min_count"] = cfg.min_count;
  j["init_gain"] = cfg.init_gain;
  return j.dump();
}

ModelConfig ModelConfigFromJson(std::string_view json) {
  ModelConfig cfg;
  try {
    auto j = nlohmann::json::parse(json);
    cfg.units = j.at("units").get<std::size_t>();
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.token_width = j.at("token_width").get<std::size_t>();
    cfg.pos_width = j.at("pos_width").get<std::size_t>();
    cfg.char_width = j.at("char_width").get<std::size_t>();
    cfg.use_pos = j.at("use_pos").get<bool>();
    cfg.use_char = j.at("use_char").get<bool>();
    cfg.use_atom = j.at("use_atom").get<bool>();
    cfg.mode = ParseMatchMode(j.at("mode").get<std::string>());
    cfg.min_count = j.at("min_count").get<std::size_t>();
    cfg.init_gain = j.value("init_gain", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad model config: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

ModelConfig SingleSenseConfig(ModelConfig cfg) {
  cfg.use_atom = false;
  cfg.mode = MatchMode::kHeuristic;
  return cfg;
}

void TrainConfig::Validate() const {
  auto in01 = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!(learning_rate > 0.0) || !in01(lr_decay) || lr_floor < 0.0) {
    throw Error("invalid learning-rate schedule");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw Error("invalid Adam parameters");
  }
  if (grad_clip < 0.0) throw Error("gradient clip must be nonnegative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must be in [0, 1)");
  if (min_improvement < 0.0) throw Error("improvement threshold must be nonnegative");
  if (!(tau_start > 0.0) || !in01(tau_decay) || !(tau_floor > 0.0)) {
    throw Error("invalid temperature schedule");
  }
  if (rep_penalty < 0.0) throw Error("repetition penalty must be nonnegative");
  if (batch_size == 0 || max_epochs == 0) throw Error("batch size and epochs must be positive");
}

MatchTable IndexMatches(std::span<const MatchRecord> records) {
  MatchTable table;
  for (const auto& r : records) table[{r.word, JoinTokens(r.definition)}] = r.atom_id;
  return table;
}

std::vector<std::string> StripEos(std::span<const std::string> tokens) {
  std::vector<std::string> out(tokens.begin(), tokens.end());
  if (!out.empty() && out.back() == "</s>") out.pop_back();
  return out;
}

double RepetitionPenalty(std::span<const std::vector<double>> step_probs,
                         std::span<const std::size_t> tokens) {
  if (step_probs.size() != tokens.size()) throw Error("one token per step distribution expected");
  if (step_probs.empty()) return 0.0;
  double total = 0.0;
  std::set<std::size_t> seen;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (auto id : seen) total += step_probs[t].at(id);
    seen.insert(tokens[t]);
  }
  return total / static_cast<double>(tokens.size());
}

double RepeatedBigramRate(std::span<const std::string> tokens) {
  if (tokens.size() < 2) return 0.0;
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) ++counts[{tokens[i], tokens[i + 1]}];
  std::size_t repeated = 0;
  for (const auto& [bg, c] : counts) {
    if (c > 1) repeated += c;
  }
  return static_cast<double>(repeated) / static_cast<double>(tokens.size() - 1);
}

// ------------------------------------------------------------------- model

template <typename T>
DefineModel<T>::DefineModel(const ModelConfig& cfg, Vocabulary vocab, neural::CharVocab chars,
                            std::size_t embedding_dim, std::uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)), chars_(std::move(chars)), dim_(embedding_dim) {
  cfg_.Validate();
  if (dim_ == 0) throw Error("embedding width must be positive");
  store_ = std::make_unique<neural::ParamStore<T>>(seed);
  store_->set_weight_gain(static_cast<T>(cfg_.init_gain));
  Bind(true);
}

template <typename T>
DefineModel<T> DefineModel<T>::Create(const ModelConfig& cfg, std::span<const DictEntry> train,
                                      std::size_t embedding_dim, std::uint64_t seed) {
  if (train.empty()) throw Error("cannot build a model from an empty training set");
  std::vector<std::string> words;
  for (const auto& e : train) words.push_back(e.word);
  return DefineModel(cfg, Vocabulary::Build(train, cfg.min_count), neural::CharVocab::Build(words),
                     embedding_dim, seed);
}

template <typename T>
void DefineModel<T>::Bind(bool create) {
  auto& s = *store_;
  const std::size_t v = vocab_.size();
  const std::size_t h = cfg_.units;
  const std::size_t e = cfg_.token_width;
  const bool matcher = cfg_.use_atom && cfg_.mode != MatchMode::kHeuristic;
  if (create) {
    token_emb_ = &s.Create("tok.emb", {v, e});
    if (dim_ != e) word_proj_ = &s.Create("word_proj", {e, dim_}, neural::Init::kWeight);
    lstm_ = neural::Lstm<T>(s, "lstm", e, h, cfg_.layers);
    if (cfg_.use_pos) pos_emb_ = &s.Create("pos.emb", {kNumPos, cfg_.pos_width});
    if (cfg_.use_char) char_cnn_ = neural::CharCnn<T>(s, "char", chars_.size(), cfg_.char_width);
    gate_ = neural::GatedUpdate<T>(s, "gate", cond_width(), h);
    out_w_ = &s.Create("out.W", {v, h}, neural::Init::kWeight);
    out_b_ = &s.Create("out.b", {v}, neural::Init::kZeros);
    if (matcher) {
      match_encoder_ = neural::DefinitionEncoder<T>(s, "match", *token_emb_, h, cfg_.layers);
      match_scorer_ = neural::AtomScorer<T>(s, "match", dim_, h);
    }
  } else {
    token_emb_ = &s.Get("tok.emb");
    if (token_emb_->value.rows() != v || token_emb_->value.cols() != e) {
      throw Error("checkpoint token table does not match its vocabulary");
    }
    if (dim_ != e) word_proj_ = &s.Get("word_proj");
    lstm_ = neural::Lstm<T>::Bind(s, "lstm", cfg_.layers);
    if (cfg_.use_pos) pos_emb_ = &s.Get("pos.emb");
    if (cfg_.use_char) char_cnn_ = neural::CharCnn<T>::Bind(s, "char");
    gate_ = neural::GatedUpdate<T>::Bind(s, "gate");
    if (gate_.cond_width() != cond_width()) throw Error("checkpoint gate width mismatch");
    out_w_ = &s.Get("out.W");
    out_b_ = &s.Get("out.b");
    if (matcher) {
      match_encoder_ = neural::DefinitionEncoder<T>::Bind(s, "match", *token_emb_, cfg_.layers);
      match_scorer_ = neural::AtomScorer<T>::Bind(s, "match", dim_, h);
    }
  }
}

template <typename T>
void DefineModel<T>::Save(const std::string& path,
                          const std::map<std::string, std::string>& extra_metadata) const {
  std::map<std::string, std::string> md = metadata_;
  for (const auto& [k, v] : extra_metadata) md[k] = v;
  md["format"] = "polydef-define";
  md["config"] = ModelConfigToJson(cfg_);
  md["vocab"] = vocab_.Serialize();
  md["chars"] = chars_.Serialize();
  md["embedding_dim"] = std::to_string(dim_);
  neural::SaveCheckpoint(path, *store_, md);
}

template <typename T>
DefineModel<T> DefineModel<T>::Load(const std::string& path) {
  DefineModel m;
  m.store_ = std::make_unique<neural::ParamStore<T>>();
  auto header = neural::LoadCheckpoint(path, *m.store_);
  auto get = [&](const char* key) -> const std::string& {
    auto it = header.metadata.find(key);
    if (it == header.metadata.end()) {
      throw ParseError(path, 0, std::string("checkpoint lacks '") + key + "'");
    }
    return it->second;
  };
  if (get("format") != "polydef-define") throw ParseError(path, 0, "not a definition model");
  m.cfg_ = ModelConfigFromJson(get("config"));
  m.vocab_ = Vocabulary::Parse(get("vocab"));
  m.chars_ = neural::CharVocab::Parse(get("chars"));
  m.dim_ = static_cast<std::size_t>(ParseReal(get("embedding_dim")));
  m.metadata_ = header.metadata;
  m.Bind(false);
  return m;
}

template <typename T>
std::vector<Example> DefineModel<T>::Prepare(std::span<const DictEntry> entries,
                                             const EmbeddingTable& table, const AtomSet& atoms,
                                             const MatchTable* matches,
                                             std::vector<std::string>* warnings) const {
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  if (table.dim() != dim_) throw Error("embedding width does not match the model");
  if (cfg_.use_atom && atoms.dim() != dim_) throw Error("atom width does not match the model");
  const bool heu = cfg_.use_atom && cfg_.mode == MatchMode::kHeuristic;
  if (heu && matches == nullptr) throw Error("heuristic mode needs a match file");
  std::vector<Example> out;
  for (const auto& e : entries) {
    if (!table.Contains(e.word)) {
      warn("skipping '" + e.word + "': no embedding");
      continue;
    }
    if (e.definition.empty()) {
      warn("skipping '" + e.word + "': empty definition");
      continue;
    }
    Example ex;
    ex.word = e.word;
    ex.pos = e.pos;
    auto vec = table.at(e.word);
    ex.word_vec.assign(vec.begin(), vec.end());
    if (cfg_.use_atom) {
      if (!atoms.Find(e.word)) {
        warn("skipping '" + e.word + "': no atoms");
        continue;
      }
      ex.atoms = WordAtomVectors(atoms, e.word);
    }
    if (heu) {
      auto it = matches->find({e.word, JoinTokens(e.definition)});
      if (it == matches->end()) {
        warn("skipping '" + e.word + "': definition has no match record");
        continue;
      }
      for (std::size_t i = 0; i < ex.atoms.size(); ++i) {
        if (ex.atoms[i].id == it->second) ex.matched = i;
      }
      if (!ex.matched) {
        warn("skipping '" + e.word + "': matched atom is not one of its atoms");
        continue;
      }
    }
    ex.definition = vocab_.Encode(e.definition);
    ex.target = ex.definition;
    ex.target.push_back(Vocabulary::kEos);
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
Example DefineModel<T>::InferenceExample(std::string_view word, Pos pos,
                                         const EmbeddingTable& table,
                                         const AtomSet& atoms) const {
  Example ex;
  ex.word = std::string(word);
  ex.pos = pos;
  auto vec = table.at(word);
  if (vec.size() != dim_) throw Error("embedding width does not match the model");
  ex.word_vec.assign(vec.begin(), vec.end());
  if (cfg_.use_atom) ex.atoms = WordAtomVectors(atoms, word);
  return ex;
}

template <typename T>
Var DefineModel<T>::Condition(Graph<T>& g, const Example& ex, Var atom) const {
  Var word = g.Constant(Cast<T>(ex.word_vec));
  Var pos = cfg_.use_pos ? g.Row(*pos_emb_, static_cast<std::size_t>(ex.pos))
                         : g.Constant(std::vector<T>(cfg_.pos_width, T(0)));
  Var chars = cfg_.use_char ? char_cnn_.Apply(g, chars_, ex.word)
                            : g.Constant(std::vector<T>(neural::kCharCnnWidth, T(0)));
  return g.Concat({word, atom, pos, chars});
}

template <typename T>
Var DefineModel<T>::AtomInput(Graph<T>& g, const Example& ex, T tau, bool sample, T dropout,
                              Rng& rng, double* max_weight) const {
  if (max_weight) *max_weight = 1.0;
  if (!cfg_.use_atom) return g.Constant(std::vector<T>(dim_, T(0)));
  if (ex.atoms.empty()) throw Error("word '" + ex.word + "' has no atoms");
  if (cfg_.mode == MatchMode::kHeuristic) {
    if (!ex.matched) throw Error("example for '" + ex.word + "' has no matched atom");
    return g.Constant(Cast<T>(ex.atoms[*ex.matched].vec));
  }
  const auto& def = ex.definition.empty() ? ex.target : ex.definition;
  Var code = match_encoder_.Encode(g, def, dropout, rng);
  Var logits = match_scorer_.Logits(g, code, ex.atoms);
  std::vector<T> noise(ex.atoms.size(), T(0));
  if (sample) {
    auto gn = neural::SampleGumbel(ex.atoms.size(), rng);
    noise.assign(gn.begin(), gn.end());
  }
  const bool st = cfg_.mode == MatchMode::kStgs;
  Var w = g.GumbelSoftmax(logits, noise, tau, st);
  if (max_weight) {
    auto soft = Graph<T>::SoftmaxValues(g.value(logits), noise, tau);
    *max_weight = static_cast<double>(*std::max_element(soft.begin(), soft.end()));
  }
  std::vector<std::vector<T>> rows;
  for (const auto& a : ex.atoms) rows.push_back(Cast<T>(a.vec));
  return g.Combine(w, std::move(rows));
}

template <typename T>
Var DefineModel<T>::Loss(Graph<T>& g, const Example& ex, T tau, bool sample, T dropout,
                         double rep_penalty, Rng& rng, StepStats* stats) const {
  if (ex.target.empty()) throw Error("empty target sequence");
  double max_weight = 1.0;
  Var atom = AtomInput(g, ex, tau, sample, dropout, rng, &max_weight);
  Var cond = Condition(g, ex, atom);

  Var word_in = g.Constant(Cast<T>(ex.word_vec));
  if (word_proj_) word_in = g.MatVec(*word_proj_, word_in);
  auto enc = lstm_.Forward(g, {word_in, g.Row(*token_emb_, Vocabulary::kEos)}, nullptr, dropout,
                           rng);
  auto state = enc.final;

  std::vector<Var> nll;
  std::vector<Var> mass;
  std::size_t input = Vocabulary::kBos;
  for (std::size_t t = 0; t < ex.target.size(); ++t) {
    state = lstm_.Step(g, g.Row(*token_emb_, input), state, dropout, rng);
    Var o = gate_.Apply(g, cond, state.h.back()).o;
    o = g.Dropout(o, dropout, rng);
    Var logp = g.LogSoftmax(g.Affine(*out_w_, o, *out_b_));
    nll.push_back(g.Pick(logp, ex.target[t]));
    if (t > 0 && rep_penalty > 0.0) {
      mass.push_back(g.MassAt(logp, std::vector<std::size_t>(ex.target.begin(),
                                                             ex.target.begin() + t)));
    }
    input = ex.target[t];
  }
  const T inv_n = T(1) / static_cast<T>(ex.target.size());
  Var ce = g.Scale(g.Sum(g.Concat(nll)), -inv_n);
  Var loss = ce;
  double penalty = 0.0;
  if (!mass.empty()) {
    Var pen = g.Scale(g.Sum(g.Concat(mass)), inv_n);
    penalty = static_cast<double>(g.scalar(pen));
    loss = g.Add(ce, g.Scale(pen, static_cast<T>(rep_penalty)));
  }
  if (stats) {
    stats->ce = static_cast<double>(g.scalar(ce));
    stats->penalty = penalty;
    stats->max_weight = max_weight;
  }
  return loss;
}

template <typename T>
std::vector<double> DefineModel<T>::OneHot(const Example& ex,
                                           std::optional<std::size_t> atom_id) const {
  if (!cfg_.use_atom) return std::vector<double>(ex.atoms.size(), 0.0);
  if (!atom_id) throw Error("an atom id is required for '" + ex.word + "'");
  std::vector<double> w(ex.atoms.size(), 0.0);
  for (std::size_t i = 0; i < ex.atoms.size(); ++i) {
    if (ex.atoms[i].id == *atom_id) {
      w[i] = 1.0;
      return w;
    }
  }
  throw Error("atom " + std::to_string(*atom_id) + " does not belong to '" + ex.word + "'");
}

template <typename T>
typename DefineModel<T>::DecodeStart DefineModel<T>::Start(const Example& ex,
                                                            std::span<const double> weights) const {
  Graph<T> g(false);
  std::vector<T> atom(dim_, T(0));
  if (cfg_.use_atom) {
    if (weights.size() != ex.atoms.size()) throw Error("atom weights do not match the word's atoms");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      for (std::size_t d = 0; d < dim_; ++d) atom[d] += static_cast<T>(weights[i] * ex.atoms[i].vec[d]);
    }
  }
  Var cond = Condition(g, ex, g.Constant(std::move(atom)));
  Var word_in = g.Constant(Cast<T>(ex.word_vec));
  if (word_proj_) word_in = g.MatVec(*word_proj_, word_in);
  Rng unused(0);
  auto enc = lstm_.Forward(g, {word_in, g.Row(*token_emb_, Vocabulary::kEos)}, nullptr, T(0),
                           unused);
  return {neural::Lstm<T>::Save(g, enc.final), g.value(cond)};
}

template <typename T>
std::vector<T> DefineModel<T>::StepLogProbs(const DecodeStart& start,
                                            neural::LstmStateValues<T>& state, std::size_t input,
                                            GateDump* gate) const {
  Graph<T> g(false);
  Rng unused(0);
  auto s = lstm_.Load(g, state);
  s = lstm_.Step(g, g.Row(*token_emb_, input), s, T(0), unused);
  auto go = gate_.Apply(g, g.Constant(start.cond), s.h.back());
  Var logp = g.LogSoftmax(g.Affine(*out_w_, go.o, *out_b_));
  state = neural::Lstm<T>::Save(g, s);
  if (gate) {
    const auto& z = g.value(go.z);
    const auto& r = g.value(go.r);
    gate->z.assign(z.begin(), z.end());
    auto slice = [&](std::size_t off, std::size_t len) {
      return std::vector<double>(r.begin() + off, r.begin() + off + len);
    };
    gate->r_word = slice(0, dim_);
    gate->r_atom = slice(dim_, dim_);
    gate->r_pos = slice(2 * dim_, cfg_.pos_width);
    gate->r_char = slice(2 * dim_ + cfg_.pos_width, neural::kCharCnnWidth);
  }
  return g.value(logp);
}

template <typename T>
LogLikelihood DefineModel<T>::Score(const Example& ex, std::span<const double> weights,
                                    std::span<const std::string> tokens) const {
  if (tokens.empty()) throw Error("cannot score an empty definition");
  auto start = Start(ex, weights);
  auto state = start.state;
  LogLikelihood ll;
  std::size_t input = Vocabulary::kBos;
  for (const auto& tok : tokens) {
    const auto id = vocab_.Id(tok);
    const auto logp = StepLogProbs(start, state, input, nullptr);
    ll.per_token.push_back(static_cast<double>(logp[id]));
    ll.total += static_cast<double>(logp[id]);
    input = id;
  }
  ll.normalized = ll.total / static_cast<double>(tokens.size());
  return ll;
}

template <typename T>
std::vector<double> DefineModel<T>::NextDistribution(const Example& ex,
                                                     std::optional<std::size_t> atom_id,
                                                     std::span<const std::size_t> prefix) const {
  auto start = Start(ex, OneHot(ex, atom_id));
  auto state = start.state;
  std::size_t input = Vocabulary::kBos;
  std::vector<T> logp;
  for (std::size_t t = 0; t <= prefix.size(); ++t) {
    logp = StepLogProbs(start, state, input, nullptr);
    if (t < prefix.size()) input = prefix[t];
  }
  std::vector<double> p;
  for (T x : logp) p.push_back(std::exp(static_cast<double>(x)));
  return p;
}

template <typename T>
std::vector<DefinitionOutput> DefineModel<T>::Generate(const Example& ex,
                                                       std::optional<std::size_t> atom_id,
                                                       const DecodeConfig& cfg,
                                                       std::vector<GateDump>* gates) const {
  if (cfg.max_len == 0 || cfg.beam == 0) throw Error("max_len and beam must be positive");
  if (cfg.top_n == 0 || cfg.top_n > cfg.beam) throw Error("top_n must be in [1, beam]");
  if (gates && cfg.beam != 1) throw Error("gate dumps need greedy decoding");
  const auto start = Start(ex, OneHot(ex, atom_id));

  struct Hyp {
    std::vector<std::size_t> ids;
    double sum = 0.0;
    neural::LstmStateValues<T> state;
  };
  std::vector<Hyp> live{{{}, 0.0, start.state}};
  std::vector<Hyp> done;
  if (gates) gates->clear();
  for (std::size_t step = 0; step < cfg.max_len && !live.empty(); ++step) {
    struct Cand {
      double sum;
      std::size_t hyp;
      std::size_t token;
    };
    std::vector<Cand> cands;
    std::vector<neural::LstmStateValues<T>> next_states;
    for (std::size_t h = 0; h < live.size(); ++h) {
      auto state = live[h].state;
      const std::size_t input = live[h].ids.empty() ? Vocabulary::kBos : live[h].ids.back();
      GateDump dump;
      const auto logp = StepLogProbs(start, state, input, gates ? &dump : nullptr);
      next_states.push_back(std::move(state));
      for (std::size_t tok = 0; tok < logp.size(); ++tok) {
        if (tok == Vocabulary::kPad || tok == Vocabulary::kBos) continue;
        cands.push_back({live[h].sum + static_cast<double>(logp[tok]), h, tok});
      }
      if (gates) gates->push_back(std::move(dump));
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) { return a.sum > b.sum; });
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      if (next.size() + done.size() >= cfg.beam) break;
      Hyp hyp{live[c.hyp].ids, c.sum, next_states[c.hyp]};
      hyp.ids.push_back(c.token);
      if (c.token == Vocabulary::kEos) {
        done.push_back(std::move(hyp));
      } else {
        next.push_back(std::move(hyp));
      }
    }
    live = std::move(next);
  }
  for (auto& h : live) done.push_back(std::move(h));  // cut at max_len
  std::stable_sort(done.begin(), done.end(), [](const Hyp& a, const Hyp& b) {
    return a.sum / static_cast<double>(a.ids.size()) > b.sum / static_cast<double>(b.ids.size());
  });
  std::vector<DefinitionOutput> outs;
  for (std::size_t i = 0; i < done.size() && outs.size() < cfg.top_n; ++i) {
    DefinitionOutput o;
    o.word = ex.word;
    o.atom_id = cfg_.use_atom ? atom_id : std::nullopt;
    o.pos = ex.pos;
    for (auto id : done[i].ids) o.tokens.push_back(vocab_.Token(id));
    o.score = done[i].sum / static_cast<double>(done[i].ids.size());
    outs.push_back(std::move(o));
  }
  if (gates) {
    for (std::size_t t = 0; t < gates->size() && t < outs[0].tokens.size(); ++t) {
      (*gates)[t].token = outs[0].tokens[t];
    }
  }
  return outs;
}

// ---------------------------------------------------------------- training

namespace {

template <typename T>
struct Adam {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
  std::uint64_t steps = 0;

  void Update(neural::ParamStore<T>& store, const TrainConfig& cfg, double lr) {
    ++steps;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(steps));
    for (auto& [name, p] : store.params()) {
      if (!p.trainable) continue;
      auto& [m, v] = moments[name];
      if (m.empty()) {
        m.assign(p.value.size(), 0.0);
        v.assign(p.value.size(), 0.0);
      }
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = static_cast<double>(p.grad.values[i]);
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double step = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_eps);
        p.value.values[i] = static_cast<T>(static_cast<double>(p.value.values[i]) - step);
      }
    }
  }
};

template <typename T>
void ScaleAndClip(neural::ParamStore<T>& store, double scale, double clip) {
  double norm2 = 0.0;
  for (auto& [name, p] : store.params()) {
    if (!p.trainable) continue;
    for (auto& g : p.grad.values) {
      g = static_cast<T>(static_cast<double>(g) * scale);
      norm2 += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  const double norm = std::sqrt(norm2);
  if (clip > 0.0 && norm > clip) {
    const double f = clip / norm;
    for (auto& [name, p] : store.params()) {
      if (!p.trainable) continue;
      for (auto& g : p.grad.values) g = static_cast<T>(static_cast<double>(g) * f);
    }
  }
}

}  // namespace

template <typename T>
double EvaluateLoss(const DefineModel<T>& model, std::span<const Example> examples, double tau) {
  if (examples.empty()) throw Error("cannot evaluate on zero examples");
  double total = 0.0;
  std::size_t tokens = 0;
  Rng unused(0);
  for (const auto& ex : examples) {
    Graph<T> g(false);
    typename DefineModel<T>::StepStats stats;
    model.Loss(g, ex, static_cast<T>(tau), false, T(0), 0.0, unused, &stats);
    total += stats.ce * static_cast<double>(ex.target.size());
    tokens += ex.target.size();
  }
  return total / static_cast<double>(tokens);
}

template <typename T>
TrainResult Train(DefineModel<T>& model, std::span<const Example> train,
                  std::span<const Example> valid, const TrainConfig& cfg) {
  cfg.Validate();
  if (train.empty()) throw Error("training set is empty");
  const bool gumbel = model.config().use_atom && model.config().mode != MatchMode::kHeuristic;
  auto& store = model.store();
  Adam<T> adam;
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;
  std::map<std::string, std::vector<T>> best_values;
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double e = static_cast<double>(epoch - 1);
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, e);
    if (lr < cfg.lr_floor) {
      result.stop_reason = "learning rate below floor";
      break;
    }
    const double tau = std::max(cfg.tau_floor, cfg.tau_start * std::pow(cfg.tau_decay, e));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler = Rng::Derive(cfg.seed, epoch, 0);
    shuffler.Shuffle(order);

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.tau = tau;
    double max_weight_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      store.ZeroGrad();
      for (std::size_t k = begin; k < end; ++k) {
        Graph<T> g(true);
        Rng rng = Rng::Derive(cfg.seed, epoch, 1 + order[k]);
        typename DefineModel<T>::StepStats stats;
        Var loss = model.Loss(g, train[order[k]], static_cast<T>(tau), true,
                              static_cast<T>(cfg.dropout), cfg.rep_penalty, rng, &stats);
        g.Backward(loss);
        log.train_loss += static_cast<double>(g.scalar(loss));
        log.train_ce += stats.ce;
        max_weight_sum += stats.max_weight;
      }
      ScaleAndClip(store, 1.0 / static_cast<double>(end - begin), cfg.grad_clip);
      adam.Update(store, cfg, lr);
    }
    const double n = static_cast<double>(train.size());
    log.train_loss /= n;
    log.train_ce /= n;
    if (gumbel) log.mean_max_weight = max_weight_sum / n;
    if (!valid.empty()) log.valid_loss = EvaluateLoss(model, valid, tau);
    result.log.push_back(log);

    const double monitor = log.valid_loss ? *log.valid_loss : log.train_loss;
    if (monitor < best * (1.0 - cfg.min_improvement)) {
      best = monitor;
      bad_epochs = 0;
      if (!valid.empty()) {
        for (const auto& [name, p] : store.params()) best_values[name] = p.value.values;
      }
    } else if (++bad_epochs >= cfg.patience) {
      result.stop_reason = "no significant improvement";
      break;
    }
  }
  if (result.stop_reason.empty()) result.stop_reason = "epoch limit";
  for (auto& [name, values] : best_values) store.Get(name).value.values = values;
  return result;
}

template class DefineModel<float>;
template class DefineModel<double>;
template TrainResult Train(DefineModel<float>&, std::span<const Example>, std::span<const Example>,
                           const TrainConfig&);
template TrainResult Train(DefineModel<double>&, std::span<const Example>,
                           std::span<const Example>, const TrainConfig&);
template double EvaluateLoss(const DefineModel<float>&, std::span<const Example>, double);
template double EvaluateLoss(const DefineModel<double>&, std::span<const Example>, double);

}  // namespace polydef
