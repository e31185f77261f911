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

#ifndef POLYDEF_DEFINE_H_
#define POLYDEF_DEFINE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polydef/corpus.h"
#include "polydef/match.h"
#include "polydef/neural/graph.h"
#include "polydef/neural/layers.h"
#include "polydef/neural/tensor.h"
#include "polydef/sparse_decomp.h"
#include "polydef/vocab.h"

namespace polydef {

struct ModelConfig {
  std::size_t units = 300;
  std::size_t layers = 2;
  std::size_t token_width = 300;
  std::size_t pos_width = 300;
  std::size_t char_width = 300;  // per-character embedding width
  bool use_pos = true;
  bool use_char = true;
  // false gives the single-sense model: the atom slice of the conditioning
  // vector is held at zero (its width is kept).
  bool use_atom = true;
  MatchMode mode = MatchMode::kGs;
  std::size_t min_count = 2;  // output vocabulary cutoff
  // Weight matrices start in U(-0.05, 0.05) like the embeddings when 0.
  // A positive gain switches them to Xavier-uniform scaled by the gain,
  // which small models need for the matcher to tell definitions apart.
  double init_gain = 0.0;

  void Validate() const;
};

std::string ModelConfigToJson(const ModelConfig& cfg);
ModelConfig ModelConfigFromJson(std::string_view json);

// Same model with the atom input switched off.
ModelConfig SingleSenseConfig(ModelConfig cfg);

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_decay = 0.8;  // per epoch
  double lr_floor = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 5.0;  // global norm; 0 disables
  double dropout = 0.5;
  std::size_t patience = 2;
  double min_improvement = 1e-3;  // relative loss decrease
  double tau_start = 1.0;
  double tau_decay = 0.9;
  double tau_floor = 0.3;
  double rep_penalty = 0.5;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::uint64_t seed = 1;

  void Validate() const;
};

// HEU training input: the atom chosen for one dictionary entry.
struct MatchRecord {
  std::string word;
  std::vector<std::string> definition;
  std::size_t atom_id = 0;
  std::vector<double> scores;
};

using MatchTable = std::map<std::pair<std::string, std::string>, std::size_t>;
MatchTable IndexMatches(std::span<const MatchRecord> records);

// One training or scoring instance.
struct Example {
  std::string word;
  Pos pos = Pos::kOther;
  std::vector<double> word_vec;
  std::vector<AtomVector> atoms;  // ascending id
  std::vector<std::size_t> definition;  // ids, no specials
  std::vector<std::size_t> target;      // definition + EOS
  std::optional<std::size_t> matched;   // index into atoms (HEU mode)
};

struct DefinitionOutput {
  std::string word;
  std::optional<std::size_t> atom_id;
  Pos pos = Pos::kNoun;
  std::vector<std::string> tokens;  // ends with "</s>" unless cut at max_len
  double score = 0.0;               // mean log-probability per token
};

// Definition tokens without the end marker.
std::vector<std::string> StripEos(std::span<const std::string> tokens);

// Gate activations for one decoding step; r is split into the slices of
// the conditioning vector.
struct GateDump {
  std::string token;
  std::vector<double> z;
  std::vector<double> r_word;
  std::vector<double> r_atom;
  std::vector<double> r_pos;
  std::vector<double> r_char;
};

struct DecodeConfig {
  std::size_t max_len = 30;
  std::size_t beam = 1;   // 1 is greedy
  std::size_t top_n = 1;  // hypotheses returned (<= beam)
};

struct LogLikelihood {
  double total = 0.0;
  std::vector<double> per_token;
  double normalized = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // objective incl. repetition penalty
  double train_ce = 0.0;    // token cross-entropy only
  std::optional<double> valid_loss;
  double lr = 0.0;
  double tau = 0.0;
  std::optional<double> mean_max_weight;  // GS and STGS modes
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::vector<std::string> warnings;
  std::string stop_reason;
};

// Mean over steps of the probability the decoder puts on tokens already
// present in the prefix. `step_probs[t]` is the distribution at step t and
// `tokens[t]` the token emitted (or fed) at that step.
double RepetitionPenalty(std::span<const std::vector<double>> step_probs,
                         std::span<const std::size_t> tokens);

// Adjacent token pairs that occur more than once, over all bigrams.
double RepeatedBigramRate(std::span<const std::string> tokens);

template <typename T>
class DefineModel {
 public:
  // Fresh parameters for the given vocabularies and embedding width.
  DefineModel(const ModelConfig& cfg, Vocabulary vocab, neural::CharVocab chars,
              std::size_t embedding_dim, std::uint64_t seed);
  // Builds vocabularies from the training entries.
  static DefineModel Create(const ModelConfig& cfg, std::span<const DictEntry> train,
                            std::size_t embedding_dim, std::uint64_t seed);
  static DefineModel Load(const std::string& path);
  void Save(const std::string& path,
            const std::map<std::string, std::string>& extra_metadata = {}) const;

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  const neural::CharVocab& chars() const { return chars_; }
  std::size_t embedding_dim() const { return dim_; }
  std::size_t cond_width() const { return 2 * dim_ + cfg_.pos_width + neural::kCharCnnWidth; }
  neural::ParamStore<T>& store() { return *store_; }
  const neural::ParamStore<T>& store() const { return *store_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // Examples for entries whose word has an embedding and atoms; the others
  // are reported through `warnings`.
  std::vector<Example> Prepare(std::span<const DictEntry> entries, const EmbeddingTable& table,
                               const AtomSet& atoms, const MatchTable* matches,
                               std::vector<std::string>* warnings) const;

  struct StepStats {
    double ce = 0.0;
    double penalty = 0.0;
    double max_weight = 1.0;
  };

  // Conditioning vector [word; atom; pos; char] for fixed atom weights.
  neural::Var Condition(neural::Graph<T>& g, const Example& ex, neural::Var atom) const;
  // Atom slice under the configured matcher. GS and STGS draw Gumbel noise
  // from `rng`; `sample` false uses the noise-free weights instead.
  neural::Var AtomInput(neural::Graph<T>& g, const Example& ex, T tau, bool sample, T dropout,
                        Rng& rng, double* max_weight) const;
  // Teacher-forced objective: mean token cross-entropy + rep_penalty * penalty.
  neural::Var Loss(neural::Graph<T>& g, const Example& ex, T tau, bool sample, T dropout,
                   double rep_penalty, Rng& rng, StepStats* stats) const;

  // Scores `tokens` as given (append "</s>" to include the end marker).
  // `weights` are over the word's atoms in ascending id order.
  LogLikelihood Score(const Example& ex, std::span<const double> weights,
                      std::span<const std::string> tokens) const;

  // Decodes with the atom slice fixed to `atom_id` (ignored by the
  // single-sense model). Greedy for beam 1; outputs sorted by score.
  std::vector<DefinitionOutput> Generate(const Example& ex, std::optional<std::size_t> atom_id,
                                         const DecodeConfig& cfg,
                                         std::vector<GateDump>* gates = nullptr) const;

  // Distribution of the next token after `prefix` (BOS implied).
  std::vector<double> NextDistribution(const Example& ex, std::optional<std::size_t> atom_id,
                                       std::span<const std::size_t> prefix) const;

  // An example for inference on a word that may lack dictionary entries.
  Example InferenceExample(std::string_view word, Pos pos, const EmbeddingTable& table,
                           const AtomSet& atoms) const;

 private:
  DefineModel() = default;
  void Bind(bool create);

  ModelConfig cfg_;
  Vocabulary vocab_;
  neural::CharVocab chars_;
  std::size_t dim_ = 0;
  std::map<std::string, std::string> metadata_;
  std::unique_ptr<neural::ParamStore<T>> store_;

  neural::Parameter<T>* token_emb_ = nullptr;
  neural::Parameter<T>* word_proj_ = nullptr;
  neural::Parameter<T>* pos_emb_ = nullptr;
  neural::Parameter<T>* out_w_ = nullptr;
  neural::Parameter<T>* out_b_ = nullptr;
  neural::Lstm<T> lstm_;
  neural::GatedUpdate<T> gate_;
  neural::CharCnn<T> char_cnn_;
  neural::DefinitionEncoder<T> match_encoder_;
  neural::AtomScorer<T> match_scorer_;

  struct DecodeStart {
    neural::LstmStateValues<T> state;
    std::vector<T> cond;
  };
  DecodeStart Start(const Example& ex, std::span<const double> weights) const;
  std::vector<T> StepLogProbs(const DecodeStart& start, neural::LstmStateValues<T>& state,
                              std::size_t input, GateDump* gate) const;
  std::vector<double> OneHot(const Example& ex, std::optional<std::size_t> atom_id) const;
};

// Adam with per-epoch learning-rate decay, Gumbel temperature annealing and
// early stopping on validation loss (training loss without a validation
// set).
template <typename T>
TrainResult Train(DefineModel<T>& model, std::span<const Example> train,
                  std::span<const Example> valid, const TrainConfig& cfg);

// Mean token cross-entropy with noise-free atom weights and no dropout.
template <typename T>
double EvaluateLoss(const DefineModel<T>& model, std::span<const Example> examples, double tau);

}  // namespace polydef

#endif  // POLYDEF_DEFINE_H_
