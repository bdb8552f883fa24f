#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyperadapt/autodiff.hpp"
#include "hyperadapt/corpus.hpp"
#include "hyperadapt/drf.hpp"
#include "hyperadapt/hypernet.hpp"
#include "hyperadapt/rng.hpp"
#include "hyperadapt/text.hpp"

namespace hyperadapt {

enum class VariantKind {
  NoDA,
  HyperDN,
  HyperDRF,
  HyperPADA,
  PADALite,
  MoEIndAvg,
  MoEIndAttn,
  MoEAvg,
};

const char* variant_name(VariantKind kind);
VariantKind parse_variant(const std::string& name);
bool variant_uses_hn(VariantKind kind);
bool variant_uses_signature(VariantKind kind);  // needs stage-1 artifacts
bool variant_uses_prompt(VariantKind kind);     // signature prepended to input
bool variant_is_moe(VariantKind kind);

// Reserved separator token between the signature prompt and the example.
inline const char* kSepToken = "<sep>";

// Pooled-embedding encoder: trainable token embedding matrix (initialized
// from the static table plus special-token rows), mean pooling over covered
// tokens, then a two-layer ReLU MLP.
struct Encoder {
  int dim = 0;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> index;
  ad::Parameter embedding;  // V x d
  ad::Parameter w1, b1, w2, b2;
  bool trainable_embeddings = true;

  ad::Value encode(const std::vector<Token>& tokens);  // 1 x d
  std::vector<ad::Parameter*> parameters();
};

Encoder make_encoder(const EmbeddingTable& table, const std::vector<std::string>& specials,
                     bool trainable_embeddings, Rng& rng, const std::string& name_prefix = "");

enum class GeneratorMode { ranker, learned };

const char* generator_mode_name(GeneratorMode m);
GeneratorMode parse_generator_mode(const std::string& name);

// Learned signature generator: a linear multi-label scorer over the DRF
// union (sigmoid semantics) plus a linear domain head, both reading the
// static mean embedding of the example.
struct LearnedGenerator {
  std::vector<std::string> drf_union;  // sorted
  std::vector<std::string> domains;    // sorted
  ad::Parameter scorer_w, scorer_b;    // d x M, 1 x M
  ad::Parameter domain_w, domain_b;    // d x |S|, 1 x |S|

  std::vector<ad::Parameter*> parameters();
};

struct SignatureGenerator {
  GeneratorMode mode = GeneratorMode::ranker;
  int k = 5;
  std::vector<DrfSet> drf_sets;
  std::optional<LearnedGenerator> learned;
};

// Scores every (DRF, source domain) pair by the min-distance rule over the
// example's covered tokens, deduplicates words keeping the best score, and
// returns the k best (score ascending, then lexicographic); the signature's
// domain is that of the single best-scoring DRF. All-OOV examples (or fewer
// than k scorable words) fall back to the k globally most frequent DRFs with
// the lexicographically first source domain, flagged.
Signature generate_signature_ranker(const Example& example, const std::vector<DrfSet>& drf_sets,
                                    const EmbeddingTable& table, int k);

Signature generate_signature(SignatureGenerator& gen, const Example& example,
                             const EmbeddingTable& table);

SignatureGenerator make_signature_generator(GeneratorMode mode, std::vector<DrfSet> drf_sets,
                                            int k, int dim, uint64_t seed);

// Trains the learned generator on examples carrying annotated signatures:
// mean sigmoid BCE over the DRF union (the k gold DRFs as positive targets)
// plus softmax cross entropy on the domain head. Returns per-epoch mean loss.
std::vector<double> train_signature_generator(LearnedGenerator& gen,
                                              const std::vector<Example>& annotated,
                                              const EmbeddingTable& table, int epochs, double lr,
                                              int batch_size, uint64_t seed);

struct LinearClassifier {
  ad::Parameter W;  // C x d
  ad::Parameter b;  // C x 1
  std::vector<ad::Parameter*> parameters();
};

LinearClassifier make_linear_classifier(int dim, int n_classes, Rng& rng,
                                        const std::string& name_prefix = "");

struct ModelConfig {
  VariantKind kind = VariantKind::NoDA;
  TaskSchema schema;
  std::vector<std::string> source_domains;
  int hn_layers = 2;
  int k = 5;
  GeneratorMode generator_mode = GeneratorMode::ranker;
  bool trainable_embeddings = true;
  int max_tokens = 128;
  uint64_t seed = 0;
};

// One of the model variants. HN variants own a HyperNetwork; NoDA/PADA-lite
// own a plain linear classifier; MoE kinds own one NoDA-shaped expert per
// source domain (plus a general expert for the Avg flavor). Move-only:
// parameters are uniquely owned.
struct TaskModel {
  ModelConfig cfg;
  std::shared_ptr<const EmbeddingTable> table;

  std::optional<Encoder> encoder;
  std::optional<HyperNetwork> hn;
  std::optional<LinearClassifier> cls;
  std::optional<SignatureGenerator> generator;

  std::vector<TaskModel> experts;      // MoE members, one per source domain
  std::unique_ptr<TaskModel> general;  // MoEAvg's all-source expert
  Eigen::VectorXd moe_weights;         // MoEIndAttn convex combination

  std::vector<ad::Parameter*> parameters();  // task-side trainable weights
};

TaskModel make_task_model(const ModelConfig& cfg, std::shared_ptr<const EmbeddingTable> table);

// Encoder token sequence for a variant: prompt-using kinds prepend the
// rendered signature tokens and the separator; everything is truncated to
// max_tokens. PADA-lite and Hyper-PADA share this construction exactly.
std::vector<Token> build_encoder_tokens(VariantKind kind, const Example& example,
                                        const Signature* sig, int max_tokens);

// Differentiable single-example forward pass (non-MoE kinds).
struct Forward {
  ad::Value logits;  // C x 1
  std::optional<ClassifierValues> emitted;
  bool cond_fallback = false;
  std::vector<Token> encoder_tokens;
};

// `cond` is required for HN kinds; `sig` for signature kinds.
Forward forward_example(TaskModel& model, const Example& example, const ConditioningInput* cond,
                        const Signature* sig);

struct Prediction {
  Eigen::VectorXd probs;
  std::string label;
  std::optional<Signature> signature;
  std::optional<GeneratedClassifier> classifier;
};

// Inference under unknown-domain conditions: Hyper-DN conditions on UNK,
// signature variants generate their signature first, MoE kinds combine
// expert probabilities.
Prediction predict(TaskModel& model, const Example& example);

}  // namespace hyperadapt
