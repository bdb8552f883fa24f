#pragma once

#include <string>
#include <vector>

#include "hyperadapt/autodiff.hpp"
#include "hyperadapt/drf.hpp"
#include "hyperadapt/rng.hpp"
#include "hyperadapt/text.hpp"

namespace hyperadapt {

struct HyperNetConfig {
  int dim = 0;        // embedding / hidden width d
  int n_classes = 0;  // C
  int n_layers = 2;   // trunk depth, 1..3

  void validate() const;
};

// The hypernetwork: a ReLU trunk of n_layers d->d linear layers feeding two
// parallel heads, one emitting the task classifier's C x d weight matrix and
// one its C-vector bias. A learned d-vector represents the reserved "UNK"
// conditioning input.
struct HyperNetwork {
  HyperNetConfig cfg;
  std::vector<ad::Parameter> trunk_w;  // n_layers of d x d
  std::vector<ad::Parameter> trunk_b;  // n_layers of 1 x d
  ad::Parameter weight_w;              // d x (C*d)
  ad::Parameter weight_b;              // 1 x (C*d)
  ad::Parameter bias_w;                // d x C
  ad::Parameter bias_b;                // 1 x C
  ad::Parameter unk;                   // 1 x d learned UNK conditioning vector

  std::vector<ad::Parameter*> parameters();
  // Trainable scalars excluding the UNK vector; matches the architecture:
  // n_layers*(d^2+d) + d*(C*d) + C*d + d*C + C.
  long weight_count() const;
};

// Trunk and heads uniform(-1/sqrt(d), 1/sqrt(d)); the weight head is scaled
// by 0.1 at init so early training resembles a near-constant classifier.
HyperNetwork make_hypernetwork(const HyperNetConfig& cfg, Rng& rng);

enum class ConditioningKind { domain_name, unk, signature };

// What the hypernetwork is conditioned on: a domain name, the reserved UNK
// token, or a DRF signature (domain-name token followed by the DRF tokens).
struct ConditioningInput {
  ConditioningKind kind = ConditioningKind::unk;
  std::vector<Token> tokens;

  static ConditioningInput domain(const std::string& name);
  static ConditioningInput unknown();
  static ConditioningInput from_signature(const Signature& sig);
};

struct ConditioningEmbedding {
  ad::Value u;               // 1 x d
  bool unk_fallback = false; // true when an all-OOV input fell back to UNK
};

// Mean of the static embeddings of covered tokens; kind=unk (and all-OOV
// inputs, flagged) yield the hypernetwork's learned UNK parameter, through
// which gradients flow.
ConditioningEmbedding embed_conditioning(const ConditioningInput& input,
                                         const EmbeddingTable& table, HyperNetwork& hn);

// Differentiable classifier emission: W is C x d, b is C x 1.
struct ClassifierValues {
  ad::Value W;
  ad::Value b;
};

ClassifierValues forward_classifier(HyperNetwork& hn, const ad::Value& u);

// A materialized emitted classifier, used at inference and for
// weight-diversity analysis.
struct GeneratedClassifier {
  Eigen::MatrixXd W;  // C x d
  Eigen::VectorXd b;  // C
  std::string provenance;  // the conditioning input that produced it
};

GeneratedClassifier generate_classifier(HyperNetwork& hn, const Eigen::RowVectorXd& u,
                                        const std::string& provenance = "");

// logits = W p + b
Eigen::VectorXd apply_classifier(const GeneratedClassifier& cls, const Eigen::VectorXd& p);

}  // namespace hyperadapt
