#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hyperadapt/corpus.hpp"
#include "hyperadapt/drf.hpp"
#include "hyperadapt/models.hpp"

namespace hyperadapt {

struct TrainConfig {
  double alpha_unk = 0.1;  // UNK-conditioning probability for Hyper-DN
  double lr = 1e-3;
  int batch_size = 16;
  int epochs_gen = 3;   // stage-1 generator epochs
  int epochs_disc = 5;  // stage-2 discriminator epochs
  uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int attn_trials = 100;  // randomized simplex search for moe-ind-attn
  DrfConfig drf;
  GeneratorMode generator_mode = GeneratorMode::ranker;
  int hn_layers = 2;
  bool trainable_embeddings = true;
  int max_tokens = 128;

  void validate() const;
};

struct EpochLog {
  double mean_loss = 0.0;
  double dev_metric = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;           // one entry per configured epoch
  std::vector<double> gen_epoch_losses;   // stage-1 losses (learned mode)
  int best_epoch = -1;                    // epoch whose weights were kept
  double best_dev_metric = 0.0;
  double wall_ms = 0.0;
  uint64_t seed = 0;
  size_t fallback_signatures = 0;         // annotation fallbacks, for reports
  std::vector<std::string> train_domains; // data-access audit, sorted unique
  std::vector<std::string> dev_domains;
  std::vector<std::string> train_ids;     // ids consumed by gradient steps
  std::vector<std::pair<std::string, TrainLog>> children;  // per-expert logs
};

// Two-phase training. Signature variants first build per-domain DRF sets
// from the train pool, annotate it, and set up the generator (training it in
// learned mode); stage 2 runs seeded epoch shuffles, Adam on cross entropy,
// alpha-UNK masking for Hyper-DN, and keeps the weights of the best epoch by
// the source-dev metric. MoE kinds train one expert per source domain (plus
// the general expert / attention search where applicable). Aborts with
// NumericError if the loss turns non-finite.
TrainLog train(TaskModel& model, const SplitPools& pools, const TrainConfig& cfg);

// One NoDA-shaped expert per source domain, each trained only on its own
// domain's train split (dev split for epoch selection). Returns the experts
// in source order; used by the MoE kinds.
std::vector<TaskModel> train_moe(const std::vector<DomainCorpus>& sources,
                                 const TaskSchema& schema,
                                 std::shared_ptr<const EmbeddingTable> table,
                                 const TrainConfig& cfg,
                                 std::vector<std::pair<std::string, TrainLog>>* logs = nullptr);

// Samples `trials` weight vectors from the uniform simplex (Dirichlet(1))
// and returns the one maximizing the dev metric of the weighted probability
// mixture; ties keep the first found. A single expert gets weight 1.
Eigen::VectorXd search_attention_weights(std::vector<TaskModel>& experts,
                                         const std::vector<Example>& dev,
                                         const TaskSchema& schema, int trials, uint64_t seed);

// Accuracy or macro-F1 of `model` on `examples` per the schema metric.
double evaluate_model(TaskModel& model, const std::vector<Example>& examples);

// Regroups a flat example pool into per-domain corpora (train split), in
// order of first appearance.
std::vector<DomainCorpus> regroup_by_domain(const std::vector<Example>& train,
                                            const std::vector<Example>& dev);

void write_train_log_csv(const TrainLog& log, const std::string& path);

}  // namespace hyperadapt
