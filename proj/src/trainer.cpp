#include "hyperadapt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "hyperadapt/errors.hpp"
#include "hyperadapt/eval.hpp"

namespace hyperadapt {

void TrainConfig::validate() const {
  if (alpha_unk < 0.0 || alpha_unk > 1.0) throw ConfigError("alpha_unk must lie in [0,1]");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs_gen < 1 || epochs_disc < 1) throw ConfigError("epoch counts must be >= 1");
  if (attn_trials < 1) throw ConfigError("attn_trials must be >= 1");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  drf.validate();
}

std::vector<DomainCorpus> regroup_by_domain(const std::vector<Example>& train,
                                            const std::vector<Example>& dev) {
  std::vector<DomainCorpus> out;
  std::unordered_map<std::string, size_t> index;
  auto slot = [&](const std::string& domain) -> DomainCorpus& {
    auto it = index.find(domain);
    if (it == index.end()) {
      index.emplace(domain, out.size());
      out.push_back(DomainCorpus{domain, {}, {}, {}});
      return out.back();
    }
    return out[it->second];
  };
  for (const auto& ex : train) slot(ex.domain).train.push_back(ex);
  for (const auto& ex : dev) slot(ex.domain).dev.push_back(ex);
  return out;
}

double evaluate_model(TaskModel& model, const std::vector<Example>& examples) {
  std::vector<std::string> preds, golds;
  preds.reserve(examples.size());
  golds.reserve(examples.size());
  for (const auto& ex : examples) {
    preds.push_back(predict(model, ex).label);
    golds.push_back(ex.label);
  }
  return metric_value(metrics(preds, golds, model.cfg.schema.labels), model.cfg.schema.metric);
}

namespace {

struct ParamSnapshot {
  std::vector<Eigen::MatrixXd> data;
};

ParamSnapshot snapshot(const std::vector<ad::Parameter*>& params) {
  ParamSnapshot s;
  s.data.reserve(params.size());
  for (auto* p : params) s.data.push_back(p->data());
  return s;
}

void restore(const std::vector<ad::Parameter*>& params, const ParamSnapshot& s) {
  for (size_t i = 0; i < params.size(); ++i) params[i]->data() = s.data[i];
}

void note_domains(const std::vector<Example>& pool, std::vector<std::string>& out) {
  std::set<std::string> seen(out.begin(), out.end());
  for (const auto& ex : pool) seen.insert(ex.domain);
  out.assign(seen.begin(), seen.end());
}

// Stage 1 for signature variants: DRF sets from the train pool, gold
// annotation of training examples, generator setup (and training when
// learned). Returns the annotated copy of the train pool.
std::vector<Example> run_stage1(TaskModel& model, const SplitPools& pools,
                                const TrainConfig& cfg, TrainLog& log) {
  const auto sources = regroup_by_domain(pools.train, pools.dev);
  std::vector<DrfSet> sets;
  sets.reserve(sources.size());
  for (const auto& corpus : sources)
    sets.push_back(build_drf_set(sources, corpus.domain, cfg.drf));

  std::unordered_map<std::string, const DrfSet*> by_domain;
  for (const auto& set : sets) by_domain.emplace(set.domain, &set);

  std::vector<Example> annotated = pools.train;
  for (auto& ex : annotated) {
    const Signature sig =
        annotate_signature(ex, *by_domain.at(ex.domain), *model.table, cfg.drf.k);
    if (sig.fallback) ++log.fallback_signatures;
    ex.signature = render_signature(sig);
  }

  model.generator = make_signature_generator(cfg.generator_mode, std::move(sets), cfg.drf.k,
                                             model.table->dim, cfg.seed);
  if (cfg.generator_mode == GeneratorMode::learned) {
    log.gen_epoch_losses =
        train_signature_generator(*model.generator->learned, annotated, *model.table,
                                  cfg.epochs_gen, cfg.lr, cfg.batch_size,
                                  derive_seed(cfg.seed, "stage1"));
  }
  return annotated;
}

// Stage 2: epochs of seeded shuffles and Adam steps on cross entropy, best
// epoch kept by the source-dev metric.
void run_stage2(TaskModel& model, const std::vector<Example>& train,
                const std::vector<Example>& dev, const TrainConfig& cfg, TrainLog& log) {
  auto params = model.parameters();
  const TaskSchema& schema = model.cfg.schema;
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  ParamSnapshot best;
  for (int epoch = 0; epoch < cfg.epochs_disc; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "epoch/" + std::to_string(epoch)));
    shuffle_rng.shuffle(order);
    Rng alpha_rng(derive_seed(cfg.seed, "alpha/" + std::to_string(epoch)));

    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<ad::Value> losses;
      losses.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        const Example& ex = train[order[i]];
        const int gold = schema.label_index(ex.label);
        if (gold < 0) throw DataError("train: label outside schema: " + ex.label);
        log.train_ids.push_back(ex.id);

        std::optional<Signature> sig;
        std::optional<ConditioningInput> cond;
        if (variant_uses_signature(model.cfg.kind)) sig = parse_signature(ex.signature);
        if (model.cfg.kind == VariantKind::HyperDN) {
          const bool mask = alpha_rng.next_double() < cfg.alpha_unk;
          cond = mask ? ConditioningInput::unknown() : ConditioningInput::domain(ex.domain);
        } else if (variant_uses_hn(model.cfg.kind)) {
          cond = ConditioningInput::from_signature(*sig);
        }
        Forward fwd =
            forward_example(model, ex, cond ? &*cond : nullptr, sig ? &*sig : nullptr);
        losses.push_back(ad::softmax_cross_entropy(fwd.logits, gold));
      }
      ad::Value batch_loss = ad::mean_scalars(losses);
      const double loss = batch_loss.scalar();
      if (!std::isfinite(loss)) throw NumericError("train: loss diverged (non-finite)");
      loss_sum += loss * static_cast<double>(losses.size());
      batch_loss.backward();
      ad::adam_step(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    }

    EpochLog el;
    el.mean_loss = train.empty() ? 0.0 : loss_sum / static_cast<double>(train.size());
    el.dev_metric = dev.empty() ? 0.0 : evaluate_model(model, dev);
    log.epochs.push_back(el);
    if (log.best_epoch < 0 || el.dev_metric >= log.best_dev_metric) {
      log.best_epoch = epoch;
      log.best_dev_metric = el.dev_metric;
      best = snapshot(params);
    }
  }
  if (log.best_epoch >= 0) restore(params, best);
}

}  // namespace

std::vector<TaskModel> train_moe(const std::vector<DomainCorpus>& sources,
                                 const TaskSchema& schema,
                                 std::shared_ptr<const EmbeddingTable> table,
                                 const TrainConfig& cfg,
                                 std::vector<std::pair<std::string, TrainLog>>* logs) {
  if (sources.size() < 2) throw DataError("train_moe: need >= 2 source domains");
  std::vector<TaskModel> experts;
  experts.reserve(sources.size());
  for (const auto& corpus : sources) {
    if (corpus.train.empty())
      throw DataError("train_moe: empty train split for domain " + corpus.domain);
    ModelConfig mc;
    mc.kind = VariantKind::NoDA;
    mc.schema = schema;
    mc.source_domains = {corpus.domain};
    mc.trainable_embeddings = cfg.trainable_embeddings;
    mc.max_tokens = cfg.max_tokens;
    mc.seed = derive_seed(cfg.seed, "expert/" + corpus.domain);
    TaskModel expert = make_task_model(mc, table);

    SplitPools pools;
    pools.plan.target_domain = "";
    pools.plan.source_domains = {corpus.domain};
    pools.plan.seed = mc.seed;
    pools.train = corpus.train;
    pools.dev = corpus.dev;
    TrainConfig expert_cfg = cfg;
    expert_cfg.seed = mc.seed;
    TrainLog log = train(expert, pools, expert_cfg);
    if (logs) logs->emplace_back(corpus.domain, std::move(log));
    experts.push_back(std::move(expert));
  }
  return experts;
}

Eigen::VectorXd search_attention_weights(std::vector<TaskModel>& experts,
                                         const std::vector<Example>& dev,
                                         const TaskSchema& schema, int trials, uint64_t seed) {
  if (experts.empty()) throw DataError("search_attention_weights: no experts");
  if (trials < 1) throw ConfigError("search_attention_weights: trials must be >= 1");
  const int n_experts = static_cast<int>(experts.size());
  if (n_experts == 1) return Eigen::VectorXd::Ones(1);
  if (dev.empty()) return Eigen::VectorXd::Constant(n_experts, 1.0 / n_experts);

  // Expert probabilities are fixed; precompute once.
  const int c = schema.n_classes();
  std::vector<Eigen::MatrixXd> probs(experts.size());
  for (size_t e = 0; e < experts.size(); ++e) {
    probs[e].resize(static_cast<Eigen::Index>(dev.size()), c);
    for (size_t i = 0; i < dev.size(); ++i)
      probs[e].row(static_cast<Eigen::Index>(i)) = predict(experts[e], dev[i]).probs.transpose();
  }
  std::vector<std::string> golds;
  golds.reserve(dev.size());
  for (const auto& ex : dev) golds.push_back(ex.label);

  Rng rng(seed);
  Eigen::VectorXd best_w;
  double best_metric = -1.0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd w = rng.simplex(n_experts);
    Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dev.size()), c);
    for (size_t e = 0; e < experts.size(); ++e) mix += w[static_cast<Eigen::Index>(e)] * probs[e];
    std::vector<std::string> preds(dev.size());
    for (size_t i = 0; i < dev.size(); ++i) {
      Eigen::Index arg = 0;
      mix.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      preds[i] = schema.labels[static_cast<size_t>(arg)];
    }
    const double value = metric_value(metrics(preds, golds, schema.labels), schema.metric);
    if (value > best_metric) {
      best_metric = value;
      best_w = w;
    }
  }
  return best_w;
}

TrainLog train(TaskModel& model, const SplitPools& pools, const TrainConfig& cfg) {
  cfg.validate();
  if (pools.train.empty()) throw DataError("train: empty train pool");
  if (model.cfg.schema.n_classes() < 2) throw DataError("train: need >= 2 labels");
  const auto t0 = std::chrono::steady_clock::now();

  TrainLog log;
  log.seed = cfg.seed;
  note_domains(pools.train, log.train_domains);
  note_domains(pools.dev, log.dev_domains);

  if (variant_is_moe(model.cfg.kind)) {
    const auto sources = regroup_by_domain(pools.train, pools.dev);
    model.experts = train_moe(sources, model.cfg.schema, model.table, cfg, &log.children);
    if (model.cfg.kind == VariantKind::MoEAvg) {
      ModelConfig mc;
      mc.kind = VariantKind::NoDA;
      mc.schema = model.cfg.schema;
      mc.source_domains = model.cfg.source_domains;
      mc.trainable_embeddings = cfg.trainable_embeddings;
      mc.max_tokens = cfg.max_tokens;
      mc.seed = derive_seed(cfg.seed, "expert/general");
      auto general = std::make_unique<TaskModel>(make_task_model(mc, model.table));
      TrainConfig gcfg = cfg;
      gcfg.seed = mc.seed;
      SplitPools gpools = pools;
      TrainLog glog = train(*general, gpools, gcfg);
      log.children.emplace_back("(general)", std::move(glog));
      model.general = std::move(general);
    }
    if (model.cfg.kind == VariantKind::MoEIndAttn) {
      model.moe_weights =
          search_attention_weights(model.experts, pools.dev, model.cfg.schema, cfg.attn_trials,
                                   derive_seed(cfg.seed, "attn"));
    }
    // The parent MoE has no parameters of its own; report the mean dev
    // metric of the assembled committee for the configured epoch count.
    EpochLog el;
    el.dev_metric = pools.dev.empty() ? 0.0 : evaluate_model(model, pools.dev);
    for (int e = 0; e < cfg.epochs_disc; ++e) log.epochs.push_back(el);
    log.best_epoch = 0;
    log.best_dev_metric = el.dev_metric;
  } else {
    std::vector<Example> train_pool;
    if (variant_uses_signature(model.cfg.kind)) {
      train_pool = run_stage1(model, pools, cfg, log);
    } else {
      train_pool = pools.train;
    }
    run_stage2(model, train_pool, pools.dev, cfg, log);
  }

  log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  return log;
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write train log: " + path);
  out << "# seed=" << log.seed << " best_epoch=" << log.best_epoch
      << " fallback_signatures=" << log.fallback_signatures << " wall_ms=" << log.wall_ms << "\n";
  out << "scope,epoch,mean_loss,dev_metric\n";
  char buf[256];
  auto rows = [&](const std::string& scope, const TrainLog& l) {
    for (size_t e = 0; e < l.epochs.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f,%.6f\n", scope.c_str(), e,
                    l.epochs[e].mean_loss, l.epochs[e].dev_metric);
      out << buf;
    }
  };
  rows("main", log);
  for (const auto& [name, child] : log.children) rows(name, child);
}

}  // namespace hyperadapt
