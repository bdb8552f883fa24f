#include "hyperadapt/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hyperadapt/errors.hpp"

namespace hyperadapt {

const char* variant_name(VariantKind kind) {
  switch (kind) {
    case VariantKind::NoDA: return "noda";
    case VariantKind::HyperDN: return "hyper-dn";
    case VariantKind::HyperDRF: return "hyper-drf";
    case VariantKind::HyperPADA: return "hyper-pada";
    case VariantKind::PADALite: return "pada-lite";
    case VariantKind::MoEIndAvg: return "moe-ind-avg";
    case VariantKind::MoEIndAttn: return "moe-ind-attn";
    case VariantKind::MoEAvg: return "moe-avg";
  }
  return "?";
}

VariantKind parse_variant(const std::string& name) {
  for (VariantKind k : {VariantKind::NoDA, VariantKind::HyperDN, VariantKind::HyperDRF,
                        VariantKind::HyperPADA, VariantKind::PADALite, VariantKind::MoEIndAvg,
                        VariantKind::MoEIndAttn, VariantKind::MoEAvg})
    if (name == variant_name(k)) return k;
  throw ConfigError("unknown variant: " + name);
}

bool variant_uses_hn(VariantKind kind) {
  return kind == VariantKind::HyperDN || kind == VariantKind::HyperDRF ||
         kind == VariantKind::HyperPADA;
}

bool variant_uses_signature(VariantKind kind) {
  return kind == VariantKind::HyperDRF || kind == VariantKind::HyperPADA ||
         kind == VariantKind::PADALite;
}

bool variant_uses_prompt(VariantKind kind) {
  return kind == VariantKind::HyperPADA || kind == VariantKind::PADALite;
}

bool variant_is_moe(VariantKind kind) {
  return kind == VariantKind::MoEIndAvg || kind == VariantKind::MoEIndAttn ||
         kind == VariantKind::MoEAvg;
}

const char* generator_mode_name(GeneratorMode m) {
  return m == GeneratorMode::ranker ? "ranker" : "learned";
}

GeneratorMode parse_generator_mode(const std::string& name) {
  if (name == "ranker") return GeneratorMode::ranker;
  if (name == "learned") return GeneratorMode::learned;
  throw ConfigError("unknown generator mode: " + name);
}

namespace {

Eigen::MatrixXd uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.next_double() - 1.0) * bound;
  return m;
}

}  // namespace

ad::Value Encoder::encode(const std::vector<Token>& tokens) {
  std::vector<ad::Value> rows;
  rows.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto it = index.find(tok);
    if (it == index.end()) continue;  // OOV: skip, never impute
    if (trainable_embeddings) {
      rows.push_back(ad::slice(embedding.value, it->second, 0, 1, dim));
    } else {
      rows.push_back(ad::Value::constant(embedding.data().row(it->second)));
    }
  }
  ad::Value pooled = rows.empty() ? ad::Value::constant(Eigen::MatrixXd::Zero(1, dim))
                                  : ad::mean_rows(ad::concat_rows(rows));
  ad::Value h = ad::relu(ad::add(ad::matmul(pooled, w1.value), b1.value));
  return ad::add(ad::matmul(h, w2.value), b2.value);
}

std::vector<ad::Parameter*> Encoder::parameters() {
  std::vector<ad::Parameter*> out;
  if (trainable_embeddings) out.push_back(&embedding);
  out.push_back(&w1);
  out.push_back(&b1);
  out.push_back(&w2);
  out.push_back(&b2);
  return out;
}

Encoder make_encoder(const EmbeddingTable& table, const std::vector<std::string>& specials,
                     bool trainable_embeddings, Rng& rng, const std::string& name_prefix) {
  Encoder enc;
  enc.dim = table.dim;
  enc.trainable_embeddings = trainable_embeddings;
  enc.vocab = table.words;
  for (const auto& s : specials)
    if (!table.contains(s)) enc.vocab.push_back(s);
  for (size_t i = 0; i < enc.vocab.size(); ++i)
    enc.index.emplace(enc.vocab[i], static_cast<int>(i));

  const double bound = 1.0 / std::sqrt(static_cast<double>(enc.dim));
  Eigen::MatrixXd emb(enc.vocab.size(), enc.dim);
  emb.topRows(table.vectors.rows()) = table.vectors;
  for (Eigen::Index r = table.vectors.rows(); r < emb.rows(); ++r)
    emb.row(r) = uniform_init(1, enc.dim, bound, rng);
  enc.embedding = ad::make_parameter(name_prefix + "encoder/embedding", std::move(emb));
  enc.w1 = ad::make_parameter(name_prefix + "encoder/w1",
                              uniform_init(enc.dim, enc.dim, bound, rng));
  enc.b1 = ad::make_parameter(name_prefix + "encoder/b1", Eigen::MatrixXd::Zero(1, enc.dim));
  enc.w2 = ad::make_parameter(name_prefix + "encoder/w2",
                              uniform_init(enc.dim, enc.dim, bound, rng));
  enc.b2 = ad::make_parameter(name_prefix + "encoder/b2", Eigen::MatrixXd::Zero(1, enc.dim));
  return enc;
}

namespace {

// Count-based fallback shared by the ranker and the learned generator:
// the k most frequent DRFs (count_in summed across the sets containing the
// word), ties lexicographic; the domain is the lexicographically first
// source domain.
Signature fallback_signature(const std::vector<DrfSet>& drf_sets, int k) {
  std::map<std::string, long> freq;
  std::string first_domain;
  for (const auto& set : drf_sets) {
    if (first_domain.empty() || set.domain < first_domain) first_domain = set.domain;
    for (const auto& e : set.entries) freq[e.word] += e.count_in;
  }
  std::vector<std::pair<std::string, long>> by_freq(freq.begin(), freq.end());
  std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Signature sig;
  sig.domain = first_domain;
  sig.fallback = true;
  const size_t take = std::min<size_t>(k, by_freq.size());
  for (size_t i = 0; i < take; ++i) sig.drfs.push_back(by_freq[i].first);
  return sig;
}

}  // namespace

Signature generate_signature_ranker(const Example& example, const std::vector<DrfSet>& drf_sets,
                                    const EmbeddingTable& table, int k) {
  if (drf_sets.empty()) throw DataError("generate_signature_ranker: no DRF sets");
  if (k < 1) throw ConfigError("generate_signature_ranker: k must be >= 1");

  std::vector<Eigen::RowVectorXd> covered;
  for (const auto& tok : tokenize(example.text))
    if (auto idx = table.find(tok)) covered.push_back(table.vectors.row(*idx));
  if (covered.empty()) return fallback_signature(drf_sets, k);

  struct Best {
    double score;
    std::string domain;
  };
  std::map<std::string, Best> best;  // word -> best (score, domain)
  for (const auto& set : drf_sets) {
    for (const auto& entry : set.entries) {
      auto idx = table.find(entry.word);
      if (!idx) continue;
      const Eigen::RowVectorXd r = table.vectors.row(*idx);
      double score = std::numeric_limits<double>::infinity();
      for (const auto& w : covered) score = std::min(score, (r - w).squaredNorm());
      auto it = best.find(entry.word);
      if (it == best.end() || score < it->second.score ||
          (score == it->second.score && set.domain < it->second.domain)) {
        best[entry.word] = {score, set.domain};
      }
    }
  }
  if (best.size() < static_cast<size_t>(k)) return fallback_signature(drf_sets, k);

  struct Ranked {
    std::string word;
    double score;
    std::string domain;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(best.size());
  for (const auto& [word, b] : best) ranked.push_back({word, b.score, b.domain});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.word < b.word;
  });

  Signature sig;
  sig.domain = ranked[0].domain;
  for (int i = 0; i < k; ++i) sig.drfs.push_back(ranked[i].word);
  return sig;
}

std::vector<ad::Parameter*> LearnedGenerator::parameters() {
  return {&scorer_w, &scorer_b, &domain_w, &domain_b};
}

SignatureGenerator make_signature_generator(GeneratorMode mode, std::vector<DrfSet> drf_sets,
                                            int k, int dim, uint64_t seed) {
  SignatureGenerator gen;
  gen.mode = mode;
  gen.k = k;
  gen.drf_sets = std::move(drf_sets);
  if (mode == GeneratorMode::learned) {
    std::set<std::string> words, domains;
    for (const auto& set : gen.drf_sets) {
      domains.insert(set.domain);
      for (const auto& e : set.entries) words.insert(e.word);
    }
    if (words.empty()) throw DataError("learned generator: empty DRF union");
    LearnedGenerator lg;
    lg.drf_union.assign(words.begin(), words.end());
    lg.domains.assign(domains.begin(), domains.end());
    Rng rng(derive_seed(seed, "generator/init"));
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    const int m = static_cast<int>(lg.drf_union.size());
    const int s = static_cast<int>(lg.domains.size());
    lg.scorer_w = ad::make_parameter("gen/scorer_w", uniform_init(dim, m, bound, rng));
    lg.scorer_b = ad::make_parameter("gen/scorer_b", Eigen::MatrixXd::Zero(1, m));
    lg.domain_w = ad::make_parameter("gen/domain_w", uniform_init(dim, s, bound, rng));
    lg.domain_b = ad::make_parameter("gen/domain_b", Eigen::MatrixXd::Zero(1, s));
    gen.learned = std::move(lg);
  }
  return gen;
}

Signature generate_signature(SignatureGenerator& gen, const Example& example,
                             const EmbeddingTable& table) {
  if (gen.mode == GeneratorMode::ranker)
    return generate_signature_ranker(example, gen.drf_sets, table, gen.k);

  LearnedGenerator& lg = *gen.learned;
  const MeanEmbedding mean = embed_mean(tokenize(example.text), table);
  if (mean.coverage == 0) return fallback_signature(gen.drf_sets, gen.k);

  const Eigen::RowVectorXd scores =
      mean.vec * lg.scorer_w.data() + lg.scorer_b.data().row(0);
  std::vector<int> order(lg.drf_union.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return lg.drf_union[a] < lg.drf_union[b];
  });

  const Eigen::RowVectorXd dlogits =
      mean.vec * lg.domain_w.data() + lg.domain_b.data().row(0);
  int best_domain = 0;
  for (int i = 1; i < dlogits.size(); ++i)
    if (dlogits[i] > dlogits[best_domain]) best_domain = i;

  Signature sig;
  sig.domain = lg.domains[best_domain];
  const size_t take = std::min<size_t>(gen.k, order.size());
  for (size_t i = 0; i < take; ++i) sig.drfs.push_back(lg.drf_union[order[i]]);
  return sig;
}

std::vector<double> train_signature_generator(LearnedGenerator& gen,
                                              const std::vector<Example>& annotated,
                                              const EmbeddingTable& table, int epochs, double lr,
                                              int batch_size, uint64_t seed) {
  if (annotated.empty()) throw DataError("train_signature_generator: no annotated examples");
  if (gen.drf_union.empty()) throw DataError("train_signature_generator: empty DRF union");

  std::unordered_map<std::string, int> union_index, domain_index;
  for (size_t i = 0; i < gen.drf_union.size(); ++i)
    union_index.emplace(gen.drf_union[i], static_cast<int>(i));
  for (size_t i = 0; i < gen.domains.size(); ++i)
    domain_index.emplace(gen.domains[i], static_cast<int>(i));

  auto params = gen.parameters();
  std::vector<double> epoch_losses;
  std::vector<size_t> idx(annotated.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, "gen/epoch/" + std::to_string(epoch)));
    shuffle_rng.shuffle(idx);
    double loss_sum = 0.0;
    for (size_t start = 0; start < idx.size(); start += batch_size) {
      const size_t end = std::min(idx.size(), start + batch_size);
      std::vector<ad::Value> losses;
      for (size_t i = start; i < end; ++i) {
        const Example& ex = annotated[idx[i]];
        if (ex.signature.empty())
          throw DataError("train_signature_generator: example without signature: " + ex.id);
        const Signature gold = parse_signature(ex.signature);
        auto dit = domain_index.find(gold.domain);
        if (dit == domain_index.end())
          throw DataError("train_signature_generator: unknown signature domain " + gold.domain);

        const MeanEmbedding mean = embed_mean(tokenize(ex.text), table);
        ad::Value x = ad::Value::constant(mean.vec);
        ad::Value scores = ad::add(ad::matmul(x, gen.scorer_w.value), gen.scorer_b.value);
        Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(1, gen.drf_union.size());
        for (const auto& w : gold.drfs) {
          auto it = union_index.find(w);
          if (it != union_index.end()) targets(0, it->second) = 1.0;
        }
        ad::Value bce = ad::sigmoid_bce(scores, targets);
        if (gen.domains.size() >= 2) {
          // A single-domain head is fully determined; no loss to learn.
          ad::Value dlogits = ad::add(ad::matmul(x, gen.domain_w.value), gen.domain_b.value);
          ad::Value ce = ad::softmax_cross_entropy(ad::transpose(dlogits), dit->second);
          losses.push_back(ad::add(bce, ce));
        } else {
          losses.push_back(bce);
        }
      }
      ad::Value batch_loss = ad::mean_scalars(losses);
      if (!std::isfinite(batch_loss.scalar()))
        throw NumericError("train_signature_generator: non-finite loss");
      loss_sum += batch_loss.scalar() * static_cast<double>(losses.size());
      batch_loss.backward();
      ad::adam_step(params, lr);
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(annotated.size()));
  }
  return epoch_losses;
}

std::vector<ad::Parameter*> LinearClassifier::parameters() { return {&W, &b}; }

LinearClassifier make_linear_classifier(int dim, int n_classes, Rng& rng,
                                        const std::string& name_prefix) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  LinearClassifier cls;
  cls.W = ad::make_parameter(name_prefix + "cls/w", uniform_init(n_classes, dim, bound, rng));
  cls.b = ad::make_parameter(name_prefix + "cls/b", Eigen::MatrixXd::Zero(n_classes, 1));
  return cls;
}

std::vector<ad::Parameter*> TaskModel::parameters() {
  std::vector<ad::Parameter*> out;
  if (encoder) {
    auto ps = encoder->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  if (hn) {
    auto ps = hn->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  if (cls) {
    auto ps = cls->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  for (auto& expert : experts) {
    auto ps = expert.parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  if (general) {
    auto ps = general->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

TaskModel make_task_model(const ModelConfig& cfg, std::shared_ptr<const EmbeddingTable> table) {
  if (cfg.schema.n_classes() < 2) throw ConfigError("task model: need >= 2 classes");
  TaskModel model;
  model.cfg = cfg;
  model.table = std::move(table);
  Rng rng(derive_seed(cfg.seed, std::string("init/") + variant_name(cfg.kind)));
  if (!variant_is_moe(cfg.kind)) {
    model.encoder =
        make_encoder(*model.table, {kSepToken}, cfg.trainable_embeddings, rng);
    if (variant_uses_hn(cfg.kind)) {
      HyperNetConfig hn_cfg;
      hn_cfg.dim = model.table->dim;
      hn_cfg.n_classes = cfg.schema.n_classes();
      hn_cfg.n_layers = cfg.hn_layers;
      model.hn = make_hypernetwork(hn_cfg, rng);
    } else {
      model.cls = make_linear_classifier(model.table->dim, cfg.schema.n_classes(), rng);
    }
  }
  return model;
}

std::vector<Token> build_encoder_tokens(VariantKind kind, const Example& example,
                                        const Signature* sig, int max_tokens) {
  std::vector<Token> tokens;
  if (variant_uses_prompt(kind)) {
    if (!sig) throw DataError("prompt variant requires a signature");
    tokens = tokenize(render_signature(*sig));
    tokens.push_back(kSepToken);
  }
  const auto body = tokenize(example.text);
  tokens.insert(tokens.end(), body.begin(), body.end());
  if (static_cast<int>(tokens.size()) > max_tokens) tokens.resize(max_tokens);
  return tokens;
}

Forward forward_example(TaskModel& model, const Example& example, const ConditioningInput* cond,
                        const Signature* sig) {
  if (variant_is_moe(model.cfg.kind))
    throw ConfigError("forward_example: MoE variants predict via their experts");
  Forward fwd;
  fwd.encoder_tokens = build_encoder_tokens(model.cfg.kind, example, sig, model.cfg.max_tokens);
  ad::Value pooled = model.encoder->encode(fwd.encoder_tokens);
  if (variant_uses_hn(model.cfg.kind)) {
    if (!cond) throw DataError("HN variant requires a conditioning input");
    ConditioningEmbedding ce = embed_conditioning(*cond, *model.table, *model.hn);
    fwd.cond_fallback = ce.unk_fallback;
    fwd.emitted = forward_classifier(*model.hn, ce.u);
    fwd.logits = ad::add(ad::matmul(fwd.emitted->W, ad::transpose(pooled)), fwd.emitted->b);
  } else {
    fwd.logits = ad::add(ad::matmul(model.cls->W.value, ad::transpose(pooled)),
                         model.cls->b.value);
  }
  return fwd;
}

namespace {

Prediction combine_moe(TaskModel& model, const Example& example) {
  if (model.experts.empty()) throw DataError("MoE model has no trained experts");
  const int c = model.cfg.schema.n_classes();
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(c);
  if (model.cfg.kind == VariantKind::MoEIndAttn) {
    if (model.moe_weights.size() != static_cast<Eigen::Index>(model.experts.size()))
      throw DataError("MoE attention weights missing or stale");
    for (size_t i = 0; i < model.experts.size(); ++i)
      probs += model.moe_weights[static_cast<Eigen::Index>(i)] *
               predict(model.experts[i], example).probs;
  } else {
    double n = 0.0;
    for (auto& expert : model.experts) {
      probs += predict(expert, example).probs;
      n += 1.0;
    }
    if (model.cfg.kind == VariantKind::MoEAvg) {
      if (!model.general) throw DataError("moe-avg model lacks its general expert");
      probs += predict(*model.general, example).probs;
      n += 1.0;
    }
    probs /= n;
  }
  Prediction pred;
  pred.probs = probs;
  return pred;
}

}  // namespace

Prediction predict(TaskModel& model, const Example& example) {
  Prediction pred;
  if (variant_is_moe(model.cfg.kind)) {
    pred = combine_moe(model, example);
  } else {
    std::optional<Signature> sig;
    std::optional<ConditioningInput> cond;
    if (variant_uses_signature(model.cfg.kind)) {
      if (!model.generator)
        throw DataError(std::string(variant_name(model.cfg.kind)) +
                        ": missing stage-1 signature artifacts");
      sig = generate_signature(*model.generator, example, *model.table);
    }
    if (model.cfg.kind == VariantKind::HyperDN) {
      cond = ConditioningInput::unknown();
    } else if (variant_uses_hn(model.cfg.kind)) {
      cond = ConditioningInput::from_signature(*sig);
    }
    Forward fwd = forward_example(model, example, cond ? &*cond : nullptr, sig ? &*sig : nullptr);
    pred.probs = ad::softmax(fwd.logits.data().col(0));
    pred.signature = sig;
    if (fwd.emitted) {
      GeneratedClassifier gc;
      gc.W = fwd.emitted->W.data();
      gc.b = fwd.emitted->b.data().col(0);
      gc.provenance = cond && cond->kind == ConditioningKind::unk
                          ? "UNK"
                          : (sig ? render_signature(*sig) : "");
      pred.classifier = std::move(gc);
    }
  }
  int best = 0;
  for (int i = 1; i < pred.probs.size(); ++i)
    if (pred.probs[i] > pred.probs[best]) best = i;
  pred.label = model.cfg.schema.labels[best];
  return pred;
}

}  // namespace hyperadapt
