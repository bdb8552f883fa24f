#include "hyperadapt/gradsuite.hpp"

#include <cstdio>
#include <memory>

#include "hyperadapt/autodiff.hpp"
#include "hyperadapt/models.hpp"
#include "hyperadapt/rng.hpp"

namespace hyperadapt {

namespace {

struct Fixture {
  std::shared_ptr<EmbeddingTable> table;
  TaskSchema schema;
  std::vector<DrfSet> drf_sets;
  Example example;
  Signature signature;
};

Fixture make_fixture(Rng& rng) {
  Fixture fx;
  const int dim = 3 + static_cast<int>(rng.below(6));        // 3..8
  const int n_classes = 2 + static_cast<int>(rng.below(2));  // 2..3

  std::vector<std::string> words;
  for (int i = 0; i < 10; ++i) words.push_back("w" + std::to_string(i));
  words.push_back("alpha");
  words.push_back("beta");

  auto table = std::make_shared<EmbeddingTable>();
  table->dim = dim;
  table->vectors.resize(static_cast<Eigen::Index>(words.size()), dim);
  for (size_t i = 0; i < words.size(); ++i) {
    table->index.emplace(words[i], static_cast<int>(i));
    for (int j = 0; j < dim; ++j)
      table->vectors(static_cast<Eigen::Index>(i), j) = 2.0 * rng.next_double() - 1.0;
  }
  table->words = words;
  fx.table = table;

  fx.schema.labels = {"a", "b", "c"};
  fx.schema.labels.resize(n_classes);

  for (const char* domain : {"alpha", "beta"}) {
    DrfSet set;
    set.domain = domain;
    for (int i = 0; i < 4; ++i) {
      const std::string w = "w" + std::to_string(rng.below(10));
      if (set.contains(w)) continue;
      set.entries.push_back({w, 1.0 - 0.1 * i, static_cast<long>(1 + rng.below(5)),
                             static_cast<long>(rng.below(3))});
    }
    fx.drf_sets.push_back(std::move(set));
  }

  fx.example.id = "gx";
  std::string text;
  const int len = 3 + static_cast<int>(rng.below(5));
  for (int i = 0; i < len; ++i) text += (i ? " " : "") + words[rng.below(10)];
  fx.example.text = text;
  fx.example.domain = "alpha";
  fx.example.label = fx.schema.labels[rng.below(n_classes)];

  fx.signature = generate_signature_ranker(fx.example, fx.drf_sets, *fx.table, 3);
  return fx;
}

}  // namespace

GradSuiteResult run_gradient_suite(int instances_per_variant, double tolerance, uint64_t seed,
                                   bool verbose) {
  GradSuiteResult result;
  const VariantKind kinds[] = {VariantKind::NoDA, VariantKind::HyperDN, VariantKind::HyperDRF,
                               VariantKind::HyperPADA, VariantKind::PADALite};

  for (VariantKind kind : kinds) {
    for (int inst = 0; inst < instances_per_variant; ++inst) {
      Rng rng(derive_seed(seed, std::string(variant_name(kind)) + "/" + std::to_string(inst)));
      Fixture fx = make_fixture(rng);

      ModelConfig mc;
      mc.kind = kind;
      mc.schema = fx.schema;
      mc.source_domains = {"alpha", "beta"};
      mc.hn_layers = 1 + static_cast<int>(rng.below(3));
      mc.k = 3;
      mc.seed = rng.next_u64();
      TaskModel model = make_task_model(mc, fx.table);

      const int gold = fx.schema.label_index(fx.example.label);
      // Hyper-DN alternates between domain-name and UNK conditioning so the
      // learned UNK vector's gradient is exercised too.
      const bool use_unk = inst % 2 == 1;
      auto loss_fn = [&]() -> ad::Value {
        std::optional<ConditioningInput> cond;
        if (kind == VariantKind::HyperDN) {
          cond = use_unk ? ConditioningInput::unknown()
                         : ConditioningInput::domain(fx.example.domain);
        } else if (variant_uses_hn(kind)) {
          cond = ConditioningInput::from_signature(fx.signature);
        }
        Forward fwd = forward_example(model, fx.example, cond ? &*cond : nullptr,
                                      variant_uses_signature(kind) ? &fx.signature : nullptr);
        return ad::softmax_cross_entropy(fwd.logits, gold);
      };

      GradSuiteItem item;
      item.name = std::string(variant_name(kind)) + "#" + std::to_string(inst);
      item.max_rel_err =
          ad::grad_check(loss_fn, model.parameters(), 1e-5, 200, derive_seed(seed, item.name));
      item.pass = item.max_rel_err < tolerance;
      result.all_pass = result.all_pass && item.pass;
      if (verbose)
        std::printf("[%s] %-16s max_rel_err=%.3e\n", item.pass ? "PASS" : "FAIL",
                    item.name.c_str(), item.max_rel_err);
      result.items.push_back(std::move(item));
    }
  }

  // Learned signature generator objective (BCE + domain CE).
  for (int inst = 0; inst < instances_per_variant; ++inst) {
    Rng rng(derive_seed(seed, "generator/" + std::to_string(inst)));
    Fixture fx = make_fixture(rng);
    SignatureGenerator gen = make_signature_generator(GeneratorMode::learned, fx.drf_sets, 3,
                                                      fx.table->dim, rng.next_u64());
    LearnedGenerator& lg = *gen.learned;
    const MeanEmbedding mean = embed_mean(tokenize(fx.example.text), *fx.table);
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(1, lg.drf_union.size());
    for (const auto& w : fx.signature.drfs)
      for (size_t i = 0; i < lg.drf_union.size(); ++i)
        if (lg.drf_union[i] == w) targets(0, static_cast<Eigen::Index>(i)) = 1.0;

    auto loss_fn = [&]() -> ad::Value {
      ad::Value x = ad::Value::constant(mean.vec);
      ad::Value scores = ad::add(ad::matmul(x, lg.scorer_w.value), lg.scorer_b.value);
      ad::Value bce = ad::sigmoid_bce(scores, targets);
      ad::Value dlogits = ad::add(ad::matmul(x, lg.domain_w.value), lg.domain_b.value);
      return ad::add(bce, ad::softmax_cross_entropy(ad::transpose(dlogits), 0));
    };

    GradSuiteItem item;
    item.name = "generator#" + std::to_string(inst);
    item.max_rel_err =
        ad::grad_check(loss_fn, lg.parameters(), 1e-5, 200, derive_seed(seed, item.name));
    item.pass = item.max_rel_err < tolerance;
    result.all_pass = result.all_pass && item.pass;
    if (verbose)
      std::printf("[%s] %-16s max_rel_err=%.3e\n", item.pass ? "PASS" : "FAIL", item.name.c_str(),
                  item.max_rel_err);
    result.items.push_back(std::move(item));
  }
  return result;
}

}  // namespace hyperadapt
