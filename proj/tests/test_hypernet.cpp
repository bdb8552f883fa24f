#include <doctest.h>

#include <cmath>

#include "hyperadapt/autodiff.hpp"
#include "hyperadapt/errors.hpp"
#include "hyperadapt/hypernet.hpp"
#include "hyperadapt/rng.hpp"

using namespace hyperadapt;

namespace {

const std::string kData = HYPERADAPT_TEST_DATA_DIR;

HyperNetwork small_hn(int dim, int n_classes, int n_layers, uint64_t seed) {
  HyperNetConfig cfg;
  cfg.dim = dim;
  cfg.n_classes = n_classes;
  cfg.n_layers = n_layers;
  Rng rng(seed);
  return make_hypernetwork(cfg, rng);
}

void zero_all(HyperNetwork& hn) {
  for (auto* p : hn.parameters()) p->data().setZero();
}

}  // namespace

TEST_CASE("hypernet: config validation") {
  Rng rng(1);
  HyperNetConfig bad;
  bad.dim = 1;
  bad.n_classes = 2;
  CHECK_THROWS_AS(make_hypernetwork(bad, rng), ConfigError);
  bad.dim = 4;
  bad.n_classes = 1;
  CHECK_THROWS_AS(make_hypernetwork(bad, rng), ConfigError);
  bad.n_classes = 2;
  bad.n_layers = 4;
  CHECK_THROWS_AS(make_hypernetwork(bad, rng), ConfigError);
}

TEST_CASE("hypernet: weight count matches the architecture formula") {
  for (int layers : {1, 2, 3}) {
    HyperNetwork hn = small_hn(6, 3, layers, 7);
    long actual = 0;
    for (auto* p : hn.parameters())
      if (p != &hn.unk) actual += p->data().size();
    CHECK(actual == hn.weight_count());
    CHECK(hn.weight_count() == layers * (6 * 6 + 6) + 6 * (3 * 6) + 3 * 6 + 6 * 3 + 3);
  }
}

TEST_CASE("hypernet: zero network emits the zero classifier") {
  HyperNetwork hn = small_hn(4, 2, 2, 3);
  zero_all(hn);
  Eigen::RowVectorXd u(4);
  u << 1, -2, 3, 0.5;
  const GeneratedClassifier cls = generate_classifier(hn, u);
  CHECK(cls.W.norm() == 0.0);
  CHECK(cls.b.norm() == 0.0);
  Eigen::VectorXd p(4);
  p << 1, 1, 1, 1;
  const Eigen::VectorXd probs = ad::softmax(apply_classifier(cls, p));
  CHECK(probs[0] == doctest::Approx(0.5));
  CHECK(probs[1] == doctest::Approx(0.5));
}

TEST_CASE("hypernet: hand-set identity trunk reproduces the head product") {
  // d=2, C=2, one trunk layer fixed to identity (the test input is positive
  // so the ReLU passes it through), heads hand-set.
  HyperNetwork hn = small_hn(2, 2, 1, 5);
  hn.trunk_w[0].data() = Eigen::MatrixXd::Identity(2, 2);
  hn.trunk_b[0].data() = Eigen::MatrixXd::Zero(1, 2);
  Eigen::MatrixXd ww(2, 4);
  ww << 1, 2, 3, 4, 5, 6, 7, 8;
  hn.weight_w.data() = ww;
  hn.weight_b.data() = Eigen::MatrixXd::Zero(1, 4);
  hn.bias_w.data() = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd bb(1, 2);
  bb << 0.25, -0.25;
  hn.bias_b.data() = bb;

  Eigen::RowVectorXd u(2);
  u << 1.0, 2.0;
  const GeneratedClassifier cls = generate_classifier(hn, u);
  // w_flat = u * ww = (11, 14, 17, 20), reshaped row-major to 2x2.
  CHECK(cls.W(0, 0) == doctest::Approx(11));
  CHECK(cls.W(0, 1) == doctest::Approx(14));
  CHECK(cls.W(1, 0) == doctest::Approx(17));
  CHECK(cls.W(1, 1) == doctest::Approx(20));
  CHECK(cls.b[0] == doctest::Approx(0.25));
  CHECK(cls.b[1] == doctest::Approx(-0.25));
}

TEST_CASE("hypernet: distinct conditioning inputs give distinct classifiers") {
  HyperNetwork hn = small_hn(5, 2, 2, 11);
  Eigen::RowVectorXd u1 = Eigen::RowVectorXd::Zero(5);
  Eigen::RowVectorXd u2 = Eigen::RowVectorXd::Zero(5);
  u1[0] = 1.0;
  u2[1] = 1.0;
  const GeneratedClassifier c1 = generate_classifier(hn, u1);
  const GeneratedClassifier c2 = generate_classifier(hn, u2);
  CHECK((c1.W - c2.W).norm() > 0.0);
}

TEST_CASE("hypernet: fixed input is deterministic bitwise") {
  HyperNetwork hn = small_hn(5, 3, 2, 13);
  Eigen::RowVectorXd u(5);
  u << 0.1, -0.4, 0.9, 0.0, 2.0;
  const GeneratedClassifier a = generate_classifier(hn, u);
  const GeneratedClassifier b = generate_classifier(hn, u);
  CHECK((a.W.array() == b.W.array()).all());
  CHECK((a.b.array() == b.b.array()).all());
}

TEST_CASE("hypernet: output is Lipschitz in the conditioning input") {
  HyperNetwork hn = small_hn(4, 2, 2, 17);
  // Upper bound via Frobenius norms: ReLU is 1-Lipschitz and ||Ax|| <= ||A||_F ||x||.
  double lip = hn.weight_w.data().norm();
  for (const auto& w : hn.trunk_w) lip *= w.data().norm();

  Rng rng(19);
  Eigen::RowVectorXd u(4);
  u << 0.3, -0.2, 0.8, 0.1;
  const GeneratedClassifier base = generate_classifier(hn, u);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::RowVectorXd delta(4);
    for (int i = 0; i < 4; ++i) delta[i] = (rng.next_double() - 0.5) * 1e-3;
    const GeneratedClassifier moved = generate_classifier(hn, u + delta);
    CHECK((moved.W - base.W).norm() <= lip * delta.norm() + 1e-12);
  }
}

TEST_CASE("embed_conditioning: UNK returns the learned parameter exactly") {
  HyperNetwork hn = small_hn(3, 2, 1, 23);
  EmbeddingTable table;
  table.dim = 3;
  const ConditioningEmbedding ce = embed_conditioning(ConditioningInput::unknown(), table, hn);
  CHECK_FALSE(ce.unk_fallback);
  CHECK(ce.u.node().get() == hn.unk.value.node().get());  // the parameter itself, not a copy
}

TEST_CASE("embed_conditioning: signature tokens are mean-pooled") {
  HyperNetwork hn = small_hn(2, 2, 1, 29);
  EmbeddingTable table;
  table.dim = 2;
  table.words = {"travel", "city"};
  table.index = {{"travel", 0}, {"city", 1}};
  table.vectors.resize(2, 2);
  table.vectors << 1, 0, 0, 1;
  Signature sig;
  sig.domain = "travel";
  sig.drfs = {"city"};
  const ConditioningEmbedding ce =
      embed_conditioning(ConditioningInput::from_signature(sig), table, hn);
  CHECK(ce.u.data()(0, 0) == doctest::Approx(0.5));
  CHECK(ce.u.data()(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("embed_conditioning: table-1 signature equals the hand mean") {
  const EmbeddingTable table = load_embeddings(kData + "/table1/embeddings.txt");
  HyperNetwork hn = small_hn(4, 2, 1, 31);
  const Signature sig = parse_signature("travel: city, area, town, reports, modern");
  const ConditioningEmbedding ce =
      embed_conditioning(ConditioningInput::from_signature(sig), table, hn);
  Eigen::RowVectorXd hand = (table.row("travel") + table.row("city") + table.row("area") +
                             table.row("town") + table.row("reports") + table.row("modern")) /
                            6.0;
  CHECK((ce.u.data().row(0) - hand).norm() <= 1e-12);
}

TEST_CASE("embed_conditioning: all-OOV signature falls back to UNK, flagged") {
  HyperNetwork hn = small_hn(3, 2, 1, 37);
  EmbeddingTable table;
  table.dim = 3;
  Signature sig;
  sig.domain = "ghost";
  sig.drfs = {"missing", "words"};
  const ConditioningEmbedding ce =
      embed_conditioning(ConditioningInput::from_signature(sig), table, hn);
  CHECK(ce.unk_fallback);
  CHECK(ce.u.node().get() == hn.unk.value.node().get());
}

TEST_CASE("apply_classifier: identity, bias-only, and random recompute") {
  GeneratedClassifier id2;
  id2.W = Eigen::MatrixXd::Identity(2, 4);
  id2.b = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd p(4);
  p << 3, -1, 9, 9;
  const Eigen::VectorXd logits = apply_classifier(id2, p);
  CHECK(logits[0] == 3.0);
  CHECK(logits[1] == -1.0);

  GeneratedClassifier bias_only;
  bias_only.W = Eigen::MatrixXd::Zero(2, 4);
  bias_only.b = Eigen::VectorXd::Ones(2);
  const Eigen::VectorXd l1 = apply_classifier(bias_only, p);
  const Eigen::VectorXd l2 = apply_classifier(bias_only, Eigen::VectorXd::Random(4));
  CHECK((l1 - l2).norm() == 0.0);

  Rng rng(41);
  GeneratedClassifier rnd;
  rnd.W = Eigen::MatrixXd::Random(3, 4);
  rnd.b = Eigen::VectorXd::Random(3);
  const Eigen::VectorXd got = apply_classifier(rnd, p);
  CHECK((got - (rnd.W * p + rnd.b)).norm() == 0.0);

  Eigen::VectorXd wrong(3);
  CHECK_THROWS_AS(apply_classifier(rnd, wrong), ShapeError);
}

TEST_CASE("hypernet: gradients flow from the loss into theta_f") {
  HyperNetwork hn = small_hn(4, 3, 2, 43);
  Eigen::VectorXd p(4);
  p << 0.5, 0.5, -1.0, 2.0;
  auto loss_fn = [&]() {
    ClassifierValues cv = forward_classifier(hn, hn.unk.value);  // includes the UNK path
    ad::Value logits = ad::add(ad::matmul(cv.W, ad::Value::constant(p)), cv.b);
    return ad::softmax_cross_entropy(logits, 1);
  };
  CHECK(ad::grad_check(loss_fn, hn.parameters()) < 1e-4);
}

TEST_CASE("hypernet: UNK conditioning yields identical classifiers across a batch") {
  HyperNetwork hn = small_hn(4, 2, 2, 47);
  EmbeddingTable table;
  table.dim = 4;
  std::vector<GeneratedClassifier> batch;
  for (int i = 0; i < 5; ++i) {
    const ConditioningEmbedding ce = embed_conditioning(ConditioningInput::unknown(), table, hn);
    batch.push_back(generate_classifier(hn, ce.u.data().row(0), "UNK"));
  }
  for (size_t i = 1; i < batch.size(); ++i) {
    CHECK((batch[i].W.array() == batch[0].W.array()).all());
    CHECK((batch[i].b.array() == batch[0].b.array()).all());
  }
}
