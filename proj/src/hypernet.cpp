#include "hyperadapt/hypernet.hpp"

#include <cmath>

#include "hyperadapt/errors.hpp"

namespace hyperadapt {

void HyperNetConfig::validate() const {
  if (dim < 2) throw ConfigError("hypernet: dim must be >= 2");
  if (n_classes < 2) throw ConfigError("hypernet: n_classes must be >= 2");
  if (n_layers < 1 || n_layers > 3) throw ConfigError("hypernet: n_layers must be 1, 2 or 3");
}

std::vector<ad::Parameter*> HyperNetwork::parameters() {
  std::vector<ad::Parameter*> out;
  for (size_t i = 0; i < trunk_w.size(); ++i) {
    out.push_back(&trunk_w[i]);
    out.push_back(&trunk_b[i]);
  }
  out.push_back(&weight_w);
  out.push_back(&weight_b);
  out.push_back(&bias_w);
  out.push_back(&bias_b);
  out.push_back(&unk);
  return out;
}

long HyperNetwork::weight_count() const {
  const long d = cfg.dim, c = cfg.n_classes;
  return cfg.n_layers * (d * d + d) + d * (c * d) + c * d + d * c + c;
}

namespace {

Eigen::MatrixXd uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.next_double() - 1.0) * bound;
  return m;
}

}  // namespace

HyperNetwork make_hypernetwork(const HyperNetConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = cfg.dim, c = cfg.n_classes;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  HyperNetwork hn;
  hn.cfg = cfg;
  for (int layer = 0; layer < cfg.n_layers; ++layer) {
    const std::string tag = "hn/trunk" + std::to_string(layer);
    hn.trunk_w.push_back(ad::make_parameter(tag + "_w", uniform_init(d, d, bound, rng)));
    hn.trunk_b.push_back(ad::make_parameter(tag + "_b", uniform_init(1, d, bound, rng)));
  }
  hn.weight_w = ad::make_parameter("hn/weight_w", 0.1 * uniform_init(d, c * d, bound, rng));
  hn.weight_b = ad::make_parameter("hn/weight_b", 0.1 * uniform_init(1, c * d, bound, rng));
  hn.bias_w = ad::make_parameter("hn/bias_w", uniform_init(d, c, bound, rng));
  hn.bias_b = ad::make_parameter("hn/bias_b", uniform_init(1, c, bound, rng));
  hn.unk = ad::make_parameter("hn/unk", uniform_init(1, d, bound, rng));
  return hn;
}

ConditioningInput ConditioningInput::domain(const std::string& name) {
  return {ConditioningKind::domain_name, tokenize(name)};
}

ConditioningInput ConditioningInput::unknown() { return {ConditioningKind::unk, {"UNK"}}; }

ConditioningInput ConditioningInput::from_signature(const Signature& sig) {
  ConditioningInput input;
  input.kind = ConditioningKind::signature;
  input.tokens = tokenize(sig.domain);
  input.tokens.insert(input.tokens.end(), sig.drfs.begin(), sig.drfs.end());
  return input;
}

ConditioningEmbedding embed_conditioning(const ConditioningInput& input,
                                         const EmbeddingTable& table, HyperNetwork& hn) {
  if (input.kind == ConditioningKind::unk) return {hn.unk.value, false};
  const MeanEmbedding mean = embed_mean(input.tokens, table);
  if (mean.coverage == 0) return {hn.unk.value, true};
  return {ad::Value::constant(mean.vec), false};
}

ClassifierValues forward_classifier(HyperNetwork& hn, const ad::Value& u) {
  if (u.rows() != 1 || u.cols() != hn.cfg.dim)
    throw ShapeError("forward_classifier: conditioning must be 1x" + std::to_string(hn.cfg.dim) +
                     ", got " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()));
  ad::Value h = u;
  for (size_t i = 0; i < hn.trunk_w.size(); ++i)
    h = ad::relu(ad::add(ad::matmul(h, hn.trunk_w[i].value), hn.trunk_b[i].value));
  const int c = hn.cfg.n_classes, d = hn.cfg.dim;
  ad::Value w_flat = ad::add(ad::matmul(h, hn.weight_w.value), hn.weight_b.value);
  ad::Value b_flat = ad::add(ad::matmul(h, hn.bias_w.value), hn.bias_b.value);
  return {ad::reshape(w_flat, c, d), ad::reshape(b_flat, c, 1)};
}

GeneratedClassifier generate_classifier(HyperNetwork& hn, const Eigen::RowVectorXd& u,
                                        const std::string& provenance) {
  ClassifierValues cv = forward_classifier(hn, ad::Value::constant(u));
  GeneratedClassifier out;
  out.W = cv.W.data();
  out.b = cv.b.data().col(0);
  out.provenance = provenance;
  return out;
}

Eigen::VectorXd apply_classifier(const GeneratedClassifier& cls, const Eigen::VectorXd& p) {
  if (cls.W.cols() != p.size())
    throw ShapeError("apply_classifier: W is " + std::to_string(cls.W.rows()) + "x" +
                     std::to_string(cls.W.cols()) + " but p has " + std::to_string(p.size()) +
                     " entries");
  return cls.W * p + cls.b;
}

}  // namespace hyperadapt
