#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hyperadapt::ad {

// Dense f64 reverse-mode autodiff. Graphs are built per batch (define-by-run)
// from Value handles; Parameter leaves persist across batches and accumulate
// gradients until an optimizer step or zero_grad clears them. A graph
// instance is single-threaded; distinct graphs may run concurrently.

class Value {
 public:
  struct Node {
    Eigen::MatrixXd data;
    Eigen::MatrixXd grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Node&)> backward;  // adds into parents' grads
  };

  Value() = default;

  static Value constant(Eigen::MatrixXd data);
  static Value constant(double scalar);

  bool valid() const { return static_cast<bool>(node_); }
  Eigen::MatrixXd& data() const { return node_->data; }
  Eigen::MatrixXd& grad() const { return node_->grad; }
  Eigen::Index rows() const { return node_->data.rows(); }
  Eigen::Index cols() const { return node_->data.cols(); }
  double scalar() const;  // requires 1x1

  // Reverse pass from this node: seeds d(this)/d(this) = 1, visits the graph
  // in reverse topological order exactly once, accumulating into grads.
  void backward() const;

  // Extension point for custom ops (and for fault injection in tests):
  // `back` receives the output node and must add into the parents' grads.
  static Value make_op(Eigen::MatrixXd data, std::vector<Value> parents,
                       std::function<void(const Node&)> back);

  std::shared_ptr<Node> node() const { return node_; }

 private:
  explicit Value(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

Value matmul(const Value& a, const Value& b);
Value add(const Value& a, const Value& b);
Value relu(const Value& a);              // backward subgradient 0 at 0
Value mean_rows(const Value& a);         // n x d -> 1 x d
Value concat_rows(const std::vector<Value>& parts);
Value slice(const Value& a, Eigen::Index row0, Eigen::Index col0, Eigen::Index rows,
            Eigen::Index cols);
Value scale(const Value& a, double c);
Value transpose(const Value& a);
Value reshape(const Value& a, Eigen::Index rows, Eigen::Index cols);  // row-major order

// Numerically stable cross entropy for a C x 1 logit column against a gold
// class index; gradient is softmax - onehot.
Value softmax_cross_entropy(const Value& logits, int gold);

// Mean binary cross entropy with logits against constant targets in [0,1];
// same shape required. Gradient is (sigmoid(z) - t) / count.
Value sigmoid_bce(const Value& logits, const Eigen::MatrixXd& targets);

// Mean of 1x1 scalars.
Value mean_scalars(const std::vector<Value>& losses);

// Stable softmax of a plain logit vector (inference-side helper).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// A trainable leaf with Adam state. Move-only: a copy would alias the value
// node while duplicating the optimizer state.
struct Parameter {
  Parameter() = default;
  Parameter(const Parameter&) = delete;
  Parameter& operator=(const Parameter&) = delete;
  Parameter(Parameter&&) = default;
  Parameter& operator=(Parameter&&) = default;

  std::string name;
  Value value;
  Eigen::MatrixXd m, v;  // first/second moments
  long step = 0;

  Eigen::MatrixXd& data() { return value.data(); }
  const Eigen::MatrixXd& data() const { return value.data(); }
  Eigen::MatrixXd& grad() { return value.grad(); }
};

Parameter make_parameter(std::string name, Eigen::MatrixXd init);

void zero_grad(const std::vector<Parameter*>& params);

// Standard Adam with bias correction; zeroes gradients after the update.
void adam_step(const std::vector<Parameter*>& params, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Central-difference check of d(loss)/d(params). Samples up to max_coords
// coordinates (seeded), returns the max over sampled coordinates of
// |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|). loss_fn must be deterministic
// and rebuild the graph from current parameter data.
double grad_check(const std::function<Value()>& loss_fn, const std::vector<Parameter*>& params,
                  double epsilon = 1e-5, int max_coords = 200, uint64_t seed = 17);

}  // namespace hyperadapt::ad
