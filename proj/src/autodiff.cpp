#include "hyperadapt/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hyperadapt/errors.hpp"
#include "hyperadapt/rng.hpp"

namespace hyperadapt::ad {

namespace {

std::string shape_of(const Value& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

[[noreturn]] void shape_fail(const std::string& op, const Value& a, const Value& b) {
  throw ShapeError(op + ": incompatible shapes " + shape_of(a) + " and " + shape_of(b));
}

}  // namespace

Value Value::constant(Eigen::MatrixXd data) {
  auto n = std::make_shared<Node>();
  n->grad = Eigen::MatrixXd::Zero(data.rows(), data.cols());
  n->data = std::move(data);
  return Value(std::move(n));
}

Value Value::constant(double scalar) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = scalar;
  return constant(std::move(m));
}

double Value::scalar() const {
  if (rows() != 1 || cols() != 1)
    throw ShapeError("scalar(): value is " + shape_of(*this) + ", expected 1x1");
  return node_->data(0, 0);
}

Value Value::make_op(Eigen::MatrixXd data, std::vector<Value> parents,
                     std::function<void(const Node&)> back) {
  auto n = std::make_shared<Node>();
  n->grad = Eigen::MatrixXd::Zero(data.rows(), data.cols());
  n->data = std::move(data);
  n->parents.reserve(parents.size());
  for (auto& p : parents) n->parents.push_back(p.node());
  n->backward = std::move(back);
  return Value(std::move(n));
}

void Value::backward() const {
  if (!node_) throw NumericError("backward() on empty Value");
  // Iterative post-order DFS for a reverse topological order; each node is
  // visited exactly once even when shared.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  visited.insert(node_.get());
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_parent < top.node->parents.size()) {
      Node* parent = top.node->parents[top.next_parent++].get();
      if (visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(top.node);
      stack.pop_back();
    }
  }
  node_->grad = Eigen::MatrixXd::Ones(rows(), cols());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

Value matmul(const Value& a, const Value& b) {
  if (a.cols() != b.rows()) shape_fail("matmul", a, b);
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return Value::make_op(a.data() * b.data(), {a, b}, [an, bn](const Value::Node& out) {
    an->grad.noalias() += out.grad * bn->data.transpose();
    bn->grad.noalias() += an->data.transpose() * out.grad;
  });
}

Value add(const Value& a, const Value& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail("add", a, b);
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return Value::make_op(a.data() + b.data(), {a, b}, [an, bn](const Value::Node& out) {
    an->grad += out.grad;
    bn->grad += out.grad;
  });
}

Value relu(const Value& a) {
  auto* an = a.node().get();
  return Value::make_op(a.data().cwiseMax(0.0), {a}, [an](const Value::Node& out) {
    an->grad.array() += (an->data.array() > 0.0).cast<double>() * out.grad.array();
  });
}

Value mean_rows(const Value& a) {
  if (a.rows() < 1) throw ShapeError("mean_rows: empty input");
  const double inv_n = 1.0 / static_cast<double>(a.rows());
  auto* an = a.node().get();
  Eigen::MatrixXd out = a.data().colwise().mean();
  return Value::make_op(std::move(out), {a}, [an, inv_n](const Value::Node& o) {
    an->grad.noalias() += Eigen::VectorXd::Constant(an->data.rows(), inv_n) * o.grad;
  });
}

Value concat_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0], p);
    rows += p.rows();
  }
  Eigen::MatrixXd data(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    data.middleRows(r, p.rows()) = p.data();
    r += p.rows();
  }
  std::vector<Value::Node*> raw;
  raw.reserve(parts.size());
  for (const auto& p : parts) raw.push_back(p.node().get());
  return Value::make_op(std::move(data), parts, [raw](const Value::Node& out) {
    Eigen::Index r0 = 0;
    for (auto* p : raw) {
      p->grad += out.grad.middleRows(r0, p->data.rows());
      r0 += p->data.rows();
    }
  });
}

Value slice(const Value& a, Eigen::Index row0, Eigen::Index col0, Eigen::Index rows,
            Eigen::Index cols) {
  if (row0 < 0 || col0 < 0 || rows < 1 || cols < 1 || row0 + rows > a.rows() ||
      col0 + cols > a.cols())
    throw ShapeError("slice: block (" + std::to_string(row0) + "," + std::to_string(col0) + "," +
                     std::to_string(rows) + "," + std::to_string(cols) + ") out of " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  auto* an = a.node().get();
  return Value::make_op(a.data().block(row0, col0, rows, cols), {a},
                        [an, row0, col0, rows, cols](const Value::Node& out) {
                          an->grad.block(row0, col0, rows, cols) += out.grad;
                        });
}

Value scale(const Value& a, double c) {
  auto* an = a.node().get();
  return Value::make_op(a.data() * c, {a},
                        [an, c](const Value::Node& out) { an->grad += out.grad * c; });
}

Value transpose(const Value& a) {
  auto* an = a.node().get();
  return Value::make_op(a.data().transpose(), {a}, [an](const Value::Node& out) {
    an->grad += out.grad.transpose();
  });
}

Value reshape(const Value& a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.rows() * a.cols())
    throw ShapeError("reshape: cannot view " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " as " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  const Eigen::Index in_cols = a.cols();
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows * cols; ++i)
    out(i / cols, i % cols) = a.data()(i / in_cols, i % in_cols);
  auto* an = a.node().get();
  return Value::make_op(std::move(out), {a}, [an, in_cols, cols](const Value::Node& o) {
    const Eigen::Index total = o.data.rows() * o.data.cols();
    for (Eigen::Index i = 0; i < total; ++i)
      an->grad(i / in_cols, i % in_cols) += o.grad(i / cols, i % cols);
  });
}

Value softmax_cross_entropy(const Value& logits, int gold) {
  if (logits.cols() != 1 || logits.rows() < 2)
    throw ShapeError("softmax_cross_entropy: logits must be Cx1 with C >= 2, got " +
                     std::to_string(logits.rows()) + "x" + std::to_string(logits.cols()));
  if (gold < 0 || gold >= logits.rows())
    throw NumericError("softmax_cross_entropy: gold index " + std::to_string(gold) +
                       " out of range");
  const Eigen::VectorXd z = logits.data().col(0);
  const double zmax = z.maxCoeff();
  const double lse = zmax + std::log((z.array() - zmax).exp().sum());
  Eigen::VectorXd sm = (z.array() - lse).exp();
  Eigen::MatrixXd loss(1, 1);
  loss(0, 0) = lse - z[gold];
  auto* ln = logits.node().get();
  return Value::make_op(std::move(loss), {logits}, [ln, sm, gold](const Value::Node& out) {
    const double g = out.grad(0, 0);
    ln->grad.col(0) += g * sm;
    ln->grad(gold, 0) -= g;
  });
}

Value sigmoid_bce(const Value& logits, const Eigen::MatrixXd& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ShapeError("sigmoid_bce: logits " + std::to_string(logits.rows()) + "x" +
                     std::to_string(logits.cols()) + " vs targets " +
                     std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()));
  const auto& z = logits.data();
  const Eigen::Index count = z.size();
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double zij = z(i, j);
      // softplus(z) - t*z, stable form
      total += std::max(zij, 0.0) + std::log1p(std::exp(-std::abs(zij))) - targets(i, j) * zij;
    }
  Eigen::MatrixXd loss(1, 1);
  loss(0, 0) = total / static_cast<double>(count);
  auto* ln = logits.node().get();
  const Eigen::MatrixXd t = targets;
  return Value::make_op(std::move(loss), {logits}, [ln, t, count](const Value::Node& out) {
    const double g = out.grad(0, 0) / static_cast<double>(count);
    ln->grad += g * ((1.0 / (1.0 + (-ln->data.array()).exp())) - t.array()).matrix();
  });
}

Value mean_scalars(const std::vector<Value>& losses) {
  if (losses.empty()) throw NumericError("mean_scalars: empty list");
  Value total = losses[0];
  for (size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
  return scale(total, 1.0 / static_cast<double>(losses.size()));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double zmax = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - zmax).exp();
  return e / e.sum();
}

Parameter make_parameter(std::string name, Eigen::MatrixXd init) {
  Parameter p;
  p.name = std::move(name);
  p.m = Eigen::MatrixXd::Zero(init.rows(), init.cols());
  p.v = Eigen::MatrixXd::Zero(init.rows(), init.cols());
  p.value = Value::constant(std::move(init));
  return p;
}

void zero_grad(const std::vector<Parameter*>& params) {
  for (auto* p : params) p->grad().setZero();
}

void adam_step(const std::vector<Parameter*>& params, double lr, double beta1, double beta2,
               double eps) {
  for (auto* p : params) {
    p->step += 1;
    const auto& g = p->grad();
    p->m = beta1 * p->m + (1.0 - beta1) * g;
    p->v = beta2 * p->v + (1.0 - beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p->step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p->step));
    p->data() -=
        (lr * (p->m / bc1).array() / ((p->v / bc2).array().sqrt() + eps)).matrix();
    p->grad().setZero();
  }
}

double grad_check(const std::function<Value()>& loss_fn, const std::vector<Parameter*>& params,
                  double epsilon, int max_coords, uint64_t seed) {
  size_t total = 0;
  for (auto* p : params) total += static_cast<size_t>(p->data().size());
  if (total == 0) return 0.0;

  zero_grad(params);
  Value loss = loss_fn();
  loss.backward();

  std::vector<double> analytic(total);
  {
    size_t off = 0;
    for (auto* p : params) {
      const auto& g = p->grad();
      for (Eigen::Index i = 0; i < g.size(); ++i) analytic[off + i] = g(i);
      off += static_cast<size_t>(g.size());
    }
  }

  Rng rng(seed);
  std::vector<size_t> coords;
  if (total <= static_cast<size_t>(max_coords)) {
    coords.resize(total);
    for (size_t i = 0; i < total; ++i) coords[i] = i;
  } else {
    coords = rng.sample_indices(total, static_cast<size_t>(max_coords));
  }

  auto locate = [&](size_t coord) -> double* {
    size_t off = 0;
    for (auto* p : params) {
      const size_t sz = static_cast<size_t>(p->data().size());
      if (coord < off + sz) return p->data().data() + (coord - off);
      off += sz;
    }
    return nullptr;
  };

  double worst = 0.0;
  for (size_t coord : coords) {
    double* slot = locate(coord);
    const double saved = *slot;
    *slot = saved + epsilon;
    const double up = loss_fn().scalar();
    *slot = saved - epsilon;
    const double down = loss_fn().scalar();
    *slot = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double ad = analytic[coord];
    const double rel = std::abs(ad - fd) / std::max(1e-8, std::abs(ad) + std::abs(fd));
    worst = std::max(worst, rel);
  }
  zero_grad(params);
  return worst;
}

}  // namespace hyperadapt::ad
