#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbm/rng.hpp"

namespace sbm::nn {

// Dense 64-bit float tensor with reverse-mode gradient tracking. Ops record
// parent references and a backward rule; backward() replays the recorded
// operations in reverse execution order exactly once per node. No
// broadcasting: shapes must match except where an op states otherwise.

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  uint64_t id = 0;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;

  size_t numel() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data);
  static Tensor scalar(double v);
  static Tensor randn(std::vector<int> shape, Rng& rng, double stddev);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rows() const { return node_->shape.at(0); }
  int cols() const { return node_->shape.at(1); }
  size_t numel() const { return node_->value.size(); }
  bool is_scalar() const { return numel() == 1; }
  double item() const;

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& mutable_data() { return node_->value; }
  const std::vector<double>& grad() const;
  double at(int i) const { return node_->value.at(i); }
  double at(int r, int c) const { return node_->value.at(r * cols() + c); }

  Tensor& set_requires_grad(bool v = true) {
    node_->requires_grad = v;
    return *this;
  }
  bool requires_grad() const { return node_->requires_grad; }

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Gradient recording switch (thread-local). Inference paths disable it.
bool& grad_enabled();
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev; }
};

// Elementwise (shapes must match exactly).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);

Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

// 2D linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Adds / multiplies a length-k row vector to/into every row of an (n x k)
// matrix.
Tensor add_rowvec(const Tensor& a, const Tensor& v);
Tensor mul_rowvec(const Tensor& a, const Tensor& v);

// Nonlinearities.
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);

// Row-wise softmax / layer norm over the last axis of a 2D tensor.
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm_rows(const Tensor& a, double eps = 1e-5);

// Reductions to a scalar.
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// Shape ops.
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int r0, int r1);
Tensor slice_cols(const Tensor& a, int c0, int c1);

// Gathers rows of `table` (vocab x d) by index; backward scatter-adds.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& indices);

// Mean softmax cross-entropy over rows of (n x C) logits; rows whose target
// is `ignore_index` contribute nothing. All targets ignored -> loss 0.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     int ignore_index = -100);

// Seeds d(loss)=1 and propagates to every tracked tensor. Throws on
// non-scalar loss.
void backward(const Tensor& loss);

void zero_grad(const std::vector<Tensor>& params);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;
};

// Standard Adam update; deterministic. `state` must be reused across steps
// with the same parameter list order.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace sbm::nn
