#include "sbm/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace sbm::nn {

namespace {

std::atomic<uint64_t> g_next_id{1};

size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

void check_2d(const Tensor& a, const char* op) {
  if (a.shape().size() != 2)
    throw std::invalid_argument(std::string(op) + ": expected 2D tensor, got " +
                                shape_str(a.shape()));
}

std::shared_ptr<TensorNode> new_node(std::vector<int> shape,
                                     std::vector<double> value) {
  if (shape_numel(shape) != value.size())
    throw std::invalid_argument("Tensor: data length != shape product");
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

// Builds an op result; records parents + backward rule only when gradient
// recording is on and some parent is tracked.
Tensor make_op(std::vector<int> shape, std::vector<double> value,
               std::vector<std::shared_ptr<TensorNode>> parents,
               std::function<void(TensorNode&)> backprop) {
  auto n = new_node(std::move(shape), std::move(value));
  bool track = false;
  if (grad_enabled())
    for (const auto& p : parents)
      if (p->requires_grad) track = true;
  if (track) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return Tensor(n);
}

// Elementwise helper: unary op with value fn and d(out)/d(in) fn of (x, y).
template <typename FwdFn, typename BwdFn>
Tensor unary_op(const Tensor& a, FwdFn fwd, BwdFn dfn, const char*) {
  std::vector<double> out(a.numel());
  const auto& x = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {pa}, [pa, dfn](TensorNode& self) {
    pa->ensure_grad();
    for (size_t i = 0; i < self.value.size(); ++i)
      pa->grad[i] += self.grad[i] * dfn(pa->value[i], self.value[i]);
  });
}

}  // namespace

bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

Tensor Tensor::zeros(std::vector<int> shape) {
  size_t n = shape_numel(shape);
  return Tensor(new_node(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  size_t n = shape_numel(shape);
  return Tensor(new_node(std::move(shape), std::vector<double>(n, v)));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data) {
  return Tensor(new_node(std::move(shape), std::move(data)));
}

Tensor Tensor::scalar(double v) { return Tensor(new_node({1}, {v})); }

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev) {
  size_t n = shape_numel(shape);
  std::vector<double> data(n);
  std::normal_distribution<double> d(0.0, stddev);
  for (size_t i = 0; i < n; ++i) data[i] = d(rng);
  return Tensor(new_node(std::move(shape), std::move(data)));
}

double Tensor::item() const {
  if (!is_scalar()) throw std::invalid_argument("Tensor::item: not a scalar");
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb](TensorNode& s) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i) pa->grad[i] += s.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i) pb->grad[i] += s.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb](TensorNode& s) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i) pa->grad[i] += s.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i) pb->grad[i] -= s.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb](TensorNode& s) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i)
        pa->grad[i] += s.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i)
        pb->grad[i] += s.grad[i] * pa->value[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] / b.data()[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb](TensorNode& s) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i)
        pa->grad[i] += s.grad[i] / pb->value[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < s.value.size(); ++i)
        pb->grad[i] -= s.grad[i] * pa->value[i] / (pb->value[i] * pb->value[i]);
    }
  });
}

Tensor neg(const Tensor& a) {
  return unary_op(
      a, [](double x) { return -x; }, [](double, double) { return -1.0; },
      "neg");
}

Tensor add_scalar(const Tensor& a, double sc) {
  return unary_op(
      a, [sc](double x) { return x + sc; }, [](double, double) { return 1.0; },
      "add_scalar");
}

Tensor mul_scalar(const Tensor& a, double sc) {
  return unary_op(
      a, [sc](double x) { return x * sc; }, [sc](double, double) { return sc; },
      "mul_scalar");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  int m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2)
    throw std::invalid_argument("matmul: inner dims " + shape_str(a.shape()) +
                                " x " + shape_str(b.shape()));
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B + p * n;
      double* orow = out.data() + i * n;
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  auto pa = a.node(), pb = b.node();
  return make_op({m, n}, std::move(out), {pa, pb},
                 [pa, pb, m, k, n](TensorNode& s) {
                   const double* G = s.grad.data();
                   if (pa->requires_grad) {
                     pa->ensure_grad();  // dA += G * B^T
                     const double* B = pb->value.data();
                     for (int i = 0; i < m; ++i)
                       for (int p = 0; p < k; ++p) {
                         double acc = 0.0;
                         for (int j = 0; j < n; ++j)
                           acc += G[i * n + j] * B[p * n + j];
                         pa->grad[i * k + p] += acc;
                       }
                   }
                   if (pb->requires_grad) {
                     pb->ensure_grad();  // dB += A^T * G
                     const double* A = pa->value.data();
                     for (int p = 0; p < k; ++p)
                       for (int i = 0; i < m; ++i) {
                         double aip = A[i * k + p];
                         if (aip == 0.0) continue;
                         const double* grow = G + i * n;
                         double* brow = pb->grad.data() + p * n;
                         for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
                       }
                   }
                 });
}

Tensor transpose(const Tensor& a) {
  check_2d(a, "transpose");
  int m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
  auto pa = a.node();
  return make_op({n, m}, std::move(out), {pa}, [pa, m, n](TensorNode& s) {
    pa->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) pa->grad[i * n + j] += s.grad[j * m + i];
  });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  check_2d(a, "add_rowvec");
  int m = a.rows(), n = a.cols();
  if (static_cast<int>(v.numel()) != n)
    throw std::invalid_argument("add_rowvec: vector length != cols");
  std::vector<double> out(a.numel());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[i * n + j] = a.data()[i * n + j] + v.data()[j];
  auto pa = a.node(), pv = v.node();
  return make_op(a.shape(), std::move(out), {pa, pv},
                 [pa, pv, m, n](TensorNode& s) {
                   if (pa->requires_grad) {
                     pa->ensure_grad();
                     for (size_t i = 0; i < s.value.size(); ++i)
                       pa->grad[i] += s.grad[i];
                   }
                   if (pv->requires_grad) {
                     pv->ensure_grad();
                     for (int i = 0; i < m; ++i)
                       for (int j = 0; j < n; ++j)
                         pv->grad[j] += s.grad[i * n + j];
                   }
                 });
}

Tensor mul_rowvec(const Tensor& a, const Tensor& v) {
  check_2d(a, "mul_rowvec");
  int m = a.rows(), n = a.cols();
  if (static_cast<int>(v.numel()) != n)
    throw std::invalid_argument("mul_rowvec: vector length != cols");
  std::vector<double> out(a.numel());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[i * n + j] = a.data()[i * n + j] * v.data()[j];
  auto pa = a.node(), pv = v.node();
  return make_op(a.shape(), std::move(out), {pa, pv},
                 [pa, pv, m, n](TensorNode& s) {
                   if (pa->requires_grad) {
                     pa->ensure_grad();
                     for (int i = 0; i < m; ++i)
                       for (int j = 0; j < n; ++j)
                         pa->grad[i * n + j] += s.grad[i * n + j] * pv->value[j];
                   }
                   if (pv->requires_grad) {
                     pv->ensure_grad();
                     for (int i = 0; i < m; ++i)
                       for (int j = 0; j < n; ++j)
                         pv->grad[j] += s.grad[i * n + j] * pa->value[i * n + j];
                   }
                 });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor gelu(const Tensor& a) {
  // Exact erf form: x * Phi(x), derivative Phi(x) + x * phi(x).
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary_op(
      a,
      [=](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [=](double x, double) {
        double phi_cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        double phi_pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return phi_cdf + x * phi_pdf;
      },
      "gelu");
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a,
      [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor tanh_t(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Tensor exp_t(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; }, "exp");
}

Tensor log_t(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; }, "log");
}

Tensor sqrt_t(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; }, "sqrt");
}

Tensor softmax_rows(const Tensor& a) {
  check_2d(a, "softmax_rows");
  int m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  for (int i = 0; i < m; ++i) {
    const double* row = a.data().data() + i * n;
    double mx = *std::max_element(row, row + n);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      sum += out[i * n + j];
    }
    for (int j = 0; j < n; ++j) out[i * n + j] /= sum;
  }
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {pa}, [pa, m, n](TensorNode& s) {
    pa->ensure_grad();
    for (int i = 0; i < m; ++i) {
      const double* y = s.value.data() + i * n;
      const double* g = s.grad.data() + i * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += g[j] * y[j];
      for (int j = 0; j < n; ++j) pa->grad[i * n + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
  check_2d(a, "layer_norm_rows");
  int m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  std::vector<double> inv_std(m);
  for (int i = 0; i < m; ++i) {
    const double* row = a.data().data() + i * n;
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += row[j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= n;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) out[i * n + j] = (row[j] - mean) * inv_std[i];
  }
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {pa},
                 [pa, m, n, inv_std](TensorNode& s) {
                   pa->ensure_grad();
                   for (int i = 0; i < m; ++i) {
                     const double* y = s.value.data() + i * n;
                     const double* g = s.grad.data() + i * n;
                     double gmean = 0.0, gymean = 0.0;
                     for (int j = 0; j < n; ++j) {
                       gmean += g[j];
                       gymean += g[j] * y[j];
                     }
                     gmean /= n;
                     gymean /= n;
                     for (int j = 0; j < n; ++j)
                       pa->grad[i * n + j] +=
                           inv_std[i] * (g[j] - gmean - y[j] * gymean);
                   }
                 });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  auto pa = a.node();
  return make_op({1}, {s}, {pa}, [pa](TensorNode& self) {
    pa->ensure_grad();
    for (size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += self.grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  double inv_n = 1.0 / static_cast<double>(a.numel());
  auto pa = a.node();
  return make_op({1}, {s * inv_n}, {pa}, [pa, inv_n](TensorNode& self) {
    pa->ensure_grad();
    for (size_t i = 0; i < pa->grad.size(); ++i)
      pa->grad[i] += self.grad[0] * inv_n;
  });
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (shape_numel(shape) != a.numel())
    throw std::invalid_argument("reshape: element count mismatch");
  auto pa = a.node();
  return make_op(std::move(shape), a.data(), {pa}, [pa](TensorNode& s) {
    pa->ensure_grad();
    for (size_t i = 0; i < s.value.size(); ++i) pa->grad[i] += s.grad[i];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  int n = parts[0].cols();
  int m = 0;
  for (const Tensor& t : parts) {
    check_2d(t, "concat_rows");
    if (t.cols() != n)
      throw std::invalid_argument("concat_rows: column mismatch");
    m += t.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(m) * n);
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const Tensor& t : parts) {
    out.insert(out.end(), t.data().begin(), t.data().end());
    parents.push_back(t.node());
  }
  auto ps = parents;
  return make_op({m, n}, std::move(out), std::move(parents),
                 [ps](TensorNode& s) {
                   size_t off = 0;
                   for (const auto& p : ps) {
                     if (p->requires_grad) {
                       p->ensure_grad();
                       for (size_t i = 0; i < p->value.size(); ++i)
                         p->grad[i] += s.grad[off + i];
                     }
                     off += p->value.size();
                   }
                 });
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  check_2d(a, "slice_rows");
  int m = a.rows(), n = a.cols();
  if (r0 < 0 || r1 > m || r0 >= r1)
    throw std::invalid_argument("slice_rows: bad range");
  std::vector<double> out(a.data().begin() + static_cast<size_t>(r0) * n,
                          a.data().begin() + static_cast<size_t>(r1) * n);
  auto pa = a.node();
  return make_op({r1 - r0, n}, std::move(out), {pa},
                 [pa, r0, n](TensorNode& s) {
                   pa->ensure_grad();
                   for (size_t i = 0; i < s.value.size(); ++i)
                     pa->grad[static_cast<size_t>(r0) * n + i] += s.grad[i];
                 });
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  check_2d(a, "slice_cols");
  int m = a.rows(), n = a.cols();
  if (c0 < 0 || c1 > n || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range");
  int w = c1 - c0;
  std::vector<double> out(static_cast<size_t>(m) * w);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j) out[i * w + j] = a.data()[i * n + c0 + j];
  auto pa = a.node();
  return make_op({m, w}, std::move(out), {pa},
                 [pa, c0, n, w, m](TensorNode& s) {
                   pa->ensure_grad();
                   for (int i = 0; i < m; ++i)
                     for (int j = 0; j < w; ++j)
                       pa->grad[i * n + c0 + j] += s.grad[i * w + j];
                 });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& indices) {
  check_2d(table, "embedding_lookup");
  int vocab = table.rows(), d = table.cols();
  std::vector<double> out(indices.size() * static_cast<size_t>(d));
  for (size_t i = 0; i < indices.size(); ++i) {
    int idx = indices[i];
    if (idx < 0 || idx >= vocab)
      throw std::invalid_argument("embedding_lookup: index " +
                                  std::to_string(idx) + " out of vocab " +
                                  std::to_string(vocab));
    std::copy_n(table.data().begin() + static_cast<size_t>(idx) * d, d,
                out.begin() + i * d);
  }
  auto pt = table.node();
  auto idxs = indices;
  return make_op({static_cast<int>(indices.size()), d}, std::move(out), {pt},
                 [pt, idxs, d](TensorNode& s) {
                   pt->ensure_grad();
                   for (size_t i = 0; i < idxs.size(); ++i)
                     for (int j = 0; j < d; ++j)
                       pt->grad[static_cast<size_t>(idxs[i]) * d + j] +=
                           s.grad[i * d + j];
                 });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     int ignore_index) {
  check_2d(logits, "cross_entropy");
  int m = logits.rows(), c = logits.cols();
  if (static_cast<int>(targets.size()) != m)
    throw std::invalid_argument("cross_entropy: target count != rows");
  // Cache softmax probabilities for the backward rule.
  auto probs = std::make_shared<std::vector<double>>(logits.numel());
  double loss = 0.0;
  int active = 0;
  for (int i = 0; i < m; ++i) {
    const double* row = logits.data().data() + i * c;
    double mx = *std::max_element(row, row + c);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      (*probs)[i * c + j] = std::exp(row[j] - mx);
      sum += (*probs)[i * c + j];
    }
    for (int j = 0; j < c; ++j) (*probs)[i * c + j] /= sum;
    int t = targets[i];
    if (t == ignore_index) continue;
    if (t < 0 || t >= c)
      throw std::invalid_argument("cross_entropy: target out of range");
    loss += std::log(sum) + mx - row[t];
    ++active;
  }
  if (active > 0) loss /= active;
  auto pl = logits.node();
  auto tg = targets;
  return make_op(
      {1}, {loss}, {pl}, [pl, tg, probs, c, active, ignore_index](TensorNode& s) {
        if (active == 0) return;
        pl->ensure_grad();
        double scale = s.grad[0] / active;
        for (size_t i = 0; i < tg.size(); ++i) {
          if (tg[i] == ignore_index) continue;
          for (int j = 0; j < c; ++j) {
            double p = (*probs)[i * c + j];
            pl->grad[i * c + j] +=
                scale * (p - (static_cast<int>(j) == tg[i] ? 1.0 : 0.0));
          }
        }
      });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar())
    throw std::invalid_argument("backward: loss must be a defined scalar");
  auto root = loss.node();
  if (!root->requires_grad) return;

  // Collect the reachable tracked subgraph, then replay in reverse creation
  // order (a valid topological order: an op's id exceeds its parents').
  std::vector<std::shared_ptr<TensorNode>> nodes;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::shared_ptr<TensorNode>> stack{root};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& p : n->parents)
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p);
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (const auto& n : nodes) {
    if (!n->backprop) continue;
    n->ensure_grad();
    n->backprop(*n);
  }
}

void zero_grad(const std::vector<Tensor>& params) {
  for (const Tensor& p : params) {
    auto n = p.node();
    n->grad.assign(n->value.size(), 0.0);
  }
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].numel(), 0.0);
      state.v[i].assign(params[i].numel(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state/param count mismatch");
  state.step += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto n = params[i].node();
    n->ensure_grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (size_t j = 0; j < n->value.size(); ++j) {
      double g = n->grad[j];
      m[j] = beta1 * m[j] + (1.0 - beta1) * g;
      v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      n->value[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace sbm::nn
