// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/tensor.h"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

namespace transmask {

namespace {
std::atomic<Precision> g_precision{Precision::kFloat32};
thread_local bool t_grad_enabled = true;
}  // namespace

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

int64_t shape_numel(const Shape &shape) {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  return n;
}

Precision precision() { return g_precision.load(std::memory_order_relaxed); }
void set_precision(Precision p) { g_precision.store(p); }

PrecisionScope::PrecisionScope(Precision p) : saved_(precision()) {
  set_precision(p);
}
PrecisionScope::~PrecisionScope() { set_precision(saved_); }

void quantize(std::span<double> values) {
  if (precision() != Precision::kFloat32) return;
  for (double &v : values) v = static_cast<double>(static_cast<float>(v));
}

double quantize(double v) {
  if (precision() != Precision::kFloat32) return v;
  return static_cast<double>(static_cast<float>(v));
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = saved_; }

std::span<double> TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

static void check_shape(const Shape &shape) {
  for (int64_t e : shape) {
    if (e <= 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           shape_str(shape));
    }
  }
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  check_shape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(static_cast<size_t>(shape_numel(shape)), quantize(value));
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  check_shape(shape);
  if (static_cast<int64_t>(values.size()) != shape_numel(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  quantize(impl->data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape &Tensor::shape() const { return impl_->shape; }

int64_t Tensor::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(shape()));
  }
  return impl_->shape[static_cast<size_t>(axis)];
}

int Tensor::rank() const { return static_cast<int>(impl_->shape.size()); }
int64_t Tensor::numel() const {
  return static_cast<int64_t>(impl_->data.size());
}

std::span<const double> Tensor::data() const { return impl_->data; }
std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw DimensionError("index rank does not match shape " +
                         shape_str(shape()));
  }
  int64_t flat = 0;
  size_t a = 0;
  for (int64_t i : index) {
    const int64_t e = impl_->shape[a++];
    if (i < 0 || i >= e) throw DimensionError("index out of range");
    flat = flat * e + i;
  }
  return impl_->data[static_cast<size_t>(flat)];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool flag) {
  if (!impl_->is_leaf) {
    throw ContractError("requires_grad can only be changed on leaf tensors");
  }
  impl_->requires_grad = flag;
}
bool Tensor::is_leaf() const { return impl_->is_leaf; }
bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }
std::span<double> Tensor::mutable_grad() { return impl_->grad_buffer(); }
void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::detach() const { return clone_leaf(false); }

Tensor Tensor::clone_leaf(bool requires_grad) const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor make_result(Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs,
                   std::function<void(TensorImpl &)> backward) {
  if (static_cast<int64_t>(data.size()) != shape_numel(shape)) {
    throw DimensionError("op produced " + std::to_string(data.size()) +
                         " values for shape " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  quantize(impl->data);
  bool needs_grad = false;
  if (grad_enabled()) {
    for (const Tensor &t : inputs) needs_grad = needs_grad || t.requires_grad();
  }
  if (needs_grad) {
    impl->requires_grad = true;
    impl->is_leaf = false;
    impl->parents.reserve(inputs.size());
    for (const Tensor &t : inputs) {
      if (t.requires_grad()) impl->parents.push_back(t.impl_ptr());
    }
    impl->backward = std::move(backward);
  }
  return Tensor(std::move(impl));
}

void backward(const Tensor &loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape())
                                        : std::string("<undefined>")));
  }
  TensorImpl *root = loss.impl();
  if (!root->requires_grad) {
    throw ContractError("loss is not connected to any parameter");
  }

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long recurrences.
  std::vector<TensorImpl *> order;
  std::unordered_set<TensorImpl *> visited;
  std::vector<std::pair<TensorImpl *, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl *parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior buffers are allocated on first contribution; a node that
  // received none has nothing to propagate.
  for (TensorImpl *node : order) {
    if (!node->is_leaf) std::vector<double>().swap(node->grad);
  }
  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl *node = *it;
    if (node->is_leaf || node->grad.empty()) continue;
    if (node->backward) node->backward(*node);
    // Interior gradients are consumed exactly once.
    std::vector<double>().swap(node->grad);
  }
}

}  // namespace transmask
