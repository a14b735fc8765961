// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "transmask/errors.h"

namespace transmask {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape &shape);
int64_t shape_numel(const Shape &shape);

// Arithmetic mode. Values are always held in double storage; in kFloat32 mode
// every op output and every parameter update is rounded to the nearest
// float, and matrix products run in single precision.
enum class Precision { kFloat32, kFloat64 };

Precision precision();
void set_precision(Precision p);

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope &) = delete;
  PrecisionScope &operator=(const PrecisionScope &) = delete;

 private:
  Precision saved_;
};

// Rounds in place when running in kFloat32 mode.
void quantize(std::span<double> values);
double quantize(double v);

// Graph recording is per thread; inference workers run with it disabled.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool saved_;
};

struct TensorImpl;

// Shared handle to a node of the compute graph. Copies alias the same node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape &shape() const;
  int64_t dim(int axis) const;  // negative axes count from the back
  int rank() const;
  int64_t numel() const;

  std::span<const double> data() const;
  // Direct write access; meant for parameter initialisation and optimiser
  // updates on leaf tensors only.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();  // allocates zeros when absent
  void zero_grad();

  // Detached copy of the values.
  Tensor detach() const;
  Tensor clone_leaf(bool requires_grad) const;

  TensorImpl *impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl> &impl_ptr() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;

  friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>,
                            std::function<void(TensorImpl &)>);
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl &)> backward;

  std::span<double> grad_buffer();  // allocates zeros when absent
};

// Builds an op output. `data` is quantized according to the current
// precision. The backward closure reads `self.grad` and accumulates into the
// captured inputs; it is dropped when no input requires a gradient or
// recording is disabled.
Tensor make_result(Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs,
                   std::function<void(TensorImpl &)> backward);

// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
// calls; interior gradients are reset at the start of every sweep.
void backward(const Tensor &loss);

}  // namespace transmask
