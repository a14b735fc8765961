// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gemm.h"

namespace transmask {

namespace {

using detail::gemm;

bool wants(const Tensor &t) { return t.requires_grad(); }
std::span<double> gbuf(const Tensor &t) { return t.impl()->grad_buffer(); }

void require_same(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()) + " differ");
  }
}

int norm_axis(int axis, int rank) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range");
  }
  return a;
}

// outer x n x inner decomposition around one axis.
struct AxisSplit {
  int64_t outer = 1, n = 1, inner = 1;
};
AxisSplit split_axis(const Shape &shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor &x, Fwd fwd, Deriv deriv) {
  auto in = x.data();
  std::vector<double> out(in.size());
  for (size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_result(x.shape(), std::move(out), {x},
                     [x, deriv](TensorImpl &self) {
                       auto g = gbuf(x);
                       auto in = x.data();
                       for (size_t i = 0; i < g.size(); ++i) {
                         g[i] += self.grad[i] * deriv(in[i], self.data[i]);
                       }
                     });
}

enum class BinOp { kAdd, kSub, kMul, kDiv };

Tensor binary(const Tensor &a, const Tensor &b, BinOp op, const char *name) {
  const bool a_scalar = a.numel() == 1 && b.numel() != 1;
  const bool b_scalar = b.numel() == 1 && a.numel() != 1;
  if (!a_scalar && !b_scalar) require_same(a, b, name);
  const Shape &shape = a_scalar ? b.shape() : a.shape();
  const size_t n = static_cast<size_t>(shape_numel(shape));
  auto ad = a.data();
  auto bd = b.data();
  auto av = [&](size_t i) { return a_scalar ? ad[0] : ad[i]; };
  auto bv = [&](size_t i) { return b_scalar ? bd[0] : bd[i]; };
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    switch (op) {
      case BinOp::kAdd: out[i] = av(i) + bv(i); break;
      case BinOp::kSub: out[i] = av(i) - bv(i); break;
      case BinOp::kMul: out[i] = av(i) * bv(i); break;
      case BinOp::kDiv: out[i] = av(i) / bv(i); break;
    }
  }
  return make_result(
      shape, std::move(out), {a, b},
      [a, b, op, a_scalar, b_scalar](TensorImpl &self) {
        auto ad = a.data();
        auto bd = b.data();
        const size_t n = self.grad.size();
        if (wants(a)) {
          auto ga = gbuf(a);
          for (size_t i = 0; i < n; ++i) {
            const double bi = b_scalar ? bd[0] : bd[i];
            double d = 0.0;
            switch (op) {
              case BinOp::kAdd:
              case BinOp::kSub: d = self.grad[i]; break;
              case BinOp::kMul: d = self.grad[i] * bi; break;
              case BinOp::kDiv: d = self.grad[i] / bi; break;
            }
            ga[a_scalar ? 0 : i] += d;
          }
        }
        if (wants(b)) {
          auto gb = gbuf(b);
          for (size_t i = 0; i < n; ++i) {
            const double ai = a_scalar ? ad[0] : ad[i];
            const double bi = b_scalar ? bd[0] : bd[i];
            double d = 0.0;
            switch (op) {
              case BinOp::kAdd: d = self.grad[i]; break;
              case BinOp::kSub: d = -self.grad[i]; break;
              case BinOp::kMul: d = self.grad[i] * ai; break;
              case BinOp::kDiv: d = -self.grad[i] * ai / (bi * bi); break;
            }
            gb[b_scalar ? 0 : i] += d;
          }
        }
      });
}

void check_row(const Tensor &x, const Tensor &row, const char *op) {
  if (row.rank() != 1 || row.dim(0) != x.dim(-1)) {
    throw DimensionError(std::string(op) + ": row " + shape_str(row.shape()) +
                         " does not match last axis of " +
                         shape_str(x.shape()));
  }
}

}  // namespace

Tensor add(const Tensor &a, const Tensor &b) {
  return binary(a, b, BinOp::kAdd, "add");
}
Tensor sub(const Tensor &a, const Tensor &b) {
  return binary(a, b, BinOp::kSub, "sub");
}
Tensor mul(const Tensor &a, const Tensor &b) {
  return binary(a, b, BinOp::kMul, "mul");
}
Tensor div(const Tensor &a, const Tensor &b) {
  return binary(a, b, BinOp::kDiv, "div");
}

Tensor scale(const Tensor &x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor &x, double value) {
  return unary(
      x, [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Tensor add_row(const Tensor &x, const Tensor &b) {
  check_row(x, b, "add_row");
  const int64_t d = b.numel();
  auto xd = x.data();
  auto bd = b.data();
  std::vector<double> out(xd.size());
  for (size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] + bd[i % d];
  return make_result(x.shape(), std::move(out), {x, b},
                     [x, b, d](TensorImpl &self) {
                       if (wants(x)) {
                         auto g = gbuf(x);
                         for (size_t i = 0; i < g.size(); ++i) {
                           g[i] += self.grad[i];
                         }
                       }
                       if (wants(b)) {
                         auto g = gbuf(b);
                         for (size_t i = 0; i < self.grad.size(); ++i) {
                           g[i % d] += self.grad[i];
                         }
                       }
                     });
}

Tensor mul_row(const Tensor &x, const Tensor &g) {
  check_row(x, g, "mul_row");
  const int64_t d = g.numel();
  auto xd = x.data();
  auto gd = g.data();
  std::vector<double> out(xd.size());
  for (size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] * gd[i % d];
  return make_result(x.shape(), std::move(out), {x, g},
                     [x, g, d](TensorImpl &self) {
                       auto xd = x.data();
                       auto gd = g.data();
                       if (wants(x)) {
                         auto gx = gbuf(x);
                         for (size_t i = 0; i < gx.size(); ++i) {
                           gx[i] += self.grad[i] * gd[i % d];
                         }
                       }
                       if (wants(g)) {
                         auto gg = gbuf(g);
                         for (size_t i = 0; i < self.grad.size(); ++i) {
                           gg[i % d] += self.grad[i] * xd[i];
                         }
                       }
                     });
}

Tensor sigmoid(const Tensor &x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor &x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor &x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor &x) {
  static const double kC = std::sqrt(2.0 / std::numbers::pi);
  return unary(
      x,
      [](double v) {
        return 0.5 * v * (1.0 + std::tanh(kC * (v + 0.044715 * v * v * v)));
      },
      [](double v, double) {
        const double u = kC * (v + 0.044715 * v * v * v);
        const double t = std::tanh(u);
        const double du = kC * (1.0 + 3.0 * 0.044715 * v * v);
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
      });
}

Tensor log(const Tensor &x) {
  return unary(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor sum(const Tensor &x) {
  auto xd = x.data();
  const double s = std::accumulate(xd.begin(), xd.end(), 0.0);
  return make_result({1}, {s}, {x}, [x](TensorImpl &self) {
    auto g = gbuf(x);
    for (double &v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor &x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) +
                         " by " + shape_str(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<size_t>(m * n));
  gemm(false, false, m, n, k, a.data().data(), b.data().data(), out.data(),
       false);
  return make_result({m, n}, std::move(out), {a, b},
                     [a, b, m, n, k](TensorImpl &self) {
                       if (wants(a)) {
                         gemm(false, true, m, k, n, self.grad.data(),
                              b.data().data(), gbuf(a).data(), true);
                       }
                       if (wants(b)) {
                         gemm(true, false, k, n, m, a.data().data(),
                              self.grad.data(), gbuf(b).data(), true);
                       }
                     });
}

Tensor bmm(const Tensor &a, const Tensor &b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(1)) {
    throw DimensionError("bmm: cannot multiply " + shape_str(a.shape()) +
                         " by " + shape_str(b.shape()));
  }
  const int64_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<double> out(static_cast<size_t>(batch * m * n));
  for (int64_t i = 0; i < batch; ++i) {
    gemm(false, false, m, n, k, a.data().data() + i * m * k,
         b.data().data() + i * k * n, out.data() + i * m * n, false);
  }
  return make_result(
      {batch, m, n}, std::move(out), {a, b},
      [a, b, batch, m, n, k](TensorImpl &self) {
        for (int64_t i = 0; i < batch; ++i) {
          const double *go = self.grad.data() + i * m * n;
          if (wants(a)) {
            gemm(false, true, m, k, n, go, b.data().data() + i * k * n,
                 gbuf(a).data() + i * m * k, true);
          }
          if (wants(b)) {
            gemm(true, false, k, n, m, a.data().data() + i * m * k, go,
                 gbuf(b).data() + i * k * n, true);
          }
        }
      });
}

Tensor transpose(const Tensor &x) {
  if (x.rank() != 2) {
    throw DimensionError("transpose expects a 2-D tensor, got " +
                         shape_str(x.shape()));
  }
  return permute(x, {1, 0});
}

Tensor permute(const Tensor &x, const std::vector<int> &perm) {
  const int r = x.rank();
  if (static_cast<int>(perm.size()) != r) {
    throw DimensionError("permute: permutation rank does not match " +
                         shape_str(x.shape()));
  }
  std::vector<int> seen(r, 0);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[p]++) {
      throw DimensionError("permute: invalid permutation");
    }
  }
  const Shape &in_shape = x.shape();
  Shape out_shape(r);
  std::vector<int64_t> in_strides(r, 1);
  for (int i = r - 2; i >= 0; --i) {
    in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
  }
  // Stride in the input for each output axis.
  std::vector<int64_t> src_stride(r);
  for (int i = 0; i < r; ++i) {
    out_shape[i] = in_shape[perm[i]];
    src_stride[i] = in_strides[perm[i]];
  }
  // Maps every output flat index to its input flat index.
  auto gather = [out_shape, src_stride, r](auto &&visit) {
    std::vector<int64_t> idx(r, 0);
    const int64_t total = shape_numel(out_shape);
    const int64_t last_extent = out_shape[r - 1];
    const int64_t last_stride = src_stride[r - 1];
    int64_t src = 0;
    for (int64_t o = 0; o < total; o += last_extent) {
      for (int64_t j = 0; j < last_extent; ++j) {
        visit(o + j, src + j * last_stride);
      }
      for (int ax = r - 2; ax >= 0; --ax) {
        src += src_stride[ax];
        if (++idx[ax] < out_shape[ax]) break;
        src -= src_stride[ax] * out_shape[ax];
        idx[ax] = 0;
      }
    }
  };
  auto xd = x.data();
  std::vector<double> out(xd.size());
  if (r == 0) return x;
  gather([&](int64_t o, int64_t s) { out[o] = xd[s]; });
  return make_result(out_shape, std::move(out), {x},
                     [x, gather](TensorImpl &self) {
                       auto g = gbuf(x);
                       gather([&](int64_t o, int64_t s) {
                         g[s] += self.grad[o];
                       });
                     });
}

Tensor reshape(const Tensor &x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) +
                         " as " + shape_str(shape));
  }
  auto xd = x.data();
  return make_result(std::move(shape),
                     std::vector<double>(xd.begin(), xd.end()), {x},
                     [x](TensorImpl &self) {
                       auto g = gbuf(x);
                       for (size_t i = 0; i < g.size(); ++i) {
                         g[i] += self.grad[i];
                       }
                     });
}

Tensor narrow(const Tensor &x, int axis, int64_t start, int64_t length) {
  axis = norm_axis(axis, x.rank());
  const AxisSplit s = split_axis(x.shape(), axis);
  if (start < 0 || length <= 0 || start + length > s.n) {
    throw DimensionError("narrow: range [" + std::to_string(start) + ", " +
                         std::to_string(start + length) +
                         ") outside axis of " + shape_str(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  auto xd = x.data();
  std::vector<double> out(static_cast<size_t>(s.outer * length * s.inner));
  for (int64_t o = 0; o < s.outer; ++o) {
    const double *src = xd.data() + (o * s.n + start) * s.inner;
    std::copy(src, src + length * s.inner,
              out.begin() + o * length * s.inner);
  }
  return make_result(std::move(shape), std::move(out), {x},
                     [x, s, start, length](TensorImpl &self) {
                       auto g = gbuf(x);
                       for (int64_t o = 0; o < s.outer; ++o) {
                         double *dst = g.data() + (o * s.n + start) * s.inner;
                         const double *src =
                             self.grad.data() + o * length * s.inner;
                         for (int64_t i = 0; i < length * s.inner; ++i) {
                           dst[i] += src[i];
                         }
                       }
                     });
}

Tensor pad(const Tensor &x, int axis, int64_t before, int64_t after) {
  axis = norm_axis(axis, x.rank());
  if (before < 0 || after < 0) throw DimensionError("pad: negative padding");
  if (before == 0 && after == 0) return x;
  const AxisSplit s = split_axis(x.shape(), axis);
  const int64_t n_out = s.n + before + after;
  Shape shape = x.shape();
  shape[axis] = n_out;
  auto xd = x.data();
  std::vector<double> out(static_cast<size_t>(s.outer * n_out * s.inner), 0.0);
  for (int64_t o = 0; o < s.outer; ++o) {
    const double *src = xd.data() + o * s.n * s.inner;
    std::copy(src, src + s.n * s.inner,
              out.begin() + (o * n_out + before) * s.inner);
  }
  return make_result(std::move(shape), std::move(out), {x},
                     [x, s, before, n_out](TensorImpl &self) {
                       auto g = gbuf(x);
                       for (int64_t o = 0; o < s.outer; ++o) {
                         const double *src =
                             self.grad.data() + (o * n_out + before) * s.inner;
                         double *dst = g.data() + o * s.n * s.inner;
                         for (int64_t i = 0; i < s.n * s.inner; ++i) {
                           dst[i] += src[i];
                         }
                       }
                     });
}

Tensor concat(const std::vector<Tensor> &parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  axis = norm_axis(axis, parts[0].rank());
  Shape shape = parts[0].shape();
  int64_t total = 0;
  for (const Tensor &p : parts) {
    Shape a = p.shape();
    if (static_cast<int>(a.size()) != static_cast<int>(shape.size())) {
      throw DimensionError("concat: rank mismatch");
    }
    a[axis] = shape[axis];
    if (a != shape) {
      throw DimensionError("concat: " + shape_str(p.shape()) +
                           " incompatible with " + shape_str(parts[0].shape()));
    }
    total += p.dim(axis);
  }
  const AxisSplit s0 = split_axis(shape, axis);
  shape[axis] = total;
  std::vector<double> out(static_cast<size_t>(s0.outer * total * s0.inner));
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const Tensor &p : parts) {
    offsets.push_back(off);
    const int64_t n = p.dim(axis);
    auto pd = p.data();
    for (int64_t o = 0; o < s0.outer; ++o) {
      std::copy(pd.begin() + o * n * s0.inner,
                pd.begin() + (o + 1) * n * s0.inner,
                out.begin() + (o * total + off) * s0.inner);
    }
    off += n;
  }
  return make_result(
      std::move(shape), std::move(out), parts,
      [parts, offsets, axis, total, s0](TensorImpl &self) {
        for (size_t k = 0; k < parts.size(); ++k) {
          if (!wants(parts[k])) continue;
          const int64_t n = parts[k].dim(axis);
          auto g = gbuf(parts[k]);
          for (int64_t o = 0; o < s0.outer; ++o) {
            const double *src =
                self.grad.data() + (o * total + offsets[k]) * s0.inner;
            double *dst = g.data() + o * n * s0.inner;
            for (int64_t i = 0; i < n * s0.inner; ++i) dst[i] += src[i];
          }
        }
      });
}

Tensor stack(const std::vector<Tensor> &parts) {
  if (parts.empty()) throw DimensionError("stack: no inputs");
  std::vector<Tensor> lifted;
  lifted.reserve(parts.size());
  for (const Tensor &p : parts) {
    Shape s = p.shape();
    s.insert(s.begin(), 1);
    lifted.push_back(reshape(p, s));
  }
  return concat(lifted, 0);
}

Tensor select(const Tensor &x, int64_t index) {
  if (x.rank() < 2) throw DimensionError("select needs rank >= 2");
  Tensor row = narrow(x, 0, index, 1);
  Shape s(x.shape().begin() + 1, x.shape().end());
  return reshape(row, s);
}

Tensor softmax(const Tensor &x, int axis) {
  axis = norm_axis(axis, x.rank());
  const AxisSplit s = split_axis(x.shape(), axis);
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t in = 0; in < s.inner; ++in) {
      const int64_t base = o * s.n * s.inner + in;
      double mx = xd[base];
      for (int64_t j = 1; j < s.n; ++j) mx = std::max(mx, xd[base + j * s.inner]);
      double z = 0.0;
      for (int64_t j = 0; j < s.n; ++j) {
        const double e = std::exp(xd[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        z += e;
      }
      for (int64_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= z;
    }
  }
  return make_result(x.shape(), std::move(out), {x}, [x, s](TensorImpl &self) {
    auto g = gbuf(x);
    for (int64_t o = 0; o < s.outer; ++o) {
      for (int64_t in = 0; in < s.inner; ++in) {
        const int64_t base = o * s.n * s.inner + in;
        double dot = 0.0;
        for (int64_t j = 0; j < s.n; ++j) {
          const int64_t i = base + j * s.inner;
          dot += self.grad[i] * self.data[i];
        }
        for (int64_t j = 0; j < s.n; ++j) {
          const int64_t i = base + j * s.inner;
          g[i] += self.data[i] * (self.grad[i] - dot);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias,
                  double eps) {
  check_row(x, gain, "layer_norm");
  check_row(x, bias, "layer_norm");
  const int64_t d = x.dim(-1);
  const int64_t rows = x.numel() / d;
  auto xd = x.data();
  auto gd = gain.data();
  auto bd = bias.data();
  std::vector<double> out(xd.size());
  auto xhat = std::make_shared<std::vector<double>>(xd.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const double *row = xd.data() + r * d;
    double mu = 0.0;
    for (int64_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (int64_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int64_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gd[j] + bd[j];
    }
  }
  return make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [x, gain, bias, xhat, inv_std, d, rows](TensorImpl &self) {
        auto gd = gain.data();
        const bool gx = wants(x), gg = wants(gain), gb = wants(bias);
        std::span<double> dx, dg, db;
        if (gx) dx = gbuf(x);
        if (gg) dg = gbuf(gain);
        if (gb) db = gbuf(bias);
        std::vector<double> dyg(d);
        for (int64_t r = 0; r < rows; ++r) {
          const double *dy = self.grad.data() + r * d;
          const double *h = xhat->data() + r * d;
          double m1 = 0.0, m2 = 0.0;
          for (int64_t j = 0; j < d; ++j) {
            if (gg) dg[j] += dy[j] * h[j];
            if (gb) db[j] += dy[j];
            dyg[j] = dy[j] * gd[j];
            m1 += dyg[j];
            m2 += dyg[j] * h[j];
          }
          if (!gx) continue;
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          const double is = (*inv_std)[r];
          for (int64_t j = 0; j < d; ++j) {
            dx[r * d + j] += is * (dyg[j] - m1 - h[j] * m2);
          }
        }
      });
}

Tensor global_layer_norm(const Tensor &x, const Tensor &gain,
                         const Tensor &bias, double eps) {
  const int64_t c = x.dim(0);
  if (gain.rank() != 1 || gain.dim(0) != c || bias.shape() != gain.shape()) {
    throw DimensionError("global_layer_norm: gain/bias " +
                         shape_str(gain.shape()) + " do not match channels of " +
                         shape_str(x.shape()));
  }
  const int64_t per = x.numel() / c;
  const double n = static_cast<double>(x.numel());
  auto xd = x.data();
  double mu = std::accumulate(xd.begin(), xd.end(), 0.0) / n;
  double var = 0.0;
  for (double v : xd) var += (v - mu) * (v - mu);
  var /= n;
  const double is = 1.0 / std::sqrt(var + eps);
  auto xhat = std::make_shared<std::vector<double>>(xd.size());
  std::vector<double> out(xd.size());
  auto gd = gain.data();
  auto bd = bias.data();
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t i = 0; i < per; ++i) {
      const int64_t k = ch * per + i;
      (*xhat)[k] = (xd[k] - mu) * is;
      out[k] = (*xhat)[k] * gd[ch] + bd[ch];
    }
  }
  return make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [x, gain, bias, xhat, is, c, per, n](TensorImpl &self) {
        auto gd = gain.data();
        std::vector<double> dyg(self.grad.size());
        double m1 = 0.0, m2 = 0.0;
        const bool gg = wants(gain), gb = wants(bias);
        std::span<double> dg, db;
        if (gg) dg = gbuf(gain);
        if (gb) db = gbuf(bias);
        for (int64_t ch = 0; ch < c; ++ch) {
          for (int64_t i = 0; i < per; ++i) {
            const int64_t k = ch * per + i;
            const double dy = self.grad[k];
            if (gg) dg[ch] += dy * (*xhat)[k];
            if (gb) db[ch] += dy;
            dyg[k] = dy * gd[ch];
            m1 += dyg[k];
            m2 += dyg[k] * (*xhat)[k];
          }
        }
        if (!wants(x)) return;
        m1 /= n;
        m2 /= n;
        auto dx = gbuf(x);
        for (size_t k = 0; k < dyg.size(); ++k) {
          dx[k] += is * (dyg[k] - m1 - (*xhat)[k] * m2);
        }
      });
}

Tensor linear(const Tensor &x, const Tensor &w, const Tensor &b) {
  if (x.rank() == 1) {
    Tensor y = linear(reshape(x, {1, x.dim(0)}), w, b);
    return reshape(y, {w.dim(1)});
  }
  return add_row(matmul(x, w), b);
}

// ---------------------------------------------------------------------------
// Convolutions via im2col + GEMM.

Tensor conv1d(const Tensor &x, const Tensor &w, int64_t stride,
              const Tensor &bias) {
  if (x.rank() != 2 || w.rank() != 3 || w.dim(1) != x.dim(0)) {
    throw DimensionError("conv1d: input " + shape_str(x.shape()) +
                         " incompatible with kernel " + shape_str(w.shape()));
  }
  if (stride <= 0) throw DimensionError("conv1d: stride must be positive");
  const int64_t cin = x.dim(0), len = x.dim(1);
  const int64_t cout = w.dim(0), k = w.dim(2);
  if (len < k) {
    throw InputTooShortError("conv1d: input length " + std::to_string(len) +
                             " shorter than kernel " + std::to_string(k));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw DimensionError("conv1d: bias " + shape_str(bias.shape()) +
                         " does not match " + std::to_string(cout) +
                         " output channels");
  }
  const int64_t lout = (len - k) / stride + 1;
  const int64_t rows = cin * k;
  auto cols = std::make_shared<std::vector<double>>(rows * lout);
  auto xd = x.data();
  for (int64_t ci = 0; ci < cin; ++ci) {
    for (int64_t kk = 0; kk < k; ++kk) {
      double *dst = cols->data() + (ci * k + kk) * lout;
      const double *src = xd.data() + ci * len + kk;
      for (int64_t t = 0; t < lout; ++t) dst[t] = src[t * stride];
    }
  }
  std::vector<double> out(static_cast<size_t>(cout * lout));
  gemm(false, false, cout, lout, rows, w.data().data(), cols->data(),
       out.data(), false);
  if (bias.defined()) {
    auto bd = bias.data();
    for (int64_t co = 0; co < cout; ++co) {
      for (int64_t t = 0; t < lout; ++t) out[co * lout + t] += bd[co];
    }
  }
  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      {cout, lout}, std::move(out), inputs,
      [x, w, bias, cols, cin, len, cout, k, lout, rows,
       stride](TensorImpl &self) {
        if (wants(w)) {
          gemm(false, true, cout, rows, lout, self.grad.data(), cols->data(),
               gbuf(w).data(), true);
        }
        if (bias.defined() && wants(bias)) {
          auto gb = gbuf(bias);
          for (int64_t co = 0; co < cout; ++co) {
            for (int64_t t = 0; t < lout; ++t) {
              gb[co] += self.grad[co * lout + t];
            }
          }
        }
        if (wants(x)) {
          std::vector<double> dcols(static_cast<size_t>(rows * lout));
          gemm(true, false, rows, lout, cout, w.data().data(),
               self.grad.data(), dcols.data(), false);
          auto gx = gbuf(x);
          for (int64_t ci = 0; ci < cin; ++ci) {
            for (int64_t kk = 0; kk < k; ++kk) {
              const double *src = dcols.data() + (ci * k + kk) * lout;
              double *dst = gx.data() + ci * len + kk;
              for (int64_t t = 0; t < lout; ++t) dst[t * stride] += src[t];
            }
          }
        }
      });
}

Tensor conv_transpose1d(const Tensor &x, const Tensor &w, int64_t stride) {
  if (x.rank() != 2 || w.rank() != 3 || w.dim(0) != x.dim(0)) {
    throw DimensionError("conv_transpose1d: input " + shape_str(x.shape()) +
                         " incompatible with kernel " + shape_str(w.shape()));
  }
  if (stride <= 0) {
    throw DimensionError("conv_transpose1d: stride must be positive");
  }
  const int64_t cin = x.dim(0), t_in = x.dim(1);
  const int64_t cout = w.dim(1), k = w.dim(2);
  const int64_t lout = (t_in - 1) * stride + k;
  const int64_t rows = cout * k;
  // cols[Cout*K, T] = W_r^T x with W_r = w viewed as [Cin, Cout*K].
  std::vector<double> cols(static_cast<size_t>(rows * t_in));
  gemm(true, false, rows, t_in, cin, w.data().data(), x.data().data(),
       cols.data(), false);
  std::vector<double> out(static_cast<size_t>(cout * lout), 0.0);
  for (int64_t co = 0; co < cout; ++co) {
    for (int64_t kk = 0; kk < k; ++kk) {
      const double *src = cols.data() + (co * k + kk) * t_in;
      double *dst = out.data() + co * lout + kk;
      for (int64_t t = 0; t < t_in; ++t) dst[t * stride] += src[t];
    }
  }
  return make_result(
      {cout, lout}, std::move(out), {x, w},
      [x, w, cin, t_in, cout, k, lout, rows, stride](TensorImpl &self) {
        std::vector<double> dcols(static_cast<size_t>(rows * t_in));
        for (int64_t co = 0; co < cout; ++co) {
          for (int64_t kk = 0; kk < k; ++kk) {
            double *dst = dcols.data() + (co * k + kk) * t_in;
            const double *src = self.grad.data() + co * lout + kk;
            for (int64_t t = 0; t < t_in; ++t) dst[t] = src[t * stride];
          }
        }
        if (wants(x)) {
          gemm(false, false, cin, t_in, rows, w.data().data(), dcols.data(),
               gbuf(x).data(), true);
        }
        if (wants(w)) {
          gemm(false, true, cin, rows, t_in, x.data().data(), dcols.data(),
               gbuf(w).data(), true);
        }
      });
}

Tensor conv2d(const Tensor &x, const Tensor &w, int64_t padding,
              const Tensor &bias) {
  if (x.rank() != 3 || w.rank() != 4 || w.dim(1) != x.dim(0) ||
      w.dim(2) != w.dim(3)) {
    throw DimensionError("conv2d: input " + shape_str(x.shape()) +
                         " incompatible with kernel " + shape_str(w.shape()));
  }
  if (padding < 0) throw DimensionError("conv2d: negative padding");
  const int64_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int64_t cout = w.dim(0), k = w.dim(2);
  if (h + 2 * padding < k || wd + 2 * padding < k) {
    throw InputTooShortError("conv2d: padded input " + shape_str(x.shape()) +
                             " smaller than kernel " + std::to_string(k));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw DimensionError("conv2d: bias " + shape_str(bias.shape()) +
                         " does not match output channels");
  }
  const int64_t ho = h + 2 * padding - k + 1;
  const int64_t wo = wd + 2 * padding - k + 1;
  const int64_t rows = cin * k * k;
  const int64_t plane = ho * wo;
  auto cols = std::make_shared<std::vector<double>>(rows * plane, 0.0);
  auto xd = x.data();
  // cols[(ci,ky,kx), (oy,ox)] = x[ci, oy+ky-p, ox+kx-p]
  for (int64_t ci = 0; ci < cin; ++ci) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        double *dst = cols->data() + ((ci * k + ky) * k + kx) * plane;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const int64_t iy = oy + ky - padding;
          if (iy < 0 || iy >= h) continue;
          for (int64_t ox = 0; ox < wo; ++ox) {
            const int64_t ix = ox + kx - padding;
            if (ix < 0 || ix >= wd) continue;
            dst[oy * wo + ox] = xd[(ci * h + iy) * wd + ix];
          }
        }
      }
    }
  }
  std::vector<double> out(static_cast<size_t>(cout * plane));
  gemm(false, false, cout, plane, rows, w.data().data(), cols->data(),
       out.data(), false);
  if (bias.defined()) {
    auto bd = bias.data();
    for (int64_t co = 0; co < cout; ++co) {
      for (int64_t i = 0; i < plane; ++i) out[co * plane + i] += bd[co];
    }
  }
  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      {cout, ho, wo}, std::move(out), inputs,
      [x, w, bias, cols, cin, h, wd, cout, k, ho, wo, rows, plane,
       padding](TensorImpl &self) {
        if (wants(w)) {
          gemm(false, true, cout, rows, plane, self.grad.data(), cols->data(),
               gbuf(w).data(), true);
        }
        if (bias.defined() && wants(bias)) {
          auto gb = gbuf(bias);
          for (int64_t co = 0; co < cout; ++co) {
            for (int64_t i = 0; i < plane; ++i) {
              gb[co] += self.grad[co * plane + i];
            }
          }
        }
        if (!wants(x)) return;
        std::vector<double> dcols(static_cast<size_t>(rows * plane));
        gemm(true, false, rows, plane, cout, w.data().data(),
             self.grad.data(), dcols.data(), false);
        auto gx = gbuf(x);
        for (int64_t ci = 0; ci < cin; ++ci) {
          for (int64_t ky = 0; ky < k; ++ky) {
            for (int64_t kx = 0; kx < k; ++kx) {
              const double *src =
                  dcols.data() + ((ci * k + ky) * k + kx) * plane;
              for (int64_t oy = 0; oy < ho; ++oy) {
                const int64_t iy = oy + ky - padding;
                if (iy < 0 || iy >= h) continue;
                for (int64_t ox = 0; ox < wo; ++ox) {
                  const int64_t ix = ox + kx - padding;
                  if (ix < 0 || ix >= wd) continue;
                  gx[(ci * h + iy) * wd + ix] += src[oy * wo + ox];
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------

LstmState lstm_step_projected(const Tensor &x_proj, const Tensor &h,
                              const Tensor &c, const LstmWeights &w) {
  const int64_t hid = w.hidden_size();
  if (w.w_hh.rank() != 2 || w.w_hh.dim(1) != 4 * hid ||
      w.bias.numel() != 4 * hid) {
    throw DimensionError("lstm: recurrent weights " +
                         shape_str(w.w_hh.shape()) + " / bias " +
                         shape_str(w.bias.shape()) + " are inconsistent");
  }
  if (h.shape() != c.shape() || h.dim(-1) != hid) {
    throw DimensionError("lstm: state shapes " + shape_str(h.shape()) + ", " +
                         shape_str(c.shape()) + " do not match hidden size " +
                         std::to_string(hid));
  }
  const bool vec = h.rank() == 1;
  Tensor hm = vec ? reshape(h, {1, hid}) : h;
  Tensor cm = vec ? reshape(c, {1, hid}) : c;
  Tensor xp = x_proj.rank() == 1 ? reshape(x_proj, {1, 4 * hid}) : x_proj;
  if (xp.shape() != Shape{hm.dim(0), 4 * hid}) {
    throw DimensionError("lstm: projected input " + shape_str(x_proj.shape()) +
                         " does not match state " + shape_str(h.shape()));
  }
  Tensor gates = add_row(add(xp, matmul(hm, w.w_hh)), w.bias);
  Tensor i = sigmoid(narrow(gates, 1, 0, hid));
  Tensor f = sigmoid(narrow(gates, 1, hid, hid));
  Tensor g = tanh(narrow(gates, 1, 2 * hid, hid));
  Tensor o = sigmoid(narrow(gates, 1, 3 * hid, hid));
  Tensor c_next = add(mul(f, cm), mul(i, g));
  Tensor h_next = mul(o, tanh(c_next));
  if (vec) {
    return {reshape(h_next, {hid}), reshape(c_next, {hid})};
  }
  return {h_next, c_next};
}

LstmState lstm_step(const Tensor &x, const Tensor &h, const Tensor &c,
                    const LstmWeights &w) {
  if (x.dim(-1) != w.input_size() || w.w_ih.dim(1) != 4 * w.hidden_size()) {
    throw DimensionError("lstm: input " + shape_str(x.shape()) +
                         " incompatible with w_ih " + shape_str(w.w_ih.shape()));
  }
  Tensor xm = x.rank() == 1 ? reshape(x, {1, x.dim(0)}) : x;
  return lstm_step_projected(matmul(xm, w.w_ih), h, c, w);
}

}  // namespace transmask
