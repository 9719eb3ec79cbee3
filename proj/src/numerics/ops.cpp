#include "dmvcr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmvcr/errors.hpp"

namespace dmvcr {
namespace {

using NodePtr = std::shared_ptr<detail::Node>;
using BackwardFn = std::function<void(detail::Node&)>;

Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                   std::vector<NodePtr> inputs, BackwardFn backward_fn) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
  auto node = std::make_shared<detail::Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = !NoGradGuard::active() && std::any_of(inputs.begin(), inputs.end(),
                                    [](const NodePtr& n) { return n->requires_grad; });
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor::wrap(std::move(node));
}

// Gradient buffer of an input, or nullptr when the input is not tracked.
double* grad_of(const NodePtr& n) { return n->requires_grad ? n->pending.data() : nullptr; }

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " + to_string(t.shape()));
  }
}

void require_axis(const Tensor& t, std::size_t axis, const char* op) {
  if (axis >= t.rank()) {
    throw IndexError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + to_string(t.shape()));
  }
}

// outer x extent x inner decomposition around one axis.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// Sum that does not depend on the order of `values` (sorts a scratch copy).
double ordered_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), n = a.dim(1), p = b.dim(1);
  if (b.dim(0) != n) {
    throw DimensionError("matmul: inner extents disagree for " + to_string(a.shape()) +
                         " x " + to_string(b.shape()));
  }
  std::vector<double> out(m * p, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * p;
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = ad[i * n + k];
      const double* brow = bd + k * p;
      for (std::size_t j = 0; j < p; ++j) row[j] += aik * brow[j];
    }
  }
  return make_result("matmul", {m, p}, std::move(out), {a.node_ptr(), b.node_ptr()},
                     [m, n, p](detail::Node& self) {
                       const auto& an = self.inputs[0];
                       const auto& bn = self.inputs[1];
                       const double* g = self.pending.data();
                       if (double* ga = grad_of(an)) {
                         // ga += g * b^T
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t k = 0; k < n; ++k) {
                             const double* brow = bn->data.data() + k * p;
                             const double* grow = g + i * p;
                             double acc = 0.0;
                             for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
                             ga[i * n + k] += acc;
                           }
                         }
                       }
                       if (double* gb = grad_of(bn)) {
                         // gb += a^T * g
                         for (std::size_t i = 0; i < m; ++i) {
                           const double* grow = g + i * p;
                           for (std::size_t k = 0; k < n; ++k) {
                             const double aik = an->data[i * n + k];
                             double* gbrow = gb + k * p;
                             for (std::size_t j = 0; j < p; ++j) gbrow[j] += aik * grow[j];
                           }
                         }
                       }
                     });
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("elementwise op on mismatched shapes " + to_string(a.shape()) +
                         " and " + to_string(b.shape()));
  }
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(ad.size());
  const char* name = "add";
  switch (op) {
    case ElementwiseOp::kAdd:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
      break;
    case ElementwiseOp::kSub:
      name = "sub";
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
      break;
    case ElementwiseOp::kMul:
      name = "mul";
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
      break;
  }
  return make_result(name, a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                     [op](detail::Node& self) {
                       const auto& an = self.inputs[0];
                       const auto& bn = self.inputs[1];
                       const auto& g = self.pending;
                       double* ga = grad_of(an);
                       double* gb = grad_of(bn);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         switch (op) {
                           case ElementwiseOp::kAdd:
                             if (ga) ga[i] += g[i];
                             if (gb) gb[i] += g[i];
                             break;
                           case ElementwiseOp::kSub:
                             if (ga) ga[i] += g[i];
                             if (gb) gb[i] -= g[i];
                             break;
                           case ElementwiseOp::kMul:
                             if (ga) ga[i] += g[i] * bn->data[i];
                             if (gb) gb[i] += g[i] * an->data[i];
                             break;
                         }
                       }
                     });
}

Tensor scale(const Tensor& x, double factor) {
  if (!std::isfinite(factor)) throw NumericError("scale: non-finite factor");
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  return make_result("scale", x.shape(), std::move(out), {x.node_ptr()},
                     [factor](detail::Node& self) {
                       double* gx = grad_of(self.inputs[0]);
                       for (std::size_t i = 0; i < self.pending.size(); ++i) {
                         gx[i] += self.pending[i] * factor;
                       }
                     });
}

Tensor activate(Activation kind, const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  if (kind == Activation::kSigmoid) {
    for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
  } else {
    for (double& v : out) v = std::tanh(v);
  }
  const char* name = kind == Activation::kSigmoid ? "sigmoid" : "tanh";
  return make_result(name, x.shape(), std::move(out), {x.node_ptr()},
                     [kind](detail::Node& self) {
                       double* gx = grad_of(self.inputs[0]);
                       const auto& y = self.data;
                       for (std::size_t i = 0; i < y.size(); ++i) {
                         const double d = kind == Activation::kSigmoid ? y[i] * (1.0 - y[i])
                                                                       : 1.0 - y[i] * y[i];
                         gx[i] += self.pending[i] * d;
                       }
                     });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  require_axis(x, axis, "softmax");
  const auto s = split_at(x.shape(), axis);
  if (s.extent == 0) throw DimensionError("softmax over an empty axis");
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  std::vector<double> scratch(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.extent * s.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.extent; ++k) mx = std::max(mx, xd[base + k * s.inner]);
      for (std::size_t k = 0; k < s.extent; ++k) {
        out[base + k * s.inner] = std::exp(xd[base + k * s.inner] - mx);
        scratch[k] = out[base + k * s.inner];
      }
      const double z = ordered_sum(scratch);
      for (std::size_t k = 0; k < s.extent; ++k) out[base + k * s.inner] /= z;
    }
  }
  return make_result("softmax", x.shape(), std::move(out), {x.node_ptr()},
                     [s](detail::Node& self) {
                       double* gx = grad_of(self.inputs[0]);
                       const auto& y = self.data;
                       const auto& g = self.pending;
                       for (std::size_t o = 0; o < s.outer; ++o) {
                         for (std::size_t in = 0; in < s.inner; ++in) {
                           const std::size_t base = o * s.extent * s.inner + in;
                           double dot = 0.0;
                           for (std::size_t k = 0; k < s.extent; ++k) {
                             dot += y[base + k * s.inner] * g[base + k * s.inner];
                           }
                           for (std::size_t k = 0; k < s.extent; ++k) {
                             const std::size_t idx = base + k * s.inner;
                             gx[idx] += y[idx] * (g[idx] - dot);
                           }
                         }
                       }
                     });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  require_axis(parts[0], axis, "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    bool ok = ps.size() == first.size();
    for (std::size_t d = 0; ok && d < ps.size(); ++d) ok = d == axis || ps[d] == first[d];
    if (!ok) {
      throw DimensionError("concat: " + to_string(ps) + " does not match " +
                           to_string(first) + " outside axis " + std::to_string(axis));
    }
    out_shape[axis] += ps[axis];
  }
  const auto os = split_at(out_shape, axis);
  std::vector<double> out(numel(out_shape));
  std::vector<std::size_t> offsets;
  std::vector<NodePtr> inputs;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t width = p.dim(axis) * os.inner;
    const auto pd = p.data();
    for (std::size_t o = 0; o < os.outer; ++o) {
      std::copy_n(pd.begin() + o * width, width,
                  out.begin() + o * os.extent * os.inner + offset);
    }
    offsets.push_back(offset);
    offset += width;
    inputs.push_back(p.node_ptr());
  }
  return make_result("concat", std::move(out_shape), std::move(out), std::move(inputs),
                     [os, offsets](detail::Node& self) {
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                         double* gp = grad_of(self.inputs[k]);
                         if (!gp) continue;
                         const std::size_t width = self.inputs[k]->data.size() / os.outer;
                         for (std::size_t o = 0; o < os.outer; ++o) {
                           const double* g = self.pending.data() + o * os.extent * os.inner +
                                             offsets[k];
                           for (std::size_t i = 0; i < width; ++i) gp[o * width + i] += g[i];
                         }
                       }
                     });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  require_axis(x, axis, "slice");
  if (begin > end || end > x.dim(axis)) {
    throw IndexError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for axis of extent " + std::to_string(x.dim(axis)));
  }
  const auto s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t width = (end - begin) * s.inner;
  const std::size_t start = begin * s.inner;
  const auto xd = x.data();
  std::vector<double> out(s.outer * width);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xd.begin() + o * s.extent * s.inner + start, width, out.begin() + o * width);
  }
  return make_result("slice", std::move(out_shape), std::move(out), {x.node_ptr()},
                     [s, width, start](detail::Node& self) {
                       double* gx = grad_of(self.inputs[0]);
                       for (std::size_t o = 0; o < s.outer; ++o) {
                         double* dst = gx + o * s.extent * s.inner + start;
                         const double* g = self.pending.data() + o * width;
                         for (std::size_t i = 0; i < width; ++i) dst[i] += g[i];
                       }
                     });
}

Tensor reduce(ReduceOp op, const Tensor& x, std::size_t axis) {
  require_axis(x, axis, "reduce");
  const auto s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const double factor = op == ReduceOp::kMean ? 1.0 / static_cast<double>(s.extent) : 1.0;
  if (op == ReduceOp::kMean && s.extent == 0) throw DimensionError("mean over an empty axis");
  const auto xd = x.data();
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.extent; ++k) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        out[o * s.inner + in] += xd[(o * s.extent + k) * s.inner + in];
      }
    }
  }
  if (op == ReduceOp::kMean) {
    for (double& v : out) v *= factor;
  }
  return make_result(op == ReduceOp::kMean ? "mean" : "sum", std::move(out_shape),
                     std::move(out), {x.node_ptr()}, [s, factor](detail::Node& self) {
                       double* gx = grad_of(self.inputs[0]);
                       for (std::size_t o = 0; o < s.outer; ++o) {
                         for (std::size_t k = 0; k < s.extent; ++k) {
                           for (std::size_t in = 0; in < s.inner; ++in) {
                             gx[(o * s.extent + k) * s.inner + in] +=
                                 self.pending[o * s.inner + in] * factor;
                           }
                         }
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_result("sum_all", {}, {total}, {x.node_ptr()}, [](detail::Node& self) {
    double* gx = grad_of(self.inputs[0]);
    const std::size_t n = self.inputs[0]->data.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += self.pending[0];
  });
}

Tensor cross_entropy_logits(const Tensor& logits, std::size_t gold) {
  if (logits.rank() != 1) {
    throw DimensionError("cross_entropy_logits expects a vector, got " +
                         to_string(logits.shape()));
  }
  const std::size_t classes = logits.dim(0);
  if (classes < 2) throw DimensionError("cross_entropy_logits needs at least 2 classes");
  if (gold >= classes) {
    throw IndexError("gold label " + std::to_string(gold) + " out of range for " +
                     std::to_string(classes) + " classes");
  }
  const auto z = logits.data();
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> e(classes);
  for (std::size_t c = 0; c < classes; ++c) e[c] = std::exp(z[c] - mx);
  std::vector<double> probs = e;
  std::vector<double> scratch = e;
  const double total = ordered_sum(scratch);
  for (double& p : probs) p /= total;
  const double loss = mx + std::log(total) - z[gold];
  return make_result("cross_entropy", {}, {loss}, {logits.node_ptr()},
                     [probs = std::move(probs), gold](detail::Node& self) {
                       double* gz = grad_of(self.inputs[0]);
                       const double g = self.pending[0];
                       for (std::size_t c = 0; c < probs.size(); ++c) {
                         gz[c] += g * (probs[c] - (c == gold ? 1.0 : 0.0));
                       }
                     });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  const auto xd = x.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xd[i * c + j];
  }
  return make_result("transpose", {c, r}, std::move(out), {x.node_ptr()},
                     [r, c](detail::Node& self) {
                       double* gx = grad_of(self.inputs[0]);
                       for (std::size_t i = 0; i < r; ++i) {
                         for (std::size_t j = 0; j < c; ++j) {
                           gx[i * c + j] += self.pending[j * r + i];
                         }
                       }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape " + to_string(x.shape()) + " to " + to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {x.node_ptr()},
                     [](detail::Node& self) {
                       double* gx = grad_of(self.inputs[0]);
                       for (std::size_t i = 0; i < self.pending.size(); ++i) {
                         gx[i] += self.pending[i];
                       }
                     });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_matrix(table, "gather_rows");
  const std::size_t rows = table.dim(0), width = table.dim(1);
  std::vector<std::size_t> index(ids.begin(), ids.end());
  std::vector<double> out(index.size() * width);
  const auto td = table.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) {
      throw IndexError("row " + std::to_string(index[i]) + " out of range for table with " +
                       std::to_string(rows) + " rows");
    }
    std::copy_n(td.begin() + index[i] * width, width, out.begin() + i * width);
  }
  const std::size_t count = index.size();
  return make_result("gather_rows", {count, width}, std::move(out), {table.node_ptr()},
                     [index = std::move(index), width](detail::Node& self) {
                       double* gt = grad_of(self.inputs[0]);
                       for (std::size_t i = 0; i < index.size(); ++i) {
                         for (std::size_t j = 0; j < width; ++j) {
                           gt[index[i] * width + j] += self.pending[i * width + j];
                         }
                       }
                     });
}

}  // namespace dmvcr
