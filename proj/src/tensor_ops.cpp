#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "ganduf/error.hpp"
#include "ganduf/tensor.hpp"

namespace ganduf::ad {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

namespace {

Tensor make_result(Shape shape, std::vector<double> data, std::vector<NodePtr> inputs,
                   std::function<void(Node&)> rule) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(rule);
    Tape::current().record(node);
  }
  return Tensor(std::move(node));
}

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;
  bool scalar_b = false;
};

std::vector<std::size_t> contiguous_strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

Broadcast plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  p.out.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw DimensionError(std::string(op) + ": shapes " + to_string(a) + " and " + to_string(b) +
                           " are not broadcast-compatible");
    }
    p.out[i] = std::max(pa[i], pb[i]);
  }
  auto sa = contiguous_strides(pa);
  auto sb = contiguous_strides(pb);
  p.stride_a.resize(rank);
  p.stride_b.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    p.stride_a[i] = pa[i] == 1 ? 0 : sa[i];
    p.stride_b[i] = pb[i] == 1 ? 0 : sb[i];
  }
  p.scalar_b = numel(b) == 1 && a == p.out;
  return p;
}

/// Calls f(out_index, a_index, b_index) for every output element.
template <typename F>
void for_each_pair(const Broadcast& p, F&& f) {
  const std::size_t n = numel(p.out);
  if (p.same) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  if (p.scalar_b) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, std::size_t{0});
    return;
  }
  const std::size_t rank = p.out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < n; ++o) {
    f(o, ia, ib);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      ia += p.stride_a[d];
      ib += p.stride_b[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.stride_a[d] * idx[d];
      ib -= p.stride_b[d] * idx[d];
      idx[d] = 0;
    }
  }
}

template <typename Fwd, typename Da, typename Db>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, Fwd fwd, Da da, Db db) {
  auto plan = plan_broadcast(a.shape(), b.shape(), op);
  std::vector<double> out(numel(plan.out));
  const auto& av = a.node()->data;
  const auto& bv = b.node()->data;
  for_each_pair(plan, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = fwd(av[i], bv[j]); });
  auto shape = plan.out;
  return make_result(std::move(shape), std::move(out), {a.node(), b.node()},
                     [plan, da, db](Node& self) {
                       Node& na = *self.inputs[0];
                       Node& nb = *self.inputs[1];
                       const auto& g = self.grad;
                       if (na.requires_grad) {
                         auto& ga = na.grad_buffer();
                         for_each_pair(plan, [&](std::size_t o, std::size_t i, std::size_t j) {
                           ga[i] += g[o] * da(na.data[i], nb.data[j]);
                         });
                       }
                       if (nb.requires_grad) {
                         auto& gb = nb.grad_buffer();
                         for_each_pair(plan, [&](std::size_t o, std::size_t i, std::size_t j) {
                           gb[j] += g[o] * db(na.data[i], nb.data[j]);
                         });
                       }
                     });
}

/// Elementwise map; `deriv(x, y)` returns dy/dx given input and output.
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  const auto& av = a.node()->data;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  return make_result(a.shape(), std::move(out), {a.node()}, [deriv](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& gi = in.grad_buffer();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i] * deriv(in.data[i], self.data[i]);
  });
}

/// Splits a shape around `axis` into (outer, extent, inner) loop sizes.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

void require_nhwc(const Tensor& t, const char* op) {
  if (t.rank() != 4) {
    throw DimensionError(std::string(op) + " expects NHWC input, got " + to_string(t.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                         " are not contraction-compatible");
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  Map(out.data(), m, n).noalias() = ConstMap(a.node()->data.data(), m, k) * ConstMap(b.node()->data.data(), k, n);
  return make_result({m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    ConstMap g(self.grad.data(), m, n);
    if (na.requires_grad) {
      Map(na.grad_buffer().data(), m, k).noalias() += g * ConstMap(nb.data.data(), k, n).transpose();
    }
    if (nb.requires_grad) {
      Map(nb.grad_buffer().data(), k, n).noalias() += ConstMap(na.data.data(), m, k).transpose() * g;
    }
  });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Tensor log(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: lo must not exceed hi");
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({}, {s}, {a.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& gi = in.grad_buffer();
    const double g = self.grad[0];
    for (auto& v : gi) v += g;
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum(const Tensor& a, std::size_t axis) {
  if (axis >= a.rank()) {
    throw DimensionError("sum: axis " + std::to_string(axis) + " out of range for " + to_string(a.shape()));
  }
  const auto sp = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  const auto& av = a.node()->data;
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t e = 0; e < sp.extent; ++e)
      for (std::size_t i = 0; i < sp.inner; ++i) out[o * sp.inner + i] += av[(o * sp.extent + e) * sp.inner + i];
  return make_result(std::move(out_shape), std::move(out), {a.node()}, [sp](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& gi = in.grad_buffer();
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t e = 0; e < sp.extent; ++e)
        for (std::size_t i = 0; i < sp.inner; ++i) gi[(o * sp.extent + e) * sp.inner + i] += self.grad[o * sp.inner + i];
  });
}

Tensor mean(const Tensor& a, std::size_t axis) {
  if (axis >= a.rank()) {
    throw DimensionError("mean: axis " + std::to_string(axis) + " out of range for " + to_string(a.shape()));
  }
  return scale(sum(a, axis), 1.0 / static_cast<double>(a.dim(axis)));
}

// ---------------------------------------------------------------------------
// Structural

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " + to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: shapes " + to_string(first) + " and " + to_string(s) +
                           " differ off the concatenation axis");
    }
    out_shape[axis] += s[axis];
  }
  const auto sp = split_axis(out_shape, axis);
  std::vector<double> out(numel(out_shape));
  std::vector<NodePtr> inputs;
  std::vector<std::size_t> extents;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t chunk = p.dim(axis) * sp.inner;
    const auto& pv = p.node()->data;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                  out.begin() + static_cast<std::ptrdiff_t>(o * sp.extent * sp.inner + offset));
    }
    offset += chunk;
    inputs.push_back(p.node());
    extents.push_back(p.dim(axis));
  }
  return make_result(std::move(out_shape), std::move(out), std::move(inputs), [sp, extents](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      Node& in = *self.inputs[k];
      const std::size_t chunk = extents[k] * sp.inner;
      if (in.requires_grad) {
        auto& gi = in.grad_buffer();
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < chunk; ++i) gi[o * chunk + i] += self.grad[o * sp.extent * sp.inner + offset + i];
      }
      offset += chunk;
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  return make_result(std::move(shape), a.node()->data, {a.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& gi = in.grad_buffer();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Image ops (NHWC)

namespace {

struct ConvGeometry {
  std::size_t batch, height, width, channels, k, out_channels;
  std::size_t rows() const { return batch * height * width; }
  std::size_t cols() const { return k * k * channels; }
};

void im2col(const ConvGeometry& g, const std::vector<double>& x, std::vector<double>& cols) {
  cols.assign(g.rows() * g.cols(), 0.0);
  const auto pad = static_cast<std::ptrdiff_t>(g.k / 2);
  const auto H = static_cast<std::ptrdiff_t>(g.height), W = static_cast<std::ptrdiff_t>(g.width);
  std::size_t r = 0;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::ptrdiff_t h = 0; h < H; ++h)
      for (std::ptrdiff_t w = 0; w < W; ++w, ++r) {
        double* row = cols.data() + r * g.cols();
        for (std::size_t kh = 0; kh < g.k; ++kh) {
          const std::ptrdiff_t sh = h + static_cast<std::ptrdiff_t>(kh) - pad;
          if (sh < 0 || sh >= H) continue;
          for (std::size_t kw = 0; kw < g.k; ++kw) {
            const std::ptrdiff_t sw = w + static_cast<std::ptrdiff_t>(kw) - pad;
            if (sw < 0 || sw >= W) continue;
            const double* src = x.data() + ((b * g.height + static_cast<std::size_t>(sh)) * g.width +
                                            static_cast<std::size_t>(sw)) * g.channels;
            std::copy_n(src, g.channels, row + (kh * g.k + kw) * g.channels);
          }
        }
      }
}

void col2im_accumulate(const ConvGeometry& g, const std::vector<double>& cols, std::vector<double>& dx) {
  const auto pad = static_cast<std::ptrdiff_t>(g.k / 2);
  const auto H = static_cast<std::ptrdiff_t>(g.height), W = static_cast<std::ptrdiff_t>(g.width);
  std::size_t r = 0;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::ptrdiff_t h = 0; h < H; ++h)
      for (std::ptrdiff_t w = 0; w < W; ++w, ++r) {
        const double* row = cols.data() + r * g.cols();
        for (std::size_t kh = 0; kh < g.k; ++kh) {
          const std::ptrdiff_t sh = h + static_cast<std::ptrdiff_t>(kh) - pad;
          if (sh < 0 || sh >= H) continue;
          for (std::size_t kw = 0; kw < g.k; ++kw) {
            const std::ptrdiff_t sw = w + static_cast<std::ptrdiff_t>(kw) - pad;
            if (sw < 0 || sw >= W) continue;
            double* dst = dx.data() + ((b * g.height + static_cast<std::size_t>(sh)) * g.width +
                                       static_cast<std::size_t>(sw)) * g.channels;
            const double* src = row + (kh * g.k + kw) * g.channels;
            for (std::size_t c = 0; c < g.channels; ++c) dst[c] += src[c];
          }
        }
      }
}

/// Per-axis interpolation taps for x2 bilinear upsampling.
struct Taps {
  std::vector<std::size_t> lo, hi;
  std::vector<double> w_lo, w_hi;
};

Taps upsample_taps(std::size_t in) {
  Taps t;
  const std::size_t out = 2 * in;
  t.lo.resize(out);
  t.hi.resize(out);
  t.w_lo.resize(out);
  t.w_hi.resize(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    src = std::max(src, 0.0);
    auto i0 = static_cast<std::size_t>(std::floor(src));
    i0 = std::min(i0, in - 1);
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const double f = src - static_cast<double>(i0);
    t.lo[o] = i0;
    t.hi[o] = i1;
    t.w_lo[o] = 1.0 - f;
    t.w_hi[o] = f;
  }
  return t;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel) {
  require_nhwc(input, "conv2d");
  if (kernel.rank() != 4 || kernel.dim(0) != kernel.dim(1) || kernel.dim(0) % 2 == 0 ||
      kernel.dim(2) != input.dim(3)) {
    throw DimensionError("conv2d: input " + to_string(input.shape()) + " and kernel " +
                         to_string(kernel.shape()) + " are incompatible");
  }
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), kernel.dim(0), kernel.dim(3)};
  std::vector<double> cols;
  im2col(g, input.node()->data, cols);
  std::vector<double> out(g.rows() * g.out_channels);
  Map(out.data(), g.rows(), g.out_channels).noalias() =
      ConstMap(cols.data(), g.rows(), g.cols()) * ConstMap(kernel.node()->data.data(), g.cols(), g.out_channels);
  return make_result({g.batch, g.height, g.width, g.out_channels}, std::move(out), {input.node(), kernel.node()},
                     [g](Node& self) {
                       Node& nx = *self.inputs[0];
                       Node& nk = *self.inputs[1];
                       ConstMap dout(self.grad.data(), g.rows(), g.out_channels);
                       if (nk.requires_grad) {
                         std::vector<double> cols;
                         im2col(g, nx.data, cols);
                         Map(nk.grad_buffer().data(), g.cols(), g.out_channels).noalias() +=
                             ConstMap(cols.data(), g.rows(), g.cols()).transpose() * dout;
                       }
                       if (nx.requires_grad) {
                         std::vector<double> dcols(g.rows() * g.cols());
                         Map(dcols.data(), g.rows(), g.cols()).noalias() =
                             dout * ConstMap(nk.data.data(), g.cols(), g.out_channels).transpose();
                         col2im_accumulate(g, dcols, nx.grad_buffer());
                       }
                     });
}

Tensor avg_pool2(const Tensor& input) {
  require_nhwc(input, "avg_pool2");
  const auto B = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
  if (H % 2 || W % 2) throw DimensionError("avg_pool2: odd spatial extent in " + to_string(input.shape()));
  const auto Ho = H / 2, Wo = W / 2;
  std::vector<double> out(B * Ho * Wo * C, 0.0);
  const auto& x = input.node()->data;
  auto at = [&](std::size_t b, std::size_t h, std::size_t w) { return ((b * H + h) * W + w) * C; };
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < Ho; ++h)
      for (std::size_t w = 0; w < Wo; ++w) {
        double* dst = out.data() + ((b * Ho + h) * Wo + w) * C;
        for (std::size_t dh = 0; dh < 2; ++dh)
          for (std::size_t dw = 0; dw < 2; ++dw) {
            const double* src = x.data() + at(b, 2 * h + dh, 2 * w + dw);
            for (std::size_t c = 0; c < C; ++c) dst[c] += 0.25 * src[c];
          }
      }
  return make_result({B, Ho, Wo, C}, std::move(out), {input.node()}, [=](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& gi = in.grad_buffer();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t h = 0; h < Ho; ++h)
        for (std::size_t w = 0; w < Wo; ++w) {
          const double* src = self.grad.data() + ((b * Ho + h) * Wo + w) * C;
          for (std::size_t dh = 0; dh < 2; ++dh)
            for (std::size_t dw = 0; dw < 2; ++dw) {
              double* dst = gi.data() + ((b * H + 2 * h + dh) * W + 2 * w + dw) * C;
              for (std::size_t c = 0; c < C; ++c) dst[c] += 0.25 * src[c];
            }
        }
  });
}

Tensor upsample2(const Tensor& input) {
  require_nhwc(input, "upsample2");
  const auto B = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
  const auto Ho = 2 * H, Wo = 2 * W;
  const Taps th = upsample_taps(H), tw = upsample_taps(W);
  std::vector<double> out(B * Ho * Wo * C, 0.0);
  const auto& x = input.node()->data;
  // Visits every (output pixel, input pixel, weight) contribution.
  auto visit = [=](auto&& f) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t h = 0; h < Ho; ++h)
        for (std::size_t w = 0; w < Wo; ++w) {
          const std::size_t o = ((b * Ho + h) * Wo + w) * C;
          const std::size_t hs[2] = {th.lo[h], th.hi[h]};
          const double wh[2] = {th.w_lo[h], th.w_hi[h]};
          const std::size_t ws[2] = {tw.lo[w], tw.hi[w]};
          const double ww[2] = {tw.w_lo[w], tw.w_hi[w]};
          for (int a = 0; a < 2; ++a)
            for (int c2 = 0; c2 < 2; ++c2) f(o, ((b * H + hs[a]) * W + ws[c2]) * C, wh[a] * ww[c2]);
        }
  };
  visit([&](std::size_t o, std::size_t i, double wt) {
    for (std::size_t c = 0; c < C; ++c) out[o + c] += wt * x[i + c];
  });
  return make_result({B, Ho, Wo, C}, std::move(out), {input.node()}, [visit, C](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& gi = in.grad_buffer();
    visit([&](std::size_t o, std::size_t i, double wt) {
      for (std::size_t c = 0; c < C; ++c) gi[i + c] += wt * self.grad[o + c];
    });
  });
}

}  // namespace ganduf::ad
