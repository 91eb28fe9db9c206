// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace descatter {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// col has shape [Cin*k*k, B*H*W]; row r = (ci*k + ky)*k + kx.
template <typename T>
void im2col(const Tensor<T>& x, int k, int pad, std::vector<T>& col) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const std::size_t P = B * hw;
  col.assign(static_cast<std::size_t>(C) * k * k * P, T(0));
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * P;
        for (int b = 0; b < B; ++b) {
          const T* src = x.data() + (static_cast<std::size_t>(b) * C + c) * hw;
          T* dst = row + b * hw;
          for (int h = 0; h < H; ++h) {
            const int sh = h + ky - pad;
            if (sh < 0 || sh >= H) continue;
            const int w0 = std::max(0, pad - kx);
            const int w1 = std::min(W, W + pad - kx);
            const T* s = src + static_cast<std::size_t>(sh) * W + (kx - pad);
            T* d = dst + static_cast<std::size_t>(h) * W;
            for (int w = w0; w < w1; ++w) d[w] = s[w];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const std::vector<T>& col, int k, int pad, Tensor<T>& dx) {
  const int B = dx.dim(0), C = dx.dim(1), H = dx.dim(2), W = dx.dim(3);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const std::size_t P = B * hw;
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * P;
        for (int b = 0; b < B; ++b) {
          T* dst = dx.data() + (static_cast<std::size_t>(b) * C + c) * hw;
          const T* src = row + b * hw;
          for (int h = 0; h < H; ++h) {
            const int sh = h + ky - pad;
            if (sh < 0 || sh >= H) continue;
            const int w0 = std::max(0, pad - kx);
            const int w1 = std::min(W, W + pad - kx);
            T* d = dst + static_cast<std::size_t>(sh) * W + (kx - pad);
            const T* s = src + static_cast<std::size_t>(h) * W;
            for (int w = w0; w < w1; ++w) d[w] += s[w];
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv_shapes(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                       int padding) {
  require_rank4(x, "conv2d input");
  require_rank4(kernel, "conv2d kernel");
  if (x.dim(1) != kernel.dim(1)) {
    throw ShapeError("conv2d: input channels of " + shape_to_string(x.shape()) +
                     " do not match kernel " + shape_to_string(kernel.shape()));
  }
  const int k = kernel.dim(2);
  if (kernel.dim(3) != k || k % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square with odd size, got " +
                     shape_to_string(kernel.shape()));
  }
  if (padding != (k - 1) / 2) {
    throw ShapeError("conv2d: only same-padding is supported (k=" + std::to_string(k) +
                     ", padding=" + std::to_string(padding) + ")");
  }
  if (bias.rank() != 1 || bias.dim(0) != kernel.dim(0)) {
    throw ShapeError("conv2d: bias " + shape_to_string(bias.shape()) +
                     " does not match kernel " + shape_to_string(kernel.shape()));
  }
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.numel(); ++i) d[i] += s[i];
}

}  // namespace

namespace kernels {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                         int padding) {
  check_conv_shapes(input, kernel, bias, padding);
  const int B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int Cout = kernel.dim(0), k = kernel.dim(2);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const Eigen::Index K = static_cast<Eigen::Index>(Cin) * k * k;
  const Eigen::Index P = static_cast<Eigen::Index>(B * hw);

  std::vector<T> col;
  im2col(input, k, padding, col);
  RowMat<T> out(Cout, P);
  out.noalias() = ConstMatMap<T>(kernel.data(), Cout, K) * ConstMatMap<T>(col.data(), K, P);

  Tensor<T> y({B, Cout, H, W});
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Cout; ++co) {
      const T* src = out.data() + static_cast<std::size_t>(co) * P + b * hw;
      T* dst = y.data() + (static_cast<std::size_t>(b) * Cout + co) * hw;
      const T bv = bias[co];
      for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + bv;
    }
  }
  return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, int padding,
                     const Tensor<T>& grad_out, Tensor<T>* grad_input, Tensor<T>* grad_kernel,
                     Tensor<T>* grad_bias) {
  const int B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int Cout = kernel.dim(0), k = kernel.dim(2);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const Eigen::Index K = static_cast<Eigen::Index>(Cin) * k * k;
  const Eigen::Index P = static_cast<Eigen::Index>(B * hw);

  RowMat<T> dout(Cout, P);
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Cout; ++co) {
      const T* src = grad_out.data() + (static_cast<std::size_t>(b) * Cout + co) * hw;
      std::copy(src, src + hw, dout.data() + static_cast<std::size_t>(co) * P + b * hw);
    }
  }

  if (grad_bias) {
    *grad_bias = Tensor<T>({Cout});
    for (int co = 0; co < Cout; ++co) (*grad_bias)[co] = dout.row(co).sum();
  }
  if (grad_kernel) {
    std::vector<T> col;
    im2col(input, k, padding, col);
    *grad_kernel = Tensor<T>(kernel.shape());
    MatMap<T>(grad_kernel->data(), Cout, K).noalias() =
        dout * ConstMatMap<T>(col.data(), K, P).transpose();
  }
  if (grad_input) {
    RowMat<T> dcol(K, P);
    dcol.noalias() = ConstMatMap<T>(kernel.data(), Cout, K).transpose() * dout;
    std::vector<T> buf(dcol.data(), dcol.data() + dcol.size());
    *grad_input = Tensor<T>(input.shape());
    col2im_add(buf, k, padding, *grad_input);
  }
}

template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& input, std::vector<std::size_t>* argmax) {
  require_rank4(input, "maxpool2d");
  const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (H % 2 != 0 || W % 2 != 0) {
    throw ShapeError("maxpool2d: spatial extents must be even, got " +
                     shape_to_string(input.shape()));
  }
  const int Ho = H / 2, Wo = W / 2;
  Tensor<T> y({B, C, Ho, Wo});
  if (argmax) argmax->resize(y.numel());
  std::size_t o = 0;
  for (int bc = 0; bc < B * C; ++bc) {
    const std::size_t base = static_cast<std::size_t>(bc) * H * W;
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j, ++o) {
        std::size_t best = base + static_cast<std::size_t>(2 * i) * W + 2 * j;
        const std::size_t cand[3] = {best + 1, best + W, best + W + 1};
        for (std::size_t c : cand) {
          if (input[c] > input[best]) best = c;
        }
        y[o] = input[best];
        if (argmax) (*argmax)[o] = best;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample_nearest2x_forward(const Tensor<T>& input) {
  require_rank4(input, "upsample_nearest2x");
  const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  Tensor<T> y({B, C, 2 * H, 2 * W});
  for (int bc = 0; bc < B * C; ++bc) {
    const T* src = input.data() + static_cast<std::size_t>(bc) * H * W;
    T* dst = y.data() + static_cast<std::size_t>(bc) * 4 * H * W;
    for (int h = 0; h < 2 * H; ++h) {
      for (int w = 0; w < 2 * W; ++w) {
        dst[static_cast<std::size_t>(h) * 2 * W + w] = src[static_cast<std::size_t>(h / 2) * W + w / 2];
      }
    }
  }
  return y;
}

template <typename T>
double bce_value(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("bce_loss: prediction " + shape_to_string(pred.shape()) +
                     " vs target " + shape_to_string(target.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double a = std::clamp(static_cast<double>(pred[i]), kBceClamp, 1.0 - kBceClamp);
    const double y = target[i];
    acc += y * std::log(a) + (1.0 - y) * std::log(1.0 - a);
  }
  return -acc / static_cast<double>(pred.numel());
}

}  // namespace kernels

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Graph<T>::parameter(Parameter<T>& param) {
  nodes_.push_back(Node{param.value, {}, {}, &param, true});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Graph<T>::record(Tensor<T> value, bool requires_grad, BackwardFn backward) {
  if (!requires_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), {}, std::move(backward), nullptr, requires_grad});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Tensor<T>& Graph<T>::grad(int id) {
  Node& n = nodes_.at(static_cast<std::size_t>(id));
  if (n.grad.numel() != n.value.numel() || n.grad.shape() != n.value.shape()) {
    n.grad = Tensor<T>::zeros_like(n.value);
  }
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var<T> loss) {
  if (nodes_.empty() || loss.graph != this || loss.id < 0 ||
      loss.id >= static_cast<int>(nodes_.size())) {
    throw StateError("backward called before a forward pass was recorded");
  }
  if (nodes_[static_cast<std::size_t>(loss.id)].value.numel() != 1) {
    throw StateError("backward requires a scalar loss, got shape " +
                     shape_to_string(nodes_[static_cast<std::size_t>(loss.id)].value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor<T>();
  grad(loss.id)[0] = T(1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.backward && !n.grad.empty()) n.backward(*this, id);
  }
  for (auto& n : nodes_) {
    if (!n.param) continue;
    n.param->grad = n.grad.empty() ? Tensor<T>::zeros_like(n.param->value) : n.grad;
  }
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, int padding) {
  Graph<T>& g = *input.graph;
  Tensor<T> y = kernels::conv2d_forward(input.value(), kernel.value(), bias.value(), padding);
  const bool rg = g.requires_grad(input.id) || g.requires_grad(kernel.id) || g.requires_grad(bias.id);
  const int xi = input.id, ki = kernel.id, bi = bias.id;
  return g.record(std::move(y), rg, [xi, ki, bi, padding](Graph<T>& gr, int self) {
    Tensor<T> gx, gk, gb;
    const bool want_x = gr.requires_grad(xi);
    const bool want_k = gr.requires_grad(ki);
    const bool want_b = gr.requires_grad(bi);
    kernels::conv2d_backward(gr.value(xi), gr.value(ki), padding, gr.grad(self),
                             want_x ? &gx : nullptr, want_k ? &gk : nullptr,
                             want_b ? &gb : nullptr);
    if (want_x) add_into(gr.grad(xi), gx);
    if (want_k) add_into(gr.grad(ki), gk);
    if (want_b) add_into(gr.grad(bi), gb);
  });
}

template <typename T>
Var<T> maxpool2d(Var<T> input) {
  Graph<T>& g = *input.graph;
  std::vector<std::size_t> argmax;
  Tensor<T> y = kernels::maxpool2d_forward(input.value(), &argmax);
  const int xi = input.id;
  return g.record(std::move(y), g.requires_grad(xi),
                  [xi, argmax = std::move(argmax)](Graph<T>& gr, int self) {
                    const Tensor<T>& gy = gr.grad(self);
                    Tensor<T>& gx = gr.grad(xi);
                    for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += gy[o];
                  });
}

template <typename T>
Var<T> upsample_nearest2x(Var<T> input) {
  Graph<T>& g = *input.graph;
  Tensor<T> y = kernels::upsample_nearest2x_forward(input.value());
  const int xi = input.id;
  return g.record(std::move(y), g.requires_grad(xi), [xi](Graph<T>& gr, int self) {
    const Tensor<T>& gy = gr.grad(self);
    Tensor<T>& gx = gr.grad(xi);
    const int BC = gx.dim(0) * gx.dim(1), H = gx.dim(2), W = gx.dim(3);
    for (int bc = 0; bc < BC; ++bc) {
      const T* src = gy.data() + static_cast<std::size_t>(bc) * 4 * H * W;
      T* dst = gx.data() + static_cast<std::size_t>(bc) * H * W;
      for (int h = 0; h < 2 * H; ++h) {
        for (int w = 0; w < 2 * W; ++w) {
          dst[static_cast<std::size_t>(h / 2) * W + w / 2] += src[static_cast<std::size_t>(h) * 2 * W + w];
        }
      }
    }
  });
}

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.graph;
  const Tensor<T>& ta = a.value();
  const Tensor<T>& tb = b.value();
  require_rank4(ta, "concat_channels");
  require_rank4(tb, "concat_channels");
  if (ta.dim(0) != tb.dim(0) || ta.dim(2) != tb.dim(2) || ta.dim(3) != tb.dim(3)) {
    throw ShapeError("concat_channels: " + shape_to_string(ta.shape()) + " and " +
                     shape_to_string(tb.shape()) + " differ outside the channel axis");
  }
  const int B = ta.dim(0), C1 = ta.dim(1), C2 = tb.dim(1);
  const std::size_t hw = static_cast<std::size_t>(ta.dim(2)) * ta.dim(3);
  Tensor<T> y({B, C1 + C2, ta.dim(2), ta.dim(3)});
  for (int n = 0; n < B; ++n) {
    std::copy_n(ta.data() + n * C1 * hw, C1 * hw, y.data() + n * (C1 + C2) * hw);
    std::copy_n(tb.data() + n * C2 * hw, C2 * hw, y.data() + (n * (C1 + C2) + C1) * hw);
  }
  const int ai = a.id, bi = b.id;
  const bool rg = g.requires_grad(ai) || g.requires_grad(bi);
  return g.record(std::move(y), rg, [ai, bi, B, C1, C2, hw](Graph<T>& gr, int self) {
    const Tensor<T>& gy = gr.grad(self);
    if (gr.requires_grad(ai)) {
      Tensor<T>& ga = gr.grad(ai);
      for (int n = 0; n < B; ++n) {
        const T* s = gy.data() + n * (C1 + C2) * hw;
        T* d = ga.data() + n * C1 * hw;
        for (std::size_t i = 0; i < C1 * hw; ++i) d[i] += s[i];
      }
    }
    if (gr.requires_grad(bi)) {
      Tensor<T>& gb = gr.grad(bi);
      for (int n = 0; n < B; ++n) {
        const T* s = gy.data() + (n * (C1 + C2) + C1) * hw;
        T* d = gb.data() + n * C2 * hw;
        for (std::size_t i = 0; i < C2 * hw; ++i) d[i] += s[i];
      }
    }
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  Graph<T>& g = *x.graph;
  Tensor<T> y = x.value();
  for (auto& v : y.storage()) v = v > T(0) ? v : T(0);
  const int xi = x.id;
  return g.record(std::move(y), g.requires_grad(xi), [xi](Graph<T>& gr, int self) {
    const Tensor<T>& in = gr.value(xi);
    const Tensor<T>& gy = gr.grad(self);
    Tensor<T>& gx = gr.grad(xi);
    for (std::size_t i = 0; i < in.numel(); ++i) {
      if (in[i] > T(0)) gx[i] += gy[i];
    }
  });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Graph<T>& g = *x.graph;
  Tensor<T> y = x.value();
  for (auto& v : y.storage()) v = T(1) / (T(1) + std::exp(-v));
  const int xi = x.id;
  return g.record(std::move(y), g.requires_grad(xi), [xi](Graph<T>& gr, int self) {
    const Tensor<T>& s = gr.value(self);
    const Tensor<T>& gy = gr.grad(self);
    Tensor<T>& gx = gr.grad(xi);
    for (std::size_t i = 0; i < s.numel(); ++i) gx[i] += gy[i] * s[i] * (T(1) - s[i]);
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  Graph<T>& g = *x.graph;
  double acc = 0.0;
  for (T v : x.value().values()) acc += v;
  const int xi = x.id;
  return g.record(Tensor<T>({1}, static_cast<T>(acc)), g.requires_grad(xi),
                  [xi](Graph<T>& gr, int self) {
                    const T gy = gr.grad(self)[0];
                    for (auto& v : gr.grad(xi).storage()) v += gy;
                  });
}

template <typename T>
Var<T> bce_loss(Var<T> pred, const Tensor<T>& target) {
  Graph<T>& g = *pred.graph;
  const double loss = kernels::bce_value(pred.value(), target);
  const int pi = pred.id;
  return g.record(Tensor<T>({1}, static_cast<T>(loss)), g.requires_grad(pi),
                  [pi, target](Graph<T>& gr, int self) {
                    const Tensor<T>& a = gr.value(pi);
                    Tensor<T>& ga = gr.grad(pi);
                    const double scale = static_cast<double>(gr.grad(self)[0]) /
                                         static_cast<double>(a.numel());
                    for (std::size_t i = 0; i < a.numel(); ++i) {
                      const double p = a[i];
                      if (p < kBceClamp || p > 1.0 - kBceClamp) continue;
                      const double y = target[i];
                      ga[i] += static_cast<T>(-scale * (y / p - (1.0 - y) / (1.0 - p)));
                    }
                  });
}

template <typename T>
Var<T> bce_with_logits(Var<T> logits, const Tensor<T>& target) {
  Graph<T>& g = *logits.graph;
  Tensor<T> p = logits.value();
  for (auto& v : p.storage()) v = T(1) / (T(1) + std::exp(-v));
  const double loss = kernels::bce_value(p, target);
  const int zi = logits.id;
  return g.record(Tensor<T>({1}, static_cast<T>(loss)), g.requires_grad(zi),
                  [zi, target](Graph<T>& gr, int self) {
                    const Tensor<T>& z = gr.value(zi);
                    Tensor<T>& gz = gr.grad(zi);
                    const double scale = static_cast<double>(gr.grad(self)[0]) /
                                         static_cast<double>(z.numel());
                    for (std::size_t i = 0; i < z.numel(); ++i) {
                      const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(z[i])));
                      gz[i] += static_cast<T>(scale * (p - static_cast<double>(target[i])));
                    }
                  });
}

#define DESCATTER_INSTANTIATE(T)                                                               \
  template class Graph<T>;                                                                     \
  template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>, int);                                      \
  template Var<T> maxpool2d<T>(Var<T>);                                                        \
  template Var<T> upsample_nearest2x<T>(Var<T>);                                               \
  template Var<T> concat_channels<T>(Var<T>, Var<T>);                                          \
  template Var<T> relu<T>(Var<T>);                                                             \
  template Var<T> sigmoid<T>(Var<T>);                                                          \
  template Var<T> sum<T>(Var<T>);                                                              \
  template Var<T> bce_loss<T>(Var<T>, const Tensor<T>&);                                       \
  template Var<T> bce_with_logits<T>(Var<T>, const Tensor<T>&);                                \
  template Tensor<T> kernels::conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&,            \
                                                const Tensor<T>&, int);                        \
  template void kernels::conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, int,           \
                                            const Tensor<T>&, Tensor<T>*, Tensor<T>*,          \
                                            Tensor<T>*);                                       \
  template Tensor<T> kernels::maxpool2d_forward<T>(const Tensor<T>&, std::vector<std::size_t>*); \
  template Tensor<T> kernels::upsample_nearest2x_forward<T>(const Tensor<T>&);                 \
  template double kernels::bce_value<T>(const Tensor<T>&, const Tensor<T>&);

DESCATTER_INSTANTIATE(float)
DESCATTER_INSTANTIATE(double)

#undef DESCATTER_INSTANTIATE

}  // namespace descatter
