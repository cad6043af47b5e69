#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "uir/tensor.hpp"

namespace uir {

// Reverse-mode tape. Ops are methods so every recorded node belongs to an
// explicit graph; a graph constructed with recording=false computes forward
// values only (used for evaluation).
//
// Backward walks the tape once in reverse insertion order and then frees it.
// Calling backward again without recording new ops is an error.
class Graph {
public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return recording_; }
  size_t size() const { return tape_.size(); }

  // ---- elementwise ----

  Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    check_finite(a, "add");
    check_finite(b, "add");
    Tensor out(a.shape());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    if (track(out, {a, b})) {
      record([a = a, b = b, out]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
          auto& ga = a.grad();
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
          auto& gb = b.grad();
          for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      });
    }
    return out;
  }

  Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    check_finite(a, "sub");
    check_finite(b, "sub");
    Tensor out(a.shape());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
    if (track(out, {a, b})) {
      record([a = a, b = b, out]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
          auto& ga = a.grad();
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
          auto& gb = b.grad();
          for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
      });
    }
    return out;
  }

  Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    check_finite(a, "mul");
    check_finite(b, "mul");
    Tensor out(a.shape());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    if (track(out, {a, b})) {
      record([a = a, b = b, out]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
          auto& ga = a.grad();
          const auto& bv2 = b.values();
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
        }
        if (b.requires_grad()) {
          auto& gb = b.grad();
          const auto& av2 = a.values();
          for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
        }
      });
    }
    return out;
  }

  Tensor neg(const Tensor& a) { return scale(a, -1.0); }

  Tensor scale(const Tensor& a, double factor) {
    check_finite(a, "scale");
    Tensor out(a.shape());
    const auto& av = a.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = factor * av[i];
    if (track(out, {a})) {
      record([a = a, out, factor]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
      });
    }
    return out;
  }

  Tensor relu(const Tensor& a) {
    check_finite(a, "relu");
    Tensor out(a.shape());
    const auto& av = a.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] > 0.0 ? av[i] : 0.0;
    if (track(out, {a})) {
      record([a = a, out]() mutable {
        const auto& g = out.grad();
        const auto& av2 = a.values();
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i)
          if (av2[i] > 0.0) ga[i] += g[i];
      });
    }
    return out;
  }

  Tensor abs(const Tensor& a) {
    check_finite(a, "abs");
    Tensor out(a.shape());
    const auto& av = a.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::fabs(av[i]);
    if (track(out, {a})) {
      // subgradient at 0 is 0
      record([a = a, out]() mutable {
        const auto& g = out.grad();
        const auto& av2 = a.values();
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i) {
          if (av2[i] > 0.0)
            ga[i] += g[i];
          else if (av2[i] < 0.0)
            ga[i] -= g[i];
        }
      });
    }
    return out;
  }

  // Gradient is 1 strictly inside (lo, hi) and 0 elsewhere; values at the
  // boundary count as clipped.
  Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi)
      throw Error("clamp: lo " + std::to_string(lo) + " exceeds hi " + std::to_string(hi));
    check_finite(a, "clamp");
    Tensor out(a.shape());
    const auto& av = a.values();
    auto& ov = out.values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::min(std::max(av[i], lo), hi);
    if (track(out, {a})) {
      record([a = a, out, lo, hi]() mutable {
        const auto& g = out.grad();
        const auto& av2 = a.values();
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i)
          if (av2[i] > lo && av2[i] < hi) ga[i] += g[i];
      });
    }
    return out;
  }

  // ---- reductions / losses ----

  Tensor mean(const Tensor& a) {
    check_finite(a, "mean");
    const double n = static_cast<double>(a.numel());
    double s = 0.0;
    for (double v : a.values()) s += v;
    Tensor out = Tensor::scalar(s / n);
    if (track(out, {a})) {
      record([a = a, out, n]() mutable {
        const double g = out.grad()[0] / n;
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
      });
    }
    return out;
  }

  // Mean absolute difference; subgradient at exact ties is 0.
  Tensor l1_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "l1_loss");
    check_finite(pred, "l1_loss");
    check_finite(target, "l1_loss");
    const auto& pv = pred.values();
    const auto& tv = target.values();
    const double n = static_cast<double>(pred.numel());
    double s = 0.0;
    for (size_t i = 0; i < pv.size(); ++i) s += std::fabs(pv[i] - tv[i]);
    Tensor out = Tensor::scalar(s / n);
    if (track(out, {pred, target})) {
      record([pred = pred, target = target, out, n]() mutable {
        const double g = out.grad()[0] / n;
        const auto& pv2 = pred.values();
        const auto& tv2 = target.values();
        if (pred.requires_grad()) {
          auto& gp = pred.grad();
          for (size_t i = 0; i < pv2.size(); ++i) {
            const double d = pv2[i] - tv2[i];
            if (d > 0.0)
              gp[i] += g;
            else if (d < 0.0)
              gp[i] -= g;
          }
        }
        if (target.requires_grad()) {
          auto& gt = target.grad();
          for (size_t i = 0; i < pv2.size(); ++i) {
            const double d = pv2[i] - tv2[i];
            if (d > 0.0)
              gt[i] -= g;
            else if (d < 0.0)
              gt[i] += g;
          }
        }
      });
    }
    return out;
  }

  // Mean squared difference.
  Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "mse_loss");
    check_finite(pred, "mse_loss");
    check_finite(target, "mse_loss");
    const auto& pv = pred.values();
    const auto& tv = target.values();
    const double n = static_cast<double>(pred.numel());
    double s = 0.0;
    for (size_t i = 0; i < pv.size(); ++i) {
      const double d = pv[i] - tv[i];
      s += d * d;
    }
    Tensor out = Tensor::scalar(s / n);
    if (track(out, {pred, target})) {
      record([pred = pred, target = target, out, n]() mutable {
        const double g = 2.0 * out.grad()[0] / n;
        const auto& pv2 = pred.values();
        const auto& tv2 = target.values();
        if (pred.requires_grad()) {
          auto& gp = pred.grad();
          for (size_t i = 0; i < pv2.size(); ++i) gp[i] += g * (pv2[i] - tv2[i]);
        }
        if (target.requires_grad()) {
          auto& gt = target.grad();
          for (size_t i = 0; i < pv2.size(); ++i) gt[i] -= g * (pv2[i] - tv2[i]);
        }
      });
    }
    return out;
  }

  // ---- convolution ----

  // input [Cin,H,W], kernel [Cout,Cin,KH,KW], zero padding, floor output size.
  Tensor conv2d(const Tensor& input, const Tensor& kernel, int64_t stride, int64_t padding) {
    conv_check_args(input, kernel, stride, padding, "conv2d");
    if (input.shape()[0] != kernel.shape()[1]) {
      throw ShapeError("conv2d: input channels " + shape_str(input.shape()) +
                       " do not match kernel in-channels " + shape_str(kernel.shape()));
    }
    const int64_t cin = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
    const int64_t cout = kernel.shape()[0], kh = kernel.shape()[2], kw = kernel.shape()[3];
    const int64_t oh = (h + 2 * padding - kh) / stride + 1;
    const int64_t ow = (w + 2 * padding - kw) / stride + 1;
    if (h + 2 * padding < kh || w + 2 * padding < kw) {
      throw ShapeError("conv2d: kernel " + shape_str(kernel.shape()) + " exceeds padded input " +
                       shape_str(input.shape()));
    }
    Tensor out(Shape{cout, oh, ow});
    conv2d_forward(input.values().data(), kernel.values().data(), out.values().data(), cin, h, w,
                   cout, kh, kw, stride, padding, oh, ow);
    if (track(out, {input, kernel})) {
      record([input = input, kernel = kernel, out, cin, h, w, cout, kh, kw, stride, padding, oh, ow]() mutable {
        conv2d_backward(input.values().data(), kernel.values().data(), out.grad().data(),
                        input.requires_grad() ? input.grad().data() : nullptr,
                        kernel.requires_grad() ? kernel.grad().data() : nullptr, cin, h, w, cout,
                        kh, kw, stride, padding, oh, ow);
      });
    }
    return out;
  }

  // input [Cin,H,W], kernel [Cin,Cout,KH,KW]; output (H-1)*stride - 2*padding + KH.
  Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, int64_t stride,
                          int64_t padding) {
    conv_check_args(input, kernel, stride, padding, "conv_transpose2d");
    if (input.shape()[0] != kernel.shape()[0]) {
      throw ShapeError("conv_transpose2d: input channels " + shape_str(input.shape()) +
                       " do not match kernel in-channels " + shape_str(kernel.shape()));
    }
    const int64_t cin = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
    const int64_t cout = kernel.shape()[1], kh = kernel.shape()[2], kw = kernel.shape()[3];
    const int64_t oh = (h - 1) * stride - 2 * padding + kh;
    const int64_t ow = (w - 1) * stride - 2 * padding + kw;
    if (oh <= 0 || ow <= 0) {
      throw ShapeError("conv_transpose2d: non-positive output size for input " +
                       shape_str(input.shape()) + " kernel " + shape_str(kernel.shape()));
    }
    Tensor out(Shape{cout, oh, ow});
    convt2d_forward(input.values().data(), kernel.values().data(), out.values().data(), cin, h, w,
                    cout, kh, kw, stride, padding, oh, ow);
    if (track(out, {input, kernel})) {
      record([input = input, kernel = kernel, out, cin, h, w, cout, kh, kw, stride, padding, oh, ow]() mutable {
        convt2d_backward(input.values().data(), kernel.values().data(), out.grad().data(),
                         input.requires_grad() ? input.grad().data() : nullptr,
                         kernel.requires_grad() ? kernel.grad().data() : nullptr, cin, h, w, cout,
                         kh, kw, stride, padding, oh, ow);
      });
    }
    return out;
  }

  // x [C,H,W] plus per-channel bias [C].
  Tensor bias_add(const Tensor& x, const Tensor& bias) {
    if (x.shape().size() != 3 || bias.shape().size() != 1 || bias.shape()[0] != x.shape()[0]) {
      throw ShapeError("bias_add: expected [C,H,W] and [C], got " + shape_str(x.shape()) +
                       " and " + shape_str(bias.shape()));
    }
    check_finite(x, "bias_add");
    check_finite(bias, "bias_add");
    const int64_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
    Tensor out(x.shape());
    const auto& xv = x.values();
    const auto& bv = bias.values();
    auto& ov = out.values();
    for (int64_t ch = 0; ch < c; ++ch) {
      const double b = bv[static_cast<size_t>(ch)];
      for (int64_t i = 0; i < hw; ++i) ov[static_cast<size_t>(ch * hw + i)] = xv[static_cast<size_t>(ch * hw + i)] + b;
    }
    if (track(out, {x, bias})) {
      record([x = x, bias = bias, out, c, hw]() mutable {
        const auto& g = out.grad();
        if (x.requires_grad()) {
          auto& gx = x.grad();
          for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (bias.requires_grad()) {
          auto& gb = bias.grad();
          for (int64_t ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (int64_t i = 0; i < hw; ++i) s += g[static_cast<size_t>(ch * hw + i)];
            gb[static_cast<size_t>(ch)] += s;
          }
        }
      });
    }
    return out;
  }

  // ---- backward ----

  void backward(Tensor loss) {
    if (!loss.is_scalar())
      throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    if (consumed_) throw Error("backward: graph already consumed; run a new forward pass");
    if (!recording_) throw Error("backward: graph is not recording");
    loss.grad()[0] = 1.0;
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
    tape_.clear();
    consumed_ = true;
  }

private:
  bool track(Tensor& out, std::initializer_list<Tensor> inputs) {
    if (!recording_) return false;
    bool any = false;
    for (const auto& t : inputs) any = any || t.requires_grad();
    if (any) out.set_requires_grad(true);
    return any;
  }

  void record(std::function<void()> fn) {
    consumed_ = false;
    tape_.push_back(std::move(fn));
  }

  static void conv_check_args(const Tensor& input, const Tensor& kernel, int64_t stride,
                              int64_t padding, const char* op) {
    if (input.shape().size() != 3)
      throw ShapeError(std::string(op) + ": input must be [C,H,W], got " + shape_str(input.shape()));
    if (kernel.shape().size() != 4)
      throw ShapeError(std::string(op) + ": kernel must be 4-d, got " + shape_str(kernel.shape()));
    if (stride < 1) throw Error(std::string(op) + ": stride must be >= 1");
    if (padding < 0) throw Error(std::string(op) + ": padding must be >= 0");
    check_finite(input, op);
    check_finite(kernel, op);
  }

  static void conv2d_forward(const double* in, const double* k, double* out, int64_t cin,
                             int64_t h, int64_t w, int64_t cout, int64_t kh, int64_t kw,
                             int64_t stride, int64_t padding, int64_t oh, int64_t ow) {
    for (int64_t co = 0; co < cout; ++co) {
      for (int64_t oy = 0; oy < oh; ++oy) {
        for (int64_t ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int64_t ci = 0; ci < cin; ++ci) {
            const double* inc = in + ci * h * w;
            const double* kc = k + ((co * cin + ci) * kh) * kw;
            for (int64_t ky = 0; ky < kh; ++ky) {
              const int64_t iy = oy * stride + ky - padding;
              if (iy < 0 || iy >= h) continue;
              const double* row = inc + iy * w;
              const double* krow = kc + ky * kw;
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t ix = ox * stride + kx - padding;
                if (ix < 0 || ix >= w) continue;
                acc += row[ix] * krow[kx];
              }
            }
          }
          out[(co * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }

  static void conv2d_backward(const double* in, const double* k, const double* gout, double* gin,
                              double* gk, int64_t cin, int64_t h, int64_t w, int64_t cout,
                              int64_t kh, int64_t kw, int64_t stride, int64_t padding, int64_t oh,
                              int64_t ow) {
    for (int64_t co = 0; co < cout; ++co) {
      for (int64_t oy = 0; oy < oh; ++oy) {
        for (int64_t ox = 0; ox < ow; ++ox) {
          const double g = gout[(co * oh + oy) * ow + ox];
          if (g == 0.0) continue;
          for (int64_t ci = 0; ci < cin; ++ci) {
            const double* inc = in + ci * h * w;
            const int64_t kbase = ((co * cin + ci) * kh) * kw;
            for (int64_t ky = 0; ky < kh; ++ky) {
              const int64_t iy = oy * stride + ky - padding;
              if (iy < 0 || iy >= h) continue;
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t ix = ox * stride + kx - padding;
                if (ix < 0 || ix >= w) continue;
                if (gin) gin[ci * h * w + iy * w + ix] += g * k[kbase + ky * kw + kx];
                if (gk) gk[kbase + ky * kw + kx] += g * inc[iy * w + ix];
              }
            }
          }
        }
      }
    }
  }

  static void convt2d_forward(const double* in, const double* k, double* out, int64_t cin,
                              int64_t h, int64_t w, int64_t cout, int64_t kh, int64_t kw,
                              int64_t stride, int64_t padding, int64_t oh, int64_t ow) {
    std::fill(out, out + cout * oh * ow, 0.0);
    for (int64_t ci = 0; ci < cin; ++ci) {
      for (int64_t iy = 0; iy < h; ++iy) {
        for (int64_t ix = 0; ix < w; ++ix) {
          const double v = in[ci * h * w + iy * w + ix];
          if (v == 0.0) continue;
          for (int64_t co = 0; co < cout; ++co) {
            const int64_t kbase = ((ci * cout + co) * kh) * kw;
            for (int64_t ky = 0; ky < kh; ++ky) {
              const int64_t oy = iy * stride + ky - padding;
              if (oy < 0 || oy >= oh) continue;
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t ox = ix * stride + kx - padding;
                if (ox < 0 || ox >= ow) continue;
                out[(co * oh + oy) * ow + ox] += v * k[kbase + ky * kw + kx];
              }
            }
          }
        }
      }
    }
  }

  static void convt2d_backward(const double* in, const double* k, const double* gout, double* gin,
                               double* gk, int64_t cin, int64_t h, int64_t w, int64_t cout,
                               int64_t kh, int64_t kw, int64_t stride, int64_t padding, int64_t oh,
                               int64_t ow) {
    for (int64_t ci = 0; ci < cin; ++ci) {
      for (int64_t iy = 0; iy < h; ++iy) {
        for (int64_t ix = 0; ix < w; ++ix) {
          const double v = in[ci * h * w + iy * w + ix];
          double acc = 0.0;
          for (int64_t co = 0; co < cout; ++co) {
            const int64_t kbase = ((ci * cout + co) * kh) * kw;
            for (int64_t ky = 0; ky < kh; ++ky) {
              const int64_t oy = iy * stride + ky - padding;
              if (oy < 0 || oy >= oh) continue;
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t ox = ix * stride + kx - padding;
                if (ox < 0 || ox >= ow) continue;
                const double g = gout[(co * oh + oy) * ow + ox];
                if (gin) acc += g * k[kbase + ky * kw + kx];
                if (gk) gk[kbase + ky * kw + kx] += g * v;
              }
            }
          }
          if (gin) gin[ci * h * w + iy * w + ix] += acc;
        }
      }
    }
  }

  std::vector<std::function<void()>> tape_;
  bool recording_ = true;
  bool consumed_ = false;
};

}  // namespace uir
