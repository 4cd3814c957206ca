// Copyright 2026 The ITS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "its/ops.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "its/parallel.hpp"

namespace its {

using detail::Node;
using json = nlohmann::json;

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), op, ": shape mismatch ", shape_str(a.shape()), " vs ",
        shape_str(b.shape()));
}

// ---------------------------------------------------------------------------
// matmul kernels (row-major, accumulate into C)
// ---------------------------------------------------------------------------

// C[M,N] += A[M,K] * B[K,N]
void mm_nn(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N) {
  parallel_for(M, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      double* c = C + i * N;
      const double* a = A + i * K;
      for (int64_t k = 0; k < K; ++k) {
        double av = a[k];
        const double* b = B + k * N;
        for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
      }
    }
  });
}

// C[M,K] += A[M,N] * B[K,N]^T
void mm_nt(const double* A, const double* B, double* C, int64_t M, int64_t N, int64_t K) {
  parallel_for(M, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const double* a = A + i * N;
      double* c = C + i * K;
      for (int64_t k = 0; k < K; ++k) {
        const double* b = B + k * N;
        double acc = 0.0;
        for (int64_t j = 0; j < N; ++j) acc += a[j] * b[j];
        c[k] += acc;
      }
    }
  });
}

// C[K,N] += A[M,K]^T * B[M,N]
void mm_tn(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N) {
  parallel_for(K, [&](int64_t k0, int64_t k1) {
    for (int64_t k = k0; k < k1; ++k) {
      double* c = C + k * N;
      for (int64_t i = 0; i < M; ++i) {
        double av = A[i * K + k];
        const double* b = B + i * N;
        for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
      }
    }
  });
}

template <typename Fwd, typename Bwd>
Tensor unary_op(const char* name, const Tensor& x, Fwd fwd, Bwd dfdx) {
  Tensor out = Tensor::make_result(x.shape(), name);
  const auto& xd = x.data();
  auto& od = out.mutable_data();
  for (size_t i = 0; i < xd.size(); ++i) od[i] = fwd(xd[i]);
  if (track_any({&x})) {
    out.attach_backward(name, {x}, [xn = x.node(), dfdx](Node& self) {
      if (!xn->requires_grad) return;
      auto& gx = xn->ensure_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * dfdx(xn->data[i]);
    });
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out = Tensor::make_result(a.shape(), "add");
  const auto& ad = a.data();
  const auto& bd = b.data();
  auto& od = out.mutable_data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + bd[i];
  if (track_any({&a, &b})) {
    out.attach_backward("add", {a, b}, [an = a.node(), bn = b.node()](Node& self) {
      if (an->requires_grad) {
        auto& g = an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
      if (bn->requires_grad) {
        auto& g = bn->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out = Tensor::make_result(a.shape(), "mul");
  const auto& ad = a.data();
  const auto& bd = b.data();
  auto& od = out.mutable_data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * bd[i];
  if (track_any({&a, &b})) {
    out.attach_backward("mul", {a, b}, [an = a.node(), bn = b.node()](Node& self) {
      if (an->requires_grad) {
        auto& g = an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->data[i];
      }
      if (bn->requires_grad) {
        auto& g = bn->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->data[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::make_result(a.shape(), "scale");
  const auto& ad = a.data();
  auto& od = out.mutable_data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * c;
  if (track_any({&a})) {
    out.attach_backward("scale", {a}, [an = a.node(), c](Node& self) {
      if (!an->requires_grad) return;
      auto& g = an->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2, "matmul: expected 2-D inputs, got ",
        shape_str(a.shape()), " and ", shape_str(b.shape()));
  check(a.dim(1) == b.dim(0), "matmul: shape mismatch ", shape_str(a.shape()), " vs ",
        shape_str(b.shape()));
  int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Tensor out = Tensor::make_result({M, N}, "matmul");
  mm_nn(a.data().data(), b.data().data(), out.mutable_data().data(), M, K, N);
  if (track_any({&a, &b})) {
    out.attach_backward("matmul", {a, b},
                        [an = a.node(), bn = b.node(), M, K, N](Node& self) {
                          if (an->requires_grad)
                            mm_nt(self.grad.data(), bn->data.data(),
                                  an->ensure_grad().data(), M, N, K);
                          if (bn->requires_grad)
                            mm_tn(an->data.data(), self.grad.data(),
                                  bn->ensure_grad().data(), M, K, N);
                        });
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  check(x.rank() == 2, "transpose: expected 2-D input, got ", shape_str(x.shape()));
  int64_t R = x.dim(0), C = x.dim(1);
  Tensor out = Tensor::make_result({C, R}, "transpose");
  const auto& xd = x.data();
  auto& od = out.mutable_data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < C; ++j) od[j * R + i] = xd[i * C + j];
  if (track_any({&x})) {
    out.attach_backward("transpose", {x}, [xn = x.node(), R, C](Node& self) {
      if (!xn->requires_grad) return;
      auto& g = xn->ensure_grad();
      for (int64_t i = 0; i < R; ++i)
        for (int64_t j = 0; j < C; ++j) g[i * C + j] += self.grad[j * R + i];
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check(w.rank() == 2, "linear: weight must be 2-D, got ", shape_str(w.shape()));
  bool batched = x.rank() == 2;
  check(batched || x.rank() == 1, "linear: input must be 1-D or 2-D, got ",
        shape_str(x.shape()));
  int64_t in = w.dim(1), out_dim = w.dim(0);
  int64_t N = batched ? x.dim(0) : 1;
  check(x.dim(batched ? 1 : 0) == in, "linear: shape mismatch ", shape_str(x.shape()),
        " vs weight ", shape_str(w.shape()));
  if (b.defined())
    check(b.rank() == 1 && b.dim(0) == out_dim, "linear: bias shape ",
          shape_str(b.shape()), " vs weight ", shape_str(w.shape()));

  Shape os = batched ? Shape{N, out_dim} : Shape{out_dim};
  Tensor out = Tensor::make_result(os, "linear");
  auto& od = out.mutable_data();
  mm_nt(x.data().data(), w.data().data(), od.data(), N, in, out_dim);
  if (b.defined()) {
    const auto& bd = b.data();
    for (int64_t r = 0; r < N; ++r)
      for (int64_t o = 0; o < out_dim; ++o) od[r * out_dim + o] += bd[o];
  }
  if (track_any({&x, &w, &b})) {
    std::vector<Tensor> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    auto bn = b.defined() ? b.node() : nullptr;
    out.attach_backward("linear", std::move(parents),
                        [xn = x.node(), wn = w.node(), bn, N, in, out_dim](Node& self) {
                          if (xn->requires_grad)
                            mm_nn(self.grad.data(), wn->data.data(),
                                  xn->ensure_grad().data(), N, out_dim, in);
                          if (wn->requires_grad)
                            mm_tn(self.grad.data(), xn->data.data(),
                                  wn->ensure_grad().data(), N, out_dim, in);
                          if (bn && bn->requires_grad) {
                            auto& g = bn->ensure_grad();
                            for (int64_t r = 0; r < N; ++r)
                              for (int64_t o = 0; o < out_dim; ++o)
                                g[o] += self.grad[r * out_dim + o];
                          }
                        });
  }
  return out;
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

Tensor relu(const Tensor& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v) { return v > 0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  return unary_op("sigmoid", x, sig, [sig](double v) {
    double s = sig(v);
    return s * (1.0 - s);
  });
}

Tensor tanh_op(const Tensor& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double v) {
        double t = std::tanh(v);
        return 1.0 - t * t;
      });
}

Tensor softplus(const Tensor& x) {
  // Overflow guard: softplus(x) == x to double precision for x > 20.
  return unary_op(
      "softplus", x,
      [](double v) { return v > 20.0 ? v : std::log1p(std::exp(v)); },
      [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor exp_op(const Tensor& x) {
  return unary_op(
      "exp", x, [](double v) { return std::exp(v); },
      [](double v) { return std::exp(v); });
}

Tensor log1p_op(const Tensor& x) {
  for (double v : x.data())
    check(v > -1.0, "log1p: input must be > -1, got ", v);
  return unary_op(
      "log1p", x, [](double v) { return std::log1p(v); },
      [](double v) { return 1.0 / (1.0 + v); });
}

// ---------------------------------------------------------------------------
// layernorm
// ---------------------------------------------------------------------------

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, int axis) {
  const Shape& xs = x.shape();
  check(axis >= 0 && axis < static_cast<int>(xs.size()), "layernorm: axis ", axis,
        " out of range for shape ", shape_str(xs));
  int64_t n = xs[static_cast<size_t>(axis)];
  check(gamma.rank() == 1 && gamma.dim(0) == n && beta.rank() == 1 && beta.dim(0) == n,
        "layernorm: gamma/beta must be [", n, "], got ", shape_str(gamma.shape()), " and ",
        shape_str(beta.shape()));
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= xs[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < xs.size(); ++i) inner *= xs[i];

  constexpr double kEps = 1e-5;
  Tensor out = Tensor::make_result(xs, "layernorm");
  const auto& xd = x.data();
  const auto& gd = gamma.data();
  const auto& bd = beta.data();
  auto& od = out.mutable_data();
  for (int64_t ou = 0; ou < outer; ++ou) {
    for (int64_t in = 0; in < inner; ++in) {
      const int64_t base = ou * n * inner + in;
      double mu = 0.0;
      for (int64_t a = 0; a < n; ++a) mu += xd[base + a * inner];
      mu /= n;
      double var = 0.0;
      for (int64_t a = 0; a < n; ++a) {
        double d = xd[base + a * inner] - mu;
        var += d * d;
      }
      var /= n;
      double inv = 1.0 / std::sqrt(var + kEps);
      for (int64_t a = 0; a < n; ++a) {
        double xh = (xd[base + a * inner] - mu) * inv;
        od[base + a * inner] = xh * gd[a] + bd[a];
      }
    }
  }

  if (track_any({&x, &gamma, &beta})) {
    out.attach_backward(
        "layernorm", {x, gamma, beta},
        [xn = x.node(), gn = gamma.node(), bn = beta.node(), outer, inner, n](Node& self) {
          std::vector<double> xhat(static_cast<size_t>(n));
          std::vector<double> gg(static_cast<size_t>(n));
          for (int64_t ou = 0; ou < outer; ++ou) {
            for (int64_t in = 0; in < inner; ++in) {
              const int64_t base = ou * n * inner + in;
              double mu = 0.0;
              for (int64_t a = 0; a < n; ++a) mu += xn->data[base + a * inner];
              mu /= n;
              double var = 0.0;
              for (int64_t a = 0; a < n; ++a) {
                double d = xn->data[base + a * inner] - mu;
                var += d * d;
              }
              var /= n;
              double inv = 1.0 / std::sqrt(var + kEps);
              double mean_gg = 0.0, mean_ggx = 0.0;
              for (int64_t a = 0; a < n; ++a) {
                xhat[a] = (xn->data[base + a * inner] - mu) * inv;
                gg[a] = self.grad[base + a * inner] * gn->data[a];
                mean_gg += gg[a];
                mean_ggx += gg[a] * xhat[a];
              }
              mean_gg /= n;
              mean_ggx /= n;
              if (xn->requires_grad) {
                auto& gx = xn->ensure_grad();
                for (int64_t a = 0; a < n; ++a)
                  gx[base + a * inner] += inv * (gg[a] - mean_gg - xhat[a] * mean_ggx);
              }
              if (gn->requires_grad) {
                auto& ggam = gn->ensure_grad();
                for (int64_t a = 0; a < n; ++a)
                  ggam[a] += self.grad[base + a * inner] * xhat[a];
              }
              if (bn->requires_grad) {
                auto& gbet = bn->ensure_grad();
                for (int64_t a = 0; a < n; ++a) gbet[a] += self.grad[base + a * inner];
              }
            }
          }
        });
  }
  return out;
}

// ---------------------------------------------------------------------------
// dropout
// ---------------------------------------------------------------------------

Tensor dropout(const Tensor& x, double rate, const DropoutKey& key, bool training) {
  check(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1), got ", rate);
  if (!training || rate == 0.0) {
    // Eval mode is the identity, exactly.
    Tensor out = Tensor::make_result(x.shape(), "dropout");
    out.mutable_data() = x.data();
    if (track_any({&x})) {
      out.attach_backward("dropout", {x}, [xn = x.node()](Node& self) {
        if (!xn->requires_grad) return;
        auto& g = xn->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      });
    }
    return out;
  }
  CounterRng rng(key_combine(key_combine(key.seed, 0x64726f70ull),
                             key_combine(static_cast<uint64_t>(key.layer),
                                         static_cast<uint64_t>(key.step))));
  double inv_keep = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<uint8_t>>(x.data().size());
  Tensor out = Tensor::make_result(x.shape(), "dropout");
  const auto& xd = x.data();
  auto& od = out.mutable_data();
  for (size_t i = 0; i < xd.size(); ++i) {
    bool keep = rng.uniform(i) >= rate;
    (*mask)[i] = keep;
    od[i] = keep ? xd[i] * inv_keep : 0.0;
  }
  if (track_any({&x})) {
    out.attach_backward("dropout", {x}, [xn = x.node(), mask, inv_keep](Node& self) {
      if (!xn->requires_grad) return;
      auto& g = xn->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i)
        if ((*mask)[i]) g[i] += self.grad[i] * inv_keep;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// convolutions
// ---------------------------------------------------------------------------

namespace {

void im2col(const double* x, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
            int64_t stride, int64_t pad, int64_t OH, int64_t OW, double* col) {
  // col: [C*kh*kw, OH*OW]
  parallel_for(C, [&](int64_t c0, int64_t c1) {
    for (int64_t c = c0; c < c1; ++c) {
      for (int64_t u = 0; u < kh; ++u) {
        for (int64_t v = 0; v < kw; ++v) {
          double* row = col + ((c * kh + u) * kw + v) * OH * OW;
          for (int64_t oy = 0; oy < OH; ++oy) {
            int64_t iy = oy * stride + u - pad;
            if (iy < 0 || iy >= H) {
              for (int64_t ox = 0; ox < OW; ++ox) row[oy * OW + ox] = 0.0;
              continue;
            }
            const double* xrow = x + (c * H + iy) * W;
            for (int64_t ox = 0; ox < OW; ++ox) {
              int64_t ix = ox * stride + v - pad;
              row[oy * OW + ox] = (ix >= 0 && ix < W) ? xrow[ix] : 0.0;
            }
          }
        }
      }
    }
  });
}

// Gather form of col2im: each input element sums its own contributions.
void col2im_acc(const double* dcol, int64_t C, int64_t H, int64_t W, int64_t kh,
                int64_t kw, int64_t stride, int64_t pad, int64_t OH, int64_t OW,
                double* dx) {
  parallel_for(C, [&](int64_t c0, int64_t c1) {
    for (int64_t c = c0; c < c1; ++c) {
      for (int64_t iy = 0; iy < H; ++iy) {
        for (int64_t ix = 0; ix < W; ++ix) {
          double acc = 0.0;
          for (int64_t u = 0; u < kh; ++u) {
            int64_t oy = iy + pad - u;
            if (oy < 0 || oy % stride) continue;
            oy /= stride;
            if (oy >= OH) continue;
            for (int64_t v = 0; v < kw; ++v) {
              int64_t ox = ix + pad - v;
              if (ox < 0 || ox % stride) continue;
              ox /= stride;
              if (ox >= OW) continue;
              acc += dcol[((c * kh + u) * kw + v) * OH * OW + oy * OW + ox];
            }
          }
          dx[(c * H + iy) * W + ix] += acc;
        }
      }
    }
  });
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  check(stride >= 1 && pad >= 0, "conv2d: invalid attrs stride=", stride, " pad=", pad);
  check(x.rank() == 3, "conv2d: input must be [C,H,W], got ", shape_str(x.shape()));
  check(w.rank() == 4, "conv2d: weight must be [O,C,kh,kw], got ", shape_str(w.shape()));
  check(x.dim(0) == w.dim(1), "conv2d: shape mismatch input ", shape_str(x.shape()),
        " vs weight ", shape_str(w.shape()));
  int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  int64_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  check(H + 2 * pad >= kh && W + 2 * pad >= kw, "conv2d: kernel ", kh, "x", kw,
        " larger than padded input ", shape_str(x.shape()), " pad=", pad);
  if (b.defined())
    check(b.rank() == 1 && b.dim(0) == O, "conv2d: bias shape ", shape_str(b.shape()),
          " vs weight ", shape_str(w.shape()));
  int64_t OH = (H + 2 * pad - kh) / stride + 1;
  int64_t OW = (W + 2 * pad - kw) / stride + 1;

  auto col = std::make_shared<std::vector<double>>(
      static_cast<size_t>(C * kh * kw * OH * OW));
  im2col(x.data().data(), C, H, W, kh, kw, stride, pad, OH, OW, col->data());

  Tensor out = Tensor::make_result({O, OH, OW}, "conv2d");
  auto& od = out.mutable_data();
  mm_nn(w.data().data(), col->data(), od.data(), O, C * kh * kw, OH * OW);
  if (b.defined()) {
    const auto& bd = b.data();
    for (int64_t o = 0; o < O; ++o)
      for (int64_t i = 0; i < OH * OW; ++i) od[o * OH * OW + i] += bd[o];
  }

  if (track_any({&x, &w, &b})) {
    std::vector<Tensor> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    auto bn = b.defined() ? b.node() : nullptr;
    out.attach_backward(
        "conv2d", std::move(parents),
        [xn = x.node(), wn = w.node(), bn, col, C, H, W, O, kh, kw, stride, pad, OH,
         OW](Node& self) {
          int64_t K = C * kh * kw, P = OH * OW;
          if (wn->requires_grad)
            mm_nt(self.grad.data(), col->data(), wn->ensure_grad().data(), O, P, K);
          if (bn && bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int64_t o = 0; o < O; ++o)
              for (int64_t i = 0; i < P; ++i) g[o] += self.grad[o * P + i];
          }
          if (xn->requires_grad) {
            std::vector<double> dcol(static_cast<size_t>(K * P), 0.0);
            mm_tn(wn->data.data(), self.grad.data(), dcol.data(), O, K, P);
            col2im_acc(dcol.data(), C, H, W, kh, kw, stride, pad, OH, OW,
                       xn->ensure_grad().data());
          }
        });
  }
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad,
              int dilation) {
  check(stride >= 1 && pad >= 0 && dilation >= 1, "conv1d: invalid attrs stride=", stride,
        " pad=", pad, " dilation=", dilation);
  check(x.rank() == 2, "conv1d: input must be [C,T], got ", shape_str(x.shape()));
  check(w.rank() == 3, "conv1d: weight must be [O,C,k], got ", shape_str(w.shape()));
  check(x.dim(0) == w.dim(1), "conv1d: shape mismatch input ", shape_str(x.shape()),
        " vs weight ", shape_str(w.shape()));
  int64_t C = x.dim(0), T = x.dim(1);
  int64_t O = w.dim(0), k = w.dim(2);
  int64_t span = dilation * (k - 1) + 1;
  check(T + 2 * pad >= span, "conv1d: kernel span ", span, " larger than padded input ",
        shape_str(x.shape()), " pad=", pad);
  if (b.defined())
    check(b.rank() == 1 && b.dim(0) == O, "conv1d: bias shape ", shape_str(b.shape()),
          " vs weight ", shape_str(w.shape()));
  int64_t OT = (T + 2 * pad - span) / stride + 1;

  Tensor out = Tensor::make_result({O, OT}, "conv1d");
  const auto& xd = x.data();
  const auto& wd = w.data();
  auto& od = out.mutable_data();
  parallel_for(O, [&](int64_t o0, int64_t o1) {
    for (int64_t o = o0; o < o1; ++o) {
      double* orow = od.data() + o * OT;
      if (b.defined()) {
        double bv = b.data()[o];
        for (int64_t t = 0; t < OT; ++t) orow[t] = bv;
      }
      for (int64_t c = 0; c < C; ++c) {
        const double* xrow = xd.data() + c * T;
        const double* wrow = wd.data() + (o * C + c) * k;
        for (int64_t j = 0; j < k; ++j) {
          double wv = wrow[j];
          int64_t off = j * dilation - pad;
          for (int64_t t = 0; t < OT; ++t) {
            int64_t ti = t * stride + off;
            if (ti >= 0 && ti < T) orow[t] += wv * xrow[ti];
          }
        }
      }
    }
  });

  if (track_any({&x, &w, &b})) {
    std::vector<Tensor> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    auto bn = b.defined() ? b.node() : nullptr;
    out.attach_backward(
        "conv1d", std::move(parents),
        [xn = x.node(), wn = w.node(), bn, C, T, O, k, stride, pad, dilation,
         OT](Node& self) {
          if (xn->requires_grad) {
            auto& gx = xn->ensure_grad();
            parallel_for(C, [&](int64_t c0, int64_t c1) {
              for (int64_t c = c0; c < c1; ++c) {
                double* gxr = gx.data() + c * T;
                for (int64_t o = 0; o < O; ++o) {
                  const double* wrow = wn->data.data() + (o * C + c) * k;
                  const double* grow = self.grad.data() + o * OT;
                  for (int64_t j = 0; j < k; ++j) {
                    double wv = wrow[j];
                    int64_t off = j * dilation - pad;
                    for (int64_t t = 0; t < OT; ++t) {
                      int64_t ti = t * stride + off;
                      if (ti >= 0 && ti < T) gxr[ti] += wv * grow[t];
                    }
                  }
                }
              }
            });
          }
          if (wn->requires_grad) {
            auto& gw = wn->ensure_grad();
            parallel_for(O, [&](int64_t o0, int64_t o1) {
              for (int64_t o = o0; o < o1; ++o) {
                const double* grow = self.grad.data() + o * OT;
                for (int64_t c = 0; c < C; ++c) {
                  const double* xrow = xn->data.data() + c * T;
                  double* gwr = gw.data() + (o * C + c) * k;
                  for (int64_t j = 0; j < k; ++j) {
                    int64_t off = j * dilation - pad;
                    double acc = 0.0;
                    for (int64_t t = 0; t < OT; ++t) {
                      int64_t ti = t * stride + off;
                      if (ti >= 0 && ti < T) acc += grow[t] * xrow[ti];
                    }
                    gwr[j] += acc;
                  }
                }
              }
            });
          }
          if (bn && bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int64_t o = 0; o < O; ++o)
              for (int64_t t = 0; t < OT; ++t) g[o] += self.grad[o * OT + t];
          }
        });
  }
  return out;
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad) {
  check(stride >= 1 && pad >= 0, "depthwise_conv1d: invalid attrs stride=", stride,
        " pad=", pad);
  check(x.rank() == 2, "depthwise_conv1d: input must be [C,T], got ", shape_str(x.shape()));
  check(w.rank() == 2, "depthwise_conv1d: weight must be [C,k], got ", shape_str(w.shape()));
  check(x.dim(0) == w.dim(0), "depthwise_conv1d: shape mismatch input ",
        shape_str(x.shape()), " vs weight ", shape_str(w.shape()));
  int64_t C = x.dim(0), T = x.dim(1), k = w.dim(1);
  check(T + 2 * pad >= k, "depthwise_conv1d: kernel ", k, " larger than padded input ",
        shape_str(x.shape()), " pad=", pad);
  if (b.defined())
    check(b.rank() == 1 && b.dim(0) == C, "depthwise_conv1d: bias shape ",
          shape_str(b.shape()), " vs input ", shape_str(x.shape()));
  int64_t OT = (T + 2 * pad - k) / stride + 1;

  Tensor out = Tensor::make_result({C, OT}, "depthwise_conv1d");
  const auto& xd = x.data();
  const auto& wd = w.data();
  auto& od = out.mutable_data();
  for (int64_t c = 0; c < C; ++c) {
    double bv = b.defined() ? b.data()[c] : 0.0;
    for (int64_t t = 0; t < OT; ++t) {
      double acc = bv;
      for (int64_t j = 0; j < k; ++j) {
        int64_t ti = t * stride + j - pad;
        if (ti >= 0 && ti < T) acc += wd[c * k + j] * xd[c * T + ti];
      }
      od[c * OT + t] = acc;
    }
  }

  if (track_any({&x, &w, &b})) {
    std::vector<Tensor> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    auto bn = b.defined() ? b.node() : nullptr;
    out.attach_backward(
        "depthwise_conv1d", std::move(parents),
        [xn = x.node(), wn = w.node(), bn, C, T, k, stride, pad, OT](Node& self) {
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t t = 0; t < OT; ++t) {
              double g = self.grad[c * OT + t];
              for (int64_t j = 0; j < k; ++j) {
                int64_t ti = t * stride + j - pad;
                if (ti < 0 || ti >= T) continue;
                if (xn->requires_grad)
                  xn->ensure_grad()[c * T + ti] += g * wn->data[c * k + j];
                if (wn->requires_grad)
                  wn->ensure_grad()[c * k + j] += g * xn->data[c * T + ti];
              }
              if (bn && bn->requires_grad) bn->ensure_grad()[c] += g;
            }
          }
        });
  }
  return out;
}

Tensor separable_conv1d(const Tensor& x, const Tensor& dw, const Tensor& pw,
                        const Tensor& pb, int pad) {
  Tensor depth = depthwise_conv1d(x, dw, Tensor(), /*stride=*/1, pad);
  // Pointwise 1x1 as a linear map over channels: [C,T] -> [O,T].
  check(pw.rank() == 2, "separable_conv1d: pointwise weight must be [O,C], got ",
        shape_str(pw.shape()));
  Tensor y = matmul(pw, depth);  // [O,C] x [C,T]
  if (pb.defined()) {
    check(pb.rank() == 1 && pb.dim(0) == pw.dim(0), "separable_conv1d: bias shape ",
          shape_str(pb.shape()), " vs pointwise weight ", shape_str(pw.shape()));
    int64_t O = y.dim(0), T = y.dim(1);
    Tensor bias_mat = Tensor::make_result({O, T}, "bias_expand");
    auto& bd = bias_mat.mutable_data();
    for (int64_t o = 0; o < O; ++o)
      for (int64_t t = 0; t < T; ++t) bd[o * T + t] = pb.data()[o];
    if (track_any({&pb})) {
      bias_mat.attach_backward("bias_expand", {pb}, [pbn = pb.node(), O, T](Node& self) {
        if (!pbn->requires_grad) return;
        auto& g = pbn->ensure_grad();
        for (int64_t o = 0; o < O; ++o)
          for (int64_t t = 0; t < T; ++t) g[o] += self.grad[o * T + t];
      });
    }
    y = add(y, bias_mat);
  }
  return y;
}

Tensor transposed_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                         int pad) {
  check(stride >= 1 && pad >= 0, "transposed_conv1d: invalid attrs stride=", stride,
        " pad=", pad);
  check(x.rank() == 2, "transposed_conv1d: input must be [C,T], got ",
        shape_str(x.shape()));
  check(w.rank() == 3, "transposed_conv1d: weight must be [C,O,k], got ",
        shape_str(w.shape()));
  check(x.dim(0) == w.dim(0), "transposed_conv1d: shape mismatch input ",
        shape_str(x.shape()), " vs weight ", shape_str(w.shape()));
  int64_t C = x.dim(0), T = x.dim(1);
  int64_t O = w.dim(1), k = w.dim(2);
  int64_t OT = (T - 1) * stride + k - 2 * pad;
  check(OT >= 1, "transposed_conv1d: empty output for input ", shape_str(x.shape()),
        " stride=", stride, " pad=", pad);
  if (b.defined())
    check(b.rank() == 1 && b.dim(0) == O, "transposed_conv1d: bias shape ",
          shape_str(b.shape()), " vs weight ", shape_str(w.shape()));

  Tensor out = Tensor::make_result({O, OT}, "transposed_conv1d");
  const auto& xd = x.data();
  const auto& wd = w.data();
  auto& od = out.mutable_data();
  parallel_for(O, [&](int64_t o0, int64_t o1) {
    for (int64_t o = o0; o < o1; ++o) {
      double* orow = od.data() + o * OT;
      if (b.defined()) {
        double bv = b.data()[o];
        for (int64_t t = 0; t < OT; ++t) orow[t] = bv;
      }
      for (int64_t c = 0; c < C; ++c) {
        const double* xrow = xd.data() + c * T;
        const double* wrow = wd.data() + (c * O + o) * k;
        for (int64_t t = 0; t < T; ++t) {
          double xv = xrow[t];
          int64_t base = t * stride - pad;
          for (int64_t j = 0; j < k; ++j) {
            int64_t ot = base + j;
            if (ot >= 0 && ot < OT) orow[ot] += xv * wrow[j];
          }
        }
      }
    }
  });

  if (track_any({&x, &w, &b})) {
    std::vector<Tensor> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    auto bn = b.defined() ? b.node() : nullptr;
    out.attach_backward(
        "transposed_conv1d", std::move(parents),
        [xn = x.node(), wn = w.node(), bn, C, T, O, k, stride, pad, OT](Node& self) {
          if (xn->requires_grad) {
            auto& gx = xn->ensure_grad();
            parallel_for(C, [&](int64_t c0, int64_t c1) {
              for (int64_t c = c0; c < c1; ++c) {
                for (int64_t o = 0; o < O; ++o) {
                  const double* wrow = wn->data.data() + (c * O + o) * k;
                  const double* grow = self.grad.data() + o * OT;
                  for (int64_t t = 0; t < T; ++t) {
                    int64_t base = t * stride - pad;
                    double acc = 0.0;
                    for (int64_t j = 0; j < k; ++j) {
                      int64_t ot = base + j;
                      if (ot >= 0 && ot < OT) acc += wrow[j] * grow[ot];
                    }
                    gx[c * T + t] += acc;
                  }
                }
              }
            });
          }
          if (wn->requires_grad) {
            auto& gw = wn->ensure_grad();
            parallel_for(C, [&](int64_t c0, int64_t c1) {
              for (int64_t c = c0; c < c1; ++c) {
                const double* xrow = xn->data.data() + c * T;
                for (int64_t o = 0; o < O; ++o) {
                  const double* grow = self.grad.data() + o * OT;
                  double* gwr = gw.data() + (c * O + o) * k;
                  for (int64_t j = 0; j < k; ++j) {
                    double acc = 0.0;
                    for (int64_t t = 0; t < T; ++t) {
                      int64_t ot = t * stride - pad + j;
                      if (ot >= 0 && ot < OT) acc += xrow[t] * grow[ot];
                    }
                    gwr[j] += acc;
                  }
                }
              }
            });
          }
          if (bn && bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int64_t o = 0; o < O; ++o)
              for (int64_t t = 0; t < OT; ++t) g[o] += self.grad[o * OT + t];
          }
        });
  }
  return out;
}

Tensor mean_pool2d(const Tensor& x) {
  check(x.rank() == 3, "mean_pool: input must be [C,H,W], got ", shape_str(x.shape()));
  int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  int64_t hw = H * W;
  Tensor out = Tensor::make_result({C}, "mean_pool");
  const auto& xd = x.data();
  auto& od = out.mutable_data();
  for (int64_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (int64_t i = 0; i < hw; ++i) acc += xd[c * hw + i];
    od[c] = acc / hw;
  }
  if (track_any({&x})) {
    out.attach_backward("mean_pool", {x}, [xn = x.node(), C, hw](Node& self) {
      if (!xn->requires_grad) return;
      auto& g = xn->ensure_grad();
      for (int64_t c = 0; c < C; ++c) {
        double gv = self.grad[c] / hw;
        for (int64_t i = 0; i < hw; ++i) g[c * hw + i] += gv;
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

Tensor cross_entropy(const Tensor& logits, const std::vector<int64_t>& targets) {
  bool batched = logits.rank() == 2;
  check(batched || logits.rank() == 1, "cross_entropy: logits must be 1-D or 2-D, got ",
        shape_str(logits.shape()));
  int64_t N = batched ? logits.dim(0) : 1;
  int64_t C = batched ? logits.dim(1) : logits.dim(0);
  check(static_cast<int64_t>(targets.size()) == N, "cross_entropy: ", N, " rows vs ",
        targets.size(), " targets");
  for (int64_t t : targets)
    check(t >= 0 && t < C, "cross_entropy: target ", t, " out of range [0,", C, ")");

  const auto& ld = logits.data();
  double loss = 0.0;
  for (int64_t r = 0; r < N; ++r) {
    const double* row = ld.data() + r * C;
    double mx = row[0];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double se = 0.0;
    for (int64_t c = 0; c < C; ++c) se += std::exp(row[c] - mx);
    loss += mx + std::log(se) - row[targets[static_cast<size_t>(r)]];
  }
  Tensor out = Tensor::make_result({}, "cross_entropy");
  out.mutable_data()[0] = loss / N;

  if (track_any({&logits})) {
    out.attach_backward("cross_entropy", {logits},
                        [ln = logits.node(), targets, N, C](Node& self) {
                          if (!ln->requires_grad) return;
                          double g = self.grad[0] / N;
                          auto& gl = ln->ensure_grad();
                          for (int64_t r = 0; r < N; ++r) {
                            const double* row = ln->data.data() + r * C;
                            double mx = row[0];
                            for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
                            double se = 0.0;
                            for (int64_t c = 0; c < C; ++c) se += std::exp(row[c] - mx);
                            for (int64_t c = 0; c < C; ++c) {
                              double p = std::exp(row[c] - mx) / se;
                              double ind = (c == targets[static_cast<size_t>(r)]) ? 1.0 : 0.0;
                              gl[r * C + c] += g * (p - ind);
                            }
                          }
                        });
  }
  return out;
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_same_shape("mse", a, b);
  const auto& ad = a.data();
  const auto& bd = b.data();
  int64_t n = a.numel();
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double d = ad[i] - bd[i];
    loss += d * d;
  }
  Tensor out = Tensor::make_result({}, "mse");
  out.mutable_data()[0] = loss / n;
  if (track_any({&a, &b})) {
    out.attach_backward("mse", {a, b}, [an = a.node(), bn = b.node(), n](Node& self) {
      double g = self.grad[0] * 2.0 / n;
      for (int64_t i = 0; i < n; ++i) {
        double d = an->data[i] - bn->data[i];
        if (an->requires_grad) an->ensure_grad()[i] += g * d;
        if (bn->requires_grad) bn->ensure_grad()[i] -= g * d;
      }
    });
  }
  return out;
}

Tensor l1(const Tensor& a, const Tensor& b) {
  check_same_shape("l1", a, b);
  const auto& ad = a.data();
  const auto& bd = b.data();
  int64_t n = a.numel();
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) loss += std::fabs(ad[i] - bd[i]);
  Tensor out = Tensor::make_result({}, "l1");
  out.mutable_data()[0] = loss / n;
  if (track_any({&a, &b})) {
    out.attach_backward("l1", {a, b}, [an = a.node(), bn = b.node(), n](Node& self) {
      double g = self.grad[0] / n;
      for (int64_t i = 0; i < n; ++i) {
        double d = an->data[i] - bn->data[i];
        double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
        if (an->requires_grad) an->ensure_grad()[i] += g * s;
        if (bn->requires_grad) bn->ensure_grad()[i] -= g * s;
      }
    });
  }
  return out;
}

Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& log_sigma) {
  check_same_shape("kl_diag_gaussian_vs_standard_normal", mu, log_sigma);
  const auto& md = mu.data();
  const auto& sd = log_sigma.data();
  int64_t n = mu.numel();
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double var = std::exp(2.0 * sd[i]);
    loss += 0.5 * (md[i] * md[i] + var - 1.0 - 2.0 * sd[i]);
  }
  Tensor out = Tensor::make_result({}, "kl_diag_gaussian_vs_standard_normal");
  out.mutable_data()[0] = loss / n;
  if (track_any({&mu, &log_sigma})) {
    out.attach_backward("kl_diag_gaussian_vs_standard_normal", {mu, log_sigma},
                        [mn = mu.node(), sn = log_sigma.node(), n](Node& self) {
                          double g = self.grad[0] / n;
                          for (int64_t i = 0; i < n; ++i) {
                            if (mn->requires_grad) mn->ensure_grad()[i] += g * mn->data[i];
                            if (sn->requires_grad)
                              sn->ensure_grad()[i] +=
                                  g * (std::exp(2.0 * sn->data[i]) - 1.0);
                          }
                        });
  }
  return out;
}

// ---------------------------------------------------------------------------
// indexing / shaping
// ---------------------------------------------------------------------------

Tensor gather_rows(const Tensor& table, const std::vector<int64_t>& ids) {
  check(table.rank() == 2, "gather: table must be 2-D, got ", shape_str(table.shape()));
  int64_t V = table.dim(0), D = table.dim(1);
  for (int64_t id : ids)
    check(id >= 0 && id < V, "gather: row ", id, " out of range [0,", V, ")");
  int64_t N = static_cast<int64_t>(ids.size());
  Tensor out = Tensor::make_result({N, D}, "gather");
  const auto& td = table.data();
  auto& od = out.mutable_data();
  for (int64_t i = 0; i < N; ++i)
    std::copy_n(td.data() + ids[static_cast<size_t>(i)] * D, D, od.data() + i * D);
  if (track_any({&table})) {
    out.attach_backward("gather", {table}, [tn = table.node(), ids, D](Node& self) {
      if (!tn->requires_grad) return;
      auto& g = tn->ensure_grad();
      for (size_t i = 0; i < ids.size(); ++i)
        for (int64_t d = 0; d < D; ++d)
          g[ids[i] * D + d] += self.grad[static_cast<int64_t>(i) * D + d];
    });
  }
  return out;
}

namespace {

// Flattened view helper for concat/slice: [outer, axis_extent, inner].
void axis_split(const Shape& s, int axis, int64_t* outer, int64_t* inner) {
  *outer = 1;
  *inner = 1;
  for (int i = 0; i < axis; ++i) *outer *= s[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) *inner *= s[i];
}

}  // namespace

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  check(!parts.empty(), "concat: no inputs");
  const Shape& s0 = parts[0].shape();
  check(axis >= 0 && axis < static_cast<int>(s0.size()), "concat: axis ", axis,
        " out of range for shape ", shape_str(s0));
  int64_t total_axis = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    check(s.size() == s0.size(), "concat: rank mismatch ", shape_str(s0), " vs ",
          shape_str(s));
    for (size_t i = 0; i < s.size(); ++i)
      if (static_cast<int>(i) != axis)
        check(s[i] == s0[i], "concat: shape mismatch ", shape_str(s0), " vs ",
              shape_str(s));
    total_axis += s[static_cast<size_t>(axis)];
  }
  Shape os = s0;
  os[static_cast<size_t>(axis)] = total_axis;
  int64_t outer, inner;
  axis_split(s0, axis, &outer, &inner);

  Tensor out = Tensor::make_result(os, "concat");
  auto& od = out.mutable_data();
  int64_t off = 0;
  for (const Tensor& p : parts) {
    int64_t e = p.dim(axis);
    const auto& pd = p.data();
    for (int64_t ou = 0; ou < outer; ++ou)
      std::copy_n(pd.data() + ou * e * inner, e * inner,
                  od.data() + (ou * total_axis + off) * inner);
    off += e;
  }

  bool track = false;
  for (const Tensor& p : parts)
    if (p.requires_grad()) track = true;
  if (GradMode::enabled() && track) {
    std::vector<std::shared_ptr<Node>> nodes;
    std::vector<int64_t> extents;
    for (const Tensor& p : parts) {
      nodes.push_back(p.node());
      extents.push_back(p.dim(axis));
    }
    out.attach_backward("concat", parts,
                        [nodes, extents, outer, inner, total_axis](Node& self) {
                          int64_t off = 0;
                          for (size_t pi = 0; pi < nodes.size(); ++pi) {
                            int64_t e = extents[pi];
                            if (nodes[pi]->requires_grad) {
                              auto& g = nodes[pi]->ensure_grad();
                              for (int64_t ou = 0; ou < outer; ++ou)
                                for (int64_t i = 0; i < e * inner; ++i)
                                  g[ou * e * inner + i] +=
                                      self.grad[(ou * total_axis + off) * inner + i];
                            }
                            off += e;
                          }
                        });
  }
  return out;
}

Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len) {
  const Shape& s = x.shape();
  check(axis >= 0 && axis < static_cast<int>(s.size()), "slice: axis ", axis,
        " out of range for shape ", shape_str(s));
  int64_t e = s[static_cast<size_t>(axis)];
  check(start >= 0 && len >= 1 && start + len <= e, "slice: range [", start, ",",
        start + len, ") out of bounds for extent ", e);
  int64_t outer, inner;
  axis_split(s, axis, &outer, &inner);
  Shape os = s;
  os[static_cast<size_t>(axis)] = len;

  Tensor out = Tensor::make_result(os, "slice");
  const auto& xd = x.data();
  auto& od = out.mutable_data();
  for (int64_t ou = 0; ou < outer; ++ou)
    std::copy_n(xd.data() + (ou * e + start) * inner, len * inner,
                od.data() + ou * len * inner);
  if (track_any({&x})) {
    out.attach_backward("slice", {x},
                        [xn = x.node(), outer, inner, e, start, len](Node& self) {
                          if (!xn->requires_grad) return;
                          auto& g = xn->ensure_grad();
                          for (int64_t ou = 0; ou < outer; ++ou)
                            for (int64_t i = 0; i < len * inner; ++i)
                              g[(ou * e + start) * inner + i] +=
                                  self.grad[ou * len * inner + i];
                        });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  check(shape_numel(shape) == x.numel(), "reshape: cannot reshape ",
        shape_str(x.shape()), " to ", shape_str(shape));
  Tensor out = Tensor::make_result(std::move(shape), "reshape");
  out.mutable_data() = x.data();
  if (track_any({&x})) {
    out.attach_backward("reshape", {x}, [xn = x.node()](Node& self) {
      if (!xn->requires_grad) return;
      auto& g = xn->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
  }
  return out;
}

Tensor repeat_rows(const Tensor& x, const std::vector<int64_t>& counts) {
  check(x.rank() == 2, "repeat_rows: input must be 2-D, got ", shape_str(x.shape()));
  int64_t L = x.dim(0), D = x.dim(1);
  check(static_cast<int64_t>(counts.size()) == L, "repeat_rows: ", L, " rows vs ",
        counts.size(), " counts");
  int64_t total = 0;
  for (int64_t c : counts) {
    check(c >= 0, "repeat_rows: negative count ", c);
    total += c;
  }
  check(total >= 1, "repeat_rows: all counts are zero");

  Tensor out = Tensor::make_result({total, D}, "repeat_rows");
  const auto& xd = x.data();
  auto& od = out.mutable_data();
  int64_t r = 0;
  for (int64_t i = 0; i < L; ++i)
    for (int64_t c = 0; c < counts[static_cast<size_t>(i)]; ++c, ++r)
      std::copy_n(xd.data() + i * D, D, od.data() + r * D);

  if (track_any({&x})) {
    out.attach_backward("repeat_rows", {x}, [xn = x.node(), counts, D](Node& self) {
      if (!xn->requires_grad) return;
      auto& g = xn->ensure_grad();
      int64_t r = 0;
      for (size_t i = 0; i < counts.size(); ++i)
        for (int64_t c = 0; c < counts[i]; ++c, ++r)
          for (int64_t d = 0; d < D; ++d)
            g[static_cast<int64_t>(i) * D + d] += self.grad[r * D + d];
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::make_result({}, "sum");
  out.mutable_data()[0] = acc;
  if (track_any({&x})) {
    out.attach_backward("sum", {x}, [xn = x.node()](Node& self) {
      if (!xn->requires_grad) return;
      auto& g = xn->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / x.numel()); }

// ---------------------------------------------------------------------------
// dispatcher
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kOpKinds = {
    "matmul", "add", "mul", "conv2d", "conv1d", "separable_conv1d",
    "transposed_conv1d", "linear", "relu", "softplus", "sigmoid", "tanh",
    "layernorm", "dropout", "mean_pool", "cross_entropy", "mse", "l1",
    "kl_diag_gaussian_vs_standard_normal", "exp", "log1p", "gather", "concat",
    "slice", "reshape"};

const Tensor& arg(const std::vector<Tensor>& in, size_t i, const std::string& kind) {
  check(i < in.size(), kind, ": expected at least ", i + 1, " inputs, got ", in.size());
  return in[i];
}

Tensor opt_arg(const std::vector<Tensor>& in, size_t i) {
  return i < in.size() ? in[i] : Tensor();
}

}  // namespace

const std::vector<std::string>& forward_op_kinds() { return kOpKinds; }

Tensor forward_op(const std::string& kind, const std::vector<Tensor>& inputs,
                  const json& attrs) {
  auto geti = [&](const char* k, int64_t dflt) -> int64_t {
    return attrs.contains(k) ? attrs.at(k).get<int64_t>() : dflt;
  };
  if (kind == "matmul") return matmul(arg(inputs, 0, kind), arg(inputs, 1, kind));
  if (kind == "add") return add(arg(inputs, 0, kind), arg(inputs, 1, kind));
  if (kind == "mul") return mul(arg(inputs, 0, kind), arg(inputs, 1, kind));
  if (kind == "conv2d")
    return conv2d(arg(inputs, 0, kind), arg(inputs, 1, kind), opt_arg(inputs, 2),
                  static_cast<int>(geti("stride", 1)), static_cast<int>(geti("pad", 0)));
  if (kind == "conv1d")
    return conv1d(arg(inputs, 0, kind), arg(inputs, 1, kind), opt_arg(inputs, 2),
                  static_cast<int>(geti("stride", 1)), static_cast<int>(geti("pad", 0)),
                  static_cast<int>(geti("dilation", 1)));
  if (kind == "separable_conv1d")
    return separable_conv1d(arg(inputs, 0, kind), arg(inputs, 1, kind),
                            arg(inputs, 2, kind), opt_arg(inputs, 3),
                            static_cast<int>(geti("pad", 0)));
  if (kind == "transposed_conv1d")
    return transposed_conv1d(arg(inputs, 0, kind), arg(inputs, 1, kind),
                             opt_arg(inputs, 2), static_cast<int>(geti("stride", 1)),
                             static_cast<int>(geti("pad", 0)));
  if (kind == "linear")
    return linear(arg(inputs, 0, kind), arg(inputs, 1, kind), opt_arg(inputs, 2));
  if (kind == "relu") return relu(arg(inputs, 0, kind));
  if (kind == "softplus") return softplus(arg(inputs, 0, kind));
  if (kind == "sigmoid") return sigmoid(arg(inputs, 0, kind));
  if (kind == "tanh") return tanh_op(arg(inputs, 0, kind));
  if (kind == "layernorm")
    return layernorm(arg(inputs, 0, kind), arg(inputs, 1, kind), arg(inputs, 2, kind),
                     static_cast<int>(geti("axis", 0)));
  if (kind == "dropout") {
    DropoutKey key{attrs.value("seed", uint64_t{0}), geti("layer", 0), geti("step", 0)};
    return dropout(arg(inputs, 0, kind), attrs.value("rate", 0.5), key,
                   attrs.value("training", true));
  }
  if (kind == "mean_pool") return mean_pool2d(arg(inputs, 0, kind));
  if (kind == "cross_entropy")
    return cross_entropy(arg(inputs, 0, kind),
                         attrs.at("targets").get<std::vector<int64_t>>());
  if (kind == "mse") return mse(arg(inputs, 0, kind), arg(inputs, 1, kind));
  if (kind == "l1") return l1(arg(inputs, 0, kind), arg(inputs, 1, kind));
  if (kind == "kl_diag_gaussian_vs_standard_normal")
    return kl_diag_gaussian(arg(inputs, 0, kind), arg(inputs, 1, kind));
  if (kind == "exp") return exp_op(arg(inputs, 0, kind));
  if (kind == "log1p") return log1p_op(arg(inputs, 0, kind));
  if (kind == "gather")
    return gather_rows(arg(inputs, 0, kind), attrs.at("ids").get<std::vector<int64_t>>());
  if (kind == "concat") return concat(inputs, static_cast<int>(geti("axis", 0)));
  if (kind == "slice")
    return slice(arg(inputs, 0, kind), static_cast<int>(geti("axis", 0)),
                 geti("start", 0), geti("len", 1));
  if (kind == "reshape")
    return reshape(arg(inputs, 0, kind), attrs.at("shape").get<Shape>());
  fail("forward_op: unknown kind \"", kind, "\"");
}

}  // namespace its
