#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "madi/core/rng.hpp"
#include "madi/nets/tensor.hpp"

namespace madi {

// Fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
void init_fan_in(Tensor<T>& w, Tensor<T>& b, long fan_in, RngStream& rng) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& x : w.v) x = static_cast<T>(rng.uniform(-limit, limit));
    for (auto& x : b.v) x = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 0;
    Tensor<T> w;   // (out_ch, in_ch * k * k)
    Tensor<T> b;   // (out_ch)
    Tensor<T> gw;  // gradients, same shapes
    Tensor<T> gb;

    Conv2d() = default;
    Conv2d(int in, int out, int k, int s, int p) : in_ch(in), out_ch(out), ksize(k), stride(s), pad(p) {
        w = Tensor<T>({out, static_cast<long>(in) * k * k});
        b = Tensor<T>({out});
        gw = Tensor<T>(w.shape);
        gb = Tensor<T>(b.shape);
    }

    void init(RngStream& rng) { init_fan_in(w, b, static_cast<long>(in_ch) * ksize * ksize, rng); }

    int out_dim(int in_dim) const { return (in_dim + 2 * pad - ksize) / stride + 1; }

    // x: (B, in_ch, H, W) -> y: (B, out_ch, Ho, Wo)
    void forward(const Tensor<T>& x, int h, int w_in, Tensor<T>& y) const {
        const int ho = out_dim(h), wo = out_dim(w_in);
        const long batch = x.shape[0];
        const long ckk = static_cast<long>(in_ch) * ksize * ksize;
        const long hw_out = static_cast<long>(ho) * wo;
        y = Tensor<T>({batch, out_ch, ho, wo});
        std::vector<T> cols(static_cast<size_t>(ckk) * hw_out);
        for (long i = 0; i < batch; ++i) {
            im2col(x.data() + i * in_ch * h * w_in, h, w_in, ho, wo, cols.data());
            gemm(false, false, out_ch, static_cast<int>(hw_out), static_cast<int>(ckk), T(1),
                 w.data(), static_cast<int>(ckk), cols.data(), static_cast<int>(hw_out), T(0),
                 y.data() + i * out_ch * hw_out, static_cast<int>(hw_out));
            T* yi = y.data() + i * out_ch * hw_out;
            for (int oc = 0; oc < out_ch; ++oc)
                for (long o = 0; o < hw_out; ++o) yi[oc * hw_out + o] += b.v[oc];
        }
    }

    // Accumulates gw/gb; writes dx when dx != nullptr.
    void backward(const Tensor<T>& x, int h, int w_in, const Tensor<T>& dy, Tensor<T>* dx,
                  bool accum_param_grads = true) {
        const int ho = out_dim(h), wo = out_dim(w_in);
        const long batch = x.shape[0];
        const long ckk = static_cast<long>(in_ch) * ksize * ksize;
        const long hw_out = static_cast<long>(ho) * wo;
        if (dx) {
            *dx = Tensor<T>(x.shape);
        }
        std::vector<T> cols(static_cast<size_t>(ckk) * hw_out);
        std::vector<T> dcols(static_cast<size_t>(ckk) * hw_out);
        for (long i = 0; i < batch; ++i) {
            const T* dyi = dy.data() + i * out_ch * hw_out;
            if (accum_param_grads) {
                im2col(x.data() + i * in_ch * h * w_in, h, w_in, ho, wo, cols.data());
                // gw += dy_i * cols^T
                gemm(false, true, out_ch, static_cast<int>(ckk), static_cast<int>(hw_out), T(1), dyi,
                     static_cast<int>(hw_out), cols.data(), static_cast<int>(hw_out), T(1), gw.data(),
                     static_cast<int>(ckk));
                for (int oc = 0; oc < out_ch; ++oc) {
                    T acc = T(0);
                    for (long o = 0; o < hw_out; ++o) acc += dyi[oc * hw_out + o];
                    gb.v[oc] += acc;
                }
            }
            if (dx) {
                // dcols = w^T * dy_i
                gemm(true, false, static_cast<int>(ckk), static_cast<int>(hw_out), out_ch, T(1),
                     w.data(), static_cast<int>(ckk), dyi, static_cast<int>(hw_out), T(0),
                     dcols.data(), static_cast<int>(hw_out));
                col2im(dcols.data(), h, w_in, ho, wo, dx->data() + i * in_ch * h * w_in);
            }
        }
    }

private:
    void im2col(const T* img, int h, int w_in, int ho, int wo, T* cols) const {
        const long hw_out = static_cast<long>(ho) * wo;
        long row = 0;
        for (int c = 0; c < in_ch; ++c)
            for (int ky = 0; ky < ksize; ++ky)
                for (int kx = 0; kx < ksize; ++kx, ++row) {
                    T* dst = cols + row * hw_out;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int sy = oy * stride + ky - pad;
                        if (sy < 0 || sy >= h) {
                            for (int ox = 0; ox < wo; ++ox) dst[oy * wo + ox] = T(0);
                            continue;
                        }
                        const T* src = img + (static_cast<long>(c) * h + sy) * w_in;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int sx = ox * stride + kx - pad;
                            dst[oy * wo + ox] = (sx < 0 || sx >= w_in) ? T(0) : src[sx];
                        }
                    }
                }
    }

    void col2im(const T* dcols, int h, int w_in, int ho, int wo, T* dimg) const {
        const long hw_out = static_cast<long>(ho) * wo;
        long row = 0;
        for (int c = 0; c < in_ch; ++c)
            for (int ky = 0; ky < ksize; ++ky)
                for (int kx = 0; kx < ksize; ++kx, ++row) {
                    const T* src = dcols + row * hw_out;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int sy = oy * stride + ky - pad;
                        if (sy < 0 || sy >= h) continue;
                        T* dst = dimg + (static_cast<long>(c) * h + sy) * w_in;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int sx = ox * stride + kx - pad;
                            if (sx >= 0 && sx < w_in) dst[sx] += src[oy * wo + ox];
                        }
                    }
                }
    }
};

template <typename T>
struct Linear {
    int in_dim = 0, out_dim = 0;
    Tensor<T> w;   // (out, in)
    Tensor<T> b;   // (out)
    Tensor<T> gw;
    Tensor<T> gb;

    Linear() = default;
    Linear(int in, int out) : in_dim(in), out_dim(out) {
        w = Tensor<T>({out, in});
        b = Tensor<T>({out});
        gw = Tensor<T>(w.shape);
        gb = Tensor<T>(b.shape);
    }

    void init(RngStream& rng) { init_fan_in(w, b, in_dim, rng); }

    // x: (B, in) -> y: (B, out)
    void forward(const Tensor<T>& x, Tensor<T>& y) const {
        const long batch = x.shape[0];
        y = Tensor<T>({batch, out_dim});
        gemm(false, true, static_cast<int>(batch), out_dim, in_dim, T(1), x.data(), in_dim, w.data(),
             in_dim, T(0), y.data(), out_dim);
        for (long i = 0; i < batch; ++i)
            for (int o = 0; o < out_dim; ++o) y.v[i * out_dim + o] += b.v[o];
    }

    void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx,
                  bool accum_param_grads = true) {
        const long batch = x.shape[0];
        if (accum_param_grads) {
            gemm(true, false, out_dim, in_dim, static_cast<int>(batch), T(1), dy.data(), out_dim,
                 x.data(), in_dim, T(1), gw.data(), in_dim);
            for (long i = 0; i < batch; ++i)
                for (int o = 0; o < out_dim; ++o) gb.v[o] += dy.v[i * out_dim + o];
        }
        if (dx) {
            *dx = Tensor<T>(x.shape);
            gemm(false, false, static_cast<int>(batch), in_dim, out_dim, T(1), dy.data(), out_dim,
                 w.data(), in_dim, T(0), dx->data(), in_dim);
        }
    }
};

// Layer normalization over the last dimension, learnable gain and bias.
template <typename T>
struct LayerNorm {
    int dim = 0;
    T eps = T(1e-5);
    Tensor<T> w;  // gain
    Tensor<T> b;
    Tensor<T> gw;
    Tensor<T> gb;

    LayerNorm() = default;
    explicit LayerNorm(int d) : dim(d) {
        w = Tensor<T>({d});
        b = Tensor<T>({d});
        std::fill(w.v.begin(), w.v.end(), T(1));
        gw = Tensor<T>(w.shape);
        gb = Tensor<T>(b.shape);
    }

    void forward(const Tensor<T>& x, Tensor<T>& y, Tensor<T>& xhat) const {
        const long batch = x.shape[0];
        y = Tensor<T>(x.shape);
        xhat = Tensor<T>(x.shape);
        for (long i = 0; i < batch; ++i) {
            const T* xi = x.data() + i * dim;
            T mu = T(0);
            for (int j = 0; j < dim; ++j) mu += xi[j];
            mu /= T(dim);
            T var = T(0);
            for (int j = 0; j < dim; ++j) var += (xi[j] - mu) * (xi[j] - mu);
            var /= T(dim);
            const T inv = T(1) / std::sqrt(var + eps);
            for (int j = 0; j < dim; ++j) {
                const T xh = (xi[j] - mu) * inv;
                xhat.v[i * dim + j] = xh;
                y.v[i * dim + j] = w.v[j] * xh + b.v[j];
            }
        }
    }

    void backward(const Tensor<T>& x, const Tensor<T>& xhat, const Tensor<T>& dy, Tensor<T>* dx,
                  bool accum_param_grads = true) {
        const long batch = x.shape[0];
        if (accum_param_grads) {
            for (long i = 0; i < batch; ++i)
                for (int j = 0; j < dim; ++j) {
                    gw.v[j] += dy.v[i * dim + j] * xhat.v[i * dim + j];
                    gb.v[j] += dy.v[i * dim + j];
                }
        }
        if (!dx) return;
        *dx = Tensor<T>(x.shape);
        for (long i = 0; i < batch; ++i) {
            const T* xi = x.data() + i * dim;
            T mu = T(0);
            for (int j = 0; j < dim; ++j) mu += xi[j];
            mu /= T(dim);
            T var = T(0);
            for (int j = 0; j < dim; ++j) var += (xi[j] - mu) * (xi[j] - mu);
            var /= T(dim);
            const T inv = T(1) / std::sqrt(var + eps);
            // dxhat_j = dy_j * w_j; standard layer-norm backward
            T sum_dxh = T(0), sum_dxh_xh = T(0);
            for (int j = 0; j < dim; ++j) {
                const T dxh = dy.v[i * dim + j] * w.v[j];
                sum_dxh += dxh;
                sum_dxh_xh += dxh * xhat.v[i * dim + j];
            }
            for (int j = 0; j < dim; ++j) {
                const T dxh = dy.v[i * dim + j] * w.v[j];
                dx->v[i * dim + j] =
                    inv * (dxh - sum_dxh / T(dim) - xhat.v[i * dim + j] * sum_dxh_xh / T(dim));
            }
        }
    }
};

template <typename T>
void relu_inplace(Tensor<T>& x) {
    for (auto& v : x.v)
        if (v < T(0)) v = T(0);
}

// dy masked by the post-activation output (y == 0 where the unit was off).
template <typename T>
void relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy) {
    for (long i = 0; i < y.numel(); ++i)
        if (y.v[i] <= T(0)) dy.v[i] = T(0);
}

template <typename T>
void sigmoid_inplace(Tensor<T>& x) {
    for (auto& v : x.v) v = T(1) / (T(1) + std::exp(-v));
}

template <typename T>
void tanh_inplace(Tensor<T>& x) {
    for (auto& v : x.v) v = std::tanh(v);
}

}  // namespace madi
