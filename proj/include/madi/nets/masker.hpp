#pragma once

#include <stdexcept>

#include "madi/nets/layers.hpp"
#include "madi/nets/param_set.hpp"

namespace madi {

// Test hook overriding the masker output.
enum class MaskHook { none, ones, zeros };

// 3 -> h1 -> h2 -> 1 conv stack, k3 s1 p1, ReLU/ReLU/Sigmoid. Output mask has
// the input's spatial size, values in (0,1).
template <typename T>
struct Masker {
    Conv2d<T> c1, c2, c3;

    Masker() : Masker(32, 32) {}
    Masker(int h1, int h2) : c1(3, h1, 3, 1, 1), c2(h1, h2, 3, 1, 1), c3(h2, 1, 3, 1, 1) {}

    // Final layer scaled to ~0 so the first masks sit at sigmoid(~0) = 0.5;
    // biases start at zero so a zero input maps to exactly 0.5.
    void init(RngStream& rng) {
        c1.init(rng);
        c2.init(rng);
        c3.init(rng);
        c1.b.zero();
        c2.b.zero();
        for (auto& x : c3.w.v) x *= T(1e-4);
        c3.b.zero();
    }

    struct Cache {
        Tensor<T> x, a1, a2, mask;
        int h = 0, w = 0;
    };

    // x: (N, 3, H, W) -> mask: (N, 1, H, W)
    void forward(const Tensor<T>& x, int h, int w, Cache& cc) const {
        cc.x = x;
        cc.h = h;
        cc.w = w;
        c1.forward(x, h, w, cc.a1);
        relu_inplace(cc.a1);
        c2.forward(cc.a1, h, w, cc.a2);
        relu_inplace(cc.a2);
        c3.forward(cc.a2, h, w, cc.mask);
        sigmoid_inplace(cc.mask);
    }

    // dmask w.r.t. the sigmoid output; accumulates parameter grads, writes dx
    // when requested.
    void backward(const Cache& cc, const Tensor<T>& dmask, Tensor<T>* dx,
                  bool accum_param_grads = true) {
        Tensor<T> dpre(cc.mask.shape);
        for (long i = 0; i < cc.mask.numel(); ++i) {
            const T m = cc.mask.v[i];
            dpre.v[i] = dmask.v[i] * m * (T(1) - m);
        }
        Tensor<T> da2, da1;
        c3.backward(cc.a2, cc.h, cc.w, dpre, &da2, accum_param_grads);
        relu_backward_inplace(cc.a2, da2);
        c2.backward(cc.a1, cc.h, cc.w, da2, &da1, accum_param_grads);
        relu_backward_inplace(cc.a1, da1);
        c1.backward(cc.x, cc.h, cc.w, da1, dx, accum_param_grads);
    }

    ParamSet<T> params() {
        ParamSet<T> p;
        p.add("c1.w", c1.w, &c1.gw);
        p.add("c1.b", c1.b, &c1.gb);
        p.add("c2.w", c2.w, &c2.gw);
        p.add("c2.b", c2.b, &c2.gb);
        p.add("c3.w", c3.w, &c3.gw);
        p.add("c3.b", c3.b, &c3.gb);
        return p;
    }
};

// Cache for apply_mask so the critic backward can route gradients into the
// masker without re-running the forward pass.
template <typename T>
struct MaskApplyCache {
    typename Masker<T>::Cache mcache;
    Tensor<T> frames;  // (kB, 3, H, W), chunk-major: entry j*B+b is frame j of sample b
    long batch = 0;
    int k = 0, h = 0, w = 0;
    MaskHook hook = MaskHook::none;
};

// obs: (B, 3k, H, W); the k frames are reshaped into the batch dimension, one
// masker forward produces (kB, 1, H, W) masks, broadcast over each frame's
// RGB channels.
template <typename T>
void apply_mask(const Masker<T>& m, const Tensor<T>& obs, int h, int w, Tensor<T>& out,
                MaskApplyCache<T>& cc, MaskHook hook = MaskHook::none) {
    if (obs.shape.size() != 4 || obs.shape[1] % 3 != 0)
        throw std::invalid_argument("apply_mask: need (B, 3k, H, W) input");
    const long batch = obs.shape[0];
    const int k = static_cast<int>(obs.shape[1] / 3);
    const long hw = static_cast<long>(h) * w;
    cc.batch = batch;
    cc.k = k;
    cc.h = h;
    cc.w = w;
    cc.hook = hook;
    if (hook == MaskHook::ones) {
        out = obs;
        return;
    }
    if (hook == MaskHook::zeros) {
        out = Tensor<T>(obs.shape);
        return;
    }
    cc.frames = Tensor<T>({static_cast<long>(k) * batch, 3, h, w});
    for (int j = 0; j < k; ++j)
        for (long b = 0; b < batch; ++b)
            std::copy(obs.data() + (b * 3 * k + 3 * j) * hw, obs.data() + (b * 3 * k + 3 * j + 3) * hw,
                      cc.frames.data() + (static_cast<long>(j) * batch + b) * 3 * hw);
    m.forward(cc.frames, h, w, cc.mcache);
    out = Tensor<T>(obs.shape);
    for (int j = 0; j < k; ++j)
        for (long b = 0; b < batch; ++b) {
            const T* mk = cc.mcache.mask.data() + (static_cast<long>(j) * batch + b) * hw;
            for (int c = 0; c < 3; ++c) {
                const T* src = obs.data() + (b * 3 * k + 3 * j + c) * hw;
                T* dst = out.data() + (b * 3 * k + 3 * j + c) * hw;
                for (long i = 0; i < hw; ++i) dst[i] = src[i] * mk[i];
            }
        }
}

// dout: gradient w.r.t. the masked observation. Accumulates masker parameter
// grads (hook none); writes d(obs) when requested.
template <typename T>
void apply_mask_backward(Masker<T>& m, const Tensor<T>& obs, const Tensor<T>& dout,
                         MaskApplyCache<T>& cc, Tensor<T>* dobs, bool accum_param_grads = true) {
    const long batch = cc.batch;
    const int k = cc.k;
    const long hw = static_cast<long>(cc.h) * cc.w;
    if (cc.hook == MaskHook::ones) {
        if (dobs) *dobs = dout;
        return;
    }
    if (cc.hook == MaskHook::zeros) {
        if (dobs) *dobs = Tensor<T>(obs.shape);
        return;
    }
    Tensor<T> dmask({static_cast<long>(k) * batch, 1, cc.h, cc.w});
    for (int j = 0; j < k; ++j)
        for (long b = 0; b < batch; ++b) {
            T* dm = dmask.data() + (static_cast<long>(j) * batch + b) * hw;
            for (int c = 0; c < 3; ++c) {
                const T* g = dout.data() + (b * 3 * k + 3 * j + c) * hw;
                const T* src = obs.data() + (b * 3 * k + 3 * j + c) * hw;
                for (long i = 0; i < hw; ++i) dm[i] += g[i] * src[i];
            }
        }
    Tensor<T> dframes;
    m.backward(cc.mcache, dmask, dobs ? &dframes : static_cast<Tensor<T>*>(nullptr),
               accum_param_grads);
    if (dobs) {
        // Total derivative: the product path g * mask plus the masker-input path.
        *dobs = Tensor<T>(obs.shape);
        for (int j = 0; j < k; ++j)
            for (long b = 0; b < batch; ++b) {
                const T* mk = cc.mcache.mask.data() + (static_cast<long>(j) * batch + b) * hw;
                const T* df = dframes.data() + (static_cast<long>(j) * batch + b) * 3 * hw;
                for (int c = 0; c < 3; ++c) {
                    const T* g = dout.data() + (b * 3 * k + 3 * j + c) * hw;
                    T* dst = dobs->data() + (b * 3 * k + 3 * j + c) * hw;
                    for (long i = 0; i < hw; ++i) dst[i] = g[i] * mk[i] + df[c * hw + i];
                }
            }
    }
}

}  // namespace madi
