#pragma once

#include <stdexcept>
#include <vector>

#include "madi/nets/layers.hpp"
#include "madi/nets/param_set.hpp"

namespace madi {

// Conv stack: first layer stride 2, the rest stride 1; 3x3 kernels, no
// padding, ReLU after each layer; flattened output.
template <typename T>
struct Encoder {
    int in_ch = 0, depth = 0, channels = 0, in_h = 0, in_w = 0;
    std::vector<Conv2d<T>> convs;
    std::vector<std::pair<int, int>> dims;  // input spatial size of each layer
    int out_h = 0, out_w = 0;

    Encoder() = default;
    Encoder(int in_channels, int d, int ch, int h, int w)
        : in_ch(in_channels), depth(d), channels(ch), in_h(h), in_w(w) {
        if (depth < 1) throw std::invalid_argument("Encoder: depth must be >= 1");
        int cur_h = h, cur_w = w, cur_c = in_ch;
        for (int i = 0; i < depth; ++i) {
            const int stride = (i == 0) ? 2 : 1;
            convs.emplace_back(cur_c, channels, 3, stride, 0);
            dims.emplace_back(cur_h, cur_w);
            cur_h = convs.back().out_dim(cur_h);
            cur_w = convs.back().out_dim(cur_w);
            cur_c = channels;
            if (cur_h < 1 || cur_w < 1)
                throw std::invalid_argument("Encoder: input too small for requested depth");
        }
        out_h = cur_h;
        out_w = cur_w;
    }

    long feature_dim() const { return static_cast<long>(channels) * out_h * out_w; }

    void init(RngStream& rng) {
        for (auto& c : convs) c.init(rng);
    }

    struct Cache {
        Tensor<T> x;
        std::vector<Tensor<T>> acts;  // post-ReLU output of each layer
    };

    // x: (B, in_ch, H, W) -> features: (B, feature_dim), flatten = reshape.
    void forward(const Tensor<T>& x, Cache& cc, Tensor<T>& features) const {
        cc.x = x;
        cc.acts.assign(depth, {});
        const Tensor<T>* cur = &x;
        for (int i = 0; i < depth; ++i) {
            convs[i].forward(*cur, dims[i].first, dims[i].second, cc.acts[i]);
            relu_inplace(cc.acts[i]);
            cur = &cc.acts[i];
        }
        features = cc.acts.back();
        features.shape = {x.shape[0], feature_dim()};
    }

    void backward(const Cache& cc, const Tensor<T>& dfeatures, Tensor<T>* dx,
                  bool accum_param_grads = true) {
        Tensor<T> grad = dfeatures;
        grad.shape = {dfeatures.shape[0], channels, out_h, out_w};
        for (int i = depth - 1; i >= 0; --i) {
            relu_backward_inplace(cc.acts[i], grad);
            const Tensor<T>& input = (i == 0) ? cc.x : cc.acts[i - 1];
            Tensor<T> dinput;
            Tensor<T>* dst = (i == 0) ? dx : &dinput;
            convs[i].backward(input, dims[i].first, dims[i].second, grad, dst, accum_param_grads);
            if (i > 0) grad = std::move(dinput);
        }
    }

    ParamSet<T> params() {
        ParamSet<T> p;
        for (size_t i = 0; i < convs.size(); ++i) {
            const std::string base = "conv" + std::to_string(i);
            p.add(base + ".w", convs[i].w, &convs[i].gw);
            p.add(base + ".b", convs[i].b, &convs[i].gb);
        }
        return p;
    }
};

}  // namespace madi
