#pragma once

#include <stdexcept>
#include <vector>

#include "madi/nets/layers.hpp"
#include "madi/nets/param_set.hpp"

namespace madi {

// Shared projection (Linear -> LayerNorm -> Tanh, same shape as the actor's)
// feeding two independent trunks on [projected features, action], scalar
// output each.
template <typename T>
struct Critic {
    int feature_dim = 0, proj_dim = 0, trunk_dim = 0, hidden_layers = 0, action_dim = 0;
    Linear<T> proj;
    LayerNorm<T> ln;

    struct Trunk {
        std::vector<Linear<T>> layers;
        Linear<T> head;
    };
    Trunk q1, q2;

    Critic() = default;
    Critic(int features, int projection, int width, int layers, int act_dim)
        : feature_dim(features),
          proj_dim(projection),
          trunk_dim(width),
          hidden_layers(layers),
          action_dim(act_dim),
          proj(features, projection),
          ln(projection) {
        for (Trunk* t : {&q1, &q2}) {
            int in = projection + act_dim;
            for (int i = 0; i < layers; ++i) {
                t->layers.emplace_back(in, width);
                in = width;
            }
            t->head = Linear<T>(in, 1);
        }
    }

    void init(RngStream& rng) {
        proj.init(rng);
        for (Trunk* t : {&q1, &q2}) {
            for (auto& l : t->layers) l.init(rng);
            t->head.init(rng);
        }
    }

    struct Cache {
        Tensor<T> features, p, xhat, pt;  // projection pre-LN, LN xhat, post-tanh
        Tensor<T> joined;                 // (B, proj_dim + action_dim)
        std::vector<Tensor<T>> acts1, acts2;
        Tensor<T> q1, q2;  // (B, 1)
    };

    void forward(const Tensor<T>& features, const Tensor<T>& action, Cache& cc) const {
        const long batch = features.shape[0];
        if (action.shape[0] != batch) throw std::invalid_argument("Critic: batch mismatch");
        cc.features = features;
        Tensor<T> pre;
        proj.forward(features, pre);
        cc.p = pre;
        ln.forward(pre, cc.pt, cc.xhat);
        tanh_inplace(cc.pt);
        cc.joined = Tensor<T>({batch, static_cast<long>(proj_dim) + action_dim});
        for (long i = 0; i < batch; ++i) {
            std::copy(cc.pt.data() + i * proj_dim, cc.pt.data() + (i + 1) * proj_dim,
                      cc.joined.data() + i * (proj_dim + action_dim));
            std::copy(action.data() + i * action_dim, action.data() + (i + 1) * action_dim,
                      cc.joined.data() + i * (proj_dim + action_dim) + proj_dim);
        }
        forward_trunk(q1, cc.joined, cc.acts1, cc.q1);
        forward_trunk(q2, cc.joined, cc.acts2, cc.q2);
    }

    // dq1/dq2: (B, 1). Writes d(action) and/or d(features) when requested.
    void backward(const Cache& cc, const Tensor<T>& dq1, const Tensor<T>& dq2, Tensor<T>* dfeatures,
                  Tensor<T>* daction, bool accum_param_grads = true) {
        Tensor<T> djoined(cc.joined.shape);
        backward_trunk(q1, cc.joined, cc.acts1, dq1, djoined, accum_param_grads);
        backward_trunk(q2, cc.joined, cc.acts2, dq2, djoined, accum_param_grads);
        const long batch = cc.joined.shape[0];
        if (daction) {
            *daction = Tensor<T>({batch, static_cast<long>(action_dim)});
            for (long i = 0; i < batch; ++i)
                std::copy(djoined.data() + i * (proj_dim + action_dim) + proj_dim,
                          djoined.data() + (i + 1) * (proj_dim + action_dim),
                          daction->data() + i * action_dim);
        }
        Tensor<T> dpt({batch, static_cast<long>(proj_dim)});
        for (long i = 0; i < batch; ++i)
            std::copy(djoined.data() + i * (proj_dim + action_dim),
                      djoined.data() + i * (proj_dim + action_dim) + proj_dim,
                      dpt.data() + i * proj_dim);
        for (long i = 0; i < dpt.numel(); ++i) dpt.v[i] *= T(1) - cc.pt.v[i] * cc.pt.v[i];
        Tensor<T> dp;
        ln.backward(cc.p, cc.xhat, dpt, &dp, accum_param_grads);
        proj.backward(cc.features, dp, dfeatures, accum_param_grads);
    }

    ParamSet<T> params() {
        ParamSet<T> p;
        p.add("proj.w", proj.w, &proj.gw);
        p.add("proj.b", proj.b, &proj.gb);
        p.add("ln.w", ln.w, &ln.gw);
        p.add("ln.b", ln.b, &ln.gb);
        add_trunk(p, "q1", q1);
        add_trunk(p, "q2", q2);
        return p;
    }

private:
    void forward_trunk(const Trunk& t, const Tensor<T>& joined, std::vector<Tensor<T>>& acts,
                       Tensor<T>& q) const {
        acts.assign(t.layers.size(), {});
        const Tensor<T>* cur = &joined;
        for (size_t i = 0; i < t.layers.size(); ++i) {
            t.layers[i].forward(*cur, acts[i]);
            relu_inplace(acts[i]);
            cur = &acts[i];
        }
        t.head.forward(*cur, q);
    }

    // Accumulates into djoined (+=).
    void backward_trunk(Trunk& t, const Tensor<T>& joined, const std::vector<Tensor<T>>& acts,
                        const Tensor<T>& dq, Tensor<T>& djoined, bool accum_param_grads) {
        const Tensor<T>& last = acts.empty() ? joined : acts.back();
        Tensor<T> grad;
        t.head.backward(last, dq, &grad, accum_param_grads);
        for (long i = static_cast<long>(t.layers.size()) - 1; i >= 0; --i) {
            relu_backward_inplace(acts[i], grad);
            const Tensor<T>& input = (i == 0) ? joined : acts[i - 1];
            Tensor<T> dinput;
            t.layers[i].backward(input, grad, &dinput, accum_param_grads);
            grad = std::move(dinput);
        }
        for (long i = 0; i < djoined.numel(); ++i) djoined.v[i] += grad.v[i];
    }

    static void add_trunk(ParamSet<T>& p, const std::string& prefix, Trunk& t) {
        for (size_t i = 0; i < t.layers.size(); ++i) {
            const std::string base = prefix + ".l" + std::to_string(i);
            p.add(base + ".w", t.layers[i].w, &t.layers[i].gw);
            p.add(base + ".b", t.layers[i].b, &t.layers[i].gb);
        }
        p.add(prefix + ".head.w", t.head.w, &t.head.gw);
        p.add(prefix + ".head.b", t.head.b, &t.head.gb);
    }
};

}  // namespace madi
