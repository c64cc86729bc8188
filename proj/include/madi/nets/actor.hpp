#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "madi/nets/layers.hpp"
#include "madi/nets/param_set.hpp"

namespace madi {

inline constexpr double kLogStdMin = -10.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kEpsNum = 1e-6;  // tanh Jacobian guard

// projection Linear -> LayerNorm -> Tanh, then `hidden_layers` ReLU layers,
// then a 2d head giving (mean, log_std). log_std hard-clamped to [-10, 2].
template <typename T>
struct Actor {
    int feature_dim = 0, proj_dim = 0, trunk_dim = 0, hidden_layers = 0, action_dim = 0;
    Linear<T> proj;
    LayerNorm<T> ln;
    std::vector<Linear<T>> trunk;
    Linear<T> head;

    Actor() = default;
    Actor(int features, int projection, int width, int layers, int act_dim)
        : feature_dim(features),
          proj_dim(projection),
          trunk_dim(width),
          hidden_layers(layers),
          action_dim(act_dim),
          proj(features, projection),
          ln(projection) {
        int in = projection;
        for (int i = 0; i < layers; ++i) {
            trunk.emplace_back(in, width);
            in = width;
        }
        head = Linear<T>(in, 2 * act_dim);
    }

    void init(RngStream& rng) {
        proj.init(rng);
        for (auto& l : trunk) l.init(rng);
        head.init(rng);
    }

    struct Cache {
        Tensor<T> features, p, xhat, pt;     // projection pre-LN, LN xhat, post-tanh
        std::vector<Tensor<T>> acts;         // post-ReLU trunk activations
        Tensor<T> raw;                       // (B, 2d) head output before clamp
        Tensor<T> mean, log_std;             // (B, d)
        std::vector<bool> clamped;           // per log_std element
    };

    void forward(const Tensor<T>& features, Cache& cc) const {
        const long batch = features.shape[0];
        cc.features = features;
        Tensor<T> pre;
        proj.forward(features, pre);
        cc.p = pre;
        ln.forward(pre, cc.pt, cc.xhat);
        tanh_inplace(cc.pt);
        cc.acts.assign(trunk.size(), {});
        const Tensor<T>* cur = &cc.pt;
        for (size_t i = 0; i < trunk.size(); ++i) {
            trunk[i].forward(*cur, cc.acts[i]);
            relu_inplace(cc.acts[i]);
            cur = &cc.acts[i];
        }
        head.forward(*cur, cc.raw);
        cc.mean = Tensor<T>({batch, action_dim});
        cc.log_std = Tensor<T>({batch, action_dim});
        cc.clamped.assign(static_cast<size_t>(batch) * action_dim, false);
        for (long i = 0; i < batch; ++i)
            for (int j = 0; j < action_dim; ++j) {
                cc.mean.v[i * action_dim + j] = cc.raw.v[i * 2 * action_dim + j];
                T ls = cc.raw.v[i * 2 * action_dim + action_dim + j];
                if (ls < T(kLogStdMin)) {
                    ls = T(kLogStdMin);
                    cc.clamped[i * action_dim + j] = true;
                } else if (ls > T(kLogStdMax)) {
                    ls = T(kLogStdMax);
                    cc.clamped[i * action_dim + j] = true;
                }
                cc.log_std.v[i * action_dim + j] = ls;
            }
    }

    // Reparameterized sample a = tanh(mu + sigma * eps); log_prob with the
    // change-of-variables correction sum log(1 - a^2 + eps_num).
    struct Sample {
        Tensor<T> eps, u, a;   // (B, d)
        Tensor<T> log_prob;    // (B)
    };

    void sample(const Cache& cc, const Tensor<T>& eps, Sample& s) const {
        const long batch = cc.mean.shape[0];
        if (!eps.same_shape(cc.mean)) throw std::invalid_argument("Actor::sample: eps shape mismatch");
        s.eps = eps;
        s.u = Tensor<T>({batch, action_dim});
        s.a = Tensor<T>({batch, action_dim});
        s.log_prob = Tensor<T>({batch});
        const T half_log_2pi = T(0.5) * T(std::log(2.0 * M_PI));
        for (long i = 0; i < batch; ++i) {
            T lp = T(0);
            for (int j = 0; j < action_dim; ++j) {
                const long idx = i * action_dim + j;
                const T sigma = std::exp(cc.log_std.v[idx]);
                const T u = cc.mean.v[idx] + sigma * eps.v[idx];
                const T a = std::tanh(u);
                s.u.v[idx] = u;
                s.a.v[idx] = a;
                lp += -T(0.5) * eps.v[idx] * eps.v[idx] - cc.log_std.v[idx] - half_log_2pi -
                      std::log(T(1) - a * a + T(kEpsNum));
            }
            s.log_prob.v[i] = lp;
        }
    }

    // Deterministic evaluation policy.
    void mean_action(const Cache& cc, Tensor<T>& a) const {
        a = cc.mean;
        tanh_inplace(a);
    }

    // Backward through the MLP given gradients w.r.t. mean and log_std;
    // clamped log_std entries receive zero gradient.
    void backward(const Cache& cc, const Tensor<T>& dmean, const Tensor<T>& dlog_std,
                  Tensor<T>* dfeatures, bool accum_param_grads = true) {
        const long batch = cc.mean.shape[0];
        Tensor<T> draw({batch, 2L * action_dim});
        for (long i = 0; i < batch; ++i)
            for (int j = 0; j < action_dim; ++j) {
                draw.v[i * 2 * action_dim + j] = dmean.v[i * action_dim + j];
                draw.v[i * 2 * action_dim + action_dim + j] =
                    cc.clamped[i * action_dim + j] ? T(0) : dlog_std.v[i * action_dim + j];
            }
        const Tensor<T>& last = trunk.empty() ? cc.pt : cc.acts.back();
        Tensor<T> grad;
        head.backward(last, draw, &grad, accum_param_grads);
        for (long i = static_cast<long>(trunk.size()) - 1; i >= 0; --i) {
            relu_backward_inplace(cc.acts[i], grad);
            const Tensor<T>& input = (i == 0) ? cc.pt : cc.acts[i - 1];
            Tensor<T> dinput;
            trunk[i].backward(input, grad, &dinput, accum_param_grads);
            grad = std::move(dinput);
        }
        // tanh backward: dpre_ln_out = grad * (1 - pt^2)
        for (long i = 0; i < grad.numel(); ++i) grad.v[i] *= T(1) - cc.pt.v[i] * cc.pt.v[i];
        Tensor<T> dp;
        ln.backward(cc.p, cc.xhat, grad, &dp, accum_param_grads);
        proj.backward(cc.features, dp, dfeatures, accum_param_grads);
    }

    // Gradients of sum_b w_b * log_prob_b with respect to mean/log_std, for a
    // fixed reparameterization noise eps.
    static void log_prob_grads(const Cache& cc, const Sample& s, const Tensor<T>& weight,
                               Tensor<T>& dmean, Tensor<T>& dlog_std) {
        const long batch = cc.mean.shape[0];
        const int d = static_cast<int>(cc.mean.shape[1]);
        dmean = Tensor<T>(cc.mean.shape);
        dlog_std = Tensor<T>(cc.mean.shape);
        for (long i = 0; i < batch; ++i)
            for (int j = 0; j < d; ++j) {
                const long idx = i * d + j;
                const T a = s.a.v[idx];
                const T sigma = std::exp(cc.log_std.v[idx]);
                const T g = T(2) * a * (T(1) - a * a) / (T(1) - a * a + T(kEpsNum));
                dmean.v[idx] = weight.v[i] * g;
                dlog_std.v[idx] = weight.v[i] * (-T(1) + g * sigma * s.eps.v[idx]);
            }
    }

    ParamSet<T> params() {
        ParamSet<T> p;
        p.add("proj.w", proj.w, &proj.gw);
        p.add("proj.b", proj.b, &proj.gb);
        p.add("ln.w", ln.w, &ln.gw);
        p.add("ln.b", ln.b, &ln.gb);
        for (size_t i = 0; i < trunk.size(); ++i) {
            const std::string base = "trunk" + std::to_string(i);
            p.add(base + ".w", trunk[i].w, &trunk[i].gw);
            p.add(base + ".b", trunk[i].b, &trunk[i].gb);
        }
        p.add("head.w", head.w, &head.gw);
        p.add("head.b", head.b, &head.gb);
        return p;
    }
};

}  // namespace madi
