#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "madi/agents/agent.hpp"

namespace madi {

// min(Q1, Q2) of a raw (3k, H, W) uint8 observation through the agent's
// masked pathway, bypassing augmentation so the probe is deterministic.
template <typename T>
T min_q_of_obs(Agent<T>& agent, const Tensor<T>& obs_float, const Action& action) {
    Tensor<T> x = obs_float;  // (C, H, W) or (1, C, H, W)
    const long ch = x.shape.size() == 4 ? x.shape[1] : x.shape[0];
    x.shape = {1, ch, agent.net_size(), agent.net_size()};
    Tensor<T> net_in;
    MaskApplyCache<T> mcache;
    if (agent.algo().use_masker)
        apply_mask(agent.masker(), x, agent.net_size(), agent.net_size(), net_in, mcache,
                   agent.mask_hook());
    else
        net_in = x;
    typename Encoder<T>::Cache ecache;
    Tensor<T> feat;
    agent.encoder().forward(net_in, ecache, feat);
    Tensor<T> a({1, static_cast<long>(action.values.size())});
    for (size_t j = 0; j < action.values.size(); ++j) a.v[j] = T(action.values[j]);
    typename Critic<T>::Cache ccache;
    agent.critic().forward(feat, a, ccache);
    return std::min(ccache.q1.v[0], ccache.q2.v[0]);
}

// Central finite difference of min-Q w.r.t. each probed pixel's channels on
// the newest frame (step 2/255, inputs clamped to [0,1]), aggregated by
// max-abs over the three channels.
template <typename T>
std::vector<T> pixel_sensitivity(Agent<T>& agent, const std::vector<std::uint8_t>& obs,
                                 const Action& action,
                                 const std::vector<std::pair<int, int>>& pixels) {
    const int net = agent.net_size();
    const long hw = static_cast<long>(net) * net;
    const int channels = static_cast<int>(obs.size() / hw);
    Tensor<T> base({static_cast<long>(channels), net, net});
    for (size_t i = 0; i < obs.size(); ++i) base.v[i] = T(obs[i]) / T(255);
    const T h = T(1) / T(255);
    std::vector<T> out;
    out.reserve(pixels.size());
    for (const auto& [y, x] : pixels) {
        T best = T(0);
        for (int c = 0; c < 3; ++c) {
            const long idx = (static_cast<long>(channels - 3 + c) * net + y) * net + x;
            const T orig = base.v[idx];
            base.v[idx] = std::clamp(orig + h, T(0), T(1));
            const T qp = min_q_of_obs(agent, base, action);
            base.v[idx] = std::clamp(orig - h, T(0), T(1));
            const T qm = min_q_of_obs(agent, base, action);
            base.v[idx] = orig;
            best = std::max(best, std::abs((qp - qm) / (T(2) * h)));
        }
        out.push_back(best);
    }
    return out;
}

// Mean mask value over task pixels vs background pixels of the newest frame.
template <typename T>
std::pair<T, T> mask_stats(Agent<T>& agent, const Observation& obs,
                           const std::vector<std::pair<int, int>>& task_pixels) {
    const int net = agent.net_size();
    if (!agent.algo().use_masker || agent.mask_hook() == MaskHook::ones) return {T(1), T(1)};
    if (agent.mask_hook() == MaskHook::zeros) return {T(0), T(0)};
    const Frame& newest = obs.frames.back();
    Tensor<T> x({1, 3, net, net});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < net; ++y)
            for (int xx = 0; xx < net; ++xx)
                x.v[(static_cast<long>(c) * net + y) * net + xx] = T(newest.at(y, xx, c)) / T(255);
    typename Masker<T>::Cache cc;
    agent.masker().forward(x, net, net, cc);
    std::vector<bool> is_task(static_cast<size_t>(net) * net, false);
    for (const auto& [y, xx] : task_pixels)
        if (y >= 0 && y < net && xx >= 0 && xx < net) is_task[static_cast<size_t>(y) * net + xx] = true;
    double task_sum = 0.0, bg_sum = 0.0;
    long task_n = 0, bg_n = 0;
    for (long i = 0; i < static_cast<long>(net) * net; ++i) {
        if (is_task[i]) {
            task_sum += cc.mask.v[i];
            ++task_n;
        } else {
            bg_sum += cc.mask.v[i];
            ++bg_n;
        }
    }
    return {task_n ? T(task_sum / task_n) : T(0), bg_n ? T(bg_sum / bg_n) : T(0)};
}

// Mean and standard error over seeds of the per-seed average return across
// eval points in the last 10% of training (step >= 0.9 * total, inclusive).
struct FinalScore {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::vector<double> per_seed;
};

inline double final_window_mean(const std::vector<std::pair<long, double>>& eval_points,
                                long total_steps) {
    const double boundary = 0.9 * static_cast<double>(total_steps);
    double sum = 0.0;
    long n = 0;
    for (const auto& [step, ret] : eval_points)
        if (static_cast<double>(step) >= boundary) {
            sum += ret;
            ++n;
        }
    if (n == 0) throw std::runtime_error("final_window_mean: no eval points in the last 10%");
    return sum / static_cast<double>(n);
}

inline FinalScore final_score(const std::vector<double>& per_seed_means) {
    FinalScore f;
    f.per_seed = per_seed_means;
    const size_t n = per_seed_means.size();
    if (n == 0) throw std::runtime_error("final_score: no seeds");
    for (double v : per_seed_means) f.mean += v;
    f.mean /= static_cast<double>(n);
    if (n >= 2) {
        double var = 0.0;
        for (double v : per_seed_means) var += (v - f.mean) * (v - f.mean);
        var /= static_cast<double>(n - 1);
        f.stderr_ = std::sqrt(var / static_cast<double>(n));
    }
    return f;
}

}  // namespace madi
