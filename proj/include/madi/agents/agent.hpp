#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "madi/agents/algorithm.hpp"
#include "madi/augment/augment.hpp"
#include "madi/core/hyperparams.hpp"
#include "madi/core/replay_buffer.hpp"
#include "madi/envs/reacher.hpp"
#include "madi/nets/actor.hpp"
#include "madi/nets/critic.hpp"
#include "madi/nets/encoder.hpp"
#include "madi/nets/masker.hpp"
#include "madi/nets/param_set.hpp"

namespace madi {

enum class Phase { act, critic, actor_update };

// One actor-critic core shared by all algorithms; they differ only in
// augmentation placement, the masking front-end, and critic-batch doubling.
// The class is a value type: copying it (networks, optimizers, rng streams)
// yields an independent agent that will reproduce the original's arithmetic,
// which the finite-difference tests rely on.
template <typename T>
class Agent {
public:
    Agent(const HyperParams& hp, const AlgorithmSpec& algo, int render_size, int action_dim,
          std::uint64_t seed)
        : hp_(hp),
          algo_(algo),
          render_size_(render_size),
          net_size_(algo.augment.kind == AugmentKind::crop ? algo.augment.crop_target : render_size),
          action_dim_(action_dim),
          channels_(3 * hp.frame_stack),
          target_entropy_(-static_cast<T>(action_dim)),
          masker_(hp.masker_channels, hp.masker_channels),
          encoder_(channels_, hp.encoder_layers, hp.encoder_channels, net_size_, net_size_),
          actor_(static_cast<int>(encoder_.feature_dim()), hp.projection_dim, hp.trunk_dim, 3,
                 action_dim),
          critic_(static_cast<int>(encoder_.feature_dim()), hp.projection_dim, hp.trunk_dim, 3,
                  action_dim),
          augment_rng_(0),
          act_noise_rng_(0),
          update_noise_rng_(0),
          sample_rng_(0),
          warmup_rng_(0) {
        hp_.validate();
        algo_.validate();
        if (algo.augment.kind == AugmentKind::crop && algo.augment.crop_source != render_size)
            throw std::invalid_argument("Agent: crop source must equal the render size");
        RngStream master(seed);
        {
            RngStream r = master.substream("net-init.masker");
            masker_.init(r);
        }
        {
            RngStream r = master.substream("net-init.encoder");
            encoder_.init(r);
        }
        {
            RngStream r = master.substream("net-init.actor");
            actor_.init(r);
        }
        {
            RngStream r = master.substream("net-init.critic");
            critic_.init(r);
        }
        encoder_tgt_ = encoder_;
        critic_tgt_ = critic_;
        log_alpha_ = Tensor<T>({1});
        log_alpha_.v[0] = std::log(T(hp.init_temperature));
        glog_alpha_ = Tensor<T>({1});
        augment_rng_ = master.substream("augment.draws");
        augment_ns_seed_ = master.substream("augment.images").seed();
        act_noise_rng_ = master.substream("act-noise");
        update_noise_rng_ = master.substream("update-noise");
        sample_rng_ = master.substream("buffer-sample");
        warmup_rng_ = master.substream("warmup");
        auto cp = critic_params();
        opt_critic_ = Adam<T>(cp, T(hp.lr_critic), T(hp.adam_beta1), T(hp.adam_beta2));
        auto ep = encoder_.params();
        opt_encoder_ = Adam<T>(ep, T(hp.lr_critic), T(hp.adam_beta1), T(hp.adam_beta2));
        auto mp = masker_.params();
        opt_masker_ = Adam<T>(mp, T(hp.lr_masker), T(hp.adam_beta1), T(hp.adam_beta2));
        auto ap = actor_.params();
        opt_actor_ = Adam<T>(ap, T(hp.lr_actor), T(hp.adam_beta1), T(hp.adam_beta2));
        auto lp = alpha_params();
        opt_alpha_ = Adam<T>(lp, T(hp.lr_temperature), T(hp.adam_beta1_temperature),
                             T(hp.adam_beta2_temperature));
    }

    const HyperParams& hp() const { return hp_; }
    const AlgorithmSpec& algo() const { return algo_; }
    int net_size() const { return net_size_; }
    int render_size() const { return render_size_; }
    int action_dim() const { return action_dim_; }
    T alpha() const { return std::exp(log_alpha_.v[0]); }
    void set_mask_hook(MaskHook h) { mask_hook_ = h; }
    MaskHook mask_hook() const { return mask_hook_; }

    Masker<T>& masker() { return masker_; }
    Encoder<T>& encoder() { return encoder_; }
    Encoder<T>& encoder_tgt() { return encoder_tgt_; }
    Actor<T>& actor() { return actor_; }
    Critic<T>& critic() { return critic_; }
    Critic<T>& critic_tgt() { return critic_tgt_; }
    RngStream& sample_rng() { return sample_rng_; }

    ParamSet<T> critic_params() { return critic_.params(); }
    ParamSet<T> alpha_params() {
        ParamSet<T> p;
        p.add("log_alpha", log_alpha_, &glog_alpha_);
        return p;
    }

    struct Processed {
        Tensor<T> net_in;   // final network input, (N', 3k, net, net)
        Tensor<T> premask;  // apply_mask input when a masker is used
        MaskApplyCache<T> mcache;
        bool masked = false;
    };

    // Phase pipeline: float conversion, then (rad) crop at every phase, (drq)
    // shift at update phases, (svea/madi) clean+overlay doubling at the critic
    // phase, and finally the mask for use_masker algorithms.
    void preprocess(const std::uint8_t* obs, long n, Phase phase, RngStream& rng, Processed& out) {
        const long plane = static_cast<long>(render_size_) * render_size_;
        Tensor<T> x({n, static_cast<long>(channels_), render_size_, render_size_});
        for (long i = 0; i < x.numel(); ++i) x.v[i] = T(obs[i]) / T(255);
        int h = render_size_, w = render_size_;
        if (algo_.augment.kind == AugmentKind::crop) {
            const int t = algo_.augment.crop_target;
            Tensor<T> cropped({n, static_cast<long>(channels_), t, t});
            std::vector<float> fobs(static_cast<size_t>(channels_) * plane);
            for (long i = 0; i < n; ++i) {
                const T* src = x.data() + i * channels_ * plane;
                for (size_t j = 0; j < fobs.size(); ++j) fobs[j] = static_cast<float>(src[j]);
                const auto c = random_crop(fobs.data(), channels_, h, w, t, t, rng);
                T* dst = cropped.data() + i * channels_ * t * t;
                for (size_t j = 0; j < c.size(); ++j) dst[j] = T(c[j]);
            }
            x = std::move(cropped);
            h = w = t;
        }
        const long hw = static_cast<long>(h) * w;
        const bool update_phase = phase != Phase::act;
        if (algo_.augment.kind == AugmentKind::shift && update_phase) {
            std::vector<float> fobs(static_cast<size_t>(channels_) * hw);
            for (long i = 0; i < n; ++i) {
                T* p = x.data() + i * channels_ * hw;
                for (size_t j = 0; j < fobs.size(); ++j) fobs[j] = static_cast<float>(p[j]);
                random_shift(fobs.data(), channels_, h, w, algo_.augment.shift_radius, rng);
                for (size_t j = 0; j < fobs.size(); ++j) p[j] = T(fobs[j]);
            }
        }
        if (algo_.doubling && phase == Phase::critic) {
            Tensor<T> doubled({2 * n, static_cast<long>(channels_), h, w});
            std::copy(x.v.begin(), x.v.end(), doubled.v.begin());
            std::vector<float> fobs(static_cast<size_t>(channels_) * hw);
            for (long i = 0; i < n; ++i) {
                const T* src = x.data() + i * channels_ * hw;
                for (size_t j = 0; j < fobs.size(); ++j) fobs[j] = static_cast<float>(src[j]);
                const Frame img = image_source_next(augment_ns_seed_, rng, h, w);
                overlay(fobs.data(), channels_, h, w, img, algo_.augment.overlay_alpha);
                T* dst = doubled.data() + (n + i) * channels_ * hw;
                for (size_t j = 0; j < fobs.size(); ++j) dst[j] = T(fobs[j]);
            }
            x = std::move(doubled);
        }
        if (algo_.use_masker) {
            out.premask = std::move(x);
            apply_mask(masker_, out.premask, h, w, out.net_in, out.mcache, mask_hook_);
            out.masked = true;
        } else {
            out.net_in = std::move(x);
            out.masked = false;
        }
    }

    // y = r + bootstrap * gamma * (min Q_tgt(s', a') - alpha * log pi(a'|s')),
    // duplicated over the augmented half when doubling.
    Tensor<T> critic_target(const Batch& batch) {
        const long n = batch.size;
        Processed proc;
        preprocess(batch.next_obs.data(), n, Phase::act, augment_rng_, proc);
        typename Encoder<T>::Cache ecache;
        Tensor<T> feat;
        encoder_tgt_.forward(proc.net_in, ecache, feat);
        typename Actor<T>::Cache acache;
        actor_.forward(feat, acache);
        Tensor<T> eps({n, static_cast<long>(action_dim_)});
        for (auto& e : eps.v) e = T(update_noise_rng_.normal());
        typename Actor<T>::Sample s;
        actor_.sample(acache, eps, s);
        typename Critic<T>::Cache ccache;
        critic_tgt_.forward(feat, s.a, ccache);
        const T a = alpha();
        const long out_n = algo_.doubling ? 2 * n : n;
        Tensor<T> y({out_n});
        for (long i = 0; i < n; ++i) {
            const T q = std::min(ccache.q1.v[i], ccache.q2.v[i]);
            y.v[i] = T(batch.rewards[i]) +
                     T(batch.bootstrap[i]) * T(hp_.discount) * (q - a * s.log_prob.v[i]);
        }
        for (long i = n; i < out_n; ++i) y.v[i] = y.v[i - n];
        return y;
    }

    // L_Q = svea_alpha * mean_clean + svea_beta * mean_aug of
    // sum_i (Q_i - y)^2; plain mean without doubling. Fills critic, encoder
    // and masker gradients; does not step the optimizers.
    T compute_critic_grads(const Batch& batch, const Tensor<T>* y_override = nullptr) {
        zero_grads(critic_.params());
        zero_grads(encoder_.params());
        zero_grads(masker_.params());
        Tensor<T> y = y_override ? *y_override : critic_target(batch);
        Processed proc;
        preprocess(batch.obs.data(), batch.size, Phase::critic, augment_rng_, proc);
        const long n = proc.net_in.shape[0];
        typename Encoder<T>::Cache ecache;
        Tensor<T> feat;
        encoder_.forward(proc.net_in, ecache, feat);
        Tensor<T> actions({n, static_cast<long>(action_dim_)});
        for (long i = 0; i < n; ++i) {
            const long src = i % batch.size;
            for (int j = 0; j < action_dim_; ++j)
                actions.v[i * action_dim_ + j] = T(batch.actions[src * action_dim_ + j]);
        }
        typename Critic<T>::Cache ccache;
        critic_.forward(feat, actions, ccache);
        Tensor<T> dq1({n, 1L}), dq2({n, 1L});
        T loss = T(0);
        for (long i = 0; i < n; ++i) {
            const T w = algo_.doubling
                            ? (i < batch.size ? T(hp_.svea_alpha) : T(hp_.svea_beta)) / T(batch.size)
                            : T(1) / T(batch.size);
            const T e1 = ccache.q1.v[i] - y.v[i];
            const T e2 = ccache.q2.v[i] - y.v[i];
            loss += w * (e1 * e1 + e2 * e2);
            dq1.v[i] = w * T(2) * e1;
            dq2.v[i] = w * T(2) * e2;
        }
        Tensor<T> dfeat;
        critic_.backward(ccache, dq1, dq2, &dfeat, nullptr, true);
        if (algo_.use_masker) {
            Tensor<T> dx;
            encoder_.backward(ecache, dfeat, &dx, true);
            apply_mask_backward(masker_, proc.premask, dx, proc.mcache,
                                static_cast<Tensor<T>*>(nullptr), true);
        } else {
            encoder_.backward(ecache, dfeat, nullptr, true);
        }
        return loss;
    }

    T update_critic(const Batch& batch) {
        const T loss = compute_critic_grads(batch);
        auto cp = critic_.params();
        opt_critic_.step(cp);
        auto ep = encoder_.params();
        opt_encoder_.step(ep);
        if (algo_.use_masker) {
            auto mp = masker_.params();
            opt_masker_.step(mp);
        }
        return loss;
    }

    // L_pi = mean(alpha * log pi(a~|s) - min Q(s, a~)); features are detached
    // at the encoder output, so only actor gradients accumulate.
    T compute_actor_grads(const Batch& batch, const Tensor<T>* eps_override = nullptr) {
        zero_grads(actor_.params());
        Processed proc;
        preprocess(batch.obs.data(), batch.size, Phase::actor_update, augment_rng_, proc);
        const long n = batch.size;
        typename Encoder<T>::Cache ecache;
        Tensor<T> feat;
        encoder_.forward(proc.net_in, ecache, feat);
        typename Actor<T>::Cache acache;
        actor_.forward(feat, acache);
        Tensor<T> eps({n, static_cast<long>(action_dim_)});
        if (eps_override)
            eps = *eps_override;
        else
            for (auto& e : eps.v) e = T(update_noise_rng_.normal());
        typename Actor<T>::Sample s;
        actor_.sample(acache, eps, s);
        typename Critic<T>::Cache ccache;
        critic_.forward(feat, s.a, ccache);
        const T a = alpha();
        Tensor<T> dq1({n, 1L}), dq2({n, 1L});
        T loss = T(0);
        for (long i = 0; i < n; ++i) {
            const T q = std::min(ccache.q1.v[i], ccache.q2.v[i]);
            loss += (a * s.log_prob.v[i] - q) / T(n);
            if (ccache.q1.v[i] <= ccache.q2.v[i])
                dq1.v[i] = -T(1) / T(n);
            else
                dq2.v[i] = -T(1) / T(n);
        }
        Tensor<T> daction;
        critic_.backward(ccache, dq1, dq2, nullptr, &daction, false);
        Tensor<T> weight({n});
        for (auto& w : weight.v) w = a / T(n);
        Tensor<T> dmean, dlog_std;
        Actor<T>::log_prob_grads(acache, s, weight, dmean, dlog_std);
        for (long i = 0; i < n; ++i)
            for (int j = 0; j < action_dim_; ++j) {
                const long idx = i * action_dim_ + j;
                const T av = s.a.v[idx];
                const T sigma = std::exp(acache.log_std.v[idx]);
                const T da_du = T(1) - av * av;
                dmean.v[idx] += daction.v[idx] * da_du;
                dlog_std.v[idx] += daction.v[idx] * da_du * eps.v[idx] * sigma;
            }
        actor_.backward(acache, dmean, dlog_std, nullptr, true);
        last_log_prob_ = s.log_prob;
        return loss;
    }

    // L_alpha = mean(-exp(log alpha) * (log pi + H_tgt)); the gradient w.r.t.
    // log alpha equals the loss itself.
    T compute_alpha_grad(const Tensor<T>& log_prob) {
        if (log_prob.numel() == 0)
            throw std::logic_error("compute_alpha_grad: no actor outputs available");
        T loss = T(0);
        const T a = alpha();
        for (long i = 0; i < log_prob.numel(); ++i)
            loss += -a * (log_prob.v[i] + target_entropy_) / T(log_prob.numel());
        glog_alpha_.v[0] = loss;
        return loss;
    }

    T compute_alpha_grad() { return compute_alpha_grad(last_log_prob_); }

    std::pair<T, T> update_actor_and_alpha(const Batch& batch) {
        const T loss_pi = compute_actor_grads(batch);
        auto ap = actor_.params();
        opt_actor_.step(ap);
        const T loss_alpha = compute_alpha_grad();
        auto lp = alpha_params();
        opt_alpha_.step(lp);
        return {loss_pi, loss_alpha};
    }

    void update_targets() {
        auto co = critic_.params();
        auto ct = critic_tgt_.params();
        ema_update(co, ct, T(hp_.tau_critic));
        auto eo = encoder_.params();
        auto et = encoder_tgt_.params();
        ema_update(eo, et, T(hp_.tau_encoder));
    }

    // Policy action from a raw observation; deterministic = tanh(mu).
    Action act(const Observation& obs, bool deterministic, RngStream& rng) {
        const auto u8 = obs.stacked_u8();
        Processed proc;
        preprocess(u8.data(), 1, Phase::act, rng, proc);
        typename Encoder<T>::Cache ecache;
        Tensor<T> feat;
        encoder_.forward(proc.net_in, ecache, feat);
        typename Actor<T>::Cache acache;
        actor_.forward(feat, acache);
        Tensor<T> a;
        if (deterministic) {
            actor_.mean_action(acache, a);
        } else {
            Tensor<T> eps({1, static_cast<long>(action_dim_)});
            for (auto& e : eps.v) e = T(rng.normal());
            typename Actor<T>::Sample s;
            actor_.sample(acache, eps, s);
            a = s.a;
        }
        Action out;
        out.values.resize(action_dim_);
        for (int j = 0; j < action_dim_; ++j)
            out.values[j] = std::clamp(static_cast<float>(a.v[j]), -1.0f, 1.0f);
        return out;
    }

    struct StepInfo {
        float reward = 0.0f;
        bool episode_done = false;
        bool updated_critic = false;
        bool updated_actor = false;
        bool updated_targets = false;
        T loss_q = T(0), loss_pi = T(0), loss_alpha = T(0);
    };

    // One scheduled step: env interaction (uniform-random actions during
    // warmup), then critic update every step past warmup, actor+temperature
    // every k_a, target EMA every k_tar. `t` is the 1-based step counter.
    StepInfo agent_step(long t, ReacherEnv& env, ReplayBuffer& buffer, Observation& cur_obs) {
        StepInfo info;
        Action a;
        if (t <= hp_.init_collect_steps) {
            a.values.resize(action_dim_);
            for (auto& v : a.values) v = static_cast<float>(warmup_rng_.uniform(-1.0, 1.0));
        } else {
            a = act(cur_obs, false, act_noise_rng_);
        }
        StepResult res = env.step(a);
        Transition tr;
        tr.obs = cur_obs;
        tr.action = a;
        tr.reward = res.reward;
        tr.next_obs = res.obs;
        tr.bootstrap = true;  // the synthetic suite ends episodes only by time limit
        buffer.push(tr);
        info.reward = res.reward;
        info.episode_done = res.done;
        cur_obs = res.done ? env.reset() : res.obs;
        if (t > hp_.init_collect_steps) {
            Batch batch = buffer.sample(hp_.batch_size, sample_rng_);
            info.loss_q = update_critic(batch);
            info.updated_critic = true;
            if (t % hp_.actor_update_period == 0) {
                auto [lp, la] = update_actor_and_alpha(batch);
                info.loss_pi = lp;
                info.loss_alpha = la;
                info.updated_actor = true;
            }
            if (t % hp_.target_update_period == 0) {
                update_targets();
                info.updated_targets = true;
            }
        }
        return info;
    }

    // Named parameter sets for checkpointing; masker included only when used.
    std::vector<std::pair<std::string, ParamSet<T>>> named_params() {
        std::vector<std::pair<std::string, ParamSet<T>>> sets;
        if (algo_.use_masker) sets.emplace_back("masker", masker_.params());
        sets.emplace_back("encoder", encoder_.params());
        sets.emplace_back("encoder_tgt", encoder_tgt_.params());
        sets.emplace_back("actor", actor_.params());
        sets.emplace_back("critic", critic_.params());
        sets.emplace_back("critic_tgt", critic_tgt_.params());
        sets.emplace_back("alpha", alpha_params());
        return sets;
    }

private:
    static void zero_grads(ParamSet<T> p) { p.zero_grads(); }

    HyperParams hp_;
    AlgorithmSpec algo_;
    int render_size_, net_size_, action_dim_, channels_;
    T target_entropy_;
    MaskHook mask_hook_ = MaskHook::none;

    Masker<T> masker_;
    Encoder<T> encoder_, encoder_tgt_;
    Actor<T> actor_;
    Critic<T> critic_, critic_tgt_;
    Tensor<T> log_alpha_, glog_alpha_;
    Tensor<T> last_log_prob_;

    Adam<T> opt_masker_, opt_encoder_, opt_critic_, opt_actor_, opt_alpha_;

    std::uint64_t augment_ns_seed_ = 0;
    RngStream augment_rng_, act_noise_rng_, update_noise_rng_, sample_rng_, warmup_rng_;
};

}  // namespace madi
